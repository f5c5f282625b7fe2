//! Physical-quality metrics over joint clips, meshes and pose distances.
//!
//! Velocities and accelerations are plain frame differences (per-frame units).
//! "Keyframes" are every (frame, joint) sample.

use serde::Serialize;
use thiserror::Error;

use crate::collision::{CollisionError, TriangleBvh};
use crate::contact::{detect_contacts, floating_intervals, ContactConfig};
use crate::motion::{MeshSequence, MotionClip, PoseDistanceSeries};

/// Ground penetration tolerance (m).
pub const GROUND_TOLERANCE: f64 = 0.005;
/// Stability term in the foot sliding denominators.
pub const SLIDING_EPSILON: f64 = 1e-6;
/// Scale factor applied to the mean pose-manifold distance.
pub const POSE_QUALITY_SCALE: f64 = 10.0;
/// Default tolerated share of zero-area faces per mesh frame.
pub const MAX_DEGENERATE_FRACTION: f64 = 0.01;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("clip has {got} frames, metric needs at least {needed}")]
    TooShort { needed: usize, got: usize },
    #[error("pose distance series is empty")]
    EmptySeries,
    #[error(transparent)]
    Collision(#[from] CollisionError),
}

fn require_frames(clip: &MotionClip, needed: usize) -> Result<(), MetricError> {
    match clip.num_frames() >= needed {
        true => Ok(()),
        false => Err(MetricError::TooShort {
            needed,
            got: clip.num_frames(),
        }),
    }
}

/// Mean of `‖a_global‖ + ‖a_local‖` over `(T−2)·J` samples.
pub fn jitter_degree(clip: &MotionClip) -> Result<f64, MetricError> {
    require_frames(clip, 3)?;
    let (n, joints) = (clip.num_frames(), clip.num_joints());
    let mut sum = 0.0;
    for t in 0..n - 2 {
        for j in 0..joints {
            let global = clip.joint(t + 2, j) - 2.0 * clip.joint(t + 1, j) + clip.joint(t, j);
            let local = clip.local_joint(t + 2, j) - 2.0 * clip.local_joint(t + 1, j) + clip.local_joint(t, j);
            sum += global.norm() + local.norm();
        }
    }
    Ok(sum / ((n - 2) * joints) as f64)
}

/// Mean penetration depth over all `T·J` samples; only samples deeper than the
/// tolerance contribute. With `strict` the literal `h < δ` condition is used
/// instead of `h < −δ`.
pub fn ground_penetration(clip: &MotionClip, strict: bool) -> f64 {
    let threshold = if strict { GROUND_TOLERANCE } else { -GROUND_TOLERANCE };
    let heights = clip.positions().chunks_exact(3).map(|p| p[1]);
    let total: f64 = heights.filter(|h| *h < threshold).map(f64::abs).sum();
    total / (clip.num_frames() * clip.num_joints()) as f64
}

/// `(N_invalid + ½ ΣL_soft + ΣL_hard) / T`.
pub fn foot_floating(clip: &MotionClip, cfg: &ContactConfig) -> Result<f64, MetricError> {
    require_frames(clip, 2)?;
    let track = detect_contacts(clip, cfg)?;
    let s = floating_intervals(&track, cfg);
    let soft: usize = s.soft_intervals.iter().sum();
    let hard: usize = s.hard_intervals.iter().sum();
    Ok((s.invalid_frames as f64 + 0.5 * soft as f64 + hard as f64) / clip.num_frames() as f64)
}

/// Mean of the contact-weighted horizontal foot speeds of both feet.
pub fn foot_sliding(clip: &MotionClip, cfg: &ContactConfig) -> Result<f64, MetricError> {
    require_frames(clip, 2)?;
    let track = detect_contacts(clip, cfg)?;
    let per_foot = |foot: &crate::contact::FootSeries| {
        let (num, den) = foot
            .horizontal_speed
            .iter()
            .zip(&foot.contact)
            .filter(|(_, c)| **c)
            .fold((0.0, 0.0), |(n, d), (s, _)| (n + s, d + 1.0));
        num / (den + SLIDING_EPSILON)
    };
    Ok(0.5 * (per_foot(&track.left) + per_foot(&track.right)))
}

/// Mean of `‖v_global‖ + ‖v_local‖` over `(T−1)·J` samples.
pub fn dynamic_degree(clip: &MotionClip) -> Result<f64, MetricError> {
    require_frames(clip, 2)?;
    let (n, joints) = (clip.num_frames(), clip.num_joints());
    let mut sum = 0.0;
    for t in 0..n - 1 {
        for j in 0..joints {
            let global = clip.joint(t + 1, j) - clip.joint(t, j);
            let local = clip.local_joint(t + 1, j) - clip.local_joint(t, j);
            sum += global.norm() + local.norm();
        }
    }
    Ok(sum / ((n - 1) * joints) as f64)
}

pub fn pose_quality(series: &PoseDistanceSeries) -> Result<f64, MetricError> {
    let d = series.distances();
    if d.is_empty() {
        return Err(MetricError::EmptySeries);
    }
    Ok(POSE_QUALITY_SCALE * d.iter().sum::<f64>() / d.len() as f64)
}

/// Colliding pairs per frame as a percentage of the face count, averaged over frames.
pub fn body_penetration(mesh: &MeshSequence, max_degenerate_fraction: f64) -> Result<f64, MetricError> {
    let faces = mesh.faces();
    let mut total = 0.0;
    for t in 0..mesh.num_frames() {
        let bvh = TriangleBvh::build(&mesh.frame(t), faces, max_degenerate_fraction)?;
        total += bvh.count_colliding_pairs() as f64 / faces.len() as f64 * 100.0;
    }
    Ok(total / mesh.num_frames() as f64)
}

/// Per-clip physical metrics; `None` marks a metric whose input was absent or invalid.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PhysicalReport {
    pub jd: Option<f64>,
    pub gp: Option<f64>,
    pub ff: Option<f64>,
    pub fs: Option<f64>,
    pub dd: Option<f64>,
    pub pq: Option<f64>,
    pub bp: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalOptions {
    pub contact: ContactConfig,
    pub strict_ground: bool,
    pub max_degenerate_fraction: f64,
}

impl Default for PhysicalOptions {
    fn default() -> Self {
        Self {
            contact: ContactConfig::default(),
            strict_ground: false,
            max_degenerate_fraction: MAX_DEGENERATE_FRACTION,
        }
    }
}

/// Everything computable from the inputs at hand. Per-metric failures are
/// returned next to the report so callers can log them.
pub fn evaluate_clip(
    motion: Option<&MotionClip>,
    mesh: Option<&MeshSequence>,
    pose: Option<&PoseDistanceSeries>,
    opts: &PhysicalOptions,
) -> (PhysicalReport, Vec<(&'static str, MetricError)>) {
    let mut report = PhysicalReport::default();
    let mut errors = Vec::new();
    let mut keep = |name: &'static str, r: Result<f64, MetricError>| match r {
        Ok(v) => Some(v),
        Err(e) => {
            errors.push((name, e));
            None
        }
    };
    if let Some(clip) = motion {
        report.jd = keep("jd", jitter_degree(clip));
        report.gp = Some(ground_penetration(clip, opts.strict_ground));
        report.ff = keep("ff", foot_floating(clip, &opts.contact));
        report.fs = keep("fs", foot_sliding(clip, &opts.contact));
        report.dd = keep("dd", dynamic_degree(clip));
    }
    if let Some(series) = pose {
        report.pq = keep("pq", pose_quality(series));
    }
    if let Some(mesh) = mesh {
        report.bp = keep("bp", body_penetration(mesh, opts.max_degenerate_fraction));
    }
    (report, errors)
}
