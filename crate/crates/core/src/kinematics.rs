//! Root trajectory recovery and yaw primitives.
//!
//! Feature channel layout (HumanML/MDM): 0 = root yaw angular velocity
//! (rad/frame), 1..=2 = root-local horizontal linear velocity (x, z in
//! m/frame), 3 = root height (m).

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::motion::{
    FeatureClip, FeatureStats, MotionClip, FEATURE_DIM, LEFT_HIP, LEFT_SHOULDER, RIGHT_HIP,
    RIGHT_SHOULDER, ROOT_JOINT,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinematicsError {
    #[error("features are already denormalized")]
    AlreadyDenormalized,
    #[error("feature width {got} does not match stats width {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("root recovery needs denormalized features")]
    NormalizedInput,
    #[error("facing direction is undefined at frame {0}")]
    UndefinedFacing(usize),
}

/// Root positions and unwrapped yaw, one entry per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct RootTrack {
    pub positions: Vec<Vector3<f64>>,
    pub yaw: Vec<f64>,
}

impl RootTrack {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// `x ⊙ σ + μ`, row by row.
pub fn denormalize(fc: &FeatureClip, stats: &FeatureStats) -> Result<FeatureClip, KinematicsError> {
    if !fc.normalized {
        return Err(KinematicsError::AlreadyDenormalized);
    }
    if stats.mean().len() != FEATURE_DIM {
        return Err(KinematicsError::DimensionMismatch {
            expected: stats.mean().len(),
            got: FEATURE_DIM,
        });
    }
    let rows = fc
        .values()
        .chunks_exact(FEATURE_DIM)
        .flat_map(|row| {
            row.iter()
                .zip(stats.std().iter().zip(stats.mean()))
                .map(|(x, (s, m))| x * s + m)
        })
        .collect();
    Ok(FeatureClip::new(rows, fc.num_frames(), false).expect("shape preserved"))
}

/// Inverse of [`denormalize`]; used to build normalized inputs.
pub fn normalize(fc: &FeatureClip, stats: &FeatureStats) -> FeatureClip {
    let rows = fc
        .values()
        .chunks_exact(FEATURE_DIM)
        .flat_map(|row| {
            row.iter()
                .zip(stats.std().iter().zip(stats.mean()))
                .map(|(x, (s, m))| (x - m) / s)
        })
        .collect();
    FeatureClip::new(rows, fc.num_frames(), true).expect("shape preserved")
}

/// Integrates root yaw and position from denormalized features.
///
/// `ψ_0 = 0` and `ψ_t = Σ_{k<t} ω_k`. The horizontal step into frame `t` is the
/// local velocity of frame `t−1` rotated by `R_y(ψ_t)`; the vertical coordinate
/// is the height channel of the same frame.
pub fn recover_root(fc: &FeatureClip) -> Result<RootTrack, KinematicsError> {
    if fc.normalized {
        return Err(KinematicsError::NormalizedInput);
    }
    let n = fc.num_frames();
    let mut yaw = Vec::with_capacity(n);
    let mut positions = Vec::with_capacity(n);
    let mut heading = 0.0;
    let mut horizontal = Vector3::zeros();
    for t in 0..n {
        if t > 0 {
            let prev = fc.row(t - 1);
            heading += prev[0];
            let local = Vector3::new(prev[1], 0.0, prev[2]);
            horizontal += yaw_matrix(heading) * local;
        }
        yaw.push(heading);
        positions.push(Vector3::new(horizontal.x, fc.row(t)[3], horizontal.z));
    }
    Ok(RootTrack { positions, yaw })
}

/// Root track read directly from joint positions.
///
/// Position is the root joint; yaw is the heading of the forward vector
/// `up × across`, with `across` taken from the hip and shoulder pairs, then
/// unwrapped and shifted so that `ψ_0 = 0`.
pub fn root_track_from_joints(clip: &MotionClip) -> Result<RootTrack, KinematicsError> {
    let n = clip.num_frames();
    let mut yaw: Vec<f64> = Vec::with_capacity(n);
    for t in 0..n {
        let across = (clip.joint(t, RIGHT_HIP) - clip.joint(t, LEFT_HIP))
            + (clip.joint(t, RIGHT_SHOULDER) - clip.joint(t, LEFT_SHOULDER));
        let forward = Vector3::y().cross(&across);
        if forward.norm() < 1e-12 {
            return Err(KinematicsError::UndefinedFacing(t));
        }
        let heading = forward.x.atan2(forward.z);
        let unwrapped = match yaw.last() {
            Some(&prev) => prev + wrap_angle(heading - prev),
            None => heading,
        };
        yaw.push(unwrapped);
    }
    let start = yaw[0];
    yaw.iter_mut().for_each(|y| *y -= start);
    let positions = (0..n).map(|t| clip.joint(t, ROOT_JOINT)).collect();
    Ok(RootTrack { positions, yaw })
}

/// Wraps an angle into `[-π, π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut r = theta - two_pi * ((theta + PI) / two_pi).floor();
    if r >= PI {
        r -= two_pi;
    } else if r < -PI {
        r += two_pi;
    }
    r
}

/// Rotation about +Y:
///
/// ```text
/// [  cos θ  0  sin θ ]
/// [    0    1    0   ]
/// [ −sin θ  0  cos θ ]
/// ```
pub fn yaw_matrix(theta: f64) -> Matrix3<f64> {
    let (s, c) = theta.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}
