//! Control accuracy for whole-body and body-part targets.
//!
//! Whole-body errors compare the root track between `t0 = 0` and `t_e` against
//! the target; body-part errors compare a joint-to-joint offset over the
//! trailing window.

use std::collections::BTreeMap;

use nalgebra::Vector3;
use serde::Serialize;
use thiserror::Error;

use crate::corpus::{ClipRecord, Corpus};
use crate::kinematics::{self, wrap_angle, yaw_matrix, KinematicsError, RootTrack};
use crate::motion::{FeatureStats, MotionClip};
use crate::targets::{Target, TargetKind, TargetSpec};

pub const DEFAULT_WINDOW: usize = 30;
/// Decimal places of the accuracy table.
pub const TABLE_DECIMALS: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FineGrainedError {
    #[error("track has {len} frames but window ends at {end}")]
    WindowOutOfRange { len: usize, end: usize },
    #[error("need at least {needed} frames, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("joints {base} and {target} are not valid for a {joints}-joint clip")]
    BadJoints { base: usize, target: usize, joints: usize },
    #[error("target {index} has no prompt id")]
    MissingPromptId { index: usize },
    #[error("no clip of baseline {baseline_id} for prompt {prompt_id}")]
    UnresolvedPrompt { baseline_id: String, prompt_id: String },
    #[error("clip {clip_id}: {reason}")]
    MissingData { clip_id: String, reason: String },
    #[error("clip {clip_id}: {source}")]
    Kinematics { clip_id: String, source: KinematicsError },
}

/// `(t0, t_e)` with `t_e = min(T−1, max(0, T−N))`.
pub fn eval_window(frames: usize, window: usize) -> (usize, usize) {
    (0, frames.saturating_sub(window).min(frames.saturating_sub(1)))
}

fn check_window(track: &RootTrack, end: usize) -> Result<(), FineGrainedError> {
    if track.len() <= end {
        return Err(FineGrainedError::WindowOutOfRange { len: track.len(), end });
    }
    Ok(())
}

/// Frobenius distance between the achieved and target yaw rotations.
pub fn rotation_error(track: &RootTrack, target_yaw: f64, window: (usize, usize)) -> Result<f64, FineGrainedError> {
    check_window(track, window.1)?;
    let achieved = wrap_angle(track.yaw[window.1] - track.yaw[window.0]);
    Ok((yaw_matrix(achieved) - yaw_matrix(target_yaw)).norm())
}

/// Round half away from zero, which `f64::round` implements.
fn frames_for(duration: f64, fps: f64) -> usize {
    (duration * fps).round().max(0.0) as usize
}

/// `|v̂ − v*|` where `v̂` is the mean speed projected on `direction` over the
/// first `round(duration·fps)` velocity samples.
pub fn velocity_error(
    track: &RootTrack,
    speed: f64,
    direction: &Vector3<f64>,
    duration: f64,
    fps: f64,
) -> Result<f64, FineGrainedError> {
    let n = track.len();
    if n < 2 {
        return Err(FineGrainedError::TooShort { needed: 2, got: n });
    }
    let t_d = frames_for(duration, fps).min(n - 1);
    if t_d == 0 {
        return Err(FineGrainedError::TooShort { needed: 2, got: n });
    }
    let projected: f64 = (0..t_d)
        .map(|t| ((track.positions[t + 1] - track.positions[t]) * fps).dot(direction))
        .sum();
    Ok((projected / t_d as f64 - speed).abs())
}

/// Per-axis RMSE between achieved and target root displacement.
pub fn translation_error(
    track: &RootTrack,
    displacement: &Vector3<f64>,
    window: (usize, usize),
) -> Result<f64, FineGrainedError> {
    check_window(track, window.1)?;
    let achieved = track.positions[window.1] - track.positions[window.0];
    Ok(((achieved - displacement).norm_squared() / 3.0).sqrt())
}

/// RMSE of the `target − base` joint offset against `offset` over the last
/// `window` frames (all frames when the clip is shorter).
pub fn body_part_error(
    clip: &MotionClip,
    base: usize,
    target: usize,
    offset: &Vector3<f64>,
    window: usize,
) -> Result<f64, FineGrainedError> {
    let joints = clip.num_joints();
    if base >= joints || target >= joints || base == target {
        return Err(FineGrainedError::BadJoints { base, target, joints });
    }
    let n = clip.num_frames();
    let start = n.saturating_sub(window.max(1));
    let sq: f64 = (start..n)
        .map(|t| (clip.joint(t, target) - clip.joint(t, base) - offset).norm_squared())
        .sum();
    Ok((sq / (n - start) as f64).sqrt())
}

/// Error for one clip against one target.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyResult {
    pub clip_id: String,
    pub prompt_id: String,
    pub kind: TargetKind,
    pub error: f64,
    pub frames_used: (usize, usize),
    /// Set when the whole-body window collapses to a single frame.
    pub degenerate_window: bool,
}

fn root_track(rec: &ClipRecord, stats: Option<&FeatureStats>) -> Result<RootTrack, FineGrainedError> {
    let kin = |source| FineGrainedError::Kinematics {
        clip_id: rec.clip_id.clone(),
        source,
    };
    if let Some(fc) = &rec.features {
        let raw = match (fc.normalized, stats) {
            (false, _) => fc.clone(),
            (true, Some(s)) => kinematics::denormalize(fc, s).map_err(kin)?,
            (true, None) => {
                return Err(FineGrainedError::MissingData {
                    clip_id: rec.clip_id.clone(),
                    reason: "normalized features need mean/std statistics".into(),
                })
            }
        };
        return kinematics::recover_root(&raw).map_err(kin);
    }
    match &rec.motion {
        Some(m) => kinematics::root_track_from_joints(m).map_err(kin),
        None => Err(FineGrainedError::MissingData {
            clip_id: rec.clip_id.clone(),
            reason: "no features or joints".into(),
        }),
    }
}

/// Evaluates one clip against one target.
pub fn evaluate_case(
    rec: &ClipRecord,
    spec: &TargetSpec,
    stats: Option<&FeatureStats>,
    window: usize,
) -> Result<AccuracyResult, FineGrainedError> {
    let result = |error, frames_used, degenerate_window| AccuracyResult {
        clip_id: rec.clip_id.clone(),
        prompt_id: rec.prompt_id.clone(),
        kind: spec.kind(),
        error,
        frames_used,
        degenerate_window,
    };
    match &spec.target {
        Target::BodyPartOffset {
            base_joint,
            target_joint,
            offset,
        } => {
            let clip = rec.motion.as_ref().ok_or_else(|| FineGrainedError::MissingData {
                clip_id: rec.clip_id.clone(),
                reason: "body-part targets need joint positions".into(),
            })?;
            let n = clip.num_frames();
            let err = body_part_error(clip, *base_joint, *target_joint, offset, window)?;
            Ok(result(err, (n.saturating_sub(window), n - 1), false))
        }
        Target::DirectionalVelocity {
            speed,
            direction,
            duration,
        } => {
            let track = root_track(rec, stats)?;
            let err = velocity_error(&track, *speed, direction, *duration, rec.fps)?;
            let t_d = frames_for(*duration, rec.fps).min(track.len() - 1);
            Ok(result(err, (0, t_d), false))
        }
        Target::YawRotation { yaw } => {
            let track = root_track(rec, stats)?;
            let w = eval_window(track.len(), window);
            Ok(result(rotation_error(&track, *yaw, w)?, w, w.0 == w.1))
        }
        Target::RootTranslation { displacement } => {
            let track = root_track(rec, stats)?;
            let w = eval_window(track.len(), window);
            Ok(result(translation_error(&track, displacement, w)?, w, w.0 == w.1))
        }
    }
}

/// One method's mean errors, ordered rotation, velocity, translation, body part.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyRow {
    pub method: String,
    pub values: [Option<f64>; 4],
}

pub const TABLE_COLUMNS: [TargetKind; 4] = TargetKind::ALL;

fn column(kind: TargetKind) -> usize {
    TABLE_COLUMNS.iter().position(|k| *k == kind).expect("every kind has a column")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyTable {
    pub rows: Vec<AccuracyRow>,
    pub cases: Vec<AccuracyResult>,
}

/// Mean error per baseline and target kind.
///
/// Each target is matched to every clip of a baseline with the same prompt;
/// several matching clips are averaged into one case before the per-kind mean.
pub fn evaluate_targets(
    corpus: &Corpus,
    targets: &[TargetSpec],
    stats: Option<&FeatureStats>,
    window: usize,
) -> Result<AccuracyTable, FineGrainedError> {
    let prompts: Vec<&str> = targets
        .iter()
        .enumerate()
        .map(|(index, t)| t.prompt_id.as_deref().ok_or(FineGrainedError::MissingPromptId { index }))
        .collect::<Result<_, _>>()?;

    let mut by_key: BTreeMap<(&str, &str), Vec<&ClipRecord>> = BTreeMap::new();
    for rec in corpus.iter() {
        by_key
            .entry((rec.baseline_id.as_str(), rec.prompt_id.as_str()))
            .or_default()
            .push(rec);
    }

    let mut rows = Vec::new();
    let mut cases = Vec::new();
    for baseline in corpus.baselines() {
        let mut sums = [(0.0, 0usize); 4];
        for (spec, prompt_id) in targets.iter().zip(&prompts) {
            let clips = by_key.get(&(baseline, *prompt_id)).ok_or_else(|| FineGrainedError::UnresolvedPrompt {
                baseline_id: baseline.to_string(),
                prompt_id: prompt_id.to_string(),
            })?;
            let mut case_sum = 0.0;
            for rec in clips {
                let r = evaluate_case(rec, spec, stats, window)?;
                case_sum += r.error;
                cases.push(r);
            }
            let slot = &mut sums[column(spec.kind())];
            slot.0 += case_sum / clips.len() as f64;
            slot.1 += 1;
        }
        rows.push(AccuracyRow {
            method: baseline.to_string(),
            values: sums.map(|(s, n)| (n > 0).then(|| s / n as f64)),
        });
    }
    Ok(AccuracyTable { rows, cases })
}

pub const TABLE_HEADER: &str = "method,root_rotation,root_velocity,root_translation,body_part_translation";

/// CSV with fixed four-decimal cells; empty cells for kinds without targets.
pub fn format_accuracy_csv(rows: &[AccuracyRow]) -> String {
    let mut out = String::from(TABLE_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.method);
        for v in &row.values {
            out.push(',');
            if let Some(v) = v {
                out.push_str(&format!("{v:.prec$}", prec = TABLE_DECIMALS));
            }
        }
        out.push('\n');
    }
    out
}

fn strip_latex(cell: &str) -> String {
    let mut s = cell.trim().replace("\\_", "_");
    for cmd in ["\\textbf{", "\\underline{", "\\textit{", "\\emph{"] {
        while let Some(pos) = s.find(cmd) {
            s.replace_range(pos..pos + cmd.len(), "");
            if let Some(close) = s[pos..].find('}') {
                s.remove(pos + close);
            }
        }
    }
    s.trim().to_string()
}

/// Extracts `Method & a & b & c & d \\` rows from a LaTeX tabular body.
/// Lines whose four value cells are not all numeric are skipped.
pub fn parse_latex_rows(source: &str) -> Vec<AccuracyRow> {
    source
        .lines()
        .filter_map(|line| {
            let body = line.trim().strip_suffix("\\\\")?;
            let cells: Vec<String> = body.split('&').map(strip_latex).collect();
            if cells.len() != 5 || cells[0].is_empty() {
                return None;
            }
            let mut values = [None; 4];
            for (slot, cell) in values.iter_mut().zip(&cells[1..]) {
                *slot = Some(cell.parse::<f64>().ok()?);
            }
            Some(AccuracyRow {
                method: cells[0].clone(),
                values,
            })
        })
        .collect()
}
