//! Control targets for fine-grained accuracy evaluation.
//!
//! `root_move.json` holds whole-body records and `body_part.json` holds
//! relative-offset records; both are JSON arrays of objects tagged by `kind`:
//!
//! ```json
//! [
//!   {"prompt_id": "r01", "kind": "yaw_rotation", "angle": 1.5708},
//!   {"prompt_id": "r02", "kind": "directional_velocity", "speed": 2.0, "direction": [0, 0, 1], "duration": 1.5},
//!   {"prompt_id": "r03", "kind": "root_translation", "target": [0.0, 0.0, -2.8]},
//!   {"prompt_id": "b01", "kind": "body_part_offset", "base_joint": 0, "target_joint": 20, "target": [0.3, 0.5, 0.2]}
//! ]
//! ```
//!
//! Angles are radians, speeds m/s, durations seconds, displacements meters.

use std::fs;
use std::path::Path;

use nalgebra::Vector3;
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::motion::NUM_JOINTS;

/// Largest `| ‖u‖ − 1 |` that is silently renormalized.
pub const DIRECTION_RENORM_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum TargetError {
    #[error("cannot read targets: {0}")]
    Io(#[from] std::io::Error),
    #[error("targets are not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("record {index}: expected an object")]
    NotAnObject { index: usize },
    #[error("record {index}: unknown kind '{kind}'")]
    UnknownKind { index: usize, kind: String },
    #[error("record {index}: missing or invalid field '{field}'")]
    MissingField { index: usize, field: &'static str },
    #[error("record {index}: direction has norm {norm}, expected 1")]
    NonUnitDirection { index: usize, norm: f64 },
    #[error("record {index}: joints must be distinct indices in 0..{NUM_JOINTS}, got base {base} target {target}")]
    InvalidJoint { index: usize, base: i64, target: i64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    YawRotation,
    DirectionalVelocity,
    RootTranslation,
    BodyPartOffset,
}

impl TargetKind {
    pub const ALL: [TargetKind; 4] = [
        TargetKind::YawRotation,
        TargetKind::DirectionalVelocity,
        TargetKind::RootTranslation,
        TargetKind::BodyPartOffset,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TargetKind::YawRotation => "yaw_rotation",
            TargetKind::DirectionalVelocity => "directional_velocity",
            TargetKind::RootTranslation => "root_translation",
            TargetKind::BodyPartOffset => "body_part_offset",
        }
    }
}

/// The quantities a target constrains, specific to its kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    YawRotation {
        yaw: f64,
    },
    DirectionalVelocity {
        speed: f64,
        direction: Vector3<f64>,
        duration: f64,
    },
    RootTranslation {
        displacement: Vector3<f64>,
    },
    BodyPartOffset {
        base_joint: usize,
        target_joint: usize,
        offset: Vector3<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetSpec {
    pub prompt_id: Option<String>,
    pub target: Target,
}

impl TargetSpec {
    pub fn kind(&self) -> TargetKind {
        match self.target {
            Target::YawRotation { .. } => TargetKind::YawRotation,
            Target::DirectionalVelocity { .. } => TargetKind::DirectionalVelocity,
            Target::RootTranslation { .. } => TargetKind::RootTranslation,
            Target::BodyPartOffset { .. } => TargetKind::BodyPartOffset,
        }
    }
}

fn number(obj: &serde_json::Map<String, Value>, index: usize, field: &'static str) -> Result<f64, TargetError> {
    obj.get(field)
        .and_then(Value::as_f64)
        .filter(|v| v.is_finite())
        .ok_or(TargetError::MissingField { index, field })
}

fn vec3(obj: &serde_json::Map<String, Value>, index: usize, field: &'static str) -> Result<Vector3<f64>, TargetError> {
    let missing = TargetError::MissingField { index, field };
    let arr = obj.get(field).and_then(Value::as_array).ok_or(missing)?;
    let vals: Option<Vec<f64>> = arr.iter().map(|v| v.as_f64().filter(|x| x.is_finite())).collect();
    match vals.as_deref() {
        Some([x, y, z]) => Ok(Vector3::new(*x, *y, *z)),
        _ => Err(TargetError::MissingField { index, field }),
    }
}

fn joint(obj: &serde_json::Map<String, Value>, index: usize, field: &'static str) -> Result<i64, TargetError> {
    obj.get(field)
        .and_then(Value::as_i64)
        .ok_or(TargetError::MissingField { index, field })
}

/// Parses one record; `index` is used only for error messages.
pub fn parse_target(value: &Value, index: usize) -> Result<TargetSpec, TargetError> {
    let obj = value.as_object().ok_or(TargetError::NotAnObject { index })?;
    let kind = obj
        .get("kind")
        .and_then(Value::as_str)
        .ok_or(TargetError::MissingField { index, field: "kind" })?;
    let target = match kind {
        "yaw_rotation" => Target::YawRotation {
            yaw: number(obj, index, "angle")?,
        },
        "directional_velocity" => {
            let raw = vec3(obj, index, "direction")?;
            let norm = raw.norm();
            if (norm - 1.0).abs() >= DIRECTION_RENORM_TOLERANCE {
                return Err(TargetError::NonUnitDirection { index, norm });
            }
            let duration = number(obj, index, "duration")?;
            if duration <= 0.0 {
                return Err(TargetError::MissingField { index, field: "duration" });
            }
            Target::DirectionalVelocity {
                speed: number(obj, index, "speed")?,
                direction: raw / norm,
                duration,
            }
        }
        "root_translation" => Target::RootTranslation {
            displacement: vec3(obj, index, "target")?,
        },
        "body_part_offset" => {
            let base = joint(obj, index, "base_joint")?;
            let target = joint(obj, index, "target_joint")?;
            let in_range = |j: i64| (0..NUM_JOINTS as i64).contains(&j);
            if !in_range(base) || !in_range(target) || base == target {
                return Err(TargetError::InvalidJoint { index, base, target });
            }
            Target::BodyPartOffset {
                base_joint: base as usize,
                target_joint: target as usize,
                offset: vec3(obj, index, "target")?,
            }
        }
        other => {
            return Err(TargetError::UnknownKind {
                index,
                kind: other.to_string(),
            })
        }
    };
    let prompt_id = obj.get("prompt_id").and_then(Value::as_str).map(str::to_string);
    Ok(TargetSpec { prompt_id, target })
}

pub fn parse_targets(text: &str) -> Result<Vec<TargetSpec>, TargetError> {
    let value: Value = serde_json::from_str(text)?;
    match value {
        Value::Array(items) => items.iter().enumerate().map(|(i, v)| parse_target(v, i)).collect(),
        single @ Value::Object(_) => Ok(vec![parse_target(&single, 0)?]),
        _ => Err(TargetError::NotAnObject { index: 0 }),
    }
}

pub fn load_targets(path: impl AsRef<Path>) -> Result<Vec<TargetSpec>, TargetError> {
    parse_targets(&fs::read_to_string(path)?)
}
