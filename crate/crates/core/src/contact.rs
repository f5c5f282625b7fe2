//! Foot contact states and floating intervals.
//!
//! Per-frame foot velocity is the forward difference `p_{t+1} − p_t`; the last
//! frame repeats the final difference so every series has length `T`.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::motion::{MotionClip, LEFT_FOOT, RIGHT_FOOT, ROOT_JOINT};
use crate::physical::MetricError;

/// Guard added to the root speed in the foot velocity ratio.
pub const RATIO_EPSILON: f64 = 1e-6;

/// Thresholds for contact and floating classification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContactConfig {
    /// A foot below this height (m) may be in contact.
    pub contact_height: f64,
    /// A foot moving less than this (m/frame) may be in contact. Calibrated at 20 fps.
    pub contact_speed: f64,
    /// Minimum foot height above which a run counts as mass floating (m).
    pub float_height: f64,
    /// Velocity ratio below which a contact-free frame is invalid.
    pub min_velocity_ratio: f64,
    /// Shortest run (frames) that counts as a floating interval.
    pub min_interval: usize,
    pub left_foot: usize,
    pub right_foot: usize,
}

impl Default for ContactConfig {
    fn default() -> Self {
        Self {
            contact_height: 0.05,
            contact_speed: 0.01,
            float_height: 0.12,
            min_velocity_ratio: 0.1,
            min_interval: 5,
            left_foot: LEFT_FOOT,
            right_foot: RIGHT_FOOT,
        }
    }
}

impl ContactConfig {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("contact_height", self.contact_height),
            ("contact_speed", self.contact_speed),
            ("float_height", self.float_height),
            ("min_velocity_ratio", self.min_velocity_ratio),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        if self.float_height <= self.contact_height {
            return Err("float_height must exceed contact_height".into());
        }
        if self.min_interval == 0 {
            return Err("min_interval must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FootSeries {
    pub contact: Vec<bool>,
    pub height: Vec<f64>,
    /// Horizontal (x, z) speed, m/frame.
    pub horizontal_speed: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContactTrack {
    pub left: FootSeries,
    pub right: FootSeries,
    /// `max_f ‖v_f − v_root‖ / (‖v_root‖ + ε)` per frame.
    pub velocity_ratio: Vec<f64>,
}

impl ContactTrack {
    pub fn len(&self) -> usize {
        self.velocity_ratio.len()
    }

    pub fn is_empty(&self) -> bool {
        self.velocity_ratio.is_empty()
    }

    fn min_height(&self, t: usize) -> f64 {
        self.left.height[t].min(self.right.height[t])
    }

    fn any_contact(&self, t: usize) -> bool {
        self.left.contact[t] || self.right.contact[t]
    }
}

/// Forward-difference velocity of joint `j`, padded to length `T`.
pub(crate) fn joint_velocity(clip: &MotionClip, j: usize) -> Vec<Vector3<f64>> {
    let n = clip.num_frames();
    let mut v: Vec<Vector3<f64>> = (0..n - 1).map(|t| clip.joint(t + 1, j) - clip.joint(t, j)).collect();
    let last = *v.last().expect("at least two frames");
    v.push(last);
    v
}

fn foot_series(clip: &MotionClip, foot: usize, velocity: &[Vector3<f64>], cfg: &ContactConfig) -> FootSeries {
    let n = clip.num_frames();
    let height: Vec<f64> = (0..n).map(|t| clip.joint(t, foot).y).collect();
    let contact = height
        .iter()
        .zip(velocity)
        .map(|(h, v)| *h < cfg.contact_height && v.norm() < cfg.contact_speed)
        .collect();
    let horizontal_speed = velocity.iter().map(|v| v.x.hypot(v.z)).collect();
    FootSeries {
        contact,
        height,
        horizontal_speed,
    }
}

pub fn detect_contacts(clip: &MotionClip, cfg: &ContactConfig) -> Result<ContactTrack, MetricError> {
    if clip.num_frames() < 2 {
        return Err(MetricError::TooShort {
            needed: 2,
            got: clip.num_frames(),
        });
    }
    let root_v = joint_velocity(clip, ROOT_JOINT);
    let left_v = joint_velocity(clip, cfg.left_foot);
    let right_v = joint_velocity(clip, cfg.right_foot);
    let velocity_ratio = root_v
        .iter()
        .zip(left_v.iter().zip(&right_v))
        .map(|(r, (l, rt))| {
            let rel = (l - r).norm().max((rt - r).norm());
            rel / (r.norm() + RATIO_EPSILON)
        })
        .collect();
    Ok(ContactTrack {
        left: foot_series(clip, cfg.left_foot, &left_v, cfg),
        right: foot_series(clip, cfg.right_foot, &right_v, cfg),
        velocity_ratio,
    })
}

/// Frame classification feeding Foot Floating.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FloatingSummary {
    /// Contact-free frames whose feet glide with the root, outside any interval.
    pub invalid_frames: usize,
    /// Lengths of runs with minimum foot height in `(contact_height, float_height]`.
    pub soft_intervals: Vec<usize>,
    /// Lengths of runs with minimum foot height above `float_height`.
    pub hard_intervals: Vec<usize>,
}

/// Maximal runs of `true` at least `min_len` long, as `(start, len)`.
fn runs(flags: impl Iterator<Item = bool>, min_len: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    let mut n = 0;
    for (t, f) in flags.enumerate() {
        n = t + 1;
        match (f, start) {
            (true, None) => start = Some(t),
            (false, Some(s)) => {
                if t - s >= min_len {
                    out.push((s, t - s));
                }
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        if n - s >= min_len {
            out.push((s, n - s));
        }
    }
    out
}

/// Classifies each frame once, with precedence hard > soft > invalid.
pub fn floating_intervals(track: &ContactTrack, cfg: &ContactConfig) -> FloatingSummary {
    let n = track.len();
    let mut claimed = vec![false; n];

    let hard = runs((0..n).map(|t| track.min_height(t) > cfg.float_height), cfg.min_interval);
    let soft = runs(
        (0..n).map(|t| {
            let h = track.min_height(t);
            h > cfg.contact_height && h <= cfg.float_height
        }),
        cfg.min_interval,
    );
    for &(s, len) in hard.iter().chain(&soft) {
        claimed[s..s + len].iter_mut().for_each(|c| *c = true);
    }
    let invalid_frames = (0..n)
        .filter(|&t| !claimed[t] && !track.any_contact(t) && track.velocity_ratio[t] < cfg.min_velocity_ratio)
        .count();

    FloatingSummary {
        invalid_frames,
        soft_intervals: soft.into_iter().map(|(_, l)| l).collect(),
        hard_intervals: hard.into_iter().map(|(_, l)| l).collect(),
    }
}
