//! Judge verdict schema and validation.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::JudgeError;

pub const MAX_TEXT_CHARS: usize = 200;
pub const OVERALL_MAX: i64 = 60;
pub const ALIGNED_MIN: i64 = 50;
pub const PARTIAL_MIN: i64 = 30;

/// Sub-score keys with their upper bounds, in report order.
pub const SCORE_FIELDS: [(&str, i64); 5] = [
    ("extra_non_instruction_actions", 10),
    ("action_completeness", 20),
    ("multi_stage_order_correctness", 10),
    ("body_part_understanding", 10),
    ("physical_plausibility", 10),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Aligned,
    Partial,
    Mismatch,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Aligned => "aligned",
            Verdict::Partial => "partial",
            Verdict::Mismatch => "mismatch",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "aligned" => Some(Verdict::Aligned),
            "partial" => Some(Verdict::Partial),
            "mismatch" => Some(Verdict::Mismatch),
            _ => None,
        }
    }
}

/// Band of an overall score.
pub fn verdict_for(overall: i64) -> Result<Verdict, JudgeError> {
    match overall {
        ALIGNED_MIN..=OVERALL_MAX => Ok(Verdict::Aligned),
        PARTIAL_MIN..ALIGNED_MIN => Ok(Verdict::Partial),
        0..PARTIAL_MIN => Ok(Verdict::Mismatch),
        other => Err(JudgeError::OutOfRange(other)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scores {
    pub extra_non_instruction_actions: i64,
    pub action_completeness: i64,
    pub multi_stage_order_correctness: i64,
    pub body_part_understanding: i64,
    pub physical_plausibility: i64,
}

impl Scores {
    pub fn to_array(self) -> [i64; 5] {
        [
            self.extra_non_instruction_actions,
            self.action_completeness,
            self.multi_stage_order_correctness,
            self.body_part_understanding,
            self.physical_plausibility,
        ]
    }

    pub fn from_array(a: [i64; 5]) -> Self {
        Self {
            extra_non_instruction_actions: a[0],
            action_completeness: a[1],
            multi_stage_order_correctness: a[2],
            body_part_understanding: a[3],
            physical_plausibility: a[4],
        }
    }

    pub fn total(self) -> i64 {
        self.to_array().iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgeResult {
    pub video_name: String,
    pub prompt_name: String,
    pub scores: Scores,
    pub overall_score: i64,
    pub verdict: Verdict,
    pub frame_observation: String,
    pub prompt_overlap: String,
    pub issues_found: String,
}

fn violation(field: &str, reason: impl Into<String>) -> JudgeError {
    JudgeError::SchemaViolation {
        field: field.to_string(),
        reason: reason.into(),
    }
}

/// Removes one surrounding markdown fence, with or without a language tag.
pub fn strip_code_fence(text: &str) -> &str {
    let t = text.trim();
    let Some(rest) = t.strip_prefix("```") else {
        return t;
    };
    let Some(body) = rest.strip_suffix("```") else {
        return t;
    };
    match body.find('\n') {
        Some(nl) if body[..nl].chars().all(|c| c.is_ascii_alphanumeric()) => body[nl + 1..].trim(),
        _ => body.trim(),
    }
}

fn integer(obj: &Map<String, Value>, field: &str) -> Result<i64, JudgeError> {
    let v = obj.get(field).ok_or_else(|| violation(field, "missing"))?;
    if let Some(i) = v.as_i64() {
        return Ok(i);
    }
    match v.as_f64() {
        Some(f) if f.fract() == 0.0 && f.abs() < 1e15 => Ok(f as i64),
        _ => Err(violation(field, format!("expected an integer, got {v}"))),
    }
}

fn text(obj: &Map<String, Value>, field: &str, limit: Option<usize>) -> Result<String, JudgeError> {
    let s = obj
        .get(field)
        .and_then(Value::as_str)
        .ok_or_else(|| violation(field, "missing or not a string"))?;
    if let Some(limit) = limit {
        let n = s.chars().count();
        if n > limit {
            return Err(violation(field, format!("{n} characters exceeds {limit}")));
        }
    }
    Ok(s.to_string())
}

/// Parses and validates the model's reply text.
///
/// Sub-scores must be integers within their bounds and sum to the overall
/// score. A verdict outside the overall score's band yields
/// [`JudgeError::BandMismatch`] carrying the parsed result.
pub fn parse_verdict(reply: &str, strict: bool) -> Result<JudgeResult, JudgeError> {
    let body = if strict { reply.trim() } else { strip_code_fence(reply) };
    let value: Value = serde_json::from_str(body).map_err(|e| violation("$", format!("invalid JSON: {e}")))?;
    let obj = value.as_object().ok_or_else(|| violation("$", "expected an object"))?;
    let scores_obj = obj
        .get("scores")
        .and_then(Value::as_object)
        .ok_or_else(|| violation("scores", "missing or not an object"))?;
    let mut sub = [0i64; 5];
    for (slot, (field, max)) in sub.iter_mut().zip(SCORE_FIELDS) {
        let v = integer(scores_obj, field)?;
        if !(0..=max).contains(&v) {
            return Err(violation(field, format!("{v} outside 0..={max}")));
        }
        *slot = v;
    }
    let scores = Scores::from_array(sub);
    let overall = integer(obj, "overall_score")?;
    if overall != scores.total() {
        return Err(violation(
            "overall_score",
            format!("{overall} differs from sub-score sum {}", scores.total()),
        ));
    }
    let verdict_text = text(obj, "verdict", None)?;
    let verdict = Verdict::parse(&verdict_text).ok_or_else(|| violation("verdict", format!("unknown verdict '{verdict_text}'")))?;
    let result = JudgeResult {
        video_name: text(obj, "video_name", None)?,
        prompt_name: text(obj, "prompt_name", None)?,
        scores,
        overall_score: overall,
        verdict,
        frame_observation: text(obj, "frame_observation", Some(MAX_TEXT_CHARS))?,
        prompt_overlap: text(obj, "prompt_overlap", Some(MAX_TEXT_CHARS))?,
        issues_found: text(obj, "issues_found", Some(MAX_TEXT_CHARS))?,
    };
    let expected = verdict_for(overall)?;
    if expected != verdict {
        return Err(JudgeError::BandMismatch {
            expected,
            result: Box::new(result),
        });
    }
    Ok(result)
}
