//! Vision-language judge for motion-text alignment.
//!
//! A clip's frame strip is sent with a fixed scoring rubric to an
//! OpenAI-compatible chat endpoint; the structured reply is validated into a
//! [`JudgeResult`].

pub mod client;
pub mod gap;
pub mod mock;
pub mod prompt;
pub mod schema;

pub use client::{JudgeClient, JudgeConfig, JudgeRequest, RetryPolicy, API_KEY_ENV};
pub use gap::llm_selection_gap;
pub use prompt::build_prompt;
pub use schema::{parse_verdict, verdict_for, JudgeResult, Scores, Verdict};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JudgeError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("rate limited after {attempts} attempts")]
    RateLimited { attempts: u32 },
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("schema violation in '{field}': {reason}")]
    SchemaViolation { field: String, reason: String },
    #[error("verdict '{}' contradicts overall score {} (expected '{}')", .result.verdict.as_str(), .result.overall_score, .expected.as_str())]
    BandMismatch { expected: Verdict, result: Box<JudgeResult> },
    #[error("overall score {0} outside 0..=60")]
    OutOfRange(i64),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("score lists are misaligned: {0}")]
    Misaligned(String),
}

impl JudgeError {
    /// Network-level failure, as opposed to a bad reply or request.
    pub fn is_network(&self) -> bool {
        matches!(self, JudgeError::Transport(_) | JudgeError::RateLimited { .. } | JudgeError::Http { .. })
    }
}
