//! Chat-completions client with retry and bounded concurrency.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::prompt::build_prompt;
use crate::schema::{parse_verdict, JudgeResult};
use crate::JudgeError;

pub const API_KEY_ENV: &str = "T2M_JUDGE_API_KEY";
pub const DEFAULT_CONCURRENCY: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    #[serde(with = "millis")]
    pub base_delay: Duration,
    pub factor: f64,
    pub max_attempts: u32,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            base_delay: Duration::from_secs(1),
            factor: 2.0,
            max_attempts: 5,
        }
    }
}

impl RetryPolicy {
    /// Wait before attempt `attempt + 1`, for `attempt ≥ 1`.
    pub fn delay(&self, attempt: u32) -> Duration {
        self.base_delay.mul_f64(self.factor.powi(attempt.saturating_sub(1) as i32))
    }
}

mod millis {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_millis(u64::deserialize(d)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JudgeConfig {
    /// Full chat-completions URL.
    pub endpoint: String,
    pub model: String,
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
    pub concurrency: usize,
    pub timeout_secs: u64,
    pub strict: bool,
    pub retry: RetryPolicy,
}

impl Default for JudgeConfig {
    fn default() -> Self {
        Self {
            endpoint: "http://127.0.0.1:8000/v1/chat/completions".into(),
            model: "gpt-5.2".into(),
            api_key: None,
            concurrency: DEFAULT_CONCURRENCY,
            timeout_secs: 120,
            strict: false,
            retry: RetryPolicy::default(),
        }
    }
}

/// One clip to judge.
#[derive(Debug, Clone, PartialEq)]
pub struct JudgeRequest {
    pub clip_id: String,
    pub video_name: String,
    pub prompt_id: String,
    pub prompt_text: String,
    pub image: Vec<u8>,
    pub media_type: String,
}

impl JudgeRequest {
    pub fn validate(&self) -> Result<(), JudgeError> {
        if self.prompt_text.trim().is_empty() {
            return Err(JudgeError::InvalidRequest(format!("{}: empty prompt text", self.clip_id)));
        }
        if self.image.is_empty() {
            return Err(JudgeError::InvalidRequest(format!("{}: empty image", self.clip_id)));
        }
        Ok(())
    }

    /// Chat-completions request body.
    pub fn body(&self, model: &str) -> Value {
        let data_url = format!("data:{};base64,{}", self.media_type, STANDARD.encode(&self.image));
        json!({
            "model": model,
            "temperature": 0,
            "messages": [
                {"role": "system", "content": build_prompt(&self.video_name, &self.prompt_text)},
                {"role": "user", "content": [
                    {"type": "text", "text": format!("Video Name: {}", self.video_name)},
                    {"type": "image_url", "image_url": {"url": data_url}}
                ]}
            ]
        })
    }
}

/// Assistant text of a chat-completions response.
pub fn reply_text(body: &str) -> Result<String, JudgeError> {
    let v: Value = serde_json::from_str(body).map_err(|e| JudgeError::SchemaViolation {
        field: "response".into(),
        reason: format!("invalid JSON: {e}"),
    })?;
    let content = &v["choices"][0]["message"]["content"];
    if let Some(s) = content.as_str() {
        return Ok(s.to_string());
    }
    if let Some(parts) = content.as_array() {
        let text: String = parts.iter().filter_map(|p| p["text"].as_str()).collect();
        if !text.is_empty() {
            return Ok(text);
        }
    }
    Err(JudgeError::SchemaViolation {
        field: "choices[0].message.content".into(),
        reason: "missing".into(),
    })
}

enum Attempt {
    Done(String),
    Retry(JudgeError),
    Fatal(JudgeError),
}

pub struct JudgeClient {
    agent: ureq::Agent,
    config: JudgeConfig,
}

impl JudgeClient {
    pub fn new(config: JudgeConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .build()
            .into();
        Self { agent, config }
    }

    pub fn config(&self) -> &JudgeConfig {
        &self.config
    }

    fn attempt(&self, body: &Value) -> Attempt {
        let mut req = self.agent.post(&self.config.endpoint).header("Content-Type", "application/json");
        if let Some(key) = &self.config.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = match req.send_json(body) {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(JudgeError::Transport(e.to_string())),
        };
        let status = resp.status().as_u16();
        let text = match resp.body_mut().read_to_string() {
            Ok(t) => t,
            Err(e) => return Attempt::Retry(JudgeError::Transport(e.to_string())),
        };
        match status {
            200..=299 => Attempt::Done(text),
            429 => Attempt::Retry(JudgeError::RateLimited { attempts: 0 }),
            500..=599 => Attempt::Retry(JudgeError::Http { status, body: text }),
            _ => Attempt::Fatal(JudgeError::Http { status, body: text }),
        }
    }

    /// Sends one request, retrying transport failures, 429 and 5xx with
    /// exponential backoff. Validation failures are never retried.
    pub fn submit(&self, req: &JudgeRequest) -> Result<JudgeResult, JudgeError> {
        req.validate()?;
        let body = req.body(&self.config.model);
        let max = self.config.retry.max_attempts.max(1);
        let mut last = None;
        for attempt in 1..=max {
            match self.attempt(&body) {
                Attempt::Done(text) => {
                    let mut result = parse_verdict(&reply_text(&text)?, self.config.strict)?;
                    result.prompt_name = req.prompt_id.clone();
                    return Ok(result);
                }
                Attempt::Fatal(e) => return Err(e),
                Attempt::Retry(e) => last = Some(e),
            }
            if attempt < max {
                thread::sleep(self.config.retry.delay(attempt));
            }
        }
        Err(match last.expect("at least one attempt") {
            JudgeError::RateLimited { .. } => JudgeError::RateLimited { attempts: max },
            other => other,
        })
    }

    /// Judges every request with at most `concurrency` in flight. Results
    /// come back sorted by clip id.
    pub fn submit_all(&self, requests: &[JudgeRequest]) -> Vec<(String, Result<JudgeResult, JudgeError>)> {
        let mut order: Vec<&JudgeRequest> = requests.iter().collect();
        order.sort_by(|a, b| a.clip_id.cmp(&b.clip_id));
        let slots: Vec<Mutex<Option<Result<JudgeResult, JudgeError>>>> = order.iter().map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let workers = self.config.concurrency.max(1).min(order.len());
        thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= order.len() {
                        break;
                    }
                    let r = self.submit(order[i]);
                    *slots[i].lock().expect("slot lock") = Some(r);
                });
            }
        });
        order
            .iter()
            .zip(slots)
            .map(|(req, slot)| (req.clip_id.clone(), slot.into_inner().expect("slot lock").expect("every slot filled")))
            .collect()
    }
}
