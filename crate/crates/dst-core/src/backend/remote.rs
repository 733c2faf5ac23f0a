//! Blocking chat-completion client with bounded exponential backoff and a
//! token-bucket rate limit shared across all sessions of a run.
//!
//! The credential comes from the `DST_API_KEY` environment variable, is
//! checked before any network traffic, and is only ever placed in the
//! Authorization header, never in logs, traces or transcripts.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prompting::TurnMessage;

use super::{BackendConfig, BackendKind, ChatBackend, ChatSession, Role};

pub const API_KEY_ENV: &str = "DST_API_KEY";

/// Injectable sleeper so tests can observe backoff delays instead of waiting.
pub type SleepFn = Box<dyn Fn(Duration) + Send + Sync>;

#[derive(Serialize)]
struct WireMessage<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    temperature: f64,
    messages: Vec<WireMessage<'a>>,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    content: String,
}

/// Continuous-refill token bucket, `rate_per_min` tokens per minute.
struct TokenBucket {
    capacity: f64,
    tokens: f64,
    rate_per_sec: f64,
    last_refill: Instant,
}

impl TokenBucket {
    fn new(rate_per_min: f64) -> Self {
        TokenBucket {
            capacity: rate_per_min.max(1.0),
            tokens: rate_per_min.max(1.0),
            rate_per_sec: rate_per_min / 60.0,
            last_refill: Instant::now(),
        }
    }

    fn refill(&mut self) {
        let now = Instant::now();
        let elapsed = now.duration_since(self.last_refill).as_secs_f64();
        self.tokens = (self.tokens + elapsed * self.rate_per_sec).min(self.capacity);
        self.last_refill = now;
    }

    /// Take one token, returning how long the caller must wait first.
    fn acquire(&mut self) -> Duration {
        self.refill();
        if self.tokens >= 1.0 {
            self.tokens -= 1.0;
            Duration::ZERO
        } else {
            let deficit = 1.0 - self.tokens;
            let wait = deficit / self.rate_per_sec;
            self.tokens = 0.0;
            Duration::from_secs_f64(wait)
        }
    }
}

pub struct RemoteBackend {
    config: BackendConfig,
    api_key: String,
    client: reqwest::blocking::Client,
    limiter: Mutex<TokenBucket>,
    sleeper: SleepFn,
}

impl RemoteBackend {
    /// Build a client from config; fails fast when the credential is unset.
    pub fn new(config: BackendConfig) -> Result<Self> {
        let api_key = std::env::var(API_KEY_ENV)
            .map_err(|_| Error::Config(format!("environment variable {API_KEY_ENV} is not set")))?;
        Self::with_api_key(config, api_key)
    }

    pub fn with_api_key(config: BackendConfig, api_key: String) -> Result<Self> {
        config.validate()?;
        if api_key.is_empty() {
            return Err(Error::Config("the API credential must not be empty".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(config.timeout_secs))
            .build()
            .map_err(|e| Error::Config(format!("failed to build HTTP client: {e}")))?;
        let limiter = Mutex::new(TokenBucket::new(config.rate_limit_per_min));
        Ok(RemoteBackend {
            config,
            api_key,
            client,
            limiter,
            sleeper: Box::new(std::thread::sleep),
        })
    }

    pub fn with_sleeper(mut self, sleeper: SleepFn) -> Self {
        self.sleeper = sleeper;
        self
    }

    fn backoff_delay(&self, attempt: u32) -> Duration {
        Duration::from_secs_f64(
            self.config.retry_base_delay_secs * f64::from(1u32 << attempt.min(16)),
        )
    }

    fn request_once(&self, body: &ChatRequest<'_>) -> std::result::Result<String, Transient> {
        let wait = self.limiter.lock().expect("limiter lock").acquire();
        if !wait.is_zero() {
            (self.sleeper)(wait);
        }
        let response = self
            .client
            .post(&self.config.endpoint_url)
            .bearer_auth(&self.api_key)
            .json(body)
            .send()
            .map_err(|e| {
                if e.is_timeout() || e.is_connect() {
                    Transient::Retryable(format!("transport failure: {e}"))
                } else {
                    Transient::Fatal(Error::Backend(format!("request failed: {e}")))
                }
            })?;
        let status = response.status();
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(Transient::Retryable(format!("endpoint returned {status}")));
        }
        if !status.is_success() {
            return Err(Transient::Fatal(Error::Backend(format!(
                "endpoint returned non-retryable status {status}"
            ))));
        }
        let parsed: ChatResponse = response
            .json()
            .map_err(|e| Transient::Fatal(Error::Backend(format!("malformed completion: {e}"))))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| Transient::Fatal(Error::Backend("completion had no choices".into())))
    }
}

enum Transient {
    Retryable(String),
    Fatal(Error),
}

impl ChatBackend for RemoteBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Remote
    }

    fn model_id(&self) -> &str {
        &self.config.model_id
    }

    fn open_session(&self, dialogue_id: &str) -> Result<ChatSession> {
        Ok(ChatSession::new(
            dialogue_id,
            BackendKind::Remote,
            self.model_id(),
        ))
    }

    fn fetch_response(&self, session: &ChatSession, message: &TurnMessage) -> Result<String> {
        let mut messages: Vec<WireMessage<'_>> = session
            .history
            .iter()
            .map(|(role, text)| WireMessage {
                role: match role {
                    Role::User => "user",
                    Role::Assistant => "assistant",
                },
                content: text,
            })
            .collect();
        messages.push(WireMessage {
            role: "user",
            content: &message.text,
        });
        let body = ChatRequest {
            model: &self.config.model_id,
            temperature: self.config.temperature,
            messages,
        };

        let mut attempt = 0;
        loop {
            match self.request_once(&body) {
                Ok(content) => return Ok(content),
                Err(Transient::Fatal(err)) => return Err(err),
                Err(Transient::Retryable(reason)) => {
                    if attempt >= self.config.max_retries {
                        return Err(Error::Backend(format!(
                            "retries exhausted after {} attempts: {reason}",
                            attempt + 1
                        )));
                    }
                    (self.sleeper)(self.backoff_delay(attempt));
                    attempt += 1;
                }
            }
        }
    }
}
