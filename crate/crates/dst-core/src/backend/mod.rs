//! Chat-session abstraction over which turn messages are sent and raw
//! responses received.
//!
//! Three interchangeable implementations: a remote chat-completion endpoint,
//! deterministic transcript replay, and scripted fault injection. A session
//! is bound to one dialogue and strictly sequential; distinct sessions may
//! run concurrently.

mod fault;
mod remote;
mod replay;

pub use fault::{FaultBackend, FaultStep};
pub use remote::{RemoteBackend, SleepFn};
pub use replay::{persist_transcript, ReplayBackend, TranscriptRecord, TranscriptStore};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prompting::TurnMessage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Remote,
    Replay,
    Fault,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    User,
    Assistant,
}

/// One chat bound to one dialogue. History alternates user/assistant
/// starting with user; every send appends exactly one of each.
#[derive(Debug, Clone)]
pub struct ChatSession {
    pub session_id: String,
    pub dialogue_id: String,
    pub history: Vec<(Role, String)>,
    pub backend_kind: BackendKind,
    pub model_id: String,
}

impl ChatSession {
    fn new(dialogue_id: &str, backend_kind: BackendKind, model_id: &str) -> Self {
        let kind_tag = match backend_kind {
            BackendKind::Remote => "remote",
            BackendKind::Replay => "replay",
            BackendKind::Fault => "fault",
        };
        ChatSession {
            session_id: format!("{kind_tag}:{dialogue_id}"),
            dialogue_id: dialogue_id.to_string(),
            history: Vec::new(),
            backend_kind,
            model_id: model_id.to_string(),
        }
    }

    /// Number of completed exchanges.
    pub fn exchanges(&self) -> usize {
        self.history.len() / 2
    }
}

/// Remote endpoint settings; also carries the retry and rate-limit policy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BackendConfig {
    pub endpoint_url: String,
    pub model_id: String,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default = "default_retry_base_delay")]
    pub retry_base_delay_secs: f64,
    #[serde(default = "default_rate_limit")]
    pub rate_limit_per_min: f64,
}

fn default_timeout() -> f64 {
    60.0
}
fn default_max_retries() -> u32 {
    3
}
fn default_retry_base_delay() -> f64 {
    1.0
}
fn default_rate_limit() -> f64 {
    60.0
}

impl BackendConfig {
    pub fn validate(&self) -> Result<()> {
        if self.endpoint_url.is_empty() {
            return Err(Error::Config(
                "backend endpoint_url must not be empty".into(),
            ));
        }
        if !self.rate_limit_per_min.is_finite() || self.rate_limit_per_min <= 0.0 {
            return Err(Error::Config(
                "backend rate_limit_per_min must be positive".into(),
            ));
        }
        if !self.timeout_secs.is_finite() || self.timeout_secs <= 0.0 {
            return Err(Error::Config(
                "backend timeout_secs must be positive".into(),
            ));
        }
        if self.retry_base_delay_secs < 0.0 {
            return Err(Error::Config(
                "backend retry_base_delay_secs must not be negative".into(),
            ));
        }
        Ok(())
    }
}

/// A source of responses for chat sessions.
pub trait ChatBackend: Send + Sync {
    fn kind(&self) -> BackendKind;

    fn model_id(&self) -> &str;

    /// Open a fresh session bound to one dialogue.
    fn open_session(&self, dialogue_id: &str) -> Result<ChatSession>;

    /// Produce the response for `message` given the session so far. Called
    /// through [`ChatBackend::send`], which owns validation and history.
    fn fetch_response(&self, session: &ChatSession, message: &TurnMessage) -> Result<String>;

    /// Send one turn message and record the exchange on the session.
    fn send(&self, session: &mut ChatSession, message: &TurnMessage) -> Result<String> {
        let expected = session.exchanges() + 1;
        if message.turn_index != expected {
            return Err(Error::Backend(format!(
                "out-of-order send: message is turn {} but session {} expects turn {expected}",
                message.turn_index, session.session_id
            )));
        }
        let response = self.fetch_response(session, message)?;
        session.history.push((Role::User, message.text.clone()));
        session.history.push((Role::Assistant, response.clone()));
        Ok(response)
    }
}
