//! Transcript persistence and deterministic replay.
//!
//! Transcripts are JSONL, one record per exchange. Replay looks responses up
//! by `(dialogue_id, turn)` and returns the stored text verbatim, including
//! any surrounding prose, so extraction is always exercised against
//! realistic output. A missing key is an error, never a fabricated answer.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prompting::TurnMessage;

use super::{BackendKind, ChatBackend, ChatSession, Role};

/// One persisted exchange.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub dialogue_id: String,
    pub turn: usize,
    pub prompt: String,
    pub response: String,
    pub model_id: String,
    pub timestamp: String,
}

/// Recorded responses keyed by `(dialogue_id, turn)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TranscriptStore {
    entries: BTreeMap<(String, usize), String>,
    model_id: String,
}

impl TranscriptStore {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_jsonl(&text)
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut store = TranscriptStore::default();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record: TranscriptRecord = serde_json::from_str(line)
                .map_err(|e| Error::Transcript(format!("line {}: {e}", lineno + 1)))?;
            store.insert(record)?;
        }
        Ok(store)
    }

    pub fn insert(&mut self, record: TranscriptRecord) -> Result<()> {
        if self.model_id.is_empty() {
            self.model_id = record.model_id.clone();
        }
        let key = (record.dialogue_id.clone(), record.turn);
        if self.entries.insert(key, record.response).is_some() {
            return Err(Error::Transcript(format!(
                "duplicate transcript entry for dialogue {} turn {}",
                record.dialogue_id, record.turn
            )));
        }
        Ok(())
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn dialogue_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.entries.keys().map(|(id, _)| id.clone()).collect();
        ids.dedup();
        ids
    }

    pub fn contains_dialogue(&self, dialogue_id: &str) -> bool {
        self.entries.keys().any(|(id, _)| id == dialogue_id)
    }

    pub fn turn_count(&self, dialogue_id: &str) -> usize {
        self.entries
            .keys()
            .filter(|(id, _)| id == dialogue_id)
            .count()
    }

    pub fn get(&self, dialogue_id: &str, turn: usize) -> Option<&str> {
        self.entries
            .get(&(dialogue_id.to_string(), turn))
            .map(String::as_str)
    }

    /// Merge another store into this one; duplicate keys are errors.
    pub fn merge(&mut self, other: TranscriptStore) -> Result<()> {
        for ((dialogue_id, turn), response) in other.entries {
            let model_id = if other.model_id.is_empty() {
                self.model_id.clone()
            } else {
                other.model_id.clone()
            };
            self.insert(TranscriptRecord {
                dialogue_id,
                turn,
                prompt: String::new(),
                response,
                model_id,
                timestamp: String::new(),
            })?;
        }
        Ok(())
    }
}

/// Append one JSONL record per exchange of the session to `path`.
///
/// Prompts and responses only; no credentials or backend settings are ever
/// written. The file re-loads as a [`TranscriptStore`].
pub fn persist_transcript(session: &ChatSession, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if session.exchanges() == 0 {
        return Err(Error::Transcript(format!(
            "session {} has no exchanges to persist",
            session.session_id
        )));
    }
    let timestamp = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    for (i, pair) in session.history.chunks(2).enumerate() {
        let [(Role::User, prompt), (Role::Assistant, response)] = pair else {
            return Err(Error::Transcript(
                "session history does not alternate".into(),
            ));
        };
        let record = TranscriptRecord {
            dialogue_id: session.dialogue_id.clone(),
            turn: i + 1,
            prompt: prompt.clone(),
            response: response.clone(),
            model_id: session.model_id.clone(),
            timestamp: timestamp.clone(),
        };
        let line = serde_json::to_string(&record).expect("records serialize");
        writeln!(file, "{line}").map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    Ok(())
}

/// Replays stored responses; bit-deterministic for a fixed store.
#[derive(Debug, Clone)]
pub struct ReplayBackend {
    store: TranscriptStore,
}

impl ReplayBackend {
    pub fn new(store: TranscriptStore) -> Self {
        ReplayBackend { store }
    }

    pub fn store(&self) -> &TranscriptStore {
        &self.store
    }
}

impl ChatBackend for ReplayBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Replay
    }

    fn model_id(&self) -> &str {
        self.store.model_id()
    }

    fn open_session(&self, dialogue_id: &str) -> Result<ChatSession> {
        if !self.store.contains_dialogue(dialogue_id) {
            return Err(Error::Backend(format!(
                "dialogue {dialogue_id} is not in the transcript store"
            )));
        }
        Ok(ChatSession::new(
            dialogue_id,
            BackendKind::Replay,
            self.store.model_id(),
        ))
    }

    fn fetch_response(&self, session: &ChatSession, message: &TurnMessage) -> Result<String> {
        self.store
            .get(&session.dialogue_id, message.turn_index)
            .map(str::to_string)
            .ok_or_else(|| {
                Error::Backend(format!(
                    "no recorded response for dialogue {} turn {}",
                    session.dialogue_id, message.turn_index
                ))
            })
    }
}
