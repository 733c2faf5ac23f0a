//! Scripted backend for exercising failure paths deterministically.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::prompting::TurnMessage;

use super::{BackendKind, ChatBackend, ChatSession};

/// One scripted send outcome.
#[derive(Debug, Clone)]
pub enum FaultStep {
    Respond(String),
    Fail(String),
}

/// Answers sends from per-dialogue scripts; running off the end of a script
/// is an error, as is any [`FaultStep::Fail`] step.
#[derive(Debug, Clone, Default)]
pub struct FaultBackend {
    scripts: BTreeMap<String, Vec<FaultStep>>,
    default_script: Vec<FaultStep>,
}

impl FaultBackend {
    pub fn with_default_script(default_script: Vec<FaultStep>) -> Self {
        FaultBackend {
            scripts: BTreeMap::new(),
            default_script,
        }
    }

    pub fn script_for(mut self, dialogue_id: &str, script: Vec<FaultStep>) -> Self {
        self.scripts.insert(dialogue_id.to_string(), script);
        self
    }

    fn script(&self, dialogue_id: &str) -> &[FaultStep] {
        self.scripts
            .get(dialogue_id)
            .map(Vec::as_slice)
            .unwrap_or(&self.default_script)
    }
}

impl ChatBackend for FaultBackend {
    fn kind(&self) -> BackendKind {
        BackendKind::Fault
    }

    fn model_id(&self) -> &str {
        "fault-script"
    }

    fn open_session(&self, dialogue_id: &str) -> Result<ChatSession> {
        Ok(ChatSession::new(
            dialogue_id,
            BackendKind::Fault,
            self.model_id(),
        ))
    }

    fn fetch_response(&self, session: &ChatSession, message: &TurnMessage) -> Result<String> {
        match self
            .script(&session.dialogue_id)
            .get(message.turn_index - 1)
        {
            Some(FaultStep::Respond(text)) => Ok(text.clone()),
            Some(FaultStep::Fail(reason)) => Err(Error::Backend(format!(
                "scripted failure at dialogue {} turn {}: {reason}",
                session.dialogue_id, message.turn_index
            ))),
            None => Err(Error::Backend(format!(
                "script exhausted at dialogue {} turn {}",
                session.dialogue_id, message.turn_index
            ))),
        }
    }
}
