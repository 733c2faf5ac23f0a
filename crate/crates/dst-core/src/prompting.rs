//! Task prompt construction and per-turn chat messages.
//!
//! The task prompt has three parts, always in the same order: the slot list
//! with descriptions, the categorical candidate lists, and the informal task
//! description. The boilerplate is frozen in a template resource with two
//! insertion points, so fidelity to the reference prompt is a file diff
//! rather than a code property. Turn one sends the task prompt plus the
//! first turn-pair; all later turns send only the current turn-pair and
//! never restate the prompt or any accumulated state.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::resources;
use crate::schema::Schema;

const SLOTS_SLOT: &str = "{{SLOTS_JSON}}";
const CATEGORICAL_SLOT: &str = "{{CATEGORICAL_JSON}}";

/// The task-defining prompt with byte ranges of its three parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskPrompt {
    pub text: String,
    /// Byte ranges of the slot list, the categorical list and the task
    /// description, in that order.
    pub part_offsets: [Range<usize>; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MessageKind {
    Initial,
    Followup,
}

/// One rendered chat message covering a single turn-pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TurnMessage {
    pub text: String,
    pub turn_index: usize,
    pub kind: MessageKind,
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

fn render_string_map(entries: &[(String, String)]) -> String {
    if entries.is_empty() {
        return "{}".to_string();
    }
    let mut out = String::from("{\n");
    for (i, (key, value)) in entries.iter().enumerate() {
        out.push_str("    ");
        out.push_str(&json_string(key));
        out.push_str(": ");
        out.push_str(&json_string(value));
        if i + 1 < entries.len() {
            out.push(',');
        }
        out.push('\n');
    }
    out.push('}');
    out
}

fn render_list_map(entries: &[(String, Vec<String>)]) -> String {
    if entries.is_empty() {
        return "{}".to_string();
    }
    let mut out = String::from("{\n");
    for (i, (key, values)) in entries.iter().enumerate() {
        out.push_str("    ");
        out.push_str(&json_string(key));
        out.push_str(": [");
        for (j, value) in values.iter().enumerate() {
            if j > 0 {
                out.push_str(", ");
            }
            out.push_str(&json_string(value));
        }
        out.push(']');
        if i + 1 < entries.len() {
            out.push(',');
        }
        out.push('\n');
    }
    out.push('}');
    out
}

/// Build the task prompt from a schema, using the frozen template resource.
///
/// The slot and categorical JSON blocks follow schema order. An empty schema
/// is refused: a tracking prompt without slots is meaningless.
pub fn build_task_prompt(schema: &Schema) -> Result<TaskPrompt> {
    build_task_prompt_with_template(schema, resources::PROMPT_TEMPLATE)
}

pub fn build_task_prompt_with_template(schema: &Schema, template: &str) -> Result<TaskPrompt> {
    if schema.is_empty() {
        return Err(Error::Prompt(
            "schema has no slots; refusing to build a task prompt [rule: non-empty-schema]".into(),
        ));
    }
    let template = template.strip_suffix('\n').unwrap_or(template);
    let (head, rest) = template
        .split_once(SLOTS_SLOT)
        .ok_or_else(|| Error::Prompt(format!("template lacks the {SLOTS_SLOT} insertion point")))?;
    let (mid, tail) = rest.split_once(CATEGORICAL_SLOT).ok_or_else(|| {
        Error::Prompt(format!(
            "template lacks the {CATEGORICAL_SLOT} insertion point"
        ))
    })?;

    let slot_entries: Vec<(String, String)> = schema
        .slots()
        .map(|s| (s.name.clone(), s.description.clone()))
        .collect();
    let categorical_entries: Vec<(String, Vec<String>)> = schema
        .categorical_slots()
        .map(|s| (s.name.clone(), s.candidates.clone()))
        .collect();

    let slots_json = render_string_map(&slot_entries);
    let categorical_json = render_list_map(&categorical_entries);

    let mut text = String::with_capacity(
        head.len() + slots_json.len() + mid.len() + categorical_json.len() + tail.len(),
    );
    text.push_str(head);
    let slots_start = text.len();
    text.push_str(&slots_json);
    let slots_end = text.len();
    text.push_str(mid);
    let categorical_start = text.len();
    text.push_str(&categorical_json);
    let categorical_end = text.len();
    text.push_str(tail);
    let task_start = categorical_end + (tail.len() - tail.trim_start_matches('\n').len());
    let task_end = text.len();

    Ok(TaskPrompt {
        text,
        part_offsets: [
            slots_start..slots_end,
            categorical_start..categorical_end,
            task_start..task_end,
        ],
    })
}

/// Render the initial message: the task prompt, a blank line, then the first
/// turn-pair. Utterances are framed as JSON strings so embedded quotes are
/// unambiguous.
pub fn build_initial_prompt(prompt: &TaskPrompt, system: &str, user: &str) -> TurnMessage {
    let text = format!(
        "{}\n\n\"system\": {}\n\"user\": {}",
        prompt.text,
        json_string(system),
        json_string(user)
    );
    TurnMessage {
        text,
        turn_index: 1,
        kind: MessageKind::Initial,
    }
}

/// Render a follow-up message carrying only the current turn-pair.
pub fn build_followup_prompt(system: &str, user: &str, turn_index: usize) -> Result<TurnMessage> {
    if turn_index < 2 {
        return Err(Error::Prompt(format!(
            "follow-up messages start at turn 2; got turn {turn_index}"
        )));
    }
    let text = format!(
        "\"system\": {}\n\"user\": {}",
        json_string(system),
        json_string(user)
    );
    Ok(TurnMessage {
        text,
        turn_index,
        kind: MessageKind::Followup,
    })
}

/// Recover the system and user utterances from a rendered turn-pair.
///
/// Works on both initial and follow-up messages: the turn-pair is always the
/// final two lines.
pub fn parse_turn_pair(text: &str) -> Option<(String, String)> {
    let mut lines = text.lines().rev();
    let user_line = lines.next()?;
    let system_line = lines.next()?;
    let user = user_line.strip_prefix("\"user\": ")?;
    let system = system_line.strip_prefix("\"system\": ")?;
    let user: String = serde_json::from_str(user).ok()?;
    let system: String = serde_json::from_str(system).ok()?;
    Some((system, user))
}
