//! Cumulative dialogue state and the per-dialogue run loop:
//! prompt, send, extract, normalize, apply.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::backend::{BackendKind, ChatBackend, ChatSession};
use crate::corpus::{Dialogue, REMOVED};
use crate::error::{Error, Result};
use crate::extraction::{
    extract_json_fragments, interpret_response, normalize_update, EmptinessLexicon,
    NormalizedUpdate, RawUpdate, ValueVariantTable,
};
use crate::prompting::{build_followup_prompt, build_initial_prompt, build_task_prompt};
use crate::schema::{RequestableLexicon, Schema};

/// The cumulative dialogue state: informable schema slots only, never "?"
/// or "none" values.
pub type DialogueState = BTreeMap<String, String>;

/// Everything needed to turn raw responses into state updates.
#[derive(Clone, Copy)]
pub struct TurnPipeline<'a> {
    pub schema: &'a Schema,
    pub requestables: &'a RequestableLexicon,
    pub variants: &'a ValueVariantTable,
    pub emptiness: &'a EmptinessLexicon,
}

/// Per-turn record of a run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub turn: usize,
    pub prompt: String,
    pub response: String,
    pub raw: RawUpdate,
    pub update: NormalizedUpdate,
    /// Cumulative state after applying this turn's update.
    pub state: DialogueState,
    pub full_state_flag: bool,
    pub warnings: Vec<String>,
}

/// Full machine record of one dialogue run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub dialogue_id: String,
    pub model_id: String,
    pub backend_kind: BackendKind,
    pub incomplete: bool,
    pub error: Option<String>,
    pub turns: Vec<TurnRecord>,
}

impl Trace {
    pub fn final_state(&self) -> DialogueState {
        self.turns
            .last()
            .map(|t| t.state.clone())
            .unwrap_or_default()
    }

    /// Serialize as JSONL: a meta line followed by one line per turn.
    pub fn to_jsonl(&self) -> String {
        let meta = serde_json::json!({
            "record": "meta",
            "dialogue_id": self.dialogue_id,
            "model_id": self.model_id,
            "backend_kind": self.backend_kind,
            "incomplete": self.incomplete,
            "error": self.error,
        });
        let mut out = serde_json::to_string(&meta).expect("meta serializes");
        out.push('\n');
        for turn in &self.turns {
            let mut line = serde_json::to_value(turn).expect("turn records serialize");
            line.as_object_mut()
                .expect("turn records are objects")
                .insert("record".into(), "turn".into());
            out.push_str(&serde_json::to_string(&line).expect("turn serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Trace> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let meta_line = lines
            .next()
            .ok_or_else(|| Error::Eval("empty trace file".into()))?;
        let meta: serde_json::Value = serde_json::from_str(meta_line)
            .map_err(|e| Error::Eval(format!("bad trace meta line: {e}")))?;
        if meta.get("record").and_then(|v| v.as_str()) != Some("meta") {
            return Err(Error::Eval(
                "trace file does not start with a meta record".into(),
            ));
        }
        let mut trace = Trace {
            dialogue_id: meta["dialogue_id"].as_str().unwrap_or_default().to_string(),
            model_id: meta["model_id"].as_str().unwrap_or_default().to_string(),
            backend_kind: serde_json::from_value(meta["backend_kind"].clone())
                .map_err(|e| Error::Eval(format!("bad backend kind in trace meta: {e}")))?,
            incomplete: meta["incomplete"].as_bool().unwrap_or(false),
            error: meta["error"].as_str().map(str::to_string),
            turns: Vec::new(),
        };
        for line in lines {
            let record: TurnRecord = serde_json::from_str(line)
                .map_err(|e| Error::Eval(format!("bad trace turn line: {e}")))?;
            trace.turns.push(record);
        }
        Ok(trace)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Trace> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_jsonl(&text)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_jsonl()).map_err(|e| Error::io(path.display().to_string(), e))
    }
}

/// Apply one normalized update: removals first, then assignments. Requested
/// and dropped entries never touch the state.
pub fn apply_update(prev: &DialogueState, update: &NormalizedUpdate) -> DialogueState {
    let mut state = prev.clone();
    for slot in &update.removals {
        state.remove(slot);
    }
    for (slot, value) in &update.informable {
        debug_assert!(value != "?" && value != REMOVED);
        state.insert(slot.clone(), value.clone());
    }
    state
}

/// Detect a response that re-asserts the whole accumulated state instead of
/// a delta: every slot of the previous state reappears in this update's
/// informable set. States with fewer than two assignments are never flagged;
/// re-confirming a single slot is indistinguishable from a benign repeat.
pub fn detect_full_state_prediction(
    prev: &DialogueState,
    informable: &BTreeMap<String, String>,
) -> bool {
    prev.len() >= 2 && prev.keys().all(|slot| informable.contains_key(slot))
}

/// Build a [`NormalizedUpdate`] from a gold update map ("none" entries
/// become removals). Used for gold-replay checks.
pub fn normalized_from_gold(gold_update: &BTreeMap<String, String>) -> NormalizedUpdate {
    let mut update = NormalizedUpdate::default();
    for (slot, value) in gold_update {
        if value == REMOVED {
            update.removals.insert(slot.clone());
        } else {
            update.informable.insert(slot.clone(), value.clone());
        }
    }
    update
}

/// Synthesize the trace a perfect predictor would produce for a dialogue.
pub fn gold_trace(dialogue: &Dialogue) -> Trace {
    let mut state = DialogueState::new();
    let mut turns = Vec::with_capacity(dialogue.turns.len());
    for turn in &dialogue.turns {
        let update = normalized_from_gold(&turn.gold_update);
        let full_state_flag = detect_full_state_prediction(&state, &update.informable);
        state = apply_update(&state, &update);
        turns.push(TurnRecord {
            turn: turn.index,
            prompt: String::new(),
            response: String::new(),
            raw: RawUpdate::default(),
            update,
            state: state.clone(),
            full_state_flag,
            warnings: Vec::new(),
        });
    }
    Trace {
        dialogue_id: dialogue.id.clone(),
        model_id: "gold".into(),
        backend_kind: BackendKind::Replay,
        incomplete: false,
        error: None,
        turns,
    }
}

/// Run one dialogue through a fresh session: one pass, no regeneration.
///
/// A backend failure aborts the dialogue and yields the partial trace marked
/// incomplete; the caller decides what that means for the whole run.
pub fn run_dialogue(
    backend: &dyn ChatBackend,
    session: &mut ChatSession,
    pipeline: TurnPipeline<'_>,
    dialogue: &Dialogue,
) -> Result<Trace> {
    if session.exchanges() != 0 {
        return Err(Error::Backend(format!(
            "session {} already has history; each dialogue needs a fresh session",
            session.session_id
        )));
    }
    if session.dialogue_id != dialogue.id {
        return Err(Error::Backend(format!(
            "session is bound to dialogue {} but got dialogue {}",
            session.dialogue_id, dialogue.id
        )));
    }
    let task_prompt = build_task_prompt(pipeline.schema)?;
    let mut trace = Trace {
        dialogue_id: dialogue.id.clone(),
        model_id: session.model_id.clone(),
        backend_kind: session.backend_kind,
        incomplete: false,
        error: None,
        turns: Vec::with_capacity(dialogue.turns.len()),
    };
    let mut state = DialogueState::new();
    for turn in &dialogue.turns {
        let message = if turn.index == 1 {
            build_initial_prompt(&task_prompt, &turn.system_utterance, &turn.user_utterance)
        } else {
            build_followup_prompt(&turn.system_utterance, &turn.user_utterance, turn.index)?
        };
        let response = match backend.send(session, &message) {
            Ok(response) => response,
            Err(err) => {
                trace.incomplete = true;
                trace.error = Some(err.to_string());
                return Ok(trace);
            }
        };
        let fragments = extract_json_fragments(&response);
        let raw = interpret_response(&response, fragments, pipeline.emptiness);
        let mut warnings = Vec::new();
        if raw.needs_parse_warning() {
            warnings.push(format!(
                "turn {}: no JSON fragments and no emptiness indication; treated as an empty update",
                turn.index
            ));
        }
        let update = normalize_update(
            &raw,
            pipeline.schema,
            pipeline.requestables,
            pipeline.variants,
        );
        let full_state_flag = detect_full_state_prediction(&state, &update.informable);
        state = apply_update(&state, &update);
        trace.turns.push(TurnRecord {
            turn: turn.index,
            prompt: message.text,
            response,
            raw,
            update,
            state: state.clone(),
            full_state_flag,
            warnings,
        });
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{FaultBackend, FaultStep, ReplayBackend, TranscriptStore};
    use crate::corpus::load_corpus;
    use crate::schema::{load_requestables, load_schema};
    use crate::testutil::fixture_path;

    fn fixtures() -> (
        Schema,
        RequestableLexicon,
        ValueVariantTable,
        EmptinessLexicon,
    ) {
        (
            load_schema(fixture_path("schema.multiwoz.json")).unwrap(),
            load_requestables(fixture_path("requestables.json")).unwrap(),
            ValueVariantTable::bundled().unwrap(),
            EmptinessLexicon::bundled(),
        )
    }

    fn replay_trace(id: &str) -> Trace {
        let (schema, requestables, variants, emptiness) = fixtures();
        let pipeline = TurnPipeline {
            schema: &schema,
            requestables: &requestables,
            variants: &variants,
            emptiness: &emptiness,
        };
        let store = TranscriptStore::load(fixture_path("transcripts.mini.jsonl")).unwrap();
        let backend = ReplayBackend::new(store);
        let corpus = load_corpus(fixture_path("corpus.mini.json")).unwrap();
        let dialogue = corpus.dialogues.iter().find(|d| d.id == id).unwrap();
        let mut session = backend.open_session(id).unwrap();
        run_dialogue(&backend, &mut session, pipeline, dialogue).unwrap()
    }

    fn upd(informable: &[(&str, &str)]) -> NormalizedUpdate {
        let mut update = NormalizedUpdate::default();
        for (slot, value) in informable {
            update
                .informable
                .insert(slot.to_string(), value.to_string());
        }
        update
    }

    fn state(pairs: &[(&str, &str)]) -> DialogueState {
        pairs
            .iter()
            .map(|(s, v)| (s.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn empty_update_is_identity() {
        let prev = state(&[("hotel-name", "acorn"), ("hotel-area", "north")]);
        assert_eq!(apply_update(&prev, &NormalizedUpdate::default()), prev);
    }

    #[test]
    fn redundant_repeat_plus_addition_accumulates() {
        let prev = state(&[("attraction-type", "museum")]);
        let update = upd(&[("attraction-type", "museum"), ("attraction-area", "centre")]);
        assert_eq!(
            apply_update(&prev, &update),
            state(&[("attraction-type", "museum"), ("attraction-area", "centre")])
        );
    }

    #[test]
    fn removals_delete_assignments() {
        let prev = state(&[("hotel-name", "x")]);
        let mut update = NormalizedUpdate::default();
        update.removals.insert("hotel-name".into());
        assert_eq!(apply_update(&prev, &update), state(&[]));
    }

    #[test]
    fn full_state_flag_requires_every_prior_slot() {
        let prev = state(&[("a", "1"), ("b", "2"), ("c", "3")]);
        let all = upd(&[("a", "1"), ("b", "2"), ("c", "3"), ("d", "4")]);
        assert!(detect_full_state_prediction(&prev, &all.informable));
        let partial = upd(&[("a", "1"), ("b", "2")]);
        assert!(!detect_full_state_prediction(&prev, &partial.informable));
        assert!(!detect_full_state_prediction(
            &DialogueState::new(),
            &all.informable
        ));
        // A single re-confirmed slot is not a full-state dump.
        let single = state(&[("a", "1")]);
        assert!(!detect_full_state_prediction(&single, &all.informable));
    }

    #[test]
    fn full_state_dialogue_flags_its_later_turns() {
        let trace = replay_trace("MUL2116");
        assert!(!trace.turns[0].full_state_flag);
        assert!(trace.turns[1].full_state_flag);
        assert!(trace.turns[3].full_state_flag);
    }

    #[test]
    fn single_slot_repeat_is_not_flagged() {
        let trace = replay_trace("PMUL4246");
        assert!(trace.turns.iter().all(|t| !t.full_state_flag));
    }

    #[test]
    fn carry_over_miss_is_preserved_end_to_end() {
        let trace = replay_trace("PMUL4050");
        assert_eq!(trace.turns.len(), 5);
        assert!(!trace.incomplete);
        let final_state = trace.final_state();
        assert!(!final_state.contains_key("hotel-name"));
        assert_eq!(
            final_state.get("hotel-book_people").map(String::as_str),
            Some("8")
        );
    }

    #[test]
    fn accumulated_state_reflects_every_update() {
        let trace = replay_trace("MUL2122");
        let final_state = trace.final_state();
        assert_eq!(
            final_state.get("train-book_people").map(String::as_str),
            Some("2")
        );
        assert_eq!(
            final_state.get("hotel-name").map(String::as_str),
            Some("acorn guest house")
        );
    }

    #[test]
    fn one_turn_dialogue_with_emptiness_answer_yields_empty_state() {
        let (schema, requestables, variants, emptiness) = fixtures();
        let pipeline = TurnPipeline {
            schema: &schema,
            requestables: &requestables,
            variants: &variants,
            emptiness: &emptiness,
        };
        let backend = FaultBackend::with_default_script(vec![FaultStep::Respond(
            "An empty JSON list, no new slot is updated by the user.".into(),
        )]);
        let dialogue = crate::corpus::parse_corpus(
            r#"{"dialogues": [{"id": "T", "domains": [], "turns": [
                {"system": "", "user": "hello there", "state": {}}]}]}"#,
        )
        .unwrap()
        .dialogues
        .remove(0);
        let mut session = backend.open_session("T").unwrap();
        let trace = run_dialogue(&backend, &mut session, pipeline, &dialogue).unwrap();
        assert_eq!(trace.turns.len(), 1);
        assert!(trace.final_state().is_empty());
        assert!(trace.turns[0].warnings.is_empty());
        assert!(!trace.incomplete);
    }

    #[test]
    fn backend_failure_yields_partial_trace() {
        let (schema, requestables, variants, emptiness) = fixtures();
        let pipeline = TurnPipeline {
            schema: &schema,
            requestables: &requestables,
            variants: &variants,
            emptiness: &emptiness,
        };
        let backend = FaultBackend::with_default_script(vec![
            FaultStep::Respond("{\"hotel-area\": \"north\"}".into()),
            FaultStep::Fail("injected".into()),
        ]);
        let dialogue = crate::corpus::parse_corpus(
            r#"{"dialogues": [{"id": "T", "domains": ["hotel"], "turns": [
                {"system": "", "user": "north please", "state": {"hotel-area": "north"}},
                {"system": "ok", "user": "more", "state": {"hotel-area": "north"}},
                {"system": "ok", "user": "even more", "state": {"hotel-area": "north"}}]}]}"#,
        )
        .unwrap()
        .dialogues
        .remove(0);
        let mut session = backend.open_session("T").unwrap();
        let trace = run_dialogue(&backend, &mut session, pipeline, &dialogue).unwrap();
        assert!(trace.incomplete);
        assert_eq!(trace.turns.len(), 1);
        assert!(trace.error.as_deref().unwrap_or("").contains("injected"));
    }

    #[test]
    fn stale_sessions_are_rejected() {
        let (schema, requestables, variants, emptiness) = fixtures();
        let pipeline = TurnPipeline {
            schema: &schema,
            requestables: &requestables,
            variants: &variants,
            emptiness: &emptiness,
        };
        let backend = FaultBackend::with_default_script(vec![
            FaultStep::Respond("{}".into()),
            FaultStep::Respond("{}".into()),
        ]);
        let dialogue = crate::corpus::parse_corpus(
            r#"{"dialogues": [{"id": "T", "domains": [], "turns": [
                {"system": "", "user": "hi", "state": {}}]}]}"#,
        )
        .unwrap()
        .dialogues
        .remove(0);
        let mut session = backend.open_session("T").unwrap();
        run_dialogue(&backend, &mut session, pipeline, &dialogue).unwrap();
        assert!(run_dialogue(&backend, &mut session, pipeline, &dialogue).is_err());
    }

    #[test]
    fn gold_updates_reconstruct_gold_states_for_every_bundled_dialogue() {
        let corpus = load_corpus(fixture_path("corpus.mini.json")).unwrap();
        for dialogue in &corpus.dialogues {
            let mut state = DialogueState::new();
            for turn in &dialogue.turns {
                state = apply_update(&state, &normalized_from_gold(&turn.gold_update));
                assert_eq!(
                    state, turn.gold_state,
                    "dialogue {} turn {}",
                    dialogue.id, turn.index
                );
            }
        }
    }

    #[test]
    fn traces_serialize_deterministically_and_round_trip() {
        let a = replay_trace("MUL2405");
        let b = replay_trace("MUL2405");
        assert_eq!(a.to_jsonl(), b.to_jsonl());
        let back = Trace::from_jsonl(&a.to_jsonl()).unwrap();
        assert_eq!(a, back);
    }

    #[test]
    fn states_never_hold_reserved_values() {
        let corpus = load_corpus(fixture_path("corpus.mini.json")).unwrap();
        for dialogue in &corpus.dialogues {
            let trace = replay_trace(&dialogue.id);
            for record in &trace.turns {
                for value in record.state.values() {
                    assert!(value != "?" && value != "none");
                }
            }
        }
    }
}
