//! Converter from the upstream MultiWOZ 2.1 `data.json` layout to the
//! corpus format used by this harness.
//!
//! Upstream dialogues interleave user and system turns in a flat `log`; the
//! cumulative belief state for a user turn lives in the metadata of the
//! system turn that follows it, split into `semi` and `book` sections per
//! domain. Only the five schema domains are kept; `book` fields become
//! `domain-book_<field>` slots.

use std::collections::BTreeSet;
use std::path::Path;

use indexmap::IndexMap;
use serde::Deserialize;
use serde_json::Value;

use crate::corpus::{Dialogue, Turn, DONTCARE};
use crate::error::{Error, Result};

const KEPT_DOMAINS: [&str; 5] = ["taxi", "restaurant", "hotel", "attraction", "train"];

#[derive(Deserialize)]
struct UpstreamDialogue {
    log: Vec<UpstreamTurn>,
}

#[derive(Deserialize)]
struct UpstreamTurn {
    text: String,
    #[serde(default)]
    metadata: IndexMap<String, DomainMeta>,
}

#[derive(Deserialize, Default)]
struct DomainMeta {
    #[serde(default)]
    book: IndexMap<String, Value>,
    #[serde(default)]
    semi: IndexMap<String, Value>,
}

/// Convert upstream `data.json` content into dialogues.
pub fn convert_upstream(text: &str) -> Result<Vec<Dialogue>> {
    let file: IndexMap<String, UpstreamDialogue> =
        serde_json::from_str(text).map_err(|e| Error::json("upstream corpus", e))?;
    let mut dialogues = Vec::with_capacity(file.len());
    for (raw_id, dlg) in file {
        let id = raw_id.trim_end_matches(".json").to_string();
        if dlg.log.len() % 2 != 0 {
            return Err(Error::Corpus(format!(
                "dialogue {id}: log has {} entries; expected alternating user/system pairs",
                dlg.log.len()
            )));
        }
        let mut turns = Vec::with_capacity(dlg.log.len() / 2);
        let mut domains = BTreeSet::new();
        for (pos, pair) in dlg.log.chunks(2).enumerate() {
            let index = pos + 1;
            let system_utterance = if index == 1 {
                String::new()
            } else {
                dlg.log[2 * pos - 1].text.clone()
            };
            let state = flatten_state(&pair[1].metadata);
            for slot in state.keys() {
                if let Some(domain) = slot.split('-').next() {
                    domains.insert(domain.to_string());
                }
            }
            turns.push(Turn {
                index,
                system_utterance,
                user_utterance: pair[0].text.clone(),
                gold_state: state,
                gold_update: Default::default(),
            });
        }
        let mut dialogue = Dialogue { id, domains, turns };
        crate::corpus::derive_gold_updates(&mut dialogue);
        dialogues.push(dialogue);
    }
    Ok(dialogues)
}

/// Load and convert an upstream-format file.
pub fn convert_upstream_file(path: impl AsRef<Path>) -> Result<Vec<Dialogue>> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    convert_upstream(&text)
}

fn flatten_state(
    metadata: &IndexMap<String, DomainMeta>,
) -> std::collections::BTreeMap<String, String> {
    let mut state = std::collections::BTreeMap::new();
    for (domain, meta) in metadata {
        if !KEPT_DOMAINS.contains(&domain.as_str()) {
            continue;
        }
        for (key, value) in &meta.semi {
            if let Some(clean) = clean_value(value) {
                state.insert(format!("{domain}-{key}"), clean);
            }
        }
        for (key, value) in &meta.book {
            if key == "booked" {
                continue;
            }
            if let Some(clean) = clean_value(value) {
                state.insert(format!("{domain}-book_{key}"), clean);
            }
        }
    }
    state
}

fn clean_value(value: &Value) -> Option<String> {
    let raw = value.as_str()?.trim().to_lowercase();
    match raw.as_str() {
        "" | "not mentioned" | "none" => None,
        "dont care" | "don't care" | "do not care" | "do n't care" => Some(DONTCARE.to_string()),
        _ => Some(raw),
    }
}
