//! Turning raw response text into a normalized state update.
//!
//! Responses arrive as free text with zero or more embedded JSON objects,
//! possibly wrapped in code fences, prose, or editor chrome ("Copy code").
//! Extraction finds every maximal balanced-brace region that parses as a
//! flat string-to-string object, merges them in textual order with later
//! duplicates winning, resolves slot names against the schema and the
//! requestable lexicon, and canonicalizes values. Everything here is
//! per-turn and stateless.

use std::collections::{BTreeMap, BTreeSet};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::resources;
use crate::schema::{RequestableLexicon, Schema, SlotDef, SlotKind};

/// Value marking a requested slot.
pub const REQUESTED_MARKER: &str = "?";
/// Value marking an explicit removal.
pub const REMOVAL_MARKER: &str = "none";

/// The parsed-but-unresolved content of one response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct RawUpdate {
    /// Raw slot-value pairs merged over all fragments, textual order, later
    /// duplicate keys overriding earlier ones.
    pub pairs: IndexMap<String, String>,
    pub fragment_count: usize,
    /// The prose explicitly claimed there was nothing to update.
    pub empty_indicated: bool,
}

impl RawUpdate {
    /// A response that produced nothing and did not declare emptiness is
    /// suspicious and gets flagged on the trace.
    pub fn needs_parse_warning(&self) -> bool {
        self.fragment_count == 0 && !self.empty_indicated
    }
}

/// Where a predicted slot name landed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "name", rename_all = "snake_case")]
pub enum SlotResolution {
    /// Exact (case-insensitive) informable schema slot, stored name.
    SchemaSlot(String),
    /// Exact (case-insensitive) requestable slot, stored name.
    RequestableHallucination(String),
    /// Separator-folded match onto a schema slot, resolved name.
    Alias(String),
    /// Nothing matched; the raw name.
    Fabricated(String),
}

/// One raw pair that did not make it into the update.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedEntry {
    pub raw_name: String,
    pub raw_value: String,
    pub resolution: SlotResolution,
    pub reason: String,
}

/// The normalized per-turn update: what the tracker applies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct NormalizedUpdate {
    /// Canonicalized assignments for informable schema slots.
    pub informable: BTreeMap<String, String>,
    /// Slots explicitly cleared with "none".
    pub removals: BTreeSet<String>,
    /// Slots the user asked about ("?" values).
    pub requested: BTreeSet<String>,
    /// Hallucinated or superseded pairs, with their resolution.
    pub dropped: Vec<DroppedEntry>,
}

impl NormalizedUpdate {
    pub fn is_empty(&self) -> bool {
        self.informable.is_empty()
            && self.removals.is_empty()
            && self.requested.is_empty()
            && self.dropped.is_empty()
    }
}

/// Extract every maximal balanced-brace region that parses as a non-empty
/// flat string-to-string JSON object, in textual order.
///
/// Brace matching is string-aware (quotes and escapes inside JSON strings do
/// not count). A region that balances but does not parse as a flat string
/// map is skipped whole; a `{` that never balances is skipped and scanning
/// resumes at the next `{` after it. Empty objects (`{}`) carry no pairs and
/// are not fragments.
pub fn extract_json_fragments(text: &str) -> Vec<IndexMap<String, String>> {
    let bytes = text.as_bytes();
    let mut fragments = Vec::new();
    let mut pos = 0;
    while let Some(open) = find_byte(bytes, pos, b'{') {
        match find_balanced_close(bytes, open) {
            Some(close) => {
                if let Ok(map) =
                    serde_json::from_str::<IndexMap<String, String>>(&text[open..=close])
                {
                    if !map.is_empty() {
                        fragments.push(map);
                    }
                }
                pos = close + 1;
            }
            None => pos = open + 1,
        }
    }
    fragments
}

fn find_byte(bytes: &[u8], from: usize, needle: u8) -> Option<usize> {
    bytes[from..]
        .iter()
        .position(|&b| b == needle)
        .map(|i| from + i)
}

/// Index of the `}` closing the `{` at `open`, tracking JSON string state.
fn find_balanced_close(bytes: &[u8], open: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (offset, &b) in bytes[open..].iter().enumerate() {
        if in_string {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(open + offset);
                }
            }
            _ => {}
        }
    }
    None
}

/// Phrases that declare an empty update, matched case-insensitively.
#[derive(Debug, Clone)]
pub struct EmptinessLexicon {
    phrases: Vec<String>,
}

impl EmptinessLexicon {
    pub fn bundled() -> Self {
        Self::from_text(resources::EMPTY_PHRASES)
    }

    /// One phrase per line; blank lines and `#` comments ignored.
    pub fn from_text(text: &str) -> Self {
        let phrases = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        EmptinessLexicon { phrases }
    }

    pub fn matches(&self, text: &str) -> bool {
        let lower = text.to_lowercase();
        self.phrases.iter().any(|p| lower.contains(p))
    }
}

/// Merge fragments into a [`RawUpdate`], later duplicate keys overriding.
pub fn interpret_response(
    text: &str,
    fragments: Vec<IndexMap<String, String>>,
    lexicon: &EmptinessLexicon,
) -> RawUpdate {
    let fragment_count = fragments.len();
    let mut pairs = IndexMap::new();
    for fragment in fragments {
        for (key, value) in fragment {
            pairs.insert(key, value);
        }
    }
    let empty_indicated = fragment_count == 0 && lexicon.matches(text);
    RawUpdate {
        pairs,
        fragment_count,
        empty_indicated,
    }
}

fn fold_name(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    let mut pending_sep = false;
    for ch in name.trim().chars() {
        if ch == '-' || ch == '_' || ch.is_whitespace() {
            pending_sep = !out.is_empty();
        } else {
            if pending_sep {
                out.push('\u{1f}');
                pending_sep = false;
            }
            out.extend(ch.to_lowercase());
        }
    }
    out
}

/// Resolve a raw slot name: exact schema match, exact requestable match,
/// separator-folded schema alias, else fabricated.
pub fn resolve_slot(
    raw_name: &str,
    schema: &Schema,
    requestables: &RequestableLexicon,
) -> SlotResolution {
    if let Some(slot) = schema.resolve(raw_name.trim()) {
        return SlotResolution::SchemaSlot(slot.name.clone());
    }
    if let Some(name) = requestables.resolve(raw_name.trim()) {
        return SlotResolution::RequestableHallucination(name.to_string());
    }
    let folded = fold_name(raw_name);
    if !folded.is_empty() {
        for slot in schema.slots() {
            if fold_name(&slot.name) == folded {
                return SlotResolution::Alias(slot.name.clone());
            }
        }
    }
    SlotResolution::Fabricated(raw_name.to_string())
}

/// Orthographic variant table: per-slot map from variant to canonical form.
/// Applies to constrained (categorical and boolean) slots only; both sides
/// are lowercased at load so canonicalization stays idempotent.
#[derive(Debug, Clone, Default)]
pub struct ValueVariantTable {
    by_slot: BTreeMap<String, BTreeMap<String, String>>,
}

impl ValueVariantTable {
    pub fn bundled() -> Result<Self> {
        Self::from_json(resources::VALUE_VARIANTS)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: BTreeMap<String, BTreeMap<String, String>> =
            serde_json::from_str(text).map_err(|e| Error::json("value variants", e))?;
        let by_slot = raw
            .into_iter()
            .map(|(slot, entries)| {
                let entries = entries
                    .into_iter()
                    .map(|(variant, canonical)| (variant.to_lowercase(), canonical.to_lowercase()))
                    .collect();
                (slot.to_lowercase(), entries)
            })
            .collect();
        Ok(ValueVariantTable { by_slot })
    }

    pub fn from_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_json(&text)
    }

    fn lookup(&self, slot: &str, value: &str) -> Option<&str> {
        self.by_slot
            .get(&slot.to_lowercase())?
            .get(value)
            .map(String::as_str)
    }
}

const DONTCARE_VARIANTS: [&str; 5] = ["dontcare", "dont care", "don't care", "do not care", "any"];

fn is_time_slot(name: &str) -> bool {
    let lower = name.to_lowercase();
    lower.ends_with("leaveat") || lower.ends_with("arriveby") || lower.ends_with("book_time")
}

fn zero_pad_time(value: &str) -> Option<String> {
    let bytes = value.as_bytes();
    if bytes.len() == 4
        && bytes[0].is_ascii_digit()
        && bytes[1] == b':'
        && bytes[2].is_ascii_digit()
        && bytes[3].is_ascii_digit()
    {
        Some(format!("0{value}"))
    } else {
        None
    }
}

/// Canonicalize a raw value for a resolved schema slot.
///
/// Trim and lowercase; keep "?" untouched; fold indifference phrasings to
/// "dontcare"; zero-pad `H:MM` times on time slots; map constrained-slot
/// variants through the table. Anything else is kept verbatim, so wrong
/// values stay observable to the evaluator.
pub fn normalize_value(slot: &SlotDef, raw: &str, table: &ValueVariantTable) -> String {
    let trimmed = raw.trim();
    if trimmed == REQUESTED_MARKER {
        return REQUESTED_MARKER.to_string();
    }
    let mut value = trimmed.to_lowercase();
    if DONTCARE_VARIANTS.contains(&value.as_str()) {
        return "dontcare".to_string();
    }
    if is_time_slot(&slot.name) {
        if let Some(padded) = zero_pad_time(&value) {
            value = padded;
        }
    }
    if slot.kind != SlotKind::Open {
        if let Some(canonical) = table.lookup(&slot.name, &value) {
            return canonical.to_string();
        }
    }
    value
}

/// Route every raw pair into exactly one of informable, removals, requested
/// or dropped. When two raw names resolve to the same slot the later one
/// wins and the earlier pair is dropped as superseded, so the partition
/// conserves cardinality.
pub fn normalize_update(
    raw: &RawUpdate,
    schema: &Schema,
    requestables: &RequestableLexicon,
    table: &ValueVariantTable,
) -> NormalizedUpdate {
    enum Route {
        Requested,
        Removal,
        Informable(String),
    }

    let mut owners: IndexMap<String, (String, String, SlotResolution, Route)> = IndexMap::new();
    let mut dropped = Vec::new();

    for (raw_name, raw_value) in &raw.pairs {
        let resolution = resolve_slot(raw_name, schema, requestables);
        let resolved = match &resolution {
            SlotResolution::SchemaSlot(name) | SlotResolution::Alias(name) => name.clone(),
            SlotResolution::RequestableHallucination(_) => {
                dropped.push(DroppedEntry {
                    raw_name: raw_name.clone(),
                    raw_value: raw_value.clone(),
                    resolution,
                    reason: "requestable slot; not tracked in the dialogue state".into(),
                });
                continue;
            }
            SlotResolution::Fabricated(_) => {
                dropped.push(DroppedEntry {
                    raw_name: raw_name.clone(),
                    raw_value: raw_value.clone(),
                    resolution,
                    reason: "slot name not in the ontology".into(),
                });
                continue;
            }
        };
        let slot = schema
            .get(&resolved)
            .expect("resolved names exist in schema");
        let trimmed = raw_value.trim();
        let route = if trimmed == REQUESTED_MARKER {
            Route::Requested
        } else if trimmed.eq_ignore_ascii_case(REMOVAL_MARKER) {
            Route::Removal
        } else {
            Route::Informable(normalize_value(slot, raw_value, table))
        };
        if let Some((old_name, old_value, old_resolution, _)) = owners.insert(
            resolved,
            (raw_name.clone(), raw_value.clone(), resolution, route),
        ) {
            dropped.push(DroppedEntry {
                raw_name: old_name,
                raw_value: old_value,
                resolution: old_resolution,
                reason: "superseded by a later duplicate of the same slot".into(),
            });
        }
    }

    let mut update = NormalizedUpdate {
        dropped,
        ..Default::default()
    };
    for (slot, (_, _, _, route)) in owners {
        match route {
            Route::Requested => {
                update.requested.insert(slot);
            }
            Route::Removal => {
                update.removals.insert(slot);
            }
            Route::Informable(value) => {
                update.informable.insert(slot, value);
            }
        }
    }
    update
}
