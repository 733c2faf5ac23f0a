//! Slot ontology: loading, validation and name resolution.
//!
//! The schema file is a JSON object with a `"slots"` map (name to natural
//! language description) and a `"categorical"` map (name to candidate list).
//! Slot kinds are inferred rather than declared: a categorical entry whose
//! candidates are exactly `["yes", "no"]` is boolean, any other categorical
//! entry is categorical, everything else is open. This keeps the file itself
//! identical to the JSON fragments that are spliced into the task prompt.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use indexmap::IndexMap;
use serde::de::{Deserializer, MapAccess, Visitor};
use serde::Deserialize;

use crate::error::{Error, Result};

/// How values of a slot are constrained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotKind {
    Open,
    Categorical,
    Boolean,
}

/// A single informable slot of the ontology.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotDef {
    /// Fully qualified `domain-slot` name, casing as found in the file.
    pub name: String,
    pub description: String,
    pub kind: SlotKind,
    /// Candidate values; empty for open slots, `["yes", "no"]` for boolean.
    pub candidates: Vec<String>,
    /// Domain prefix of `name`.
    pub domain: String,
}

impl SlotDef {
    pub fn is_candidate(&self, value: &str) -> bool {
        self.candidates.iter().any(|c| c == value)
    }
}

/// The full informable ontology, preserving file order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Schema {
    slots: IndexMap<String, SlotDef>,
    domains: BTreeSet<String>,
    lower_index: IndexMap<String, String>,
    /// Key order of the file's "categorical" map; the prompt keeps it.
    categorical_order: Vec<String>,
}

impl Schema {
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn domains(&self) -> &BTreeSet<String> {
        &self.domains
    }

    /// Slots in file order.
    pub fn slots(&self) -> impl Iterator<Item = &SlotDef> {
        self.slots.values()
    }

    pub fn get(&self, name: &str) -> Option<&SlotDef> {
        self.slots.get(name)
    }

    /// Case-insensitive lookup; returns the slot under its stored name.
    pub fn resolve(&self, name: &str) -> Option<&SlotDef> {
        self.lower_index
            .get(&name.to_lowercase())
            .and_then(|canonical| self.slots.get(canonical))
    }

    pub fn slots_of_domain<'a>(&'a self, domain: &'a str) -> impl Iterator<Item = &'a SlotDef> {
        self.slots.values().filter(move |s| s.domain == domain)
    }

    /// Constrained slots in the order the file's "categorical" map listed them.
    pub fn categorical_slots(&self) -> impl Iterator<Item = &SlotDef> {
        self.categorical_order
            .iter()
            .filter_map(|name| self.slots.get(name))
    }

    fn from_parts(slots: Vec<SlotDef>, categorical_order: Vec<String>) -> Result<Self> {
        let mut map = IndexMap::new();
        let mut lower_index = IndexMap::new();
        let mut domains = BTreeSet::new();
        for slot in slots {
            if lower_index
                .insert(slot.name.to_lowercase(), slot.name.clone())
                .is_some()
            {
                return Err(Error::Schema(format!(
                    "duplicate slot name \"{}\"",
                    slot.name
                )));
            }
            domains.insert(slot.domain.clone());
            map.insert(slot.name.clone(), slot);
        }
        Ok(Schema {
            slots: map,
            domains,
            lower_index,
            categorical_order,
        })
    }

    /// Render back to the `{"slots": ..., "categorical": ...}` file format.
    pub fn to_file_json(&self) -> String {
        let mut slots = serde_json::Map::new();
        for slot in self.slots.values() {
            slots.insert(
                slot.name.clone(),
                serde_json::Value::String(slot.description.clone()),
            );
        }
        let mut categorical = serde_json::Map::new();
        for slot in self.categorical_slots() {
            categorical.insert(
                slot.name.clone(),
                serde_json::Value::Array(
                    slot.candidates
                        .iter()
                        .map(|c| serde_json::Value::String(c.clone()))
                        .collect(),
                ),
            );
        }
        let mut root = serde_json::Map::new();
        root.insert("slots".into(), serde_json::Value::Object(slots));
        root.insert("categorical".into(), serde_json::Value::Object(categorical));
        let mut text = serde_json::to_string_pretty(&serde_json::Value::Object(root))
            .expect("schema maps serialize");
        text.push('\n');
        text
    }
}

/// Requestable slot names, grouped by domain in the file but resolved to
/// fully qualified `domain-slot` names here. Disjoint from the informable
/// schema by construction of a valid setup.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RequestableLexicon {
    entries: BTreeSet<String>,
    lower_index: IndexMap<String, String>,
}

impl RequestableLexicon {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.resolve(name).is_some()
    }

    /// Case-insensitive lookup returning the stored name.
    pub fn resolve(&self, name: &str) -> Option<&str> {
        self.lower_index
            .get(&name.to_lowercase())
            .map(String::as_str)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(String::as_str)
    }

    /// Error if any entry collides with an informable schema slot.
    pub fn check_disjoint(&self, schema: &Schema) -> Result<()> {
        for name in &self.entries {
            if schema.resolve(name).is_some() {
                return Err(Error::Schema(format!(
                    "requestable slot \"{name}\" overlaps with an informable schema slot"
                )));
            }
        }
        Ok(())
    }
}

/// One broken schema invariant; violations are data for reporting, not errors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub slot: String,
    pub rule: &'static str,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]: {}", self.slot, self.rule, self.detail)
    }
}

/// A JSON map deserialized as an entry list so duplicate keys are detectable.
struct Entries<V>(Vec<(String, V)>);

impl<'de, V: Deserialize<'de>> Deserialize<'de> for Entries<V> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct EntriesVisitor<V>(std::marker::PhantomData<V>);

        impl<'de, V: Deserialize<'de>> Visitor<'de> for EntriesVisitor<V> {
            type Value = Entries<V>;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a JSON object")
            }

            fn visit_map<A: MapAccess<'de>>(
                self,
                mut access: A,
            ) -> std::result::Result<Self::Value, A::Error> {
                let mut entries = Vec::new();
                while let Some((key, value)) = access.next_entry::<String, V>()? {
                    entries.push((key, value));
                }
                Ok(Entries(entries))
            }
        }

        deserializer.deserialize_map(EntriesVisitor(std::marker::PhantomData))
    }
}

#[derive(Deserialize)]
struct SchemaFile {
    slots: Entries<String>,
    categorical: Entries<Vec<String>>,
}

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Load and validate a schema file.
pub fn load_schema(path: impl AsRef<Path>) -> Result<Schema> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    parse_schema(&text).map_err(|e| match e {
        Error::Schema(msg) => Error::Schema(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Parse schema file content; see [`load_schema`].
pub fn parse_schema(text: &str) -> Result<Schema> {
    let file: SchemaFile = serde_json::from_str(text).map_err(|e| Error::json("schema", e))?;

    let mut seen = BTreeSet::new();
    for (name, _) in &file.slots.0 {
        if !seen.insert(name.to_lowercase()) {
            return Err(Error::Schema(format!("duplicate slot name \"{name}\"")));
        }
    }
    let mut categorical: IndexMap<String, Vec<String>> = IndexMap::new();
    for (name, candidates) in file.categorical.0 {
        if categorical.insert(name.clone(), candidates).is_some() {
            return Err(Error::Schema(format!(
                "duplicate categorical entry \"{name}\""
            )));
        }
    }
    for name in categorical.keys() {
        if !file.slots.0.iter().any(|(n, _)| n == name) {
            return Err(Error::Schema(format!(
                "categorical entry \"{name}\" does not name a declared slot"
            )));
        }
    }

    let categorical_order: Vec<String> = categorical.keys().cloned().collect();
    let mut slots = Vec::with_capacity(file.slots.0.len());
    for (name, description) in file.slots.0 {
        let candidates = categorical.get(&name).cloned().unwrap_or_default();
        let kind = if candidates.is_empty() {
            SlotKind::Open
        } else if candidates == ["yes", "no"] {
            SlotKind::Boolean
        } else {
            SlotKind::Categorical
        };
        let domain = name.split('-').next().unwrap_or("").to_string();
        slots.push(SlotDef {
            name,
            description,
            kind,
            candidates,
            domain,
        });
    }
    Schema::from_parts(slots, categorical_order)
}

/// Load a requestable lexicon: JSON map of domain to slot-part names.
pub fn load_requestables(path: impl AsRef<Path>) -> Result<RequestableLexicon> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    parse_requestables(&text)
}

pub fn parse_requestables(text: &str) -> Result<RequestableLexicon> {
    let map: IndexMap<String, Vec<String>> =
        serde_json::from_str(text).map_err(|e| Error::json("requestables", e))?;
    let mut entries = BTreeSet::new();
    let mut lower_index = IndexMap::new();
    for (domain, parts) in map {
        for part in parts {
            let name = format!("{domain}-{part}");
            if lower_index
                .insert(name.to_lowercase(), name.clone())
                .is_some()
            {
                return Err(Error::Schema(format!(
                    "duplicate requestable slot \"{name}\""
                )));
            }
            entries.insert(name);
        }
    }
    Ok(RequestableLexicon {
        entries,
        lower_index,
    })
}

/// Check every slot against the ontology invariants.
pub fn validate_schema(schema: &Schema) -> Vec<Violation> {
    let mut violations = Vec::new();
    for slot in schema.slots() {
        let dash_count = slot.name.matches('-').count();
        let parts: Vec<&str> = slot.name.splitn(2, '-').collect();
        if dash_count != 1 || parts.len() != 2 || parts[0].is_empty() || parts[1].is_empty() {
            violations.push(Violation {
                slot: slot.name.clone(),
                rule: "name-format",
                detail: "slot name must be \"domain-slot\" with exactly one dash".into(),
            });
        }
        match slot.kind {
            SlotKind::Open => {
                if !slot.candidates.is_empty() {
                    violations.push(Violation {
                        slot: slot.name.clone(),
                        rule: "open-candidates",
                        detail: "open slot must not carry candidates".into(),
                    });
                }
            }
            SlotKind::Categorical => {
                if slot.candidates.len() < 2 {
                    violations.push(Violation {
                        slot: slot.name.clone(),
                        rule: "categorical-arity",
                        detail: format!(
                            "{} candidate(s); at least 2 required",
                            slot.candidates.len()
                        ),
                    });
                }
            }
            SlotKind::Boolean => {
                if slot.candidates != ["yes", "no"] {
                    violations.push(Violation {
                        slot: slot.name.clone(),
                        rule: "boolean-candidates",
                        detail: "boolean slot candidates must be exactly [\"yes\", \"no\"]".into(),
                    });
                }
            }
        }
        if !schema.domains().contains(&slot.domain) {
            violations.push(Violation {
                slot: slot.name.clone(),
                rule: "domain-membership",
                detail: format!("domain \"{}\" not in schema domain set", slot.domain),
            });
        }
    }
    violations
}
