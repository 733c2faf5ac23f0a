//! Scoring predicted traces against gold states: joint goal accuracy,
//! per-domain JGA, per-value-type precision/recall and the dontcare
//! confusion, with lenient value matching driven by a versioned variant
//! file.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{classify_gold_updates, Dialogue, GoldValueType, DONTCARE};
use crate::error::{Error, Result};
use crate::resources;
use crate::schema::Schema;
use crate::tracker::{DialogueState, Trace};

/// Per-slot and global equivalence classes of value strings.
///
/// Equality plus shared class membership decides [`values_match`]; classes
/// are orthographic (articles, spacing variants), never semantic synonyms.
#[derive(Debug, Clone, Default)]
pub struct VariantMap {
    global: Vec<Vec<String>>,
    per_slot: BTreeMap<String, Vec<Vec<String>>>,
}

#[derive(Deserialize)]
struct VariantFile {
    #[serde(default)]
    global: Vec<Vec<String>>,
    #[serde(default)]
    per_slot: BTreeMap<String, Vec<Vec<String>>>,
}

impl VariantMap {
    pub fn bundled() -> Result<Self> {
        Self::from_json(resources::EVAL_VARIANTS)
    }

    pub fn from_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: VariantFile =
            serde_json::from_str(text).map_err(|e| Error::json("variant map", e))?;
        let lower = |classes: Vec<Vec<String>>| -> Vec<Vec<String>> {
            classes
                .into_iter()
                .map(|c| c.into_iter().map(|v| v.to_lowercase()).collect())
                .collect()
        };
        Ok(VariantMap {
            global: lower(file.global),
            per_slot: file
                .per_slot
                .into_iter()
                .map(|(slot, classes)| (slot.to_lowercase(), lower(classes)))
                .collect(),
        })
    }

    fn classes_for<'a>(&'a self, slot: &str) -> impl Iterator<Item = &'a Vec<String>> {
        self.per_slot
            .get(&slot.to_lowercase())
            .into_iter()
            .flatten()
            .chain(self.global.iter())
    }

    /// The value itself plus every classmate, lowercased.
    pub fn forms_of(&self, slot: &str, value: &str) -> Vec<String> {
        let value = value.to_lowercase();
        let mut forms = vec![value.clone()];
        for class in self.classes_for(slot) {
            if class.contains(&value) {
                for form in class {
                    if !forms.contains(form) {
                        forms.push(form.clone());
                    }
                }
            }
        }
        forms
    }

    pub fn values_match(&self, slot: &str, a: &str, b: &str) -> bool {
        let a = a.to_lowercase();
        let b = b.to_lowercase();
        if a == b {
            return true;
        }
        self.classes_for(slot)
            .any(|class| class.contains(&a) && class.contains(&b))
    }
}

/// True iff the two canonicalized values are equal or share a variant class.
pub fn values_match(slot: &str, predicted: &str, gold: &str, variants: &VariantMap) -> bool {
    variants.values_match(slot, predicted, gold)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct DontcareConfusion {
    pub true_positive: usize,
    pub false_negative: usize,
    pub false_positive: usize,
    pub true_negative: usize,
}

impl DontcareConfusion {
    pub fn precision(&self) -> Option<f64> {
        ratio(self.true_positive, self.true_positive + self.false_positive)
    }

    pub fn recall(&self) -> Option<f64> {
        ratio(self.true_positive, self.true_positive + self.false_negative)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TypeMetrics {
    /// Gold assignments of this type.
    pub support: usize,
    pub recalled: usize,
    /// Predicted assignments bucketed into this type.
    pub predicted: usize,
    pub correct: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub jga: f64,
    pub correct_turns: usize,
    pub turn_count: usize,
    pub dialogue_count: usize,
    pub per_domain_jga: BTreeMap<String, Option<f64>>,
    pub per_type: BTreeMap<String, TypeMetrics>,
    pub dontcare_confusion: DontcareConfusion,
}

fn ratio(numerator: usize, denominator: usize) -> Option<f64> {
    if denominator == 0 {
        None
    } else {
        Some(numerator as f64 / denominator as f64)
    }
}

fn paired<'a>(
    traces: &'a [Trace],
    corpus: &'a [Dialogue],
) -> Result<Vec<(&'a Trace, &'a Dialogue)>> {
    let mut pairs = Vec::with_capacity(traces.len());
    for trace in traces {
        let dialogue = corpus
            .iter()
            .find(|d| d.id == trace.dialogue_id)
            .ok_or_else(|| {
                Error::Eval(format!(
                    "trace {} has no corpus dialogue",
                    trace.dialogue_id
                ))
            })?;
        if trace.incomplete || trace.turns.len() != dialogue.turns.len() {
            return Err(Error::Eval(format!(
                "trace {} has {} turns but the corpus dialogue has {}{}",
                trace.dialogue_id,
                trace.turns.len(),
                dialogue.turns.len(),
                if trace.incomplete {
                    " (trace is incomplete)"
                } else {
                    ""
                }
            )));
        }
        pairs.push((trace, dialogue));
    }
    Ok(pairs)
}

fn turn_matches(
    predicted: &DialogueState,
    gold: &DialogueState,
    slots: &[&str],
    variants: &VariantMap,
) -> bool {
    slots
        .iter()
        .all(|slot| match (predicted.get(*slot), gold.get(*slot)) {
            (None, None) => true,
            (Some(p), Some(g)) => values_match(slot, p, g, variants),
            _ => false,
        })
}

/// Full evaluation: JGA plus per-domain, per-type and dontcare metrics.
///
/// A turn is correct iff predicted and gold state agree on every informable
/// schema slot under variant matching, absence matching absence.
pub fn joint_goal_accuracy(
    traces: &[Trace],
    corpus: &[Dialogue],
    schema: &Schema,
    variants: &VariantMap,
) -> Result<Metrics> {
    let pairs = paired(traces, corpus)?;
    let all_slots: Vec<&str> = schema.slots().map(|s| s.name.as_str()).collect();

    let mut correct_turns = 0;
    let mut turn_count = 0;
    let mut confusion = DontcareConfusion::default();
    for (trace, dialogue) in &pairs {
        for (record, turn) in trace.turns.iter().zip(&dialogue.turns) {
            turn_count += 1;
            if turn_matches(&record.state, &turn.gold_state, &all_slots, variants) {
                correct_turns += 1;
            }
            for slot in &all_slots {
                let gold_dc = turn.gold_state.get(*slot).map(String::as_str) == Some(DONTCARE);
                let pred_dc = record.state.get(*slot).map(String::as_str) == Some(DONTCARE);
                match (gold_dc, pred_dc) {
                    (true, true) => confusion.true_positive += 1,
                    (true, false) => confusion.false_negative += 1,
                    (false, true) => confusion.false_positive += 1,
                    (false, false) => confusion.true_negative += 1,
                }
            }
        }
    }

    let mut per_domain_jga = BTreeMap::new();
    for domain in schema.domains() {
        per_domain_jga.insert(
            domain.clone(),
            domain_jga(&pairs, schema, variants, domain)?,
        );
    }

    let per_type = per_type_metrics(traces, corpus, schema, variants)?;

    Ok(Metrics {
        jga: ratio(correct_turns, turn_count).unwrap_or(0.0),
        correct_turns,
        turn_count,
        dialogue_count: pairs.len(),
        per_domain_jga,
        per_type,
        dontcare_confusion: confusion,
    })
}

/// JGA restricted to one domain, over dialogues whose gold annotations touch
/// that domain.
pub fn per_domain_jga(
    traces: &[Trace],
    corpus: &[Dialogue],
    schema: &Schema,
    variants: &VariantMap,
    domain: &str,
) -> Result<Option<f64>> {
    if !schema.domains().contains(domain) {
        return Err(Error::Eval(format!("unknown domain \"{domain}\"")));
    }
    let pairs = paired(traces, corpus)?;
    domain_jga(&pairs, schema, variants, domain)
}

fn domain_jga(
    pairs: &[(&Trace, &Dialogue)],
    schema: &Schema,
    variants: &VariantMap,
    domain: &str,
) -> Result<Option<f64>> {
    let domain_slots: Vec<&str> = schema
        .slots_of_domain(domain)
        .map(|s| s.name.as_str())
        .collect();
    let prefix = format!("{domain}-");
    let mut correct = 0;
    let mut total = 0;
    for (trace, dialogue) in pairs {
        let touches = dialogue
            .turns
            .iter()
            .any(|t| t.gold_state.keys().any(|k| k.starts_with(&prefix)));
        if !touches {
            continue;
        }
        for (record, turn) in trace.turns.iter().zip(&dialogue.turns) {
            total += 1;
            if turn_matches(&record.state, &turn.gold_state, &domain_slots, variants) {
                correct += 1;
            }
        }
    }
    Ok(ratio(correct, total))
}

/// Per-value-type recall over gold assignments and precision over predicted
/// assignments bucketed by the same heuristic.
///
/// A gold assignment introduced at turn t counts as recalled when the
/// predicted state matches it at t or any later turn. Predicted assignments
/// are bucketed with the predicted prior state standing in for the gold one.
pub fn per_type_metrics(
    traces: &[Trace],
    corpus: &[Dialogue],
    schema: &Schema,
    variants: &VariantMap,
) -> Result<BTreeMap<String, TypeMetrics>> {
    let pairs = paired(traces, corpus)?;
    let mut table: BTreeMap<String, TypeMetrics> = GoldValueType::ALL
        .iter()
        .map(|ty| (ty.label().to_string(), TypeMetrics::default()))
        .collect();

    for (trace, dialogue) in &pairs {
        for (turn_index, slot, value, ty) in classify_gold_updates(dialogue, schema, variants) {
            let entry = table.get_mut(ty.label()).expect("all types present");
            entry.support += 1;
            let recalled = trace.turns[turn_index - 1..].iter().any(|record| {
                if ty == GoldValueType::None {
                    !record.state.contains_key(&slot)
                } else {
                    record
                        .state
                        .get(&slot)
                        .is_some_and(|p| values_match(&slot, p, &value, variants))
                }
            });
            if recalled {
                entry.recalled += 1;
            }
        }

        let mut prev_state = DialogueState::new();
        for (record, turn) in trace.turns.iter().zip(&dialogue.turns) {
            for (slot, value) in &record.update.informable {
                let ty = crate::corpus::classify_assignment(
                    &prev_state,
                    &turn.system_utterance,
                    &turn.user_utterance,
                    slot,
                    value,
                    schema,
                    variants,
                );
                let entry = table.get_mut(ty.label()).expect("all types present");
                entry.predicted += 1;
                let correct = turn
                    .gold_state
                    .get(slot)
                    .is_some_and(|g| values_match(slot, value, g, variants));
                if correct {
                    entry.correct += 1;
                }
            }
            for slot in &record.update.removals {
                let entry = table.get_mut(GoldValueType::None.label()).expect("present");
                entry.predicted += 1;
                if !turn.gold_state.contains_key(slot) {
                    entry.correct += 1;
                }
            }
            prev_state = record.state.clone();
        }
    }

    for entry in table.values_mut() {
        entry.recall = ratio(entry.recalled, entry.support);
        entry.precision = ratio(entry.correct, entry.predicted);
        entry.f1 = match (entry.precision, entry.recall) {
            (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
            _ => None,
        };
    }
    Ok(table)
}

/// Published reference scores for the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceScores {
    #[serde(default)]
    pub description: String,
    pub headline_jga: f64,
    #[serde(default)]
    pub headline_model: String,
    pub rows: Vec<ReferenceRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub model: String,
    pub attraction: f64,
    pub hotel: f64,
    pub restaurant: f64,
    pub taxi: f64,
    pub train: f64,
    pub average: f64,
}

impl ReferenceScores {
    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Markdown,
    Csv,
}

fn fmt_pct(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{:.1}", v * 100.0),
        None => "n/a".to_string(),
    }
}

/// Render the run's scores next to the published reference constants.
///
/// Reference rows are reported literature values and are labeled as such;
/// they are context, not something a desk run can reproduce.
pub fn render_comparison(
    metrics: &Metrics,
    reference: Option<&ReferenceScores>,
    format: TableFormat,
) -> String {
    const DOMAINS: [&str; 5] = ["attraction", "hotel", "restaurant", "taxi", "train"];
    let run_cells: Vec<String> = DOMAINS
        .iter()
        .map(|d| fmt_pct(metrics.per_domain_jga.get(*d).copied().flatten()))
        .collect();
    let defined: Vec<f64> = DOMAINS
        .iter()
        .filter_map(|d| metrics.per_domain_jga.get(*d).copied().flatten())
        .collect();
    let run_avg = if defined.is_empty() {
        "n/a".to_string()
    } else {
        format!(
            "{:.2}",
            defined.iter().sum::<f64>() / defined.len() as f64 * 100.0
        )
    };

    match format {
        TableFormat::Markdown => {
            let mut out = String::new();
            out.push_str("# Evaluation report\n\n");
            out.push_str(&format!(
                "Joint goal accuracy: {:.4} ({}/{} turns over {} dialogues)\n",
                metrics.jga, metrics.correct_turns, metrics.turn_count, metrics.dialogue_count
            ));
            if let Some(reference) = reference {
                out.push_str(&format!(
                    "Reported zero-shot JGA for {}: {:.1}% (reference value, not reproduced here)\n",
                    reference.headline_model, reference.headline_jga
                ));
            }
            out.push_str("\n## Per-domain JGA (%)\n\n");
            out.push_str("| source | attraction | hotel | restaurant | taxi | train | avg. |\n");
            out.push_str("|---|---|---|---|---|---|---|\n");
            out.push_str(&format!(
                "| this run | {} | {run_avg} |\n",
                run_cells.join(" | ")
            ));
            if let Some(reference) = reference {
                for row in &reference.rows {
                    out.push_str(&format!(
                        "| {} (reported) | {:.1} | {:.1} | {:.1} | {:.1} | {:.1} | {:.2} |\n",
                        row.model,
                        row.attraction,
                        row.hotel,
                        row.restaurant,
                        row.taxi,
                        row.train,
                        row.average
                    ));
                }
            }
            out
        }
        TableFormat::Csv => {
            let mut out = String::new();
            out.push_str("source,attraction,hotel,restaurant,taxi,train,average\n");
            out.push_str(&format!("this run,{},{run_avg}\n", run_cells.join(",")));
            if let Some(reference) = reference {
                for row in &reference.rows {
                    out.push_str(&format!(
                        "{} (reported),{:.1},{:.1},{:.1},{:.1},{:.1},{:.2}\n",
                        row.model,
                        row.attraction,
                        row.hotel,
                        row.restaurant,
                        row.taxi,
                        row.train,
                        row.average
                    ));
                }
            }
            out
        }
    }
}
