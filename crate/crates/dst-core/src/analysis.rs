//! Detection and aggregation of the seven recurring error categories over
//! completed traces, plus report rendering.
//!
//! Each detector is independent; removing one category's records never
//! changes another's counts. Rates use category-specific denominators and
//! are reported as undefined (never zero) when a denominator is empty. The
//! coreference and requestable-mention detectors are heuristic: their rates
//! are detector-relative and the reports say so.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{classify_gold_updates, Dialogue, GoldValueType, DONTCARE};
use crate::error::{Error, Result};
use crate::eval::{values_match, VariantMap};
use crate::extraction::{resolve_slot, SlotResolution};
use crate::resources;
use crate::schema::{RequestableLexicon, Schema, SlotKind};
use crate::tracker::{Trace, TurnRecord};

/// The seven recurring error categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCategory {
    CarryOverFailure,
    CorefUnresolved,
    DontcareOverprediction,
    CandidateIgnored,
    HallucinatedSlot,
    ArbitraryNormalization,
    FullStatePrediction,
}

impl ErrorCategory {
    pub const ALL: [ErrorCategory; 7] = [
        ErrorCategory::CarryOverFailure,
        ErrorCategory::CorefUnresolved,
        ErrorCategory::DontcareOverprediction,
        ErrorCategory::CandidateIgnored,
        ErrorCategory::HallucinatedSlot,
        ErrorCategory::ArbitraryNormalization,
        ErrorCategory::FullStatePrediction,
    ];

    /// Stable short tag, `a` through `g`.
    pub fn tag(self) -> &'static str {
        match self {
            ErrorCategory::CarryOverFailure => "a",
            ErrorCategory::CorefUnresolved => "b",
            ErrorCategory::DontcareOverprediction => "c",
            ErrorCategory::CandidateIgnored => "d",
            ErrorCategory::HallucinatedSlot => "e",
            ErrorCategory::ArbitraryNormalization => "f",
            ErrorCategory::FullStatePrediction => "g",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            ErrorCategory::CarryOverFailure => "Carry-over failures for system-informed values",
            ErrorCategory::CorefUnresolved => "Detected but unresolved coreferences",
            ErrorCategory::DontcareOverprediction => "Overprediction of \"dontcare\"",
            ErrorCategory::CandidateIgnored => "Ignored value candidates on constrained slots",
            ErrorCategory::HallucinatedSlot => "Hallucinated slots",
            ErrorCategory::ArbitraryNormalization => "Inconsistent value normalization",
            ErrorCategory::FullStatePrediction => "Full-state predictions instead of updates",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ErrorCategory::CarryOverFailure => "carry_over_failure",
            ErrorCategory::CorefUnresolved => "coref_unresolved",
            ErrorCategory::DontcareOverprediction => "dontcare_overprediction",
            ErrorCategory::CandidateIgnored => "candidate_ignored",
            ErrorCategory::HallucinatedSlot => "hallucinated_slot",
            ErrorCategory::ArbitraryNormalization => "arbitrary_normalization",
            ErrorCategory::FullStatePrediction => "full_state_prediction",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub category: ErrorCategory,
    pub dialogue_id: String,
    pub turn: usize,
    pub slot: String,
    pub detail: String,
    /// Resolution bucket, present on hallucinated-slot records.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<SlotResolution>,
}

/// Generic referent tokens for the coreference detector.
#[derive(Debug, Clone)]
pub struct ReferentLexicon {
    tokens: BTreeSet<String>,
}

impl ReferentLexicon {
    pub fn bundled() -> Self {
        Self::from_text(resources::REFERENT_LEXICON)
    }

    pub fn from_text(text: &str) -> Self {
        let tokens = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        ReferentLexicon { tokens }
    }

    pub fn contains(&self, value: &str) -> bool {
        self.tokens.contains(&value.trim().to_lowercase())
    }
}

/// Cross-dialogue casing evidence: for each canonicalized value, the raw
/// surface forms seen per dialogue. Needed by the normalization detector.
#[derive(Debug, Clone, Default)]
pub struct CasingIndex {
    forms: BTreeMap<String, BTreeMap<String, BTreeSet<String>>>,
}

impl CasingIndex {
    /// Collect raw forms of every informable assignment across the traces.
    pub fn build(traces: &[Trace], schema: &Schema, requestables: &RequestableLexicon) -> Self {
        let mut index = CasingIndex::default();
        for trace in traces {
            for record in &trace.turns {
                for (raw_name, raw_value) in &record.raw.pairs {
                    let resolved = match resolve_slot(raw_name, schema, requestables) {
                        SlotResolution::SchemaSlot(name) | SlotResolution::Alias(name) => name,
                        _ => continue,
                    };
                    if let Some(canonical) = record.update.informable.get(&resolved) {
                        index
                            .forms
                            .entry(canonical.clone())
                            .or_default()
                            .entry(trace.dialogue_id.clone())
                            .or_default()
                            .insert(raw_value.trim().to_string());
                    }
                }
            }
        }
        index
    }

    /// A raw form from a different dialogue that disagrees with `raw`.
    pub fn conflicting_form(
        &self,
        canonical: &str,
        dialogue_id: &str,
        raw: &str,
    ) -> Option<(String, String)> {
        let by_dialogue = self.forms.get(canonical)?;
        for (other_dialogue, forms) in by_dialogue {
            if other_dialogue == dialogue_id {
                continue;
            }
            for form in forms {
                if form != raw {
                    return Some((other_dialogue.clone(), form.clone()));
                }
            }
        }
        None
    }
}

/// Everything the per-turn detectors need beyond the trace itself.
pub struct AnalysisContext<'a> {
    pub schema: &'a Schema,
    pub requestables: &'a RequestableLexicon,
    pub variants: &'a VariantMap,
    pub referents: &'a ReferentLexicon,
    pub casing: &'a CasingIndex,
}

/// Run all seven detectors on one trace turn.
pub fn classify_turn_errors(
    trace: &Trace,
    record: &TurnRecord,
    dialogue: &Dialogue,
    ctx: &AnalysisContext<'_>,
) -> Vec<ErrorRecord> {
    let mut records = Vec::new();
    let turn = match dialogue.turn(record.turn) {
        Some(turn) => turn,
        None => return records,
    };
    let prev_gold = dialogue.gold_state_before(record.turn);
    let make = |category: ErrorCategory, slot: &str, detail: String| ErrorRecord {
        category,
        dialogue_id: trace.dialogue_id.clone(),
        turn: record.turn,
        slot: slot.to_string(),
        detail,
        resolution: None,
    };

    // (a) inform-type gold assignments missing or wrong in the predicted state,
    // (b) refer-type gold assignments answered with a generic referent or a
    //     wrong value.
    for (slot, gold_value) in &turn.gold_update {
        let ty = crate::corpus::classify_assignment(
            &prev_gold,
            &turn.system_utterance,
            &turn.user_utterance,
            slot,
            gold_value,
            ctx.schema,
            ctx.variants,
        );
        match ty {
            GoldValueType::Inform => {
                let predicted = record.state.get(slot);
                let ok = predicted.is_some_and(|p| values_match(slot, p, gold_value, ctx.variants));
                if !ok {
                    records.push(make(
                        ErrorCategory::CarryOverFailure,
                        slot,
                        format!(
                            "system-informed \"{gold_value}\" not carried over (predicted {})",
                            predicted
                                .map(|p| format!("\"{p}\""))
                                .unwrap_or_else(|| "nothing".into())
                        ),
                    ));
                }
            }
            GoldValueType::Refer => {
                if let Some(predicted) = record.state.get(slot) {
                    if ctx.referents.contains(predicted) {
                        records.push(make(
                            ErrorCategory::CorefUnresolved,
                            slot,
                            format!(
                                "coreference detected but left generic: predicted \"{predicted}\", gold \"{gold_value}\""
                            ),
                        ));
                    } else if !values_match(slot, predicted, gold_value, ctx.variants) {
                        records.push(make(
                            ErrorCategory::CorefUnresolved,
                            slot,
                            format!(
                                "coreferent value resolved wrongly: predicted \"{predicted}\", gold \"{gold_value}\""
                            ),
                        ));
                    }
                }
            }
            _ => {}
        }
    }

    for (slot, value) in &record.update.informable {
        // (c) dontcare where gold assigns nothing.
        if value == DONTCARE && !turn.gold_state.contains_key(slot) {
            records.push(make(
                ErrorCategory::DontcareOverprediction,
                slot,
                "predicted \"dontcare\" for a slot the gold state leaves unset".into(),
            ));
        }
        // (d) constrained slot with a value outside its candidate list.
        if let Some(def) = ctx.schema.get(slot) {
            if def.kind != SlotKind::Open && value != DONTCARE && !def.is_candidate(value) {
                records.push(make(
                    ErrorCategory::CandidateIgnored,
                    slot,
                    format!(
                        "\"{value}\" is not among the candidates [{}]",
                        def.candidates.join(", ")
                    ),
                ));
            }
        }
    }

    // (e) one record per dropped entry, carrying its resolution.
    for entry in &record.update.dropped {
        records.push(ErrorRecord {
            category: ErrorCategory::HallucinatedSlot,
            dialogue_id: trace.dialogue_id.clone(),
            turn: record.turn,
            slot: entry.raw_name.clone(),
            detail: format!("value \"{}\": {}", entry.raw_value, entry.reason),
            resolution: Some(entry.resolution.clone()),
        });
    }

    // (f) raw form differs from the canonical one in casing only, and the
    // same value shows up differently cased in another dialogue.
    for (raw_name, raw_value) in &record.raw.pairs {
        let resolved = match resolve_slot(raw_name, ctx.schema, ctx.requestables) {
            SlotResolution::SchemaSlot(name) | SlotResolution::Alias(name) => name,
            _ => continue,
        };
        let Some(canonical) = record.update.informable.get(&resolved) else {
            continue;
        };
        let raw_trimmed = raw_value.trim();
        let case_only = raw_trimmed != canonical && raw_trimmed.to_lowercase() == *canonical;
        if !case_only {
            continue;
        }
        if let Some((other_dialogue, other_form)) =
            ctx.casing
                .conflicting_form(canonical, &trace.dialogue_id, raw_trimmed)
        {
            records.push(make(
                ErrorCategory::ArbitraryNormalization,
                &resolved,
                format!(
                    "wrote \"{raw_trimmed}\" here but \"{other_form}\" in {other_dialogue} for the same value"
                ),
            ));
        }
    }

    // (g) the tracker flagged a full-state re-assertion.
    if record.full_state_flag {
        records.push(make(
            ErrorCategory::FullStatePrediction,
            "*",
            "update re-asserts every previously accumulated assignment".into(),
        ));
    }

    records
}

/// Run the detectors over whole traces, building the casing index first.
pub fn classify_run_errors(
    traces: &[Trace],
    corpus: &[Dialogue],
    schema: &Schema,
    requestables: &RequestableLexicon,
    variants: &VariantMap,
    referents: &ReferentLexicon,
) -> Result<Vec<ErrorRecord>> {
    let casing = CasingIndex::build(traces, schema, requestables);
    let ctx = AnalysisContext {
        schema,
        requestables,
        variants,
        referents,
        casing: &casing,
    };
    let mut records = Vec::new();
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
        for record in &trace.turns {
            records.extend(classify_turn_errors(trace, record, dialogue, &ctx));
        }
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct CategoryStat {
    pub records: usize,
    /// Distinct dialogues with at least one record.
    pub dialogues: usize,
    pub rate: Option<f64>,
    pub denominator: usize,
    pub denominator_label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct HallucinationBreakdown {
    pub total_predictions: usize,
    pub schema: usize,
    pub requestable: usize,
    pub alias: usize,
    pub fabricated: usize,
}

impl HallucinationBreakdown {
    pub fn share(&self, count: usize) -> Option<f64> {
        if self.total_predictions == 0 {
            None
        } else {
            Some(count as f64 / self.total_predictions as f64)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct RequestableRecall {
    /// Requestable slots a system utterance mentioned, per dialogue.
    pub mentioned: usize,
    /// Of those, how many the model predicted (and extraction dropped).
    pub predicted: usize,
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct DontcareStat {
    pub true_positive: usize,
    pub false_positive: usize,
    pub false_negative: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ExampleRef {
    pub dialogue_id: String,
    pub turn: usize,
    pub slot: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Report {
    pub dialogue_count: usize,
    pub turn_count: usize,
    /// Keyed by category label; counts, per-category rate and denominator.
    pub categories: BTreeMap<String, CategoryStat>,
    pub hallucination: HallucinationBreakdown,
    pub requestable_recall: RequestableRecall,
    pub dontcare: DontcareStat,
    /// Up to five cited examples per category label.
    pub examples: BTreeMap<String, Vec<ExampleRef>>,
}

const MAX_EXAMPLES: usize = 5;

/// Keyword cues for "the system mentioned this requestable slot", keyed by
/// the slot part. Deliberately conservative; the recall is detector-relative.
const REQUESTABLE_CUES: [(&str, &[&str]); 9] = [
    ("address", &["address"]),
    ("postcode", &["postcode", "postal code", "post code"]),
    ("phone", &["phone"]),
    ("reference_number", &["reference number"]),
    ("fee", &["entrance fee"]),
    ("price", &["ticket price"]),
    ("duration", &["travel time", "duration"]),
    ("trainID", &["train id"]),
    ("type", &["car type"]),
];

fn requestable_recall(
    records: &[ErrorRecord],
    corpus: &[Dialogue],
    traces: &[Trace],
    requestables: &RequestableLexicon,
) -> RequestableRecall {
    let mut mentioned = 0;
    let mut predicted = 0;
    for trace in traces {
        let Some(dialogue) = corpus.iter().find(|d| d.id == trace.dialogue_id) else {
            continue;
        };
        let systems: Vec<String> = dialogue
            .turns
            .iter()
            .map(|t| t.system_utterance.to_lowercase())
            .collect();
        for name in requestables.names() {
            let Some((domain, part)) = name.split_once('-') else {
                continue;
            };
            if !dialogue.domains.contains(domain) {
                continue;
            }
            let Some((_, cues)) = REQUESTABLE_CUES.iter().find(|(p, _)| *p == part) else {
                continue;
            };
            let is_mentioned = systems
                .iter()
                .any(|s| cues.iter().any(|cue| s.contains(cue)));
            if !is_mentioned {
                continue;
            }
            mentioned += 1;
            let was_predicted = records.iter().any(|r| {
                r.dialogue_id == trace.dialogue_id
                    && matches!(&r.resolution, Some(SlotResolution::RequestableHallucination(n)) if n == name)
            });
            if was_predicted {
                predicted += 1;
            }
        }
    }
    let rate = if mentioned == 0 {
        None
    } else {
        Some(predicted as f64 / mentioned as f64)
    };
    RequestableRecall {
        mentioned,
        predicted,
        rate,
    }
}

/// Aggregate detector records into a report with the documented denominators.
pub fn aggregate(
    records: &[ErrorRecord],
    traces: &[Trace],
    corpus: &[Dialogue],
    schema: &Schema,
    requestables: &RequestableLexicon,
    variants: &VariantMap,
) -> Result<Report> {
    let mut report = Report {
        dialogue_count: traces.len(),
        turn_count: traces.iter().map(|t| t.turns.len()).sum(),
        ..Default::default()
    };

    // Denominators.
    let mut inform_gold = 0;
    let mut refer_gold = 0;
    let mut spurious_predictions = 0;
    let mut informable_assignments = 0;
    let mut total_predictions = 0;
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
        for (_, _, _, ty) in classify_gold_updates(dialogue, schema, variants) {
            match ty {
                GoldValueType::Inform => inform_gold += 1,
                GoldValueType::Refer => refer_gold += 1,
                _ => {}
            }
        }
        for (record, turn) in trace.turns.iter().zip(&dialogue.turns) {
            total_predictions += record.raw.pairs.len();
            informable_assignments += record.update.informable.len();
            spurious_predictions += record
                .update
                .informable
                .keys()
                .filter(|slot| !turn.gold_state.contains_key(*slot))
                .count();
            for (raw_name, _) in &record.raw.pairs {
                match resolve_slot(raw_name, schema, requestables) {
                    SlotResolution::SchemaSlot(_) => report.hallucination.schema += 1,
                    SlotResolution::RequestableHallucination(_) => {
                        report.hallucination.requestable += 1
                    }
                    SlotResolution::Alias(_) => report.hallucination.alias += 1,
                    SlotResolution::Fabricated(_) => report.hallucination.fabricated += 1,
                }
            }
            for (slot, value) in &record.update.informable {
                let gold_dc = turn.gold_state.get(slot).map(String::as_str) == Some(DONTCARE);
                if value == DONTCARE && gold_dc {
                    report.dontcare.true_positive += 1;
                } else if value == DONTCARE {
                    report.dontcare.false_positive += 1;
                }
            }
            for (slot, value) in &turn.gold_update {
                if value == DONTCARE
                    && record.update.informable.get(slot).map(String::as_str) != Some(DONTCARE)
                {
                    report.dontcare.false_negative += 1;
                }
            }
        }
    }
    report.hallucination.total_predictions = total_predictions;
    report.dontcare.precision = {
        let d = report.dontcare.true_positive + report.dontcare.false_positive;
        if d == 0 {
            None
        } else {
            Some(report.dontcare.true_positive as f64 / d as f64)
        }
    };
    report.dontcare.recall = {
        let d = report.dontcare.true_positive + report.dontcare.false_negative;
        if d == 0 {
            None
        } else {
            Some(report.dontcare.true_positive as f64 / d as f64)
        }
    };

    for category in ErrorCategory::ALL {
        let of_category: Vec<&ErrorRecord> =
            records.iter().filter(|r| r.category == category).collect();
        let dialogues: BTreeSet<&str> =
            of_category.iter().map(|r| r.dialogue_id.as_str()).collect();
        let (numerator, denominator, label) = match category {
            ErrorCategory::CarryOverFailure => (
                of_category.len(),
                inform_gold,
                "inform-type gold assignments",
            ),
            ErrorCategory::CorefUnresolved => {
                (of_category.len(), refer_gold, "refer-type gold assignments")
            }
            ErrorCategory::DontcareOverprediction => (
                of_category.len(),
                spurious_predictions,
                "predictions for gold-unset slots",
            ),
            ErrorCategory::CandidateIgnored => (
                of_category.len(),
                informable_assignments,
                "informable assignments",
            ),
            ErrorCategory::HallucinatedSlot => {
                (of_category.len(), total_predictions, "slot predictions")
            }
            ErrorCategory::ArbitraryNormalization => (
                of_category.len(),
                informable_assignments,
                "informable assignments",
            ),
            ErrorCategory::FullStatePrediction => {
                (dialogues.len(), traces.len(), "processed dialogues")
            }
        };
        let rate = if denominator == 0 {
            None
        } else {
            Some(numerator as f64 / denominator as f64)
        };
        report.categories.insert(
            category.label().to_string(),
            CategoryStat {
                records: of_category.len(),
                dialogues: dialogues.len(),
                rate,
                denominator,
                denominator_label: label.to_string(),
            },
        );
        let examples = of_category
            .iter()
            .take(MAX_EXAMPLES)
            .map(|r| ExampleRef {
                dialogue_id: r.dialogue_id.clone(),
                turn: r.turn,
                slot: r.slot.clone(),
                detail: r.detail.clone(),
            })
            .collect();
        report
            .examples
            .insert(category.label().to_string(), examples);
    }

    report.requestable_recall = requestable_recall(records, corpus, traces, requestables);
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Json,
    Csv,
}

fn fmt_rate(rate: Option<f64>) -> String {
    match rate {
        Some(r) => format!("{:.1}%", r * 100.0),
        None => "undefined".to_string(),
    }
}

/// Render a report; deterministic for a fixed report.
pub fn render_report(report: &Report, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => {
            let mut text =
                serde_json::to_string_pretty(report).map_err(|e| Error::Render(e.to_string()))?;
            text.push('\n');
            Ok(text)
        }
        ReportFormat::Csv => {
            let mut out =
                String::from("tag,category,records,dialogues,rate,denominator,denominator_label\n");
            for category in ErrorCategory::ALL {
                let stat = &report.categories[category.label()];
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    category.tag(),
                    category.label(),
                    stat.records,
                    stat.dialogues,
                    stat.rate
                        .map(|r| format!("{r:.4}"))
                        .unwrap_or_else(|| "undefined".into()),
                    stat.denominator,
                    stat.denominator_label
                ));
            }
            Ok(out)
        }
        ReportFormat::Markdown => {
            let mut out = String::from("# Error analysis\n\n");
            out.push_str(&format!(
                "{} dialogues, {} turns. Rates are detector-relative; an empty denominator renders as undefined.\n",
                report.dialogue_count, report.turn_count
            ));
            for category in ErrorCategory::ALL {
                let stat = &report.categories[category.label()];
                out.push_str(&format!(
                    "\n## {}) {}\n\n",
                    category.tag(),
                    category.title()
                ));
                out.push_str(&format!(
                    "{} record(s) in {} dialogue(s); rate {} over {} {}.\n",
                    stat.records,
                    stat.dialogues,
                    fmt_rate(stat.rate),
                    stat.denominator,
                    stat.denominator_label
                ));
                if category == ErrorCategory::HallucinatedSlot {
                    let h = &report.hallucination;
                    out.push_str(&format!(
                        "\nResolution of all {} slot predictions: {} schema ({}), {} requestable ({}), {} alias ({}), {} fabricated ({}).\n",
                        h.total_predictions,
                        h.schema,
                        fmt_rate(h.share(h.schema)),
                        h.requestable,
                        fmt_rate(h.share(h.requestable)),
                        h.alias,
                        fmt_rate(h.share(h.alias)),
                        h.fabricated,
                        fmt_rate(h.share(h.fabricated)),
                    ));
                    out.push_str(&format!(
                        "Requestable recall: {} of {} system-mentioned requestable slots predicted ({}).\n",
                        report.requestable_recall.predicted,
                        report.requestable_recall.mentioned,
                        fmt_rate(report.requestable_recall.rate),
                    ));
                }
                if category == ErrorCategory::DontcareOverprediction {
                    out.push_str(&format!(
                        "\ndontcare precision {} / recall {} (tp {}, fp {}, fn {}).\n",
                        fmt_rate(report.dontcare.precision),
                        fmt_rate(report.dontcare.recall),
                        report.dontcare.true_positive,
                        report.dontcare.false_positive,
                        report.dontcare.false_negative,
                    ));
                }
                let examples = &report.examples[category.label()];
                if !examples.is_empty() {
                    out.push_str("\nExamples:\n");
                    for ex in examples {
                        out.push_str(&format!(
                            "- {} turn {} [{}]: {}\n",
                            ex.dialogue_id, ex.turn, ex.slot, ex.detail
                        ));
                    }
                }
            }
            Ok(out)
        }
    }
}
