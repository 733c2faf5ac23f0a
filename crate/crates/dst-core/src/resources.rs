//! Embedded copies of the bundled data files.
//!
//! The files under `fixtures/` are the source of truth; these constants are
//! compiled-in defaults so the library works without a checkout layout.

/// Task prompt boilerplate with `{{SLOTS_JSON}}` and `{{CATEGORICAL_JSON}}`
/// insertion points.
pub const PROMPT_TEMPLATE: &str = include_str!(concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../fixtures/prompt_template.txt"
));

/// Orthographic value-variant table, JSON map `slot -> {variant: canonical}`.
pub const VALUE_VARIANTS: &str = include_str!(concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../fixtures/value_variants.json"
));

/// Emptiness phrases, one per line.
pub const EMPTY_PHRASES: &str = include_str!(concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../fixtures/empty_phrases.txt"
));

/// Generic referent tokens for the coreference detector, one per line.
pub const REFERENT_LEXICON: &str = include_str!(concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../fixtures/referent_lexicon.txt"
));

/// Evaluation-side value equivalence classes.
pub const EVAL_VARIANTS: &str = include_str!(concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../fixtures/eval_variants.json"
));
