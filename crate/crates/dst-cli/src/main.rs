//! `dst` — run, evaluate and analyze schema-driven dialogue state tracking
//! over a chat backend, with deterministic transcript replay.

mod config;

use std::collections::VecDeque;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use clap::{Parser, Subcommand, ValueEnum};

use config::{BackendChoice, FaultScriptFile, RunConfig};
use dst_core::analysis::{
    aggregate, classify_run_errors, render_report, ReferentLexicon, ReportFormat,
};
use dst_core::backend::{
    persist_transcript, ChatBackend, RemoteBackend, ReplayBackend, TranscriptStore,
};
use dst_core::convert::convert_upstream_file;
use dst_core::corpus::{load_corpus, Dialogue};
use dst_core::eval::{
    joint_goal_accuracy, render_comparison, ReferenceScores, TableFormat, VariantMap,
};
use dst_core::extraction::{EmptinessLexicon, ValueVariantTable};
use dst_core::prompting::build_task_prompt;
use dst_core::schema::{load_requestables, load_schema, RequestableLexicon, Schema};
use dst_core::tracker::{run_dialogue, Trace, TurnPipeline};

const EXIT_OK: u8 = 0;
const EXIT_CONFIG: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

#[derive(Parser)]
#[command(name = "dst", version, about = "Dialogue state tracking harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render the task prompt from the configured schema.
    MakePrompt {
        #[arg(long)]
        config: PathBuf,
        /// Output file; defaults to <output_dir>/prompt.txt.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Process dialogues against the configured backend, one trace file each.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated dialogue ids; defaults to the whole corpus.
        #[arg(long, value_delimiter = ',')]
        dialogues: Vec<String>,
        /// Override the configured parallelism bound.
        #[arg(long)]
        parallelism: Option<usize>,
    },
    /// Score traces against the corpus gold states.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        /// Trace directory; defaults to <output_dir>/traces.
        #[arg(long)]
        traces: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Md)]
        format: OutputFormat,
        /// How multi-domain dialogues enter per-domain JGA.
        #[arg(long, value_enum, default_value_t = PerDomainProtocol::RestrictFilter)]
        per_domain_protocol: PerDomainProtocol,
    },
    /// Detect and aggregate the recurring error categories over traces.
    Analyze {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        traces: Option<PathBuf>,
    },
    /// Convert an upstream-format corpus into the harness corpus layout.
    Convert {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Md,
    Csv,
    All,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PerDomainProtocol {
    /// Restrict states to the domain's slots and keep only dialogues whose
    /// gold annotations touch the domain.
    RestrictFilter,
}

struct Inputs {
    schema: Schema,
    requestables: RequestableLexicon,
    value_table: ValueVariantTable,
    emptiness: EmptinessLexicon,
    variants: VariantMap,
    referents: ReferentLexicon,
    corpus: Vec<Dialogue>,
}

fn checked_schema(path: &Path) -> dst_core::Result<Schema> {
    let schema = load_schema(path)?;
    let violations = dst_core::schema::validate_schema(&schema);
    if !violations.is_empty() {
        let listed: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(dst_core::Error::Schema(format!(
            "schema violates {} rule(s): {}",
            violations.len(),
            listed.join("; ")
        )));
    }
    Ok(schema)
}

fn load_inputs(config: &RunConfig) -> dst_core::Result<Inputs> {
    let schema = checked_schema(&config.schema)?;
    let requestables = load_requestables(&config.requestables)?;
    requestables.check_disjoint(&schema)?;
    let value_table = match &config.value_variants {
        Some(path) => ValueVariantTable::from_file(path)?,
        None => ValueVariantTable::bundled()?,
    };
    let emptiness = match &config.empty_phrases {
        Some(path) => EmptinessLexicon::from_text(
            &std::fs::read_to_string(path)
                .map_err(|e| dst_core::Error::io(path.display().to_string(), e))?,
        ),
        None => EmptinessLexicon::bundled(),
    };
    let variants = match &config.variant_map {
        Some(path) => VariantMap::from_file(path)?,
        None => VariantMap::bundled()?,
    };
    let referents = match &config.referent_lexicon {
        Some(path) => ReferentLexicon::from_text(
            &std::fs::read_to_string(path)
                .map_err(|e| dst_core::Error::io(path.display().to_string(), e))?,
        ),
        None => ReferentLexicon::bundled(),
    };
    let corpus = load_corpus(&config.corpus)?;
    for warning in &corpus.warnings {
        eprintln!("warning: {warning}");
    }
    Ok(Inputs {
        schema,
        requestables,
        value_table,
        emptiness,
        variants,
        referents,
        corpus: corpus.dialogues,
    })
}

fn build_backend(config: &RunConfig) -> dst_core::Result<Box<dyn ChatBackend>> {
    match config.backend.kind {
        BackendChoice::Replay => {
            let store = TranscriptStore::load(config.backend.store.as_ref().expect("validated"))?;
            Ok(Box::new(ReplayBackend::new(store)))
        }
        BackendChoice::Fault => {
            let script = FaultScriptFile::load(config.backend.script.as_ref().expect("validated"))?;
            Ok(Box::new(script.into_backend()))
        }
        BackendChoice::Remote => {
            let backend = RemoteBackend::new(config.remote_backend_config())?;
            Ok(Box::new(backend))
        }
    }
}

fn ensure_dir(path: &Path) -> dst_core::Result<()> {
    std::fs::create_dir_all(path).map_err(|e| dst_core::Error::io(path.display().to_string(), e))
}

fn write_file(path: &Path, contents: &str) -> dst_core::Result<()> {
    std::fs::write(path, contents).map_err(|e| dst_core::Error::io(path.display().to_string(), e))
}

fn cmd_make_prompt(config_path: &Path, out: Option<PathBuf>) -> dst_core::Result<u8> {
    let config = RunConfig::load(config_path)?;
    let schema = checked_schema(&config.schema)?;
    let prompt = build_task_prompt(&schema)?;
    ensure_dir(&config.output_dir)?;
    let out = out.unwrap_or_else(|| config.output_dir.join("prompt.txt"));
    write_file(&out, &format!("{}\n", prompt.text))?;
    println!("{}", prompt.text);
    Ok(EXIT_OK)
}

enum RunOutcome {
    Completed,
    Skipped,
    Partial(String),
}

fn cmd_run(
    config_path: &Path,
    dialogues: &[String],
    parallelism: Option<usize>,
) -> dst_core::Result<u8> {
    let config = RunConfig::load(config_path)?;
    let inputs = load_inputs(&config)?;
    let backend = build_backend(&config)?;
    let traces_dir = config.traces_dir();
    ensure_dir(&traces_dir)?;
    let transcripts_dir = config.output_dir.join("transcripts");
    let record_transcripts = config.backend.kind == BackendChoice::Remote;
    if record_transcripts {
        ensure_dir(&transcripts_dir)?;
    }

    let selected: Vec<&Dialogue> = if dialogues.is_empty() {
        inputs.corpus.iter().collect()
    } else {
        let mut selected = Vec::new();
        for id in dialogues {
            let dialogue =
                inputs.corpus.iter().find(|d| d.id == *id).ok_or_else(|| {
                    dst_core::Error::Config(format!("unknown dialogue id \"{id}\""))
                })?;
            selected.push(dialogue);
        }
        selected
    };

    let pipeline = TurnPipeline {
        schema: &inputs.schema,
        requestables: &inputs.requestables,
        variants: &inputs.value_table,
        emptiness: &inputs.emptiness,
    };
    let queue: Mutex<VecDeque<&Dialogue>> = Mutex::new(selected.iter().copied().collect());
    let outcomes: Mutex<Vec<(String, RunOutcome)>> = Mutex::new(Vec::new());
    let fatal: Mutex<Option<dst_core::Error>> = Mutex::new(None);
    let workers = parallelism.unwrap_or(config.parallelism).max(1);

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let dialogue = match queue.lock().expect("queue lock").pop_front() {
                    Some(dialogue) => dialogue,
                    None => break,
                };
                let trace_path = traces_dir.join(format!("{}.trace.jsonl", dialogue.id));
                if let Ok(existing) = Trace::load(&trace_path) {
                    if !existing.incomplete && existing.turns.len() == dialogue.turns.len() {
                        outcomes
                            .lock()
                            .expect("outcomes lock")
                            .push((dialogue.id.clone(), RunOutcome::Skipped));
                        continue;
                    }
                }
                let result = backend.open_session(&dialogue.id).and_then(|mut session| {
                    let trace = run_dialogue(backend.as_ref(), &mut session, pipeline, dialogue)?;
                    Ok((session, trace))
                });
                match result {
                    Ok((session, trace)) => {
                        if let Err(err) = trace.save(&trace_path) {
                            *fatal.lock().expect("fatal lock") = Some(err);
                            break;
                        }
                        if record_transcripts && session.exchanges() > 0 {
                            let transcript_path =
                                transcripts_dir.join(format!("{}.jsonl", dialogue.id));
                            let _ = std::fs::remove_file(&transcript_path);
                            if let Err(err) = persist_transcript(&session, &transcript_path) {
                                *fatal.lock().expect("fatal lock") = Some(err);
                                break;
                            }
                        }
                        let outcome = if trace.incomplete {
                            RunOutcome::Partial(trace.error.clone().unwrap_or_default())
                        } else {
                            RunOutcome::Completed
                        };
                        outcomes
                            .lock()
                            .expect("outcomes lock")
                            .push((dialogue.id.clone(), outcome));
                    }
                    Err(err) => {
                        outcomes
                            .lock()
                            .expect("outcomes lock")
                            .push((dialogue.id.clone(), RunOutcome::Partial(err.to_string())));
                    }
                }
            });
        }
    });

    if let Some(err) = fatal.into_inner().expect("fatal lock") {
        return Err(err);
    }
    let outcomes = outcomes.into_inner().expect("outcomes lock");
    let completed = outcomes
        .iter()
        .filter(|(_, o)| matches!(o, RunOutcome::Completed))
        .count();
    let skipped = outcomes
        .iter()
        .filter(|(_, o)| matches!(o, RunOutcome::Skipped))
        .count();
    let partial: Vec<&(String, RunOutcome)> = outcomes
        .iter()
        .filter(|(_, o)| matches!(o, RunOutcome::Partial(_)))
        .collect();
    println!(
        "processed {completed} dialogue(s), skipped {skipped} already-complete, {} partial",
        partial.len()
    );
    for (id, outcome) in &partial {
        if let RunOutcome::Partial(reason) = outcome {
            eprintln!("partial: {id}: {reason}");
        }
    }
    Ok(if partial.is_empty() {
        EXIT_OK
    } else {
        EXIT_PARTIAL
    })
}

fn load_traces(dir: &Path) -> dst_core::Result<Vec<Trace>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| dst_core::Error::io(dir.display().to_string(), e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.ends_with(".trace.jsonl"))
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(dst_core::Error::Eval(format!(
            "no trace files (*.trace.jsonl) under {}",
            dir.display()
        )));
    }
    paths.into_iter().map(Trace::load).collect()
}

fn check_alignment(traces: &[Trace], corpus: &[Dialogue]) -> dst_core::Result<()> {
    for trace in traces {
        let dialogue = corpus
            .iter()
            .find(|d| d.id == trace.dialogue_id)
            .ok_or_else(|| {
                dst_core::Error::Eval(format!(
                    "trace {} has no corpus dialogue",
                    trace.dialogue_id
                ))
            })?;
        if trace.incomplete || trace.turns.len() != dialogue.turns.len() {
            return Err(dst_core::Error::Eval(format!(
                "trace {} does not align with the corpus dialogue",
                trace.dialogue_id
            )));
        }
    }
    Ok(())
}

fn cmd_evaluate(
    config_path: &Path,
    traces_dir: Option<PathBuf>,
    format: OutputFormat,
    _protocol: PerDomainProtocol,
) -> dst_core::Result<u8> {
    let config = RunConfig::load(config_path)?;
    let inputs = load_inputs(&config)?;
    let traces = load_traces(&traces_dir.unwrap_or_else(|| config.traces_dir()))?;
    let metrics = joint_goal_accuracy(&traces, &inputs.corpus, &inputs.schema, &inputs.variants)?;
    let reference = match &config.reference_scores {
        Some(path) => Some(ReferenceScores::load(path)?),
        None => None,
    };
    ensure_dir(&config.output_dir)?;
    let mut metrics_json = serde_json::to_string_pretty(&metrics)
        .map_err(|e| dst_core::Error::Render(e.to_string()))?;
    metrics_json.push('\n');
    write_file(&config.output_dir.join("metrics.json"), &metrics_json)?;
    if matches!(format, OutputFormat::Md | OutputFormat::All) {
        let table = render_comparison(&metrics, reference.as_ref(), TableFormat::Markdown);
        write_file(&config.output_dir.join("comparison.md"), &table)?;
    }
    if matches!(format, OutputFormat::Csv | OutputFormat::All) {
        let table = render_comparison(&metrics, reference.as_ref(), TableFormat::Csv);
        write_file(&config.output_dir.join("comparison.csv"), &table)?;
    }
    println!(
        "JGA {:.4} ({}/{} turns, {} dialogues)",
        metrics.jga, metrics.correct_turns, metrics.turn_count, metrics.dialogue_count
    );
    Ok(EXIT_OK)
}

fn cmd_analyze(config_path: &Path, traces_dir: Option<PathBuf>) -> dst_core::Result<u8> {
    let config = RunConfig::load(config_path)?;
    let inputs = load_inputs(&config)?;
    let traces = load_traces(&traces_dir.unwrap_or_else(|| config.traces_dir()))?;
    check_alignment(&traces, &inputs.corpus)?;
    let records = classify_run_errors(
        &traces,
        &inputs.corpus,
        &inputs.schema,
        &inputs.requestables,
        &inputs.variants,
        &inputs.referents,
    )?;
    let report = aggregate(
        &records,
        &traces,
        &inputs.corpus,
        &inputs.schema,
        &inputs.requestables,
        &inputs.variants,
    )?;
    ensure_dir(&config.output_dir)?;
    write_file(
        &config.output_dir.join("report.md"),
        &render_report(&report, ReportFormat::Markdown)?,
    )?;
    write_file(
        &config.output_dir.join("report.json"),
        &render_report(&report, ReportFormat::Json)?,
    )?;
    write_file(
        &config.output_dir.join("report.csv"),
        &render_report(&report, ReportFormat::Csv)?,
    )?;
    println!(
        "{} error record(s) over {} dialogue(s)",
        records.len(),
        report.dialogue_count
    );
    Ok(EXIT_OK)
}

fn cmd_convert(input: &Path, output: &Path) -> dst_core::Result<u8> {
    let dialogues = convert_upstream_file(input)?;
    write_file(output, &dst_core::corpus::to_corpus_json(&dialogues))?;
    println!("converted {} dialogue(s)", dialogues.len());
    Ok(EXIT_OK)
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::MakePrompt { config, out } => cmd_make_prompt(&config, out),
        Command::Run {
            config,
            dialogues,
            parallelism,
        } => cmd_run(&config, &dialogues, parallelism),
        Command::Evaluate {
            config,
            traces,
            format,
            per_domain_protocol,
        } => cmd_evaluate(&config, traces, format, per_domain_protocol),
        Command::Analyze { config, traces } => cmd_analyze(&config, traces),
        Command::Convert { input, output } => cmd_convert(&input, &output),
    };
    match result {
        Ok(code) => std::process::exit(i32::from(code)),
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(i32::from(EXIT_CONFIG));
        }
    }
}
