//! Run configuration: one TOML file describing the data files, the backend
//! and the output location, so a whole run is reproducible from a single
//! artifact. Relative paths resolve against the config file's directory.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use dst_core::backend::BackendConfig;
use dst_core::{Error, Result};

fn default_parallelism() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: PathBuf,
    pub requestables: PathBuf,
    pub corpus: PathBuf,
    pub output_dir: PathBuf,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
    /// Evaluation-side equivalence classes; bundled defaults when unset.
    pub variant_map: Option<PathBuf>,
    /// Extraction-side variant table; bundled defaults when unset.
    pub value_variants: Option<PathBuf>,
    pub empty_phrases: Option<PathBuf>,
    pub referent_lexicon: Option<PathBuf>,
    pub reference_scores: Option<PathBuf>,
    pub backend: BackendSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendSection {
    pub kind: BackendChoice,
    /// Transcript store for replay.
    pub store: Option<PathBuf>,
    /// Scripted responses for the fault backend.
    pub script: Option<PathBuf>,
    pub endpoint_url: Option<String>,
    pub model_id: Option<String>,
    pub temperature: Option<f64>,
    pub timeout_secs: Option<f64>,
    pub max_retries: Option<u32>,
    pub retry_base_delay_secs: Option<f64>,
    pub rate_limit_per_min: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendChoice {
    Remote,
    Replay,
    Fault,
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<RunConfig> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut config: RunConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        config.resolve_paths(base);
        config.check_inputs()?;
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&p);
            }
        };
        resolve(&mut self.schema);
        resolve(&mut self.requestables);
        resolve(&mut self.corpus);
        resolve(&mut self.output_dir);
        for p in [
            &mut self.variant_map,
            &mut self.value_variants,
            &mut self.empty_phrases,
            &mut self.referent_lexicon,
            &mut self.reference_scores,
            &mut self.backend.store,
            &mut self.backend.script,
        ]
        .into_iter()
        .flatten()
        {
            resolve(p);
        }
    }

    /// Referenced input files must exist before a command starts.
    fn check_inputs(&self) -> Result<()> {
        let mut required: Vec<(&str, &PathBuf)> = vec![
            ("schema", &self.schema),
            ("requestables", &self.requestables),
            ("corpus", &self.corpus),
        ];
        for (label, path) in [
            ("variant_map", &self.variant_map),
            ("value_variants", &self.value_variants),
            ("empty_phrases", &self.empty_phrases),
            ("referent_lexicon", &self.referent_lexicon),
            ("reference_scores", &self.reference_scores),
            ("backend.store", &self.backend.store),
            ("backend.script", &self.backend.script),
        ] {
            if let Some(path) = path {
                required.push((label, path));
            }
        }
        for (label, path) in required {
            if !path.exists() {
                return Err(Error::Config(format!(
                    "{label} file does not exist: {}",
                    path.display()
                )));
            }
        }
        if self.parallelism == 0 {
            return Err(Error::Config("parallelism must be at least 1".into()));
        }
        match self.backend.kind {
            BackendChoice::Replay if self.backend.store.is_none() => {
                Err(Error::Config("replay backend needs backend.store".into()))
            }
            BackendChoice::Fault if self.backend.script.is_none() => {
                Err(Error::Config("fault backend needs backend.script".into()))
            }
            BackendChoice::Remote
                if self.backend.endpoint_url.is_none() || self.backend.model_id.is_none() =>
            {
                Err(Error::Config(
                    "remote backend needs backend.endpoint_url and backend.model_id".into(),
                ))
            }
            _ => Ok(()),
        }
    }

    pub fn remote_backend_config(&self) -> BackendConfig {
        BackendConfig {
            endpoint_url: self.backend.endpoint_url.clone().unwrap_or_default(),
            model_id: self.backend.model_id.clone().unwrap_or_default(),
            temperature: self.backend.temperature.unwrap_or(0.0),
            timeout_secs: self.backend.timeout_secs.unwrap_or(60.0),
            max_retries: self.backend.max_retries.unwrap_or(3),
            retry_base_delay_secs: self.backend.retry_base_delay_secs.unwrap_or(1.0),
            rate_limit_per_min: self.backend.rate_limit_per_min.unwrap_or(60.0),
        }
    }

    pub fn traces_dir(&self) -> PathBuf {
        self.output_dir.join("traces")
    }
}

/// On-disk layout of a fault-backend script.
#[derive(Debug, Clone, Deserialize)]
pub struct FaultScriptFile {
    #[serde(default)]
    pub default: Vec<FaultStepFile>,
    #[serde(default)]
    pub dialogues: std::collections::BTreeMap<String, Vec<FaultStepFile>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultStepFile {
    Respond(String),
    Fail(String),
}

impl FaultScriptFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn into_backend(self) -> dst_core::backend::FaultBackend {
        let convert = |steps: Vec<FaultStepFile>| {
            steps
                .into_iter()
                .map(|s| match s {
                    FaultStepFile::Respond(text) => dst_core::backend::FaultStep::Respond(text),
                    FaultStepFile::Fail(reason) => dst_core::backend::FaultStep::Fail(reason),
                })
                .collect::<Vec<_>>()
        };
        let mut backend =
            dst_core::backend::FaultBackend::with_default_script(convert(self.default));
        for (dialogue, steps) in self.dialogues {
            backend = backend.script_for(&dialogue, convert(steps));
        }
        backend
    }
}
