//! Experiment configuration: TOML schema, defaults, and validation.
//!
//! Every section is optional and falls back to the defaults documented in
//! `configs/SCHEMA.md`. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::CapabilityBounds;
use crate::learning::SyntheticTask;
use crate::selectors::{FedcsConfig, FedcsOrder, MdaConfig, SelectorKind, SelectorParams, TiflConfig};
use crate::traces::{ScenarioKind, ScenarioSpec, TraceClassParams};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{key}: unknown key `{unknown}`{}", suggestion.as_ref().map(|s| format!(", did you mean `{s}`?")).unwrap_or_default())]
    UnknownKey {
        key: String,
        unknown: String,
        suggestion: Option<String>,
    },
    #[error("{key}: {message}")]
    Schema { key: String, message: String },
    #[error("{key}: {message}")]
    Invalid { key: String, message: String },
}

impl ConfigError {
    fn invalid(key: &str, message: impl Into<String>) -> Self {
        ConfigError::Invalid {
            key: key.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceSource {
    #[default]
    Synthetic,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub mix: [f64; 3],
    pub source: TraceSource,
    /// Trace file for `source = "file"`, relative to the config file.
    pub trace_file: Option<PathBuf>,
    /// Length of generated traces in seconds.
    pub horizon_s: f64,
    /// Number of synthetic traces to rank and draw from.
    pub pool_size: usize,
    /// Synthetic trace classes; pool trace `i` uses class `i % len`.
    pub classes: Vec<TraceClassParams>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            kind: ScenarioKind::Low,
            mix: ScenarioSpec::DEFAULT_MIX,
            source: TraceSource::Synthetic,
            trace_file: None,
            horizon_s: 1_000_000.0,
            pool_size: 1500,
            classes: default_trace_classes(),
        }
    }
}

/// A spread from flappy, mostly-offline devices to stable, mostly-online ones.
pub fn default_trace_classes() -> Vec<TraceClassParams> {
    [
        (1_500.0, 6_000.0),
        (3_000.0, 3_000.0),
        (8_000.0, 4_000.0),
        (30_000.0, 6_000.0),
        (150_000.0, 10_000.0),
    ]
    .into_iter()
    .map(|(up, down)| TraceClassParams {
        mean_up_s: up,
        mean_down_s: down,
        start_available_prob: up / (up + down),
    })
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PopulationConfig {
    pub num_clients: usize,
    /// Capability file, relative to the config file; generated when absent.
    pub capability_file: Option<PathBuf>,
    pub capabilities: CapabilityBounds,
}

impl Default for PopulationConfig {
    fn default() -> Self {
        Self {
            num_clients: 100,
            capability_file: None,
            capabilities: CapabilityBounds::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RoundConfig {
    pub clients_per_round: usize,
    pub num_rounds: usize,
    pub timeout_s: f64,
    pub eval_every: usize,
    /// Require the timeout to exceed every client's round time, so failures
    /// come only from availability changes.
    pub strict_availability_failures: bool,
}

impl Default for RoundConfig {
    fn default() -> Self {
        Self {
            clients_per_round: 10,
            num_rounds: 300,
            timeout_s: 900.0,
            eval_every: 10,
            strict_availability_failures: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TaskConfig {
    pub num_samples: usize,
    pub features_d: usize,
    pub classes_k: usize,
    pub test_fraction: f64,
    pub class_separation: f64,
    pub alpha: f64,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TaskConfig {
    fn default() -> Self {
        let synth = SyntheticTask::default();
        Self {
            num_samples: synth.num_samples,
            features_d: synth.features_d,
            classes_k: synth.classes_k,
            test_fraction: synth.test_fraction,
            class_separation: synth.class_separation,
            alpha: 0.2,
            lr: 0.05,
            epochs: 1,
            batch_size: 20,
            seed: 7,
        }
    }
}

impl TaskConfig {
    pub fn synthetic(&self) -> SyntheticTask {
        SyntheticTask {
            num_samples: self.num_samples,
            features_d: self.features_d,
            classes_k: self.classes_k,
            test_fraction: self.test_fraction,
            class_separation: self.class_separation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelectorConfig {
    pub kind: SelectorKind,
    pub mda: MdaConfig,
    pub fedcs: FedcsConfig,
    pub tifl: TiflConfig,
}

impl Default for SelectorConfig {
    fn default() -> Self {
        let params = SelectorParams::default();
        Self {
            kind: SelectorKind::Random,
            mda: params.mda,
            fedcs: params.fedcs,
            tifl: params.tifl,
        }
    }
}

impl SelectorConfig {
    pub fn params(&self) -> SelectorParams {
        SelectorParams {
            mda: self.mda,
            fedcs: self.fedcs,
            tifl: self.tifl,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeedConfig {
    /// Trace pool, scenario draw, and capability generation.
    pub scenario_seed: u64,
    /// Dirichlet data partition.
    pub partition_seed: u64,
    /// One experiment per seed; drives selection and local shuffling.
    pub run_seeds: Vec<u64>,
}

impl Default for SeedConfig {
    fn default() -> Self {
        Self {
            scenario_seed: 1,
            partition_seed: 2,
            run_seeds: vec![1, 2, 3],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<OutputFormat>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            formats: vec![OutputFormat::Json, OutputFormat::Csv],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    pub population: PopulationConfig,
    pub round: RoundConfig,
    pub task: TaskConfig,
    pub selector: SelectorConfig,
    pub seeds: SeedConfig,
    pub output: OutputConfig,
    /// Directory that relative input paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    /// Parse TOML text without validation.
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let de = toml::Deserializer::new(text);
        serde_path_to_error::deserialize(de).map_err(|err| {
            let key = err.path().to_string();
            let message = err.inner().message().to_string();
            match parse_unknown_field(&message) {
                Some((unknown, expected)) => {
                    let suggestion = expected
                        .iter()
                        .map(|e| (strsim::jaro_winkler(&unknown, e), e))
                        .filter(|(score, _)| *score > 0.8)
                        .max_by(|a, b| a.0.total_cmp(&b.0))
                        .map(|(_, e)| e.clone());
                    ConfigError::UnknownKey {
                        key: parent_path(&key),
                        unknown,
                        suggestion,
                    }
                }
                None => ConfigError::Schema { key, message },
            }
        })
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn scenario_spec(&self) -> ScenarioSpec {
        ScenarioSpec {
            kind: self.scenario.kind,
            num_clients: self.population.num_clients,
            mix: self.scenario.mix,
        }
    }

    /// Field-level checks that need no world construction.
    pub fn validate_fields(&self) -> Result<(), ConfigError> {
        let r = &self.round;
        if r.clients_per_round == 0 {
            return Err(ConfigError::invalid("round.clients_per_round", "must be >= 1"));
        }
        if !(r.timeout_s > 0.0 && r.timeout_s.is_finite()) {
            return Err(ConfigError::invalid("round.timeout_s", format!("must be positive, got {}", r.timeout_s)));
        }
        if r.eval_every == 0 {
            return Err(ConfigError::invalid("round.eval_every", "must be >= 1"));
        }
        let p = &self.population;
        if p.num_clients < r.clients_per_round {
            return Err(ConfigError::invalid(
                "population.num_clients",
                format!(
                    "num_clients ({}) must be >= round.clients_per_round ({})",
                    p.num_clients, r.clients_per_round
                ),
            ));
        }
        p.capabilities
            .validate()
            .map_err(|e| ConfigError::invalid("population.capabilities", e.to_string()))?;
        self.scenario_spec()
            .validate()
            .map_err(|e| ConfigError::invalid("scenario.mix", e.to_string()))?;
        let s = &self.scenario;
        if !(s.horizon_s > 0.0 && s.horizon_s.is_finite()) {
            return Err(ConfigError::invalid("scenario.horizon_s", "must be positive"));
        }
        match s.source {
            TraceSource::Synthetic => {
                if s.classes.is_empty() {
                    return Err(ConfigError::invalid("scenario.classes", "at least one class is required"));
                }
                for (i, c) in s.classes.iter().enumerate() {
                    c.validate()
                        .map_err(|e| ConfigError::invalid(&format!("scenario.classes[{i}]"), e.to_string()))?;
                }
                if s.pool_size < p.num_clients {
                    return Err(ConfigError::invalid(
                        "scenario.pool_size",
                        format!("pool_size ({}) must be >= population.num_clients ({})", s.pool_size, p.num_clients),
                    ));
                }
            }
            TraceSource::File => {
                if s.trace_file.is_none() {
                    return Err(ConfigError::invalid("scenario.trace_file", "required when source = \"file\""));
                }
            }
        }
        let t = &self.task;
        self.task
            .synthetic()
            .validate()
            .map_err(|e| ConfigError::invalid("task", e.to_string()))?;
        if !(t.alpha > 0.0) {
            return Err(ConfigError::invalid("task.alpha", format!("must be positive, got {}", t.alpha)));
        }
        if !(t.lr >= 0.0 && t.lr.is_finite()) {
            return Err(ConfigError::invalid("task.lr", format!("must be >= 0, got {}", t.lr)));
        }
        if t.epochs == 0 || t.batch_size == 0 {
            return Err(ConfigError::invalid("task", "epochs and batch_size must be >= 1"));
        }
        let sel = &self.selector;
        sel.mda
            .validate()
            .map_err(|e| ConfigError::invalid("selector.mda", e.to_string()))?;
        sel.fedcs
            .validate()
            .map_err(|e| ConfigError::invalid("selector.fedcs", e.to_string()))?;
        sel.tifl
            .validate()
            .map_err(|e| ConfigError::invalid("selector.tifl", e.to_string()))?;
        if sel.tifl.num_tiers > p.num_clients {
            return Err(ConfigError::invalid(
                "selector.tifl.num_tiers",
                format!("{} tiers exceed {} clients", sel.tifl.num_tiers, p.num_clients),
            ));
        }
        if self.seeds.run_seeds.is_empty() {
            return Err(ConfigError::invalid("seeds.run_seeds", "at least one run seed is required"));
        }
        Ok(())
    }

    /// Cross-check the timeout against the slowest client's round time.
    pub fn check_timeout(&self, slowest_round_time: f64) -> Result<(), ConfigError> {
        if self.round.strict_availability_failures && slowest_round_time >= self.round.timeout_s {
            return Err(ConfigError::invalid(
                "round.timeout_s",
                format!(
                    "timeout {} s does not exceed the slowest client's round time {:.3} s \
                     (strict_availability_failures = true)",
                    self.round.timeout_s, slowest_round_time
                ),
            ));
        }
        Ok(())
    }

    pub fn fedcs_order(&self) -> FedcsOrder {
        self.selector.fedcs.order
    }
}

/// Read, default, and fully validate a config file, including checks that
/// require building the client population.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut cfg = ExperimentConfig::from_toml_str(&text)?;
    cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    cfg.validate_fields()?;
    let population = crate::engine::Population::build(&cfg)
        .map_err(|e| ConfigError::invalid("population", e.to_string()))?;
    cfg.check_timeout(population.slowest_round_time())?;
    Ok(cfg)
}

fn parent_path(path: &str) -> String {
    if path == "." || path.is_empty() {
        return "<root>".into();
    }
    match path.rsplit_once('.') {
        Some((parent, _)) => parent.to_string(),
        None => "<root>".into(),
    }
}

/// Pull the offending name and the expected names out of serde's
/// "unknown field `x`, expected one of `a`, `b`" message.
fn parse_unknown_field(message: &str) -> Option<(String, Vec<String>)> {
    let rest = message.strip_prefix("unknown field `")?;
    let (unknown, tail) = rest.split_once('`')?;
    let expected = tail
        .split('`')
        .skip(1)
        .step_by(2)
        .map(str::to_string)
        .collect();
    Some((unknown.to_string(), expected))
}
