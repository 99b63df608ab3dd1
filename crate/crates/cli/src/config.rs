//! Experiment configuration.
//!
//! A config is assembled from three layers, later ones winning: built-in
//! defaults, an optional TOML file, and command-line overrides. Overrides are
//! dotted `key=value` pairs whose value is parsed as a TOML value, falling
//! back to a plain string (`hidden_size=200`, `seeds.masks=9`,
//! `device_mode.kind=imperfect`).

use std::path::{Path, PathBuf};

use nanosyn::{Orientation, ReadoutInit, SyntheticSpec, TechnologySpec, TieBreak};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    MnistFrames,
    Cochleagram,
    SyntheticCochleagram,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DeviceMode {
    Perfect,
    /// Every readout device gets its own parameter draw with this relative spread.
    Imperfect {
        sigma: f64,
    },
}

impl DeviceMode {
    pub fn sigma(&self) -> f64 {
        match *self {
            DeviceMode::Perfect => 0.0,
            DeviceMode::Imperfect { sigma } => sigma,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputMode {
    Analog,
    /// Spike-encoded input with a per-element flip probability.
    Spiking {
        noise: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProjectionConfig {
    Binary,
    Gaussian { sigma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    F32,
    F64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub projection: u64,
    pub masks: u64,
    pub shuffle: u64,
    pub noise: u64,
    pub device: u64,
    pub data: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Self {
            projection: 1,
            masks: 2,
            shuffle: 3,
            noise: 4,
            device: 5,
            data: 6,
        }
    }
}

impl Seeds {
    /// Every seed derived from one base value.
    pub fn from_base(base: u64) -> Self {
        let d = |l: &str| nanosyn::derive_seed(base, l);
        Self {
            projection: d("projection"),
            masks: d("masks"),
            shuffle: d("shuffle"),
            noise: d("noise"),
            device: d("device"),
            data: d("data"),
        }
    }

    /// Independent seeds for repetition `rep`; repetition 0 keeps `self`.
    pub fn for_repetition(&self, rep: usize) -> Self {
        if rep == 0 {
            return *self;
        }
        let label = format!("rep/{rep}");
        let d = |s: u64| nanosyn::derive_seed(s, &label);
        Self {
            projection: d(self.projection),
            masks: d(self.masks),
            shuffle: d(self.shuffle),
            noise: d(self.noise),
            device: d(self.device),
            data: d(self.data),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub metrics: Option<PathBuf>,
    pub trace_csv: Option<PathBuf>,
    pub energy_csv: Option<PathBuf>,
    pub readout_snapshot: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Task,
    pub mnist_dir: PathBuf,
    pub orientation: Orientation,
    /// Cochleagram container; the first `cochleagram_train` samples train.
    pub cochleagram_path: Option<PathBuf>,
    pub cochleagram_train: usize,
    /// Generator settings; its `seed` is replaced by `seeds.data`.
    pub synthetic: SyntheticSpec,
    pub hidden_size: usize,
    pub mask_density: f64,
    pub projection: ProjectionConfig,
    pub device_mode: DeviceMode,
    pub readout_init: ReadoutInit,
    pub input_mode: InputMode,
    pub epochs: usize,
    pub log_interval: Option<usize>,
    pub tie_break: TieBreak,
    pub train_limit: Option<usize>,
    pub test_limit: Option<usize>,
    pub precision: Precision,
    /// When set, also report the ridge-regression readout accuracy on the
    /// same hidden activations.
    pub oracle_regularization: Option<f64>,
    pub seeds: Seeds,
    pub technologies: Vec<String>,
    pub outputs: Outputs,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            task: Task::MnistFrames,
            mnist_dir: PathBuf::from("data/mnist"),
            orientation: Orientation::Rows,
            cochleagram_path: None,
            cochleagram_train: 350,
            synthetic: SyntheticSpec::default(),
            hidden_size: 1200,
            mask_density: 0.25,
            projection: ProjectionConfig::Binary,
            device_mode: DeviceMode::Perfect,
            readout_init: ReadoutInit::Min,
            input_mode: InputMode::Analog,
            epochs: 1,
            log_interval: Some(1000),
            tie_break: TieBreak::Positive,
            train_limit: None,
            test_limit: None,
            precision: Precision::F64,
            oracle_regularization: None,
            seeds: Seeds::default(),
            technologies: vec!["TBFe".into(), "ENODe".into()],
            outputs: Outputs::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.hidden_size == 0 {
            return bad("hidden_size must be positive".into());
        }
        if !(self.mask_density > 0.0 && self.mask_density <= 1.0) {
            return bad(format!(
                "mask_density must lie in (0, 1], got {}",
                self.mask_density
            ));
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if self.log_interval == Some(0) {
            return bad("log_interval must be positive".into());
        }
        let sigma = self.device_mode.sigma();
        if !(0.0..1.0).contains(&sigma) {
            return bad(format!("device sigma must lie in [0, 1), got {sigma}"));
        }
        if let ProjectionConfig::Gaussian { sigma } = self.projection {
            if !(0.0..1.0).contains(&sigma) {
                return bad(format!("projection sigma must lie in [0, 1), got {sigma}"));
            }
        }
        if let InputMode::Spiking { noise } = self.input_mode {
            if !(0.0..=1.0).contains(&noise) {
                return bad(format!("noise must lie in [0, 1], got {noise}"));
            }
        }
        if let Some(l) = self.oracle_regularization {
            if !(l.is_finite() && l >= 0.0) {
                return bad(format!(
                    "oracle_regularization must be non-negative, got {l}"
                ));
            }
        }
        if self.task == Task::Cochleagram && self.cochleagram_path.is_none() {
            return bad("task cochleagram needs cochleagram_path".into());
        }
        self.technology_specs()?;
        Ok(())
    }

    pub fn technology_specs(&self) -> CliResult<Vec<TechnologySpec>> {
        self.technologies
            .iter()
            .map(|n| {
                TechnologySpec::by_name(n)
                    .ok_or_else(|| CliError::Config(format!("unknown technology {n:?}")))
            })
            .collect()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }
}

/// Builds a config from defaults, an optional TOML file and `key=value`
/// overrides, in increasing precedence.
pub fn load_config(file: Option<&Path>, overrides: &[String]) -> CliResult<ExperimentConfig> {
    let mut table = Table::try_from(ExperimentConfig::default())
        .map_err(|e| CliError::Config(format!("default config: {e}")))?;
    if let Some(path) = file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("reading {}: {e}", path.display())))?;
        let file_table: Table = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("parsing {}: {e}", path.display())))?;
        merge(&mut table, file_table);
    }
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let cfg: ExperimentConfig = Value::Table(table)
        .try_into()
        .map_err(|e| CliError::Config(format!("invalid config: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

fn merge(base: &mut Table, over: Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(o)) if !is_tagged(&o) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

// Tagged enums are replaced wholesale so that stale variant fields do not linger.
fn is_tagged(t: &Table) -> bool {
    t.contains_key("kind")
}

fn parse_value(raw: &str) -> Value {
    let doc = format!("v = {raw}");
    match toml::from_str::<Table>(&doc) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.into())),
        Err(_) => Value::String(raw.into()),
    }
}

pub fn apply_override(table: &mut Table, assignment: &str) -> CliResult<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override {assignment:?} is not key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("bad override key {key:?}")));
    }
    let value = parse_value(raw.trim());
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut cur = table;
    for p in parents {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        if !entry.is_table() {
            *entry = Value::Table(Table::new());
        }
        cur = entry.as_table_mut().expect("table");
    }
    // switching the variant of a tagged enum drops fields of the old variant
    if *last == "kind" {
        cur.clear();
    }
    cur.insert(last.to_string(), value);
    Ok(())
}
