//! Parameter sweeps with repetitions, run on a pool of worker threads.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::config::{DeviceMode, ExperimentConfig, InputMode};
use crate::error::{CliError, CliResult};
use crate::pipeline::{run_experiment, write_outputs, MetricsRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    HiddenSize,
    Density,
    Sigma,
    Noise,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::HiddenSize => "hidden_size",
            SweepAxis::Density => "density",
            SweepAxis::Sigma => "sigma",
            SweepAxis::Noise => "noise",
        }
    }

    /// `base` with this axis set to `value`.
    pub fn apply(self, base: &ExperimentConfig, value: f64) -> CliResult<ExperimentConfig> {
        let mut c = base.clone();
        match self {
            SweepAxis::HiddenSize => {
                if value.fract() != 0.0 || value < 1.0 {
                    return Err(CliError::Config(format!(
                        "hidden size {value} is not a positive integer"
                    )));
                }
                c.hidden_size = value as usize;
            }
            SweepAxis::Density => c.mask_density = value,
            SweepAxis::Sigma => {
                c.device_mode = if value == 0.0 {
                    DeviceMode::Perfect
                } else {
                    DeviceMode::Imperfect { sigma: value }
                }
            }
            SweepAxis::Noise => c.input_mode = InputMode::Spiking { noise: value },
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub repetitions: usize,
    pub workers: usize,
    /// Per-run metrics JSON files land here when set.
    pub metrics_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub repetition: usize,
    pub accuracy: Option<f64>,
    pub pulses: Option<u64>,
    /// Joules per configured technology, in config order.
    pub energy: Vec<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub technologies: Vec<String>,
    /// Sorted by value, then repetition.
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("axis,value,repetition,status,accuracy,pulses");
        for t in &self.technologies {
            let _ = write!(out, ",energy_{}_j", t.to_lowercase());
        }
        out.push_str(",error\n");
        for r in &self.rows {
            let status = if r.error.is_some() { "failed" } else { "ok" };
            let _ = write!(
                out,
                "{},{},{},{}",
                self.axis.name(),
                r.value,
                r.repetition,
                status
            );
            let _ = write!(
                out,
                ",{},{}",
                r.accuracy.map_or(String::new(), |a| a.to_string()),
                r.pulses.map_or(String::new(), |p| p.to_string())
            );
            for i in 0..self.technologies.len() {
                let _ = write!(
                    out,
                    ",{}",
                    r.energy.get(i).map_or(String::new(), |e| e.to_string())
                );
            }
            let err = r.error.as_deref().unwrap_or("").replace(['"', '\n'], " ");
            let _ = writeln!(out, ",\"{err}\"");
        }
        out
    }
}

fn point_config(
    base: &ExperimentConfig,
    spec: &SweepSpec,
    value: f64,
    rep: usize,
) -> CliResult<ExperimentConfig> {
    let mut c = spec.axis.apply(base, value)?;
    c.seeds = base.seeds.for_repetition(rep);
    c.outputs = Default::default();
    if let Some(dir) = &spec.metrics_dir {
        c.outputs.metrics =
            Some(dir.join(format!("{}_{}_rep{}.json", spec.axis.name(), value, rep)));
    }
    Ok(c)
}

fn row_of(value: f64, rep: usize, r: CliResult<MetricsRecord>) -> SweepRow {
    match r {
        Ok(m) => SweepRow {
            value,
            repetition: rep,
            accuracy: Some(m.test_accuracy),
            pulses: Some(m.pulses.total_pulses()),
            energy: m.energy.rows.iter().map(|e| e.full.joules).collect(),
            error: None,
        },
        Err(e) => SweepRow {
            value,
            repetition: rep,
            accuracy: None,
            pulses: None,
            energy: Vec::new(),
            error: Some(e.to_string()),
        },
    }
}

/// Runs every (value, repetition) point. Repetition 0 uses the base seeds,
/// later repetitions derive fresh ones, identically for every value. Failed
/// points are recorded and do not stop the sweep.
pub fn run_sweep(base: &ExperimentConfig, spec: &SweepSpec) -> CliResult<SweepResult> {
    if spec.values.is_empty() {
        return Err(CliError::Config("sweep needs at least one value".into()));
    }
    if spec.repetitions == 0 {
        return Err(CliError::Config(
            "sweep needs at least one repetition".into(),
        ));
    }
    base.validate()?;
    let technologies = base.technologies.clone();
    let jobs: Vec<(f64, usize)> = spec
        .values
        .iter()
        .flat_map(|&v| (0..spec.repetitions).map(move |r| (v, r)))
        .collect();
    let next = AtomicUsize::new(0);
    let rows = Mutex::new(Vec::with_capacity(jobs.len()));
    let workers = spec.workers.clamp(1, jobs.len());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(value, rep)) = jobs.get(i) else {
                    break;
                };
                let result = point_config(base, spec, value, rep).and_then(|c| {
                    let m = run_experiment(&c)?;
                    write_outputs(&m)?;
                    Ok(m)
                });
                rows.lock()
                    .expect("sweep rows")
                    .push(row_of(value, rep, result));
            });
        }
    });
    let mut rows = rows.into_inner().expect("sweep rows");
    rows.sort_by(|a, b| {
        a.value
            .total_cmp(&b.value)
            .then(a.repetition.cmp(&b.repetition))
    });
    Ok(SweepResult {
        axis: spec.axis,
        technologies,
        rows,
    })
}
