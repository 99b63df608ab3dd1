//! End-to-end runs: data loading, encoding, training and reporting.

use std::fs;
use std::io::BufWriter;
use std::path::Path;

use nanosyn::data::{generate_synthetic_cochleagrams, load_cochleagram, load_mnist_dir};
use nanosyn::energy::report;
use nanosyn::learning::Encoded;
use nanosyn::oracle::{one_hot_targets, predict, pseudo_inverse_readout, Matrix};
use nanosyn::{
    accuracy, encode_samples, generate_masks, init_projection, init_readout, train_readout,
    ConvergenceTrace, Dataset, DifferentialCrossbar, DispersionSpec, EnergyLedger, EnergyReport,
    FrameSequence, MaskSet, ProjectionInitSpec, ReadoutSpec, Scalar, SpikeRule, TrainConfig,
};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, InputMode, Precision, ProjectionConfig, Task};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum System {
    TwoLayer,
    OneLayerBaseline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub n_train: usize,
    pub n_test: usize,
    pub n_channels: usize,
    pub n_classes: usize,
    pub max_frames: usize,
}

/// Everything a run reports. Serializes deterministically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub system: System,
    pub config: ExperimentConfig,
    pub dataset: DatasetSummary,
    pub test_accuracy: f64,
    pub train_accuracy: f64,
    pub oracle_test_accuracy: Option<f64>,
    pub samples_seen: u64,
    pub pulses: EnergyLedger,
    /// Fraction of readout devices sitting at either conductance bound.
    pub readout_saturation: f64,
    pub trace: ConvergenceTrace,
    pub energy: EnergyReport,
}

impl MetricsRecord {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("metrics serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("metrics record: {e}")))
    }
}

fn data_error(cfg: &ExperimentConfig, e: nanosyn::Error) -> CliError {
    match (&e, cfg.task) {
        (nanosyn::Error::Io(io), Task::MnistFrames)
            if io.kind() == std::io::ErrorKind::NotFound =>
        {
            CliError::Data(format!(
                "MNIST files not found under {} ({e}); see the README for how to fetch them",
                cfg.mnist_dir.display()
            ))
        }
        _ => e.into(),
    }
}

/// Loads the configured task, applies limits and the input mode.
pub fn load_dataset<T: Scalar>(cfg: &ExperimentConfig) -> CliResult<Dataset<T>> {
    let mut data = match cfg.task {
        Task::MnistFrames => {
            load_mnist_dir::<T>(&cfg.mnist_dir, cfg.orientation).map_err(|e| data_error(cfg, e))?
        }
        Task::Cochleagram => {
            let path = cfg.cochleagram_path.as_ref().expect("validated");
            let mut all = load_cochleagram::<T>(path)?;
            if cfg.cochleagram_train > all.len() {
                return Err(CliError::Data(format!(
                    "{} holds {} samples, fewer than cochleagram_train = {}",
                    path.display(),
                    all.len(),
                    cfg.cochleagram_train
                )));
            }
            let test = all.split_off(cfg.cochleagram_train);
            let n_classes = all
                .iter()
                .chain(&test)
                .map(|s| s.label() + 1)
                .max()
                .unwrap_or(1);
            Dataset::new(all, test, n_classes)?
        }
        Task::SyntheticCochleagram => {
            let mut spec = cfg.synthetic.clone();
            spec.seed = cfg.seeds.data;
            generate_synthetic_cochleagrams::<T>(&spec)?
        }
    };
    if let Some(n) = cfg.train_limit {
        data.train.truncate(n);
    }
    if let Some(n) = cfg.test_limit {
        data.test.truncate(n);
    }
    if let InputMode::Spiking { noise } = cfg.input_mode {
        let rule = match cfg.task {
            Task::MnistFrames => SpikeRule::Mnist,
            Task::Cochleagram | Task::SyntheticCochleagram => SpikeRule::Cochleagram,
        };
        data = data.spiking(rule);
        if noise > 0.0 {
            data = data.with_noise(noise, cfg.seeds.noise)?;
        }
    }
    if data.train.is_empty() && data.test.is_empty() {
        return Err(CliError::Data("dataset is empty".into()));
    }
    Ok(data)
}

fn summary<T: Scalar>(d: &Dataset<T>) -> DatasetSummary {
    DatasetSummary {
        n_train: d.train.len(),
        n_test: d.test.len(),
        n_channels: d.n_channels(),
        n_classes: d.n_classes,
        max_frames: d.max_frames(),
    }
}

fn readout_spec<T: Scalar>(cfg: &ExperimentConfig) -> CliResult<ReadoutSpec<T>> {
    Ok(ReadoutSpec {
        init: cfg.readout_init,
        dispersion: DispersionSpec::nominal(cfg.device_mode.sigma())?,
        seed: cfg.seeds.device,
    })
}

fn train_config(cfg: &ExperimentConfig) -> CliResult<TrainConfig> {
    let mut t = TrainConfig::new(cfg.epochs, cfg.seeds.shuffle)?;
    t.log_interval = cfg.log_interval;
    t.tie_break = cfg.tie_break;
    Ok(t)
}

fn saturation<T: Scalar>(x: &DifferentialCrossbar<T>) -> f64 {
    let mut at_bound = 0usize;
    for r in 0..x.n_rows() {
        for c in 0..x.n_cols() {
            for d in [x.pos(r, c), x.neg(r, c)] {
                if d.level() == 0 || d.level() == d.params().n_states() {
                    at_bound += 1;
                }
            }
        }
    }
    at_bound as f64 / (2 * x.n_rows() * x.n_cols()).max(1) as f64
}

/// Hidden codes of a dataset under the configured projection and masks.
pub struct EncodedTask {
    pub summary: DatasetSummary,
    pub train: Vec<Encoded<Vec<i8>>>,
    pub test: Vec<Encoded<Vec<i8>>>,
}

/// Builds the projection and masks from `cfg` and encodes `data` through them.
pub fn encode_task<T: Scalar>(cfg: &ExperimentConfig, data: &Dataset<T>) -> CliResult<EncodedTask> {
    let summary = summary(data);
    let masks = generate_masks(
        cfg.hidden_size,
        summary.max_frames,
        cfg.mask_density,
        cfg.seeds.masks,
    )?;
    let spec = match cfg.projection {
        ProjectionConfig::Binary => ProjectionInitSpec::<T>::binary(cfg.seeds.projection),
        ProjectionConfig::Gaussian { sigma } => {
            ProjectionInitSpec::gaussian(sigma, cfg.seeds.projection)?
        }
    };
    let projection = init_projection::<T>(summary.n_channels, cfg.hidden_size, &spec)?;
    Ok(EncodedTask {
        train: encode_samples(&projection, &data.train, &masks, cfg.tie_break)?,
        test: encode_samples(&projection, &data.test, &masks, cfg.tie_break)?,
        summary,
    })
}

/// Test accuracy of the ridge readout fitted on the training codes.
pub fn oracle_accuracy(codes: &EncodedTask, regularization: f64) -> CliResult<f64> {
    let to_rows = |v: &[Encoded<Vec<i8>>]| -> Vec<Vec<f64>> {
        v.iter()
            .map(|e| e.input.iter().map(|&s| f64::from(s)).collect())
            .collect()
    };
    let a = Matrix::from_rows(&to_rows(&codes.train))?;
    let labels: Vec<usize> = codes.train.iter().map(|e| e.label).collect();
    let z = one_hot_targets::<f64>(&labels, codes.summary.n_classes)?;
    let w = pseudo_inverse_readout(&a, &z, regularization)?;
    if codes.test.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0;
    for (row, e) in to_rows(&codes.test).iter().zip(&codes.test) {
        if predict(&w, row)? == e.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / codes.test.len() as f64)
}

struct Trained<T> {
    readout: DifferentialCrossbar<T>,
    outcome: nanosyn::TrainingOutcome,
    train_accuracy: f64,
}

fn train_on<T: Scalar, V: nanosyn::learning::ReadoutDrive<T>>(
    cfg: &ExperimentConfig,
    n_rows: usize,
    n_classes: usize,
    train: &[Encoded<V>],
    test: &[Encoded<V>],
) -> CliResult<Trained<T>> {
    let mut readout = init_readout::<T>(n_rows, n_classes, &readout_spec(cfg)?)?;
    let outcome = train_readout(&mut readout, train, test, &train_config(cfg)?)?;
    let train_accuracy = accuracy(&readout, train)?;
    Ok(Trained {
        readout,
        outcome,
        train_accuracy,
    })
}

fn finish<T: Scalar>(
    cfg: &ExperimentConfig,
    system: System,
    dataset: DatasetSummary,
    trained: Trained<T>,
    oracle_test_accuracy: Option<f64>,
) -> CliResult<MetricsRecord> {
    let techs = cfg.technology_specs()?;
    let Trained {
        readout,
        outcome,
        train_accuracy,
    } = trained;
    if outcome.trace.checkpoints.is_empty() {
        return Err(CliError::Data("no test samples to evaluate".into()));
    }
    let energy = report(&outcome.ledger, &techs, &outcome.trace)?;
    if let Some(p) = &cfg.outputs.readout_snapshot {
        let f =
            fs::File::create(p).map_err(|e| CliError::Runtime(format!("{}: {e}", p.display())))?;
        readout.write_snapshot(BufWriter::new(f))?;
    }
    Ok(MetricsRecord {
        system,
        config: cfg.clone(),
        dataset,
        test_accuracy: outcome.trace.last().map_or(0.0, |c| c.test_accuracy),
        train_accuracy,
        oracle_test_accuracy,
        samples_seen: outcome.samples_seen,
        pulses: outcome.ledger,
        readout_saturation: saturation(&readout),
        trace: outcome.trace,
        energy,
    })
}

fn run_two_layer<T: Scalar>(cfg: &ExperimentConfig) -> CliResult<MetricsRecord> {
    let data = load_dataset::<T>(cfg)?;
    let codes = encode_task(cfg, &data)?;
    drop(data);
    let oracle = cfg
        .oracle_regularization
        .map(|l| oracle_accuracy(&codes, l))
        .transpose()?;
    let trained = train_on::<T, _>(
        cfg,
        cfg.hidden_size,
        codes.summary.n_classes,
        &codes.train,
        &codes.test,
    )?;
    finish(cfg, System::TwoLayer, codes.summary, trained, oracle)
}

/// Per-channel time integration over each channel's own frame mask.
pub fn integrate_channels<T: Scalar>(sample: &FrameSequence<T>, masks: &MaskSet) -> Vec<T> {
    let mut acc = vec![T::zero(); sample.n_channels()];
    for (f, frame) in sample.frames().enumerate() {
        for (i, (a, &v)) in acc.iter_mut().zip(frame).enumerate() {
            if masks.get(i).includes(f) {
                *a += v;
            }
        }
    }
    acc
}

fn run_one_layer<T: Scalar>(cfg: &ExperimentConfig) -> CliResult<MetricsRecord> {
    let data = load_dataset::<T>(cfg)?;
    let dataset = summary(&data);
    let masks = generate_masks(
        dataset.n_channels,
        dataset.max_frames,
        cfg.mask_density,
        cfg.seeds.masks,
    )?;
    let enc = |v: &[FrameSequence<T>]| -> Vec<Encoded<Vec<T>>> {
        v.iter()
            .map(|s| Encoded {
                input: integrate_channels(s, &masks),
                label: s.label(),
            })
            .collect()
    };
    let train = enc(&data.train);
    let test = enc(&data.test);
    drop(data);
    let trained = train_on::<T, _>(cfg, dataset.n_channels, dataset.n_classes, &train, &test)?;
    finish(cfg, System::OneLayerBaseline, dataset, trained, None)
}

/// Full two-layer pipeline as configured.
pub fn run_experiment(cfg: &ExperimentConfig) -> CliResult<MetricsRecord> {
    cfg.validate()?;
    match cfg.precision {
        Precision::F32 => run_two_layer::<f32>(cfg),
        Precision::F64 => run_two_layer::<f64>(cfg),
    }
}

/// Readout trained directly on time-integrated inputs, without the
/// projection layer. `mask_density = 1` gives uniform integration.
pub fn run_baseline_onelayer(cfg: &ExperimentConfig) -> CliResult<MetricsRecord> {
    cfg.validate()?;
    match cfg.precision {
        Precision::F32 => run_one_layer::<f32>(cfg),
        Precision::F64 => run_one_layer::<f64>(cfg),
    }
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

/// Writes every output file the config asks for.
pub fn write_outputs(record: &MetricsRecord) -> CliResult<()> {
    let o = &record.config.outputs;
    if let Some(p) = &o.metrics {
        write_file(p, &record.to_json())?;
    }
    if let Some(p) = &o.trace_csv {
        write_file(p, &record.trace.to_csv())?;
    }
    if let Some(p) = &o.energy_csv {
        write_file(p, &record.energy.to_csv())?;
    }
    Ok(())
}
