//! Online sign-conditional training of the readout crossbar.
//!
//! For each sample the readout is driven by the hidden layer's ±1 outputs.
//! A column whose output sign already matches its target (+1 for the true
//! class, −1 otherwise) is left alone. Otherwise every pair in the column is
//! nudged by one device step: up where the row's drive agrees in sign with
//! the target, down where it disagrees.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::crossbar::{DifferentialCrossbar, Direction};
use crate::energy::EnergyLedger;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spatiotemporal::{integrate_sample, FrameSequence, MaskSet, TieBreak};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub shuffle_seed: u64,
    /// Evaluate the test set every this many training samples.
    pub log_interval: Option<usize>,
    pub tie_break: TieBreak,
}

impl TrainConfig {
    pub fn new(epochs: usize, shuffle_seed: u64) -> Result<Self> {
        let c = Self {
            epochs,
            shuffle_seed,
            log_interval: None,
            tie_break: TieBreak::default(),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn with_log_interval(mut self, interval: usize) -> Self {
        self.log_interval = Some(interval);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be at least 1".into()));
        }
        if self.log_interval == Some(0) {
            return Err(Error::InvalidConfig("log interval must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub samples_seen: u64,
    pub test_accuracy: f64,
    pub cumulative_pulses: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub checkpoints: Vec<Checkpoint>,
}

impl ConvergenceTrace {
    /// Appends a checkpoint; `samples_seen` must strictly increase.
    pub fn push(&mut self, c: Checkpoint) -> Result<()> {
        if let Some(last) = self.checkpoints.last() {
            if c.samples_seen <= last.samples_seen {
                return Err(Error::InvalidConfig(format!(
                    "checkpoint at {} does not follow {}",
                    c.samples_seen, last.samples_seen
                )));
            }
        }
        self.checkpoints.push(c);
        Ok(())
    }

    pub fn last(&self) -> Option<&Checkpoint> {
        self.checkpoints.last()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("samples_seen,test_accuracy,cumulative_pulses\n");
        for c in &self.checkpoints {
            out.push_str(&format!(
                "{},{},{}\n",
                c.samples_seen, c.test_accuracy, c.cumulative_pulses
            ));
        }
        out
    }
}

/// Something that can drive the readout rows.
pub trait ReadoutDrive<T: Scalar> {
    fn n_rows(&self) -> usize;

    /// Column currents for this drive.
    fn drive(&self, readout: &DifferentialCrossbar<T>, out: &mut [T]) -> Result<()>;

    /// Programming direction of `row` toward `target` (±1).
    fn direction(&self, row: usize, target: i8) -> Direction;
}

/// ±1 hidden-neuron outputs.
impl<T: Scalar> ReadoutDrive<T> for [i8] {
    fn n_rows(&self) -> usize {
        self.len()
    }

    fn drive(&self, readout: &DifferentialCrossbar<T>, out: &mut [T]) -> Result<()> {
        readout.forward_signs(self, out)
    }

    fn direction(&self, row: usize, target: i8) -> Direction {
        Direction::from_sign(self[row].signum() * target)
    }
}

/// Analog row voltages; a zero drive leaves its row untouched.
impl<T: Scalar> ReadoutDrive<T> for [T] {
    fn n_rows(&self) -> usize {
        self.len()
    }

    fn drive(&self, readout: &DifferentialCrossbar<T>, out: &mut [T]) -> Result<()> {
        readout.forward_into(self, out)
    }

    fn direction(&self, row: usize, target: i8) -> Direction {
        let x = self[row];
        if x > T::zero() {
            Direction::from_sign(target)
        } else if x < T::zero() {
            Direction::from_sign(-target)
        } else {
            Direction::Hold
        }
    }
}

impl<T: Scalar> ReadoutDrive<T> for Vec<i8> {
    fn n_rows(&self) -> usize {
        self.len()
    }

    fn drive(&self, readout: &DifferentialCrossbar<T>, out: &mut [T]) -> Result<()> {
        self.as_slice().drive(readout, out)
    }

    fn direction(&self, row: usize, target: i8) -> Direction {
        ReadoutDrive::<T>::direction(self.as_slice(), row, target)
    }
}

impl<T: Scalar> ReadoutDrive<T> for Vec<T> {
    fn n_rows(&self) -> usize {
        self.len()
    }

    fn drive(&self, readout: &DifferentialCrossbar<T>, out: &mut [T]) -> Result<()> {
        self.as_slice().drive(readout, out)
    }

    fn direction(&self, row: usize, target: i8) -> Direction {
        self.as_slice().direction(row, target)
    }
}

/// A readout drive paired with its class label.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoded<V> {
    pub input: V,
    pub label: usize,
}

/// `+1` for the labelled class, `-1` for every other column.
pub fn target(label: usize, class: usize) -> i8 {
    if class == label {
        1
    } else {
        -1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    /// Columns whose output sign disagreed with the target and were programmed.
    pub mismatched: Vec<bool>,
    pub pulses: u64,
}

/// One conditional update of the readout for one sample.
pub fn train_step<T: Scalar, D: ReadoutDrive<T> + ?Sized>(
    readout: &mut DifferentialCrossbar<T>,
    input: &D,
    label: usize,
    ledger: &mut EnergyLedger,
    tie_break: TieBreak,
) -> Result<StepReport> {
    check_drive(readout, input, label)?;
    let mut y = vec![T::zero(); readout.n_cols()];
    input.drive(readout, &mut y)?;
    let mut mismatched = vec![false; readout.n_cols()];
    let mut pulses = 0;
    let mut directions = Vec::with_capacity(readout.n_rows());
    for (j, &yj) in y.iter().enumerate() {
        let t = target(label, j);
        if tie_break.sign(yj) == t {
            continue;
        }
        mismatched[j] = true;
        directions.clear();
        directions.extend((0..readout.n_rows()).map(|i| input.direction(i, t)));
        pulses += readout.program_column(j, &directions, ledger)?.pulses;
    }
    Ok(StepReport { mismatched, pulses })
}

fn check_drive<T: Scalar, D: ReadoutDrive<T> + ?Sized>(
    readout: &DifferentialCrossbar<T>,
    input: &D,
    label: usize,
) -> Result<()> {
    if input.n_rows() != readout.n_rows() {
        return Err(Error::DimensionMismatch {
            context: "readout drive",
            expected: readout.n_rows(),
            actual: input.n_rows(),
        });
    }
    if label >= readout.n_cols() {
        return Err(Error::OutOfRange {
            context: "class label",
            index: label,
            len: readout.n_cols(),
        });
    }
    Ok(())
}

/// Index of the largest column output; the lowest index wins ties.
pub fn argmax<T: Scalar>(y: &[T]) -> usize {
    let mut best = 0;
    for (j, &v) in y.iter().enumerate().skip(1) {
        if v > y[best] {
            best = j;
        }
    }
    best
}

pub fn infer<T: Scalar, D: ReadoutDrive<T> + ?Sized>(
    readout: &DifferentialCrossbar<T>,
    input: &D,
) -> Result<usize> {
    let mut y = vec![T::zero(); readout.n_cols()];
    input.drive(readout, &mut y)?;
    Ok(argmax(&y))
}

/// Fraction of samples whose inferred class equals the label; 0 for an empty set.
pub fn accuracy<T: Scalar, V: ReadoutDrive<T>>(
    readout: &DifferentialCrossbar<T>,
    samples: &[Encoded<V>],
) -> Result<f64> {
    if samples.is_empty() {
        return Ok(0.0);
    }
    let mut y = vec![T::zero(); readout.n_cols()];
    let mut correct = 0usize;
    for s in samples {
        s.input.drive(readout, &mut y)?;
        if argmax(&y) == s.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / samples.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingOutcome {
    pub trace: ConvergenceTrace,
    pub ledger: EnergyLedger,
    pub samples_seen: u64,
}

/// Trains `readout` online over pre-encoded samples.
///
/// The training order is reshuffled at the start of every epoch from a single
/// generator seeded with `config.shuffle_seed`. When a test set is given, the
/// trace holds the accuracy before training, at every `log_interval` samples,
/// and after the last sample.
pub fn train_readout<T: Scalar, V: ReadoutDrive<T>>(
    readout: &mut DifferentialCrossbar<T>,
    train: &[Encoded<V>],
    test: &[Encoded<V>],
    config: &TrainConfig,
) -> Result<TrainingOutcome> {
    config.validate()?;
    for s in train.iter().chain(test) {
        check_drive(readout, &s.input, s.label)?;
    }
    let mut ledger = EnergyLedger::new();
    let mut trace = ConvergenceTrace::default();
    let log = !test.is_empty();
    let mut checkpoint =
        |readout: &DifferentialCrossbar<T>, seen: u64, ledger: &EnergyLedger| -> Result<()> {
            trace.push(Checkpoint {
                samples_seen: seen,
                test_accuracy: accuracy(readout, test)?,
                cumulative_pulses: ledger.total_pulses(),
            })
        };
    if log {
        checkpoint(readout, 0, &ledger)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.shuffle_seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut seen = 0u64;
    let mut last_logged = 0u64;
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let s = &train[i];
            train_step(readout, &s.input, s.label, &mut ledger, config.tie_break)?;
            seen += 1;
            if let Some(k) = config.log_interval {
                if log && seen.is_multiple_of(k as u64) {
                    checkpoint(readout, seen, &ledger)?;
                    last_logged = seen;
                }
            }
        }
    }
    if log && seen > last_logged {
        checkpoint(readout, seen, &ledger)?;
    }
    Ok(TrainingOutcome {
        trace,
        ledger,
        samples_seen: seen,
    })
}

/// Hidden-layer code of every sample, keeping only the ±1 outputs.
pub fn encode_samples<T: Scalar>(
    projection: &DifferentialCrossbar<T>,
    samples: &[FrameSequence<T>],
    masks: &MaskSet,
    tie_break: TieBreak,
) -> Result<Vec<Encoded<Vec<i8>>>> {
    samples
        .iter()
        .map(|s| {
            integrate_sample(projection, s, masks, tie_break).map(|h| Encoded {
                input: h.outputs,
                label: s.label(),
            })
        })
        .collect()
}

/// Full two-layer pipeline: integrate every sample through the fixed
/// projection, then train the readout online.
pub fn run_training<T: Scalar>(
    projection: &DifferentialCrossbar<T>,
    readout: &mut DifferentialCrossbar<T>,
    train: &[FrameSequence<T>],
    test: &[FrameSequence<T>],
    masks: &MaskSet,
    config: &TrainConfig,
) -> Result<TrainingOutcome> {
    config.validate()?;
    let train_codes = encode_samples(projection, train, masks, config.tie_break)?;
    let test_codes = encode_samples(projection, test, masks, config.tie_break)?;
    train_readout(readout, &train_codes, &test_codes, config)
}
