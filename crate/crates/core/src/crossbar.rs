//! Differential crossbar: rows × columns of device pairs whose conductance
//! difference is the signed weight.
//!
//! The same type backs the frozen projection layer (wrapped in [`Projection`],
//! which has no programming path) and the trainable readout layer.

use std::io::{BufRead, Write};
use std::ops::Deref;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::device::{
    apply_pulse, sample_imperfect_with, DeviceParams, DeviceState, DispersionSpec, PulseSpec,
};
use crate::energy::EnergyLedger;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seeds::derive_seed;

/// Requested change of one weight during column programming.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Up,
    Down,
    Hold,
}

impl Direction {
    pub fn from_sign(s: i8) -> Self {
        match s.signum() {
            1 => Direction::Up,
            -1 => Direction::Down,
            _ => Direction::Hold,
        }
    }
}

/// The two pulses the training circuitry fires.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProgrammingScheme<T> {
    pub set: PulseSpec<T>,
    pub reset: PulseSpec<T>,
}

impl<T: Scalar> Default for ProgrammingScheme<T> {
    fn default() -> Self {
        Self {
            set: PulseSpec::set(),
            reset: PulseSpec::reset(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DifferentialCrossbar<T> {
    n_rows: usize,
    n_cols: usize,
    pos: Vec<DeviceState<T>>,
    neg: Vec<DeviceState<T>>,
    // row-major cache of pos - neg, kept in sync by `program_column`
    weights: Vec<T>,
    scheme: ProgrammingScheme<T>,
}

impl<T: Scalar> DifferentialCrossbar<T> {
    /// Builds a crossbar from row-major device matrices.
    pub fn from_devices(
        n_rows: usize,
        n_cols: usize,
        pos: Vec<DeviceState<T>>,
        neg: Vec<DeviceState<T>>,
    ) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::InvalidConfig(format!(
                "crossbar dimensions must be positive, got {n_rows}x{n_cols}"
            )));
        }
        for (ctx, m) in [("positive devices", &pos), ("negative devices", &neg)] {
            if m.len() != n_rows * n_cols {
                return Err(Error::DimensionMismatch {
                    context: ctx,
                    expected: n_rows * n_cols,
                    actual: m.len(),
                });
            }
        }
        let weights = pos
            .iter()
            .zip(&neg)
            .map(|(p, n)| p.conductance() - n.conductance())
            .collect();
        Ok(Self {
            n_rows,
            n_cols,
            pos,
            neg,
            weights,
            scheme: ProgrammingScheme::default(),
        })
    }

    pub fn with_scheme(mut self, scheme: ProgrammingScheme<T>) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn scheme(&self) -> &ProgrammingScheme<T> {
        &self.scheme
    }

    pub fn pos(&self, row: usize, col: usize) -> &DeviceState<T> {
        &self.pos[row * self.n_cols + col]
    }

    pub fn neg(&self, row: usize, col: usize) -> &DeviceState<T> {
        &self.neg[row * self.n_cols + col]
    }

    pub fn weight(&self, row: usize, col: usize) -> T {
        self.weights[row * self.n_cols + col]
    }

    /// Row-major effective weights.
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Signed output currents for the given row voltages.
    pub fn forward(&self, input: &[T]) -> Result<Vec<T>> {
        let mut out = vec![T::zero(); self.n_cols];
        self.forward_into(input, &mut out)?;
        Ok(out)
    }

    pub fn forward_into(&self, input: &[T], out: &mut [T]) -> Result<()> {
        self.check_dims(input.len(), out.len())?;
        out.iter_mut().for_each(|o| *o = T::zero());
        for (x, row) in input.iter().zip(self.weights.chunks_exact(self.n_cols)) {
            if x.is_zero() {
                continue;
            }
            for (o, &w) in out.iter_mut().zip(row) {
                *o += *x * w;
            }
        }
        Ok(())
    }

    /// [`forward`](Self::forward) specialised to ±1 V (or 0 V) row drives.
    pub fn forward_signs(&self, signs: &[i8], out: &mut [T]) -> Result<()> {
        self.check_dims(signs.len(), out.len())?;
        out.iter_mut().for_each(|o| *o = T::zero());
        for (&s, row) in signs.iter().zip(self.weights.chunks_exact(self.n_cols)) {
            match s.signum() {
                1 => out.iter_mut().zip(row).for_each(|(o, &w)| *o += w),
                -1 => out.iter_mut().zip(row).for_each(|(o, &w)| *o -= w),
                _ => {}
            }
        }
        Ok(())
    }

    fn check_dims(&self, input: usize, output: usize) -> Result<()> {
        if input != self.n_rows {
            return Err(Error::DimensionMismatch {
                context: "crossbar input",
                expected: self.n_rows,
                actual: input,
            });
        }
        if output != self.n_cols {
            return Err(Error::DimensionMismatch {
                context: "crossbar output",
                expected: self.n_cols,
                actual: output,
            });
        }
        Ok(())
    }

    /// Programs one column: `Up` fires Set on the positive device and Reset on
    /// the negative one, `Down` the mirror, `Hold` nothing. Every fired pulse is
    /// recorded in `ledger`, including pulses that hit a saturated device.
    pub fn program_column(
        &mut self,
        col: usize,
        directions: &[Direction],
        ledger: &mut EnergyLedger,
    ) -> Result<ColumnUpdate> {
        if col >= self.n_cols {
            return Err(Error::OutOfRange {
                context: "crossbar column",
                index: col,
                len: self.n_cols,
            });
        }
        if directions.len() != self.n_rows {
            return Err(Error::DimensionMismatch {
                context: "row directions",
                expected: self.n_rows,
                actual: directions.len(),
            });
        }
        let set = self.scheme.set;
        let reset = self.scheme.reset;
        let mut update = ColumnUpdate::default();
        for (row, dir) in directions.iter().enumerate() {
            let (pos_pulse, neg_pulse) = match dir {
                Direction::Up => (&set, &reset),
                Direction::Down => (&reset, &set),
                Direction::Hold => continue,
            };
            let idx = row * self.n_cols + col;
            let p = apply_pulse(self.pos[idx], pos_pulse);
            let n = apply_pulse(self.neg[idx], neg_pulse);
            ledger.record(pos_pulse.kind);
            ledger.record(neg_pulse.kind);
            update.pulses += 2;
            update.saturated += u64::from(p.saturated) + u64::from(n.saturated);
            self.pos[idx] = p.state;
            self.neg[idx] = n.state;
            self.weights[idx] = p.state.conductance() - n.state.conductance();
        }
        Ok(update)
    }

    /// Writes a CSV dump of every device pair's quantization level.
    pub fn write_snapshot<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "{} rows={} cols={}",
            SNAPSHOT_MAGIC, self.n_rows, self.n_cols
        )?;
        writeln!(w, "row,col,pos_level,neg_level,weight")?;
        for r in 0..self.n_rows {
            for c in 0..self.n_cols {
                let i = r * self.n_cols + c;
                writeln!(
                    w,
                    "{},{},{},{},{:e}",
                    r,
                    c,
                    self.pos[i].level(),
                    self.neg[i].level(),
                    self.weights[i].to_f64_lossy()
                )?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ColumnUpdate {
    pub pulses: u64,
    /// Pulses that could not move their device fully.
    pub saturated: u64,
}

pub const SNAPSHOT_MAGIC: &str = "# nanosyn-crossbar v1";

/// Parsed crossbar snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub n_rows: usize,
    pub n_cols: usize,
    pub pos_levels: Vec<u32>,
    pub neg_levels: Vec<u32>,
    pub weights: Vec<f64>,
}

impl Snapshot {
    pub fn read<R: BufRead>(r: R) -> Result<Self> {
        let bad = |detail: String| Error::BadHeader {
            context: "crossbar snapshot",
            detail,
        };
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| bad("empty file".into()))??;
        let rest = header
            .strip_prefix(SNAPSHOT_MAGIC)
            .ok_or_else(|| bad(format!("unexpected header {header:?}")))?;
        let mut n_rows = None;
        let mut n_cols = None;
        for field in rest.split_whitespace() {
            match field.split_once('=') {
                Some(("rows", v)) => n_rows = v.parse().ok(),
                Some(("cols", v)) => n_cols = v.parse().ok(),
                _ => {}
            }
        }
        let (n_rows, n_cols) = n_rows
            .zip(n_cols)
            .ok_or_else(|| bad("missing dimensions".into()))?;
        lines
            .next()
            .ok_or_else(|| bad("missing column header".into()))??;
        let n = n_rows * n_cols;
        let mut snap = Snapshot {
            n_rows,
            n_cols,
            pos_levels: vec![0; n],
            neg_levels: vec![0; n],
            weights: vec![0.0; n],
        };
        let mut seen = 0;
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(bad(format!("malformed row {line:?}")));
            }
            let parse_err = |_| bad(format!("malformed row {line:?}"));
            let r: usize = f[0].parse().map_err(parse_err)?;
            let c: usize = f[1].parse().map_err(parse_err)?;
            if r >= n_rows || c >= n_cols {
                return Err(bad(format!("cell ({r},{c}) outside {n_rows}x{n_cols}")));
            }
            let i = r * n_cols + c;
            snap.pos_levels[i] = f[2].parse().map_err(parse_err)?;
            snap.neg_levels[i] = f[3].parse().map_err(parse_err)?;
            snap.weights[i] = f[4]
                .parse()
                .map_err(|_| bad(format!("malformed weight in {line:?}")))?;
            seen += 1;
        }
        if seen != n {
            return Err(bad(format!("expected {n} cells, found {seen}")));
        }
        Ok(snap)
    }
}

/// Frozen first-layer crossbar. Dereferences to the underlying crossbar for
/// reads only; there is no way to program it after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection<T>(DifferentialCrossbar<T>);

impl<T> Deref for Projection<T> {
    type Target = DifferentialCrossbar<T>;

    fn deref(&self) -> &Self::Target {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProjectionMode {
    /// Every device at exactly `g_min` or `g_max`.
    BinaryPerfect,
    /// Every device at a random extremum of its own dispersed parameters.
    GaussianImperfect,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionInitSpec<T> {
    pub mode: ProjectionMode,
    pub dispersion: DispersionSpec<T>,
    pub seed: u64,
}

impl<T: Scalar> ProjectionInitSpec<T> {
    pub fn binary(seed: u64) -> Self {
        Self {
            mode: ProjectionMode::BinaryPerfect,
            dispersion: DispersionSpec {
                sigma_fraction: 0.0,
                means: DeviceParams::nominal(),
            },
            seed,
        }
    }

    pub fn gaussian(sigma_fraction: f64, seed: u64) -> Result<Self> {
        Ok(Self {
            mode: ProjectionMode::GaussianImperfect,
            dispersion: DispersionSpec::nominal(sigma_fraction)?,
            seed,
        })
    }
}

/// Random fixed projection layer.
///
/// Extremum choices and parameter dispersion come from independent streams
/// derived from `spec.seed`, so a zero-dispersion Gaussian projection equals
/// the binary one drawn from the same seed.
pub fn init_projection<T: Scalar>(
    n_rows: usize,
    n_cols: usize,
    spec: &ProjectionInitSpec<T>,
) -> Result<Projection<T>> {
    let n = n_rows * n_cols;
    let mut pick = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, "projection/extremum"));
    let mut disperse = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, "projection/dispersion"));
    let sigma = match spec.mode {
        ProjectionMode::BinaryPerfect => 0.0,
        ProjectionMode::GaussianImperfect => spec.dispersion.sigma_fraction,
    };
    let means = spec.dispersion.means;
    let mut device = |rng_pick: &mut ChaCha8Rng| -> Result<DeviceState<T>> {
        let high = rng_pick.random_bool(0.5);
        let params = sample_imperfect_with(&means, sigma, &mut disperse)?;
        Ok(if high {
            DeviceState::at_max(params)
        } else {
            DeviceState::at_min(params)
        })
    };
    let mut pos = Vec::with_capacity(n);
    let mut neg = Vec::with_capacity(n);
    for _ in 0..n {
        pos.push(device(&mut pick)?);
        neg.push(device(&mut pick)?);
    }
    DifferentialCrossbar::from_devices(n_rows, n_cols, pos, neg).map(Projection)
}

/// Starting conductance of every readout device before training.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadoutInit {
    /// Both devices at `g_min` (zero weight for perfect devices).
    #[default]
    Min,
    /// Both devices at the middle level.
    Mid,
    /// Each device at an independently drawn level.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadoutSpec<T> {
    pub init: ReadoutInit,
    pub dispersion: DispersionSpec<T>,
    pub seed: u64,
}

impl<T: Scalar> ReadoutSpec<T> {
    pub fn perfect() -> Self {
        Self {
            init: ReadoutInit::Min,
            dispersion: DispersionSpec {
                sigma_fraction: 0.0,
                means: DeviceParams::nominal(),
            },
            seed: 0,
        }
    }
}

/// Trainable readout crossbar; every device gets its own parameter draw.
pub fn init_readout<T: Scalar>(
    n_rows: usize,
    n_cols: usize,
    spec: &ReadoutSpec<T>,
) -> Result<DifferentialCrossbar<T>> {
    let n = n_rows * n_cols;
    let mut disperse = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, "readout/dispersion"));
    let mut levels = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, "readout/levels"));
    let mut device = || -> Result<DeviceState<T>> {
        let params = sample_imperfect_with(
            &spec.dispersion.means,
            spec.dispersion.sigma_fraction,
            &mut disperse,
        )?;
        let level = match spec.init {
            ReadoutInit::Min => 0,
            ReadoutInit::Mid => params.n_states() / 2,
            ReadoutInit::Random => levels.random_range(0..=params.n_states()),
        };
        DeviceState::at_level(params, level)
    };
    let mut pos = Vec::with_capacity(n);
    let mut neg = Vec::with_capacity(n);
    for _ in 0..n {
        pos.push(device()?);
        neg.push(device()?);
    }
    DifferentialCrossbar::from_devices(n_rows, n_cols, pos, neg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{DeviceParams, NOMINAL_G_MAX, NOMINAL_G_MIN};
    use proptest::prelude::*;

    const R: f64 = NOMINAL_G_MAX - NOMINAL_G_MIN;

    fn fresh(rows: usize, cols: usize) -> DifferentialCrossbar<f64> {
        init_readout(rows, cols, &ReadoutSpec::perfect()).unwrap()
    }

    fn pair(pos: DeviceState<f64>, neg: DeviceState<f64>) -> DifferentialCrossbar<f64> {
        DifferentialCrossbar::from_devices(1, 1, vec![pos], vec![neg]).unwrap()
    }

    #[test]
    fn zero_input_gives_zero_output() {
        let p = init_projection::<f64>(5, 7, &ProjectionInitSpec::binary(1)).unwrap();
        assert!(p.forward(&[0.0; 5]).unwrap().iter().all(|&y| y == 0.0));
    }

    #[test]
    fn single_cell_current() {
        let nom = DeviceParams::nominal();
        let x = pair(DeviceState::at_max(nom), DeviceState::at_min(nom));
        let y = x.forward(&[1.0]).unwrap()[0];
        assert!((y - 67.4e-6).abs() < 1e-18, "{y}");
    }

    #[test]
    fn opposite_pairs_cancel() {
        let nom = DeviceParams::nominal();
        let hi = DeviceState::at_max(nom);
        let lo = DeviceState::at_min(nom);
        let x = DifferentialCrossbar::from_devices(2, 1, vec![hi, lo], vec![lo, hi]).unwrap();
        assert_eq!(x.forward(&[1.0, 1.0]).unwrap()[0], 0.0);
    }

    #[test]
    fn forward_rejects_wrong_length() {
        let x = fresh(3, 2);
        assert!(matches!(
            x.forward(&[1.0, 2.0]),
            Err(Error::DimensionMismatch {
                expected: 3,
                actual: 2,
                ..
            })
        ));
    }

    #[test]
    fn binary_projection_is_balanced() {
        let p = init_projection::<f64>(100, 50, &ProjectionInitSpec::binary(42)).unwrap();
        let high = (0..100)
            .flat_map(|r| (0..50).map(move |c| (r, c)))
            .flat_map(|(r, c)| [p.pos(r, c), p.neg(r, c)])
            .filter(|d| d.level() == 128)
            .count();
        let frac = high as f64 / 10_000.0;
        assert!((0.49..=0.51).contains(&frac), "{frac}");
    }

    #[test]
    fn binary_projection_weights_are_three_valued() {
        let p = init_projection::<f64>(20, 30, &ProjectionInitSpec::binary(9)).unwrap();
        for &w in p.weights() {
            assert!(w == 0.0 || w == R || w == -R, "{w}");
        }
    }

    #[test]
    fn degenerate_gaussian_matches_binary() {
        let b = init_projection::<f64>(10, 12, &ProjectionInitSpec::binary(5)).unwrap();
        let g =
            init_projection::<f64>(10, 12, &ProjectionInitSpec::gaussian(0.0, 5).unwrap()).unwrap();
        assert_eq!(b, g);
    }

    #[test]
    fn gaussian_projection_spreads_weights() {
        let g =
            init_projection::<f64>(10, 12, &ProjectionInitSpec::gaussian(0.1, 5).unwrap()).unwrap();
        let distinct = g
            .weights()
            .iter()
            .filter(|&&w| w != 0.0 && w.abs() != R)
            .count();
        assert!(distinct > 100);
    }

    #[test]
    fn all_hold_is_noop() {
        let mut x = fresh(4, 3);
        let before = x.clone();
        let mut ledger = EnergyLedger::new();
        x.program_column(1, &[Direction::Hold; 4], &mut ledger)
            .unwrap();
        assert_eq!(x, before);
        assert_eq!(ledger, EnergyLedger::new());
    }

    #[test]
    fn one_up_step_from_fresh_pair() {
        let mut x = fresh(1, 1);
        let mut ledger = EnergyLedger::new();
        let u = x.program_column(0, &[Direction::Up], &mut ledger).unwrap();
        let w = x.weight(0, 0);
        assert!((w - R / 128.0).abs() < 1e-18);
        assert!((w - 0.5266e-6).abs() < 1e-10);
        assert_eq!(x.neg(0, 0).level(), 0);
        assert_eq!(u.saturated, 1);
        assert_eq!((ledger.set_pulses, ledger.reset_pulses), (1, 1));
    }

    #[test]
    fn saturation_still_counts_pulses() {
        let mut x = fresh(1, 1);
        let mut ledger = EnergyLedger::new();
        for _ in 0..128 {
            x.program_column(0, &[Direction::Up], &mut ledger).unwrap();
        }
        assert_eq!(x.weight(0, 0), R);
        let before = x.clone();
        for _ in 0..5 {
            x.program_column(0, &[Direction::Up], &mut ledger).unwrap();
        }
        assert_eq!(x, before);
        assert_eq!(ledger.total_pulses(), 2 * 133);
    }

    #[test]
    fn program_column_checks_bounds() {
        let mut x = fresh(2, 2);
        let mut l = EnergyLedger::new();
        assert!(x.program_column(2, &[Direction::Up; 2], &mut l).is_err());
        assert!(x.program_column(0, &[Direction::Up; 3], &mut l).is_err());
    }

    #[test]
    fn mid_init_has_zero_weight() {
        let spec = ReadoutSpec {
            init: ReadoutInit::Mid,
            ..ReadoutSpec::<f64>::perfect()
        };
        let x = init_readout(3, 3, &spec).unwrap();
        assert!(x.weights().iter().all(|&w| w == 0.0));
        assert!((0..3).all(|r| x.pos(r, 0).level() == 64));
    }

    #[test]
    fn snapshot_round_trip() {
        let mut x = fresh(3, 4);
        let mut l = EnergyLedger::new();
        x.program_column(
            2,
            &[Direction::Up, Direction::Down, Direction::Hold],
            &mut l,
        )
        .unwrap();
        let mut buf = Vec::new();
        x.write_snapshot(&mut buf).unwrap();
        let snap = Snapshot::read(buf.as_slice()).unwrap();
        assert_eq!((snap.n_rows, snap.n_cols), (3, 4));
        assert_eq!(snap.pos_levels[2], 1);
        assert_eq!(snap.neg_levels[4 + 2], 1);
        for (a, b) in snap.weights.iter().zip(x.weights()) {
            assert!((a - b).abs() <= 1e-15 * b.abs());
        }
        assert!(Snapshot::read(&b"garbage\n"[..]).is_err());
    }

    fn dirs() -> impl Strategy<Value = Direction> {
        prop_oneof![
            Just(Direction::Up),
            Just(Direction::Down),
            Just(Direction::Hold)
        ]
    }

    proptest! {
        #[test]
        fn forward_is_linear(
            seed in any::<u64>(),
            x in prop::collection::vec(-2.0f64..2.0, 6),
            y in prop::collection::vec(-2.0f64..2.0, 6),
            alpha in -3.0f64..3.0,
        ) {
            let p = init_projection::<f64>(6, 5, &ProjectionInitSpec::gaussian(0.1, seed).unwrap()).unwrap();
            let fx = p.forward(&x).unwrap();
            let fy = p.forward(&y).unwrap();
            let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
            let scaled: Vec<f64> = x.iter().map(|a| alpha * a).collect();
            let fs = p.forward(&sum).unwrap();
            let fa = p.forward(&scaled).unwrap();
            let scale = 6.0 * 2.0 * 80e-6;
            for j in 0..5 {
                prop_assert!((fs[j] - (fx[j] + fy[j])).abs() <= 1e-9 * scale);
                prop_assert!((fa[j] - alpha * fx[j]).abs() <= 1e-9 * scale * alpha.abs().max(1.0));
            }
        }

        #[test]
        fn programming_touches_only_its_column(
            col in 0usize..4,
            ds in prop::collection::vec(dirs(), 5),
            reps in 1usize..20,
        ) {
            let mut x = fresh(5, 4);
            let mut l = EnergyLedger::new();
            let before = x.clone();
            for _ in 0..reps {
                x.program_column(col, &ds, &mut l).unwrap();
            }
            for r in 0..5 {
                for c in (0..4).filter(|&c| c != col) {
                    prop_assert_eq!(x.pos(r, c), before.pos(r, c));
                    prop_assert_eq!(x.neg(r, c), before.neg(r, c));
                    prop_assert_eq!(x.weight(r, c).to_bits(), before.weight(r, c).to_bits());
                }
            }
        }

        #[test]
        fn weights_stay_bounded(seq in prop::collection::vec(dirs(), 0..400)) {
            let mut x = fresh(1, 1);
            let mut l = EnergyLedger::new();
            for d in seq {
                x.program_column(0, &[d], &mut l).unwrap();
                prop_assert!(x.weight(0, 0).abs() <= R);
            }
        }

        #[test]
        fn up_then_down_restores_weight(pos in 1u32..128, neg in 1u32..128) {
            let nom = DeviceParams::nominal();
            let mut x = pair(
                DeviceState::at_level(nom, pos).unwrap(),
                DeviceState::at_level(nom, neg).unwrap(),
            );
            let w0 = x.weight(0, 0);
            let mut l = EnergyLedger::new();
            x.program_column(0, &[Direction::Up], &mut l).unwrap();
            x.program_column(0, &[Direction::Down], &mut l).unwrap();
            prop_assert_eq!(x.weight(0, 0).to_bits(), w0.to_bits());
        }
    }
}
