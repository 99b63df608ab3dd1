//! Single analog nanosynapse under constant-amplitude pulse programming.
//!
//! A device sits between `g_min` and `g_max` and moves in quantized steps of
//! `(g_max - g_min) / n_states`. The conductance is stored as an integer level
//! so repeated programming never drifts off the grid.
//!
//! Pulses are classified against the device's *own* thresholds:
//!
//! | amplitude                     | effect            |
//! |-------------------------------|-------------------|
//! | `|V| <= v_th1`                | none              |
//! | `v_th1 < |V| < v_th2`         | increase (set)    |
//! | `|V| >= v_th2`                | decrease (reset)  |
//!
//! A dispersed device whose `v_th2` lies above the nominal reset amplitude
//! therefore responds to a nominal reset pulse by increasing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const NOMINAL_G_MIN: f64 = 2.1e-6;
pub const NOMINAL_G_MAX: f64 = 69.5e-6;
pub const NOMINAL_V_TH1: f64 = 3.1;
pub const NOMINAL_V_TH2: f64 = 5.5;
pub const NOMINAL_N_STATES: u32 = 128;

pub const SET_AMPLITUDE: f64 = 3.3;
pub const RESET_AMPLITUDE: f64 = 5.5;
pub const PULSE_DURATION: f64 = 100e-6;

/// Rejection budget for [`sample_imperfect`].
pub const MAX_SAMPLING_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams<T> {
    g_min: T,
    g_max: T,
    v_th1: T,
    v_th2: T,
    n_states: u32,
}

impl<T: Scalar> DeviceParams<T> {
    pub fn new(g_min: T, g_max: T, v_th1: T, v_th2: T, n_states: u32) -> Result<Self> {
        let params = Self {
            g_min,
            g_max,
            v_th1,
            v_th2,
            n_states,
        };
        params.validate()?;
        Ok(params)
    }

    /// Perfect device: identical extrema and thresholds everywhere.
    pub fn nominal() -> Self {
        Self {
            g_min: T::lit(NOMINAL_G_MIN),
            g_max: T::lit(NOMINAL_G_MAX),
            v_th1: T::lit(NOMINAL_V_TH1),
            v_th2: T::lit(NOMINAL_V_TH2),
            n_states: NOMINAL_N_STATES,
        }
    }

    fn validate(&self) -> Result<()> {
        let finite = [self.g_min, self.g_max, self.v_th1, self.v_th2]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidDevice("non-finite parameter".into()));
        }
        if !(self.g_min > T::zero() && self.g_max > self.g_min) {
            return Err(Error::InvalidDevice(format!(
                "need g_max > g_min > 0, got g_min={}, g_max={}",
                self.g_min, self.g_max
            )));
        }
        if !(self.v_th1 > T::zero() && self.v_th2 > self.v_th1) {
            return Err(Error::InvalidDevice(format!(
                "need v_th2 > v_th1 > 0, got v_th1={}, v_th2={}",
                self.v_th1, self.v_th2
            )));
        }
        if self.n_states < 2 {
            return Err(Error::InvalidDevice(format!(
                "need at least 2 states, got {}",
                self.n_states
            )));
        }
        Ok(())
    }

    pub fn g_min(&self) -> T {
        self.g_min
    }

    pub fn g_max(&self) -> T {
        self.g_max
    }

    pub fn v_th1(&self) -> T {
        self.v_th1
    }

    pub fn v_th2(&self) -> T {
        self.v_th2
    }

    pub fn n_states(&self) -> u32 {
        self.n_states
    }

    /// `g_max - g_min`.
    pub fn write_range(&self) -> T {
        self.g_max - self.g_min
    }

    /// Conductance change of one quantization level.
    pub fn step(&self) -> T {
        self.write_range() / T::lit(f64::from(self.n_states))
    }

    /// Conductance at quantization level `level` (0 = `g_min`, `n_states` = `g_max`).
    ///
    /// The top level returns `g_max` exactly rather than the rounded sum.
    pub fn conductance_at(&self, level: u32) -> T {
        if level >= self.n_states {
            self.g_max
        } else {
            self.g_min + self.step() * T::lit(f64::from(level))
        }
    }

    /// How this device responds to a pulse of the given amplitude.
    pub fn classify(&self, amplitude: T) -> Response {
        let a = amplitude.abs();
        if a >= self.v_th2 {
            Response::Decrease
        } else if a > self.v_th1 {
            Response::Increase
        } else {
            Response::None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Response {
    Increase,
    Decrease,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PulseKind {
    Set,
    Reset,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec<T> {
    pub kind: PulseKind,
    pub amplitude: T,
    pub duration: T,
}

impl<T: Scalar> PulseSpec<T> {
    pub fn set() -> Self {
        Self {
            kind: PulseKind::Set,
            amplitude: T::lit(SET_AMPLITUDE),
            duration: T::lit(PULSE_DURATION),
        }
    }

    pub fn reset() -> Self {
        Self {
            kind: PulseKind::Reset,
            amplitude: T::lit(RESET_AMPLITUDE),
            duration: T::lit(PULSE_DURATION),
        }
    }

    pub fn with_amplitude(kind: PulseKind, amplitude: T) -> Self {
        Self {
            kind,
            amplitude,
            duration: T::lit(PULSE_DURATION),
        }
    }
}

/// Number of quantization levels a supra-threshold pulse moves a device.
///
/// `overdrive` is `|V| - V_th` for the threshold that was crossed.
pub trait StepModel<T: Scalar> {
    fn levels(&self, params: &DeviceParams<T>, overdrive: T) -> u32;
}

/// One level per pulse regardless of overdrive.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConstantStep;

impl<T: Scalar> StepModel<T> for ConstantStep {
    fn levels(&self, _params: &DeviceParams<T>, _overdrive: T) -> u32 {
        1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceState<T> {
    params: DeviceParams<T>,
    level: u32,
}

impl<T: Scalar> DeviceState<T> {
    pub fn at_min(params: DeviceParams<T>) -> Self {
        Self { params, level: 0 }
    }

    pub fn at_max(params: DeviceParams<T>) -> Self {
        Self {
            level: params.n_states,
            params,
        }
    }

    pub fn at_level(params: DeviceParams<T>, level: u32) -> Result<Self> {
        if level > params.n_states {
            return Err(Error::OutOfRange {
                context: "device level",
                index: level as usize,
                len: params.n_states as usize + 1,
            });
        }
        Ok(Self { params, level })
    }

    pub fn params(&self) -> &DeviceParams<T> {
        &self.params
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn conductance(&self) -> T {
        self.params.conductance_at(self.level)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseOutcome<T> {
    pub state: DeviceState<T>,
    pub response: Response,
    /// The pulse asked the device to move past one of its extrema.
    pub saturated: bool,
}

pub fn apply_pulse<T: Scalar>(state: DeviceState<T>, pulse: &PulseSpec<T>) -> PulseOutcome<T> {
    apply_pulse_with(state, pulse, &ConstantStep)
}

pub fn apply_pulse_with<T: Scalar, M: StepModel<T>>(
    state: DeviceState<T>,
    pulse: &PulseSpec<T>,
    model: &M,
) -> PulseOutcome<T> {
    let params = state.params;
    let response = params.classify(pulse.amplitude);
    let amplitude = pulse.amplitude.abs();
    let (level, saturated) = match response {
        Response::None => (state.level, false),
        Response::Increase => {
            let want = model.levels(&params, amplitude - params.v_th1);
            let room = params.n_states - state.level;
            (state.level + want.min(room), want > room)
        }
        Response::Decrease => {
            let want = model.levels(&params, amplitude - params.v_th2);
            (state.level - want.min(state.level), want > state.level)
        }
    };
    PulseOutcome {
        state: DeviceState { params, level },
        response,
        saturated,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionSpec<T> {
    /// Relative standard deviation applied to each mean.
    pub sigma_fraction: f64,
    pub means: DeviceParams<T>,
}

impl<T: Scalar> DispersionSpec<T> {
    pub fn new(sigma_fraction: f64, means: DeviceParams<T>) -> Result<Self> {
        if !(0.0..1.0).contains(&sigma_fraction) {
            return Err(Error::InvalidConfig(format!(
                "sigma fraction must lie in [0, 1), got {sigma_fraction}"
            )));
        }
        Ok(Self {
            sigma_fraction,
            means,
        })
    }

    pub fn nominal(sigma_fraction: f64) -> Result<Self> {
        Self::new(sigma_fraction, DeviceParams::nominal())
    }

    pub fn is_degenerate(&self) -> bool {
        self.sigma_fraction == 0.0
    }
}

pub fn sample_imperfect<T: Scalar>(
    means: &DeviceParams<T>,
    spec: &DispersionSpec<T>,
    seed: u64,
) -> Result<DeviceParams<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_imperfect_with(means, spec.sigma_fraction, &mut rng)
}

/// Draws each of `g_min`, `g_max`, `v_th1`, `v_th2` from a normal centred on
/// its mean with standard deviation `sigma_fraction * mean`, redrawing the
/// whole set until the ordering constraints hold.
///
/// Zero dispersion returns `means` without touching the generator.
pub fn sample_imperfect_with<T: Scalar, R: Rng + ?Sized>(
    means: &DeviceParams<T>,
    sigma_fraction: f64,
    rng: &mut R,
) -> Result<DeviceParams<T>> {
    if !(0.0..1.0).contains(&sigma_fraction) {
        return Err(Error::InvalidConfig(format!(
            "sigma fraction must lie in [0, 1), got {sigma_fraction}"
        )));
    }
    if sigma_fraction == 0.0 {
        return Ok(*means);
    }
    let mut draw = |mean: T| -> T {
        let m = mean.to_f64_lossy();
        let z: f64 = StandardNormal.sample(rng);
        T::lit(m + sigma_fraction * m.abs() * z)
    };
    for _ in 0..MAX_SAMPLING_ATTEMPTS {
        let candidate = DeviceParams {
            g_min: draw(means.g_min),
            g_max: draw(means.g_max),
            v_th1: draw(means.v_th1),
            v_th2: draw(means.v_th2),
            n_states: means.n_states,
        };
        if candidate.validate().is_ok() {
            return Ok(candidate);
        }
    }
    Err(Error::DispersionTooLarge {
        sigma: sigma_fraction,
        attempts: MAX_SAMPLING_ATTEMPTS,
    })
}
