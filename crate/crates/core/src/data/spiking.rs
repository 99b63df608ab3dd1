//! Analog-to-spike conversion and spike-channel noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spatiotemporal::{FrameSequence, ValueMode};

/// Threshold applied when converting analog values to spikes. Both rules use
/// a strict inequality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpikeRule {
    /// Pixel luminosity `> 0.5` spikes.
    Mnist,
    /// Any positive channel value spikes.
    Cochleagram,
}

impl SpikeRule {
    fn threshold<T: Scalar>(self) -> T {
        match self {
            SpikeRule::Mnist => T::lit(0.5),
            SpikeRule::Cochleagram => T::zero(),
        }
    }
}

pub fn encode_spiking<T: Scalar>(sample: &FrameSequence<T>, rule: SpikeRule) -> FrameSequence<T> {
    let th = rule.threshold::<T>();
    let values = sample
        .values()
        .iter()
        .map(|&v| if v > th { T::one() } else { T::zero() })
        .collect();
    sample.with_values(values, ValueMode::Binary)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Per-element flip probability.
    pub flip_probability: f64,
    pub seed: u64,
}

pub fn inject_noise<T: Scalar>(
    sample: &FrameSequence<T>,
    spec: &NoiseSpec,
) -> Result<FrameSequence<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    inject_noise_with(sample, spec.flip_probability, &mut rng)
}

/// Flips each spike independently with probability `flip_probability`.
pub fn inject_noise_with<T: Scalar, R: Rng + ?Sized>(
    sample: &FrameSequence<T>,
    flip_probability: f64,
    rng: &mut R,
) -> Result<FrameSequence<T>> {
    if !sample.is_binary() {
        return Err(Error::NotBinary);
    }
    if !(0.0..=1.0).contains(&flip_probability) {
        return Err(Error::InvalidConfig(format!(
            "flip probability must lie in [0, 1], got {flip_probability}"
        )));
    }
    let values = sample
        .values()
        .iter()
        .map(|&v| {
            if rng.random_bool(flip_probability) {
                T::one() - v
            } else {
                v
            }
        })
        .collect();
    Ok(sample.with_values(values, ValueMode::Binary))
}
