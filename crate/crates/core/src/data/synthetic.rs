//! Synthetic stand-in for spoken-digit cochleagrams.
//!
//! Each sample has an early and a late segment joined by a smooth transition
//! at a jittered split point. The early segment is a mix of `n_shapes`
//! spectral shapes, the late segment a mix of `n_shapes` different ones. The
//! `2 * n_shapes` mixing coefficients form a unit direction; every class owns
//! `variants_per_class` random directions, so class regions are unions of
//! separated cones and cannot be split by a linear readout on time-integrated
//! channels. Gaussian noise is added per element and values are clipped to
//! `[-1, 1]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seeds::derive_seed;
use crate::spatiotemporal::{FrameSequence, ValueMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub n_samples: usize,
    pub n_train: usize,
    pub n_classes: usize,
    pub n_channels: usize,
    pub min_frames: usize,
    pub max_frames: usize,
    /// Spectral shapes per segment.
    pub n_shapes: usize,
    pub variants_per_class: usize,
    /// Std of the per-coordinate perturbation of a class direction.
    pub direction_jitter: f64,
    /// Std of the additive per-element noise.
    pub noise: f64,
    pub gain: f64,
    /// Split point is `n_frames * (0.5 + u)`, `u ~ U(-split_jitter, split_jitter)`.
    pub split_jitter: f64,
    /// Width in frames of the logistic transition between segments.
    pub transition: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_samples: 500,
            n_train: 350,
            n_classes: 10,
            n_channels: 77,
            min_frames: 50,
            max_frames: 100,
            n_shapes: 3,
            variants_per_class: 2,
            direction_jitter: 0.03,
            noise: 0.07,
            gain: 0.8,
            split_jitter: 0.1,
            transition: 2.0,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("synthetic generator: {m}")));
        if self.n_classes == 0 || self.n_classes > 256 {
            return bad("n_classes must lie in 1..=256");
        }
        if self.n_train > self.n_samples {
            return bad("n_train exceeds n_samples");
        }
        if self.n_channels == 0 || self.n_shapes == 0 || self.variants_per_class == 0 {
            return bad("channels, shapes and variants must be positive");
        }
        if self.min_frames == 0 || self.min_frames > self.max_frames {
            return bad("frame range must satisfy 0 < min_frames <= max_frames");
        }
        for (name, v) in [
            ("direction_jitter", self.direction_jitter),
            ("noise", self.noise),
            ("gain", self.gain),
            ("split_jitter", self.split_jitter),
            ("transition", self.transition),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(&format!("{name} must be finite and non-negative"));
            }
        }
        if self.split_jitter >= 0.5 || self.transition == 0.0 {
            return bad("split_jitter must be below 0.5 and transition positive");
        }
        Ok(())
    }
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Smooth spectral profile: a few signed Gaussian bumps, peak magnitude 1.
fn spectral_shape<R: Rng + ?Sized>(n_channels: usize, rng: &mut R) -> Vec<f64> {
    let c = n_channels as f64;
    let mut v = vec![0.0; n_channels];
    for _ in 0..4 {
        let mu = rng.random_range(0.0..c);
        let width = rng.random_range(0.05..0.16) * c;
        let amp = rng.random_range(-1.0..1.0);
        for (i, x) in v.iter_mut().enumerate() {
            let z = (i as f64 - mu) / width;
            *x += amp * (-0.5 * z * z).exp();
        }
    }
    let peak = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if peak > 0.0 {
        v.iter_mut().for_each(|x| *x /= peak);
    }
    v
}

fn unit<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| normal(rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-9 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Balanced classes; the first `n_train` samples form the training split.
pub fn generate_synthetic_cochleagrams<T: Scalar>(spec: &SyntheticSpec) -> Result<Dataset<T>> {
    spec.validate()?;
    let c = spec.n_channels;
    let d = spec.n_shapes;
    let mut proto = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, "synthetic/prototypes"));
    let early: Vec<Vec<f64>> = (0..d).map(|_| spectral_shape(c, &mut proto)).collect();
    let late: Vec<Vec<f64>> = (0..d).map(|_| spectral_shape(c, &mut proto)).collect();
    let directions: Vec<Vec<Vec<f64>>> = (0..spec.n_classes)
        .map(|_| {
            (0..spec.variants_per_class)
                .map(|_| unit(2 * d, &mut proto))
                .collect()
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, "synthetic/samples"));
    let mut samples = Vec::with_capacity(spec.n_samples);
    let mut e_spec = vec![0.0; c];
    let mut l_spec = vec![0.0; c];
    for s in 0..spec.n_samples {
        let label = s % spec.n_classes;
        let variant = rng.random_range(0..spec.variants_per_class);
        let mut p = directions[label][variant].clone();
        p.iter_mut()
            .for_each(|x| *x += spec.direction_jitter * normal(&mut rng));
        let norm = p.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
        p.iter_mut().for_each(|x| *x /= norm);

        e_spec.iter_mut().for_each(|x| *x = 0.0);
        l_spec.iter_mut().for_each(|x| *x = 0.0);
        for k in 0..d {
            for i in 0..c {
                e_spec[i] += p[k] * early[k][i];
                l_spec[i] += p[d + k] * late[k][i];
            }
        }

        let n_frames = rng.random_range(spec.min_frames..=spec.max_frames);
        let split =
            n_frames as f64 * (0.5 + rng.random_range(-spec.split_jitter..=spec.split_jitter));
        let mut values = Vec::with_capacity(n_frames * c);
        for f in 0..n_frames {
            let w = 1.0 / (1.0 + ((f as f64 - split) / spec.transition).exp());
            for i in 0..c {
                let x = spec.gain * (w * e_spec[i] + (1.0 - w) * l_spec[i])
                    + spec.noise * normal(&mut rng);
                // stored as f32 on disk, so quantize here to keep round trips exact
                values.push(T::lit(f64::from(x.clamp(-1.0, 1.0) as f32)));
            }
        }
        samples.push(FrameSequence::new(label, c, values, ValueMode::Signed)?);
    }
    let test = samples.split_off(spec.n_train);
    Dataset::new(samples, test, spec.n_classes)
}
