//! Datasets and input presentation.

mod cochleagram;
mod mnist;
mod spiking;
mod synthetic;

pub use cochleagram::{
    load_cochleagram, read_cochleagrams, save_cochleagram, write_cochleagrams, COCHLEAGRAM_MAGIC,
    COCHLEAGRAM_VERSION,
};
pub use mnist::{
    load_mnist, load_mnist_dir, parse_idx_images, parse_idx_labels, IdxImages, Orientation,
    IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC, TEST_IMAGES, TEST_LABELS, TRAIN_IMAGES, TRAIN_LABELS,
};
pub use spiking::{encode_spiking, inject_noise, inject_noise_with, NoiseSpec, SpikeRule};
pub use synthetic::{generate_synthetic_cochleagrams, SyntheticSpec};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seeds::derive_seed;
use crate::spatiotemporal::FrameSequence;

/// Disjoint train and test partitions sharing one channel count.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub train: Vec<FrameSequence<T>>,
    pub test: Vec<FrameSequence<T>>,
    pub n_classes: usize,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(
        train: Vec<FrameSequence<T>>,
        test: Vec<FrameSequence<T>>,
        n_classes: usize,
    ) -> Result<Self> {
        let mut channels = train.iter().chain(&test).map(|s| s.n_channels());
        if let Some(first) = channels.next() {
            if let Some(other) = channels.find(|&c| c != first) {
                return Err(Error::DimensionMismatch {
                    context: "dataset channel count",
                    expected: first,
                    actual: other,
                });
            }
        }
        if let Some(s) = train.iter().chain(&test).find(|s| s.label() >= n_classes) {
            return Err(Error::OutOfRange {
                context: "class label",
                index: s.label(),
                len: n_classes,
            });
        }
        Ok(Self {
            train,
            test,
            n_classes,
        })
    }

    pub fn n_channels(&self) -> usize {
        self.train
            .first()
            .or_else(|| self.test.first())
            .map_or(0, |s| s.n_channels())
    }

    /// Longest sample in either partition.
    pub fn max_frames(&self) -> usize {
        self.train
            .iter()
            .chain(&self.test)
            .map(|s| s.n_frames())
            .max()
            .unwrap_or(0)
    }

    pub fn spiking(&self, rule: SpikeRule) -> Self {
        let enc = |v: &[FrameSequence<T>]| v.iter().map(|s| encode_spiking(s, rule)).collect();
        Self {
            train: enc(&self.train),
            test: enc(&self.test),
            n_classes: self.n_classes,
        }
    }

    /// Flips spikes in every sample of both partitions. Each sample draws from
    /// its own stream derived from `seed`, its partition and its index.
    pub fn with_noise(&self, flip_probability: f64, seed: u64) -> Result<Self> {
        let noisy = |v: &[FrameSequence<T>], part: &str| -> Result<Vec<FrameSequence<T>>> {
            let base = derive_seed(seed, part);
            v.iter()
                .enumerate()
                .map(|(i, s)| {
                    inject_noise(
                        s,
                        &NoiseSpec {
                            flip_probability,
                            seed: derive_seed(base, &i.to_string()),
                        },
                    )
                })
                .collect()
        };
        Ok(Self {
            train: noisy(&self.train, "noise/train")?,
            test: noisy(&self.test, "noise/test")?,
            n_classes: self.n_classes,
        })
    }
}
