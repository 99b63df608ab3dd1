//! Hidden neurons that integrate projection outputs over time frames.
//!
//! Neuron `m` sums the projection's output current over the frames in its
//! window mask and emits the sign of the total:
//!
//! ```text
//! O[m] = sign( Σ_{f ∈ mask_m} Σ_i X[i, f] · W[i, m] )
//! ```
//!
//! The uniform scheme is the special case where every mask contains every frame.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::crossbar::DifferentialCrossbar;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Declared value domain of a [`FrameSequence`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueMode {
    /// Analog values in `[0, 1]` (pixel intensities).
    Unit,
    /// Analog values in `[-1, 1]` (cochleagram channels).
    Signed,
    /// Spikes: exactly `0` or `1`.
    Binary,
}

impl ValueMode {
    fn admits<T: Scalar>(self, v: T) -> bool {
        match self {
            ValueMode::Unit => v >= T::zero() && v <= T::one(),
            ValueMode::Signed => v >= -T::one() && v <= T::one(),
            ValueMode::Binary => v == T::zero() || v == T::one(),
        }
    }

    fn bounds(self) -> (f64, f64) {
        match self {
            ValueMode::Unit | ValueMode::Binary => (0.0, 1.0),
            ValueMode::Signed => (-1.0, 1.0),
        }
    }
}

/// One labelled sample: `n_channels` inputs over `n_frames` time frames,
/// stored frame-major so each frame is a contiguous input vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence<T> {
    label: usize,
    n_channels: usize,
    n_frames: usize,
    mode: ValueMode,
    values: Vec<T>,
}

impl<T: Scalar> FrameSequence<T> {
    /// `values` is frame-major: `values[f * n_channels + i]`.
    pub fn new(label: usize, n_channels: usize, values: Vec<T>, mode: ValueMode) -> Result<Self> {
        if n_channels == 0 {
            return Err(Error::InvalidConfig(
                "sample needs at least one channel".into(),
            ));
        }
        if values.is_empty() || !values.len().is_multiple_of(n_channels) {
            return Err(Error::DimensionMismatch {
                context: "frame values",
                expected: n_channels * (values.len() / n_channels).max(1),
                actual: values.len(),
            });
        }
        if let Some(&bad) = values.iter().find(|&&v| !mode.admits(v)) {
            let (min, max) = mode.bounds();
            return Err(Error::ValueOutOfRange {
                context: "frame sequence",
                value: bad.to_f64_lossy(),
                min,
                max,
            });
        }
        Ok(Self {
            label,
            n_channels,
            n_frames: values.len() / n_channels,
            mode,
            values,
        })
    }

    pub fn label(&self) -> usize {
        self.label
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn mode(&self) -> ValueMode {
        self.mode
    }

    pub fn is_binary(&self) -> bool {
        self.mode == ValueMode::Binary
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn frame(&self, f: usize) -> &[T] {
        &self.values[f * self.n_channels..(f + 1) * self.n_channels]
    }

    pub fn value(&self, channel: usize, frame: usize) -> T {
        self.values[frame * self.n_channels + channel]
    }

    pub fn frames(&self) -> impl Iterator<Item = &[T]> {
        self.values.chunks_exact(self.n_channels)
    }

    /// Same shape and label, new values. The caller guarantees they fit `mode`.
    pub(crate) fn with_values(&self, values: Vec<T>, mode: ValueMode) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        debug_assert!(values.iter().all(|&v| mode.admits(v)));
        Self {
            label: self.label,
            n_channels: self.n_channels,
            n_frames: self.n_frames,
            mode,
            values,
        }
    }
}

/// Frames one hidden neuron integrates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowMask {
    included: Vec<bool>,
}

impl WindowMask {
    pub fn from_included(included: Vec<bool>) -> Self {
        Self { included }
    }

    pub fn includes(&self, frame: usize) -> bool {
        self.included.get(frame).copied().unwrap_or(false)
    }

    pub fn count(&self) -> usize {
        self.included.iter().filter(|&&b| b).count()
    }

    pub fn frames(&self) -> impl Iterator<Item = usize> + '_ {
        self.included
            .iter()
            .enumerate()
            .filter_map(|(f, &b)| b.then_some(f))
    }
}

/// Window masks of a whole hidden layer, fixed for every presentation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskSet {
    max_frames: usize,
    density: f64,
    masks: Vec<WindowMask>,
}

pub const MASKS_MAGIC: &str = "# nanosyn-masks v1";

impl MaskSet {
    /// Every neuron integrates every frame.
    pub fn uniform(n_neurons: usize, max_frames: usize) -> Self {
        Self {
            max_frames,
            density: 1.0,
            masks: vec![WindowMask::from_included(vec![true; max_frames]); n_neurons],
        }
    }

    pub fn from_masks(max_frames: usize, density: f64, masks: Vec<WindowMask>) -> Result<Self> {
        if let Some(m) = masks.iter().find(|m| m.included.len() != max_frames) {
            return Err(Error::DimensionMismatch {
                context: "window mask",
                expected: max_frames,
                actual: m.included.len(),
            });
        }
        Ok(Self {
            max_frames,
            density,
            masks,
        })
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn max_frames(&self) -> usize {
        self.max_frames
    }

    /// Target inclusion probability the masks were generated with.
    pub fn density(&self) -> f64 {
        self.density
    }

    pub fn is_uniform(&self) -> bool {
        self.masks.iter().all(|m| m.included.iter().all(|&b| b))
    }

    pub fn masks(&self) -> &[WindowMask] {
        &self.masks
    }

    pub fn get(&self, neuron: usize) -> &WindowMask {
        &self.masks[neuron]
    }

    /// Text dump: a header line, then one line of frame indices per neuron.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "{} neurons={} max_frames={} density={}",
            MASKS_MAGIC,
            self.masks.len(),
            self.max_frames,
            self.density
        )?;
        for m in &self.masks {
            let line: Vec<String> = m.frames().map(|f| f.to_string()).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let bad = |detail: String| Error::BadHeader {
            context: "mask file",
            detail,
        };
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| bad("empty file".into()))??;
        let rest = header
            .strip_prefix(MASKS_MAGIC)
            .ok_or_else(|| bad(format!("unexpected header {header:?}")))?;
        let (mut neurons, mut max_frames, mut density) = (None, None, None);
        for field in rest.split_whitespace() {
            match field.split_once('=') {
                Some(("neurons", v)) => neurons = v.parse::<usize>().ok(),
                Some(("max_frames", v)) => max_frames = v.parse::<usize>().ok(),
                Some(("density", v)) => density = v.parse::<f64>().ok(),
                _ => {}
            }
        }
        let (neurons, max_frames, density) = match (neurons, max_frames, density) {
            (Some(n), Some(f), Some(d)) => (n, f, d),
            _ => return Err(bad("incomplete header".into())),
        };
        let mut masks = Vec::with_capacity(neurons);
        for line in lines.take(neurons) {
            let line = line?;
            let mut included = vec![false; max_frames];
            for tok in line.split_whitespace() {
                let f: usize = tok
                    .parse()
                    .map_err(|_| bad(format!("bad frame index {tok:?}")))?;
                *included
                    .get_mut(f)
                    .ok_or_else(|| bad(format!("frame {f} beyond {max_frames}")))? = true;
            }
            masks.push(WindowMask { included });
        }
        if masks.len() != neurons {
            return Err(bad(format!(
                "expected {neurons} masks, found {}",
                masks.len()
            )));
        }
        Self::from_masks(max_frames, density, masks)
    }
}

/// Each neuron includes each frame index independently with probability `density`.
pub fn generate_masks(
    n_neurons: usize,
    max_frames: usize,
    density: f64,
    seed: u64,
) -> Result<MaskSet> {
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "mask density must lie in (0, 1], got {density}"
        )));
    }
    if density == 1.0 {
        return Ok(MaskSet::uniform(n_neurons, max_frames));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let masks = (0..n_neurons)
        .map(|_| WindowMask {
            included: (0..max_frames).map(|_| rng.random_bool(density)).collect(),
        })
        .collect();
    Ok(MaskSet {
        max_frames,
        density,
        masks,
    })
}

/// Output of a hidden neuron for an exactly-zero accumulator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    #[default]
    Positive,
    Negative,
}

impl TieBreak {
    pub fn sign<T: Scalar>(self, v: T) -> i8 {
        if v > T::zero() {
            1
        } else if v < T::zero() {
            -1
        } else {
            match self {
                TieBreak::Positive => 1,
                TieBreak::Negative => -1,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HiddenActivation<T> {
    /// Pre-sign sums, one per neuron.
    pub accumulators: Vec<T>,
    /// `+1` excitatory, `-1` inhibitory.
    pub outputs: Vec<i8>,
}

impl<T> HiddenActivation<T> {
    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }
}

/// Streams the sample frame by frame through the projection, accumulating
/// each neuron's output over the frames its mask includes.
pub fn integrate_sample<T: Scalar>(
    projection: &DifferentialCrossbar<T>,
    sample: &FrameSequence<T>,
    masks: &MaskSet,
    tie_break: TieBreak,
) -> Result<HiddenActivation<T>> {
    let n_hidden = projection.n_cols();
    if sample.n_channels() != projection.n_rows() {
        return Err(Error::DimensionMismatch {
            context: "sample channels vs projection rows",
            expected: projection.n_rows(),
            actual: sample.n_channels(),
        });
    }
    if masks.len() != n_hidden {
        return Err(Error::DimensionMismatch {
            context: "masks vs hidden neurons",
            expected: n_hidden,
            actual: masks.len(),
        });
    }
    if sample.n_frames() > masks.max_frames() {
        return Err(Error::DimensionMismatch {
            context: "sample frames vs mask length",
            expected: masks.max_frames(),
            actual: sample.n_frames(),
        });
    }
    let mut acc = vec![T::zero(); n_hidden];
    let mut current = vec![T::zero(); n_hidden];
    for (f, frame) in sample.frames().enumerate() {
        if frame.iter().all(|v| v.is_zero()) {
            continue;
        }
        projection.forward_into(frame, &mut current)?;
        for ((a, &c), mask) in acc.iter_mut().zip(&current).zip(masks.masks()) {
            if mask.included[f] {
                *a += c;
            }
        }
    }
    let outputs = acc.iter().map(|&a| tie_break.sign(a)).collect();
    Ok(HiddenActivation {
        accumulators: acc,
        outputs,
    })
}
