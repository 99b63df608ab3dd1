//! Behavioral simulator for a two-crossbar spatio-temporal learning system
//! built from multi-level nonvolatile synapses.
//!
//! A fixed random projection crossbar feeds sign neurons that integrate each
//! input over a neuron-specific subset of frames. A second, trainable crossbar
//! maps the hidden signs to class scores and is programmed online with
//! identical fixed-amplitude pulses.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64` or `f32`.

pub mod crossbar;
pub mod data;
pub mod device;
pub mod energy;
pub mod error;
pub mod learning;
pub mod oracle;
pub mod scalar;
pub mod seeds;
pub mod spatiotemporal;

pub use crossbar::{
    init_projection, init_readout, ColumnUpdate, DifferentialCrossbar, Direction,
    ProgrammingScheme, Projection, ProjectionInitSpec, ProjectionMode, ReadoutInit, ReadoutSpec,
    Snapshot,
};
pub use data::{Dataset, NoiseSpec, Orientation, SpikeRule, SyntheticSpec};
pub use device::{
    apply_pulse, apply_pulse_with, sample_imperfect, ConstantStep, DeviceParams, DeviceState,
    DispersionSpec, PulseKind, PulseOutcome, PulseSpec, Response, StepModel,
};
pub use energy::{EnergyLedger, EnergyReport, TechnologySpec};
pub use error::{Error, Result};
pub use learning::{
    accuracy, argmax, encode_samples, infer, run_training, train_readout, train_step, Checkpoint,
    ConvergenceTrace, Encoded, TrainConfig, TrainingOutcome,
};
pub use scalar::Scalar;
pub use seeds::derive_seed;
pub use spatiotemporal::{
    generate_masks, integrate_sample, FrameSequence, HiddenActivation, MaskSet, TieBreak,
    ValueMode, WindowMask,
};

pub type Crossbar = DifferentialCrossbar<f64>;
pub type Crossbar32 = DifferentialCrossbar<f32>;
pub type Device = DeviceState<f64>;
pub type Device32 = DeviceState<f32>;
pub type Params = DeviceParams<f64>;
pub type Params32 = DeviceParams<f32>;
pub type Sequence = FrameSequence<f64>;
pub type Sequence32 = FrameSequence<f32>;
pub type Data = Dataset<f64>;
pub type Data32 = Dataset<f32>;
