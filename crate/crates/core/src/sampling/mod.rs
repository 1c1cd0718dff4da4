//! Finite-shot emulation of the projective scheme and of the sequential
//! one-pair-at-a-time protocol.
//!
//! * [`shots`]: Bernoulli shot loops per measurement setting.
//! * [`estimate`]: moments and concurrence from tallies, with bootstrap CIs.
//! * [`sequential`]: MPS step operators and the abort-on-non-00 protocol.

pub mod estimate;
mod parallel;
pub mod sequential;
pub mod shots;

pub use estimate::{
    analytic_concurrence, estimate_concurrence, estimate_concurrence_with, fit_spectrum,
    moments_from_records, ConcurrenceEstimate, EstimateOptions, SpectrumFit,
};
pub use sequential::{
    build_sequential_machine, resource_comparison, run_sequential_protocol, ResourceComparison,
    ResourceReport, SequentialMachine, SettingCost, TOMOGRAPHY_SETTINGS,
};
pub use shots::{sample_projector, sample_projector_with, setting_probability, ShotRecord, CHUNK};
