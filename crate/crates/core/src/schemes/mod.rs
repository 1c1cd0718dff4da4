//! Measurement schemes built on maximally entangled states.
//!
//! * [`identities`]: residual checks of the MES transpose/trace identities,
//!   the two-copy antilinear identity and the realignment identities.
//! * [`family`]: the rank-1 projector vectors used for two-qubit moments.
//! * [`moments`]: permutation, projective, PPT and realignment moment paths.
//! * [`spectrum`]: power sums to spectrum, and concurrence from projections.

pub mod family;
pub mod identities;
pub mod moments;
pub mod spectrum;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use family::{build_projector_family, CycleConvention, FamilyVector, ProjectorFamily, ProjectorId};
pub use identities::{
    check_lemma1, check_realignment_identities, check_theorem1, MesResiduals,
    RealignmentResiduals, TwoCopyResiduals,
};
pub use moments::{
    moments_from_expectations, permutation_moment, permutation_moment_with, ppt_moment,
    projective_expectation, projective_moment, realignment_moment,
};
pub use spectrum::{concurrence_via_projections, moments_to_spectrum};

/// How a set of moments was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Spectral,
    Permutation,
    Projective,
    Sampled,
}

/// Which operator the moments are power sums of.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentTarget {
    /// `ρρ̃_u`
    Concurrence,
    /// `ρ^{T_B}`
    Ppt,
    /// `R(ρ)R(ρ)†`
    Realignment,
}

/// Moments `m_1..m_K`, with per-order gaps to an independent evaluation path
/// when one was computed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    values: Vec<f64>,
    provenance: Provenance,
    target: MomentTarget,
    path_gaps: Vec<f64>,
}

/// Spectra of `ρρ̃_u` and `RR†` are nonnegative, so their moments may dip
/// below zero only by rounding.
pub const MOMENT_FLOOR: f64 = -1e-9;

impl MomentSet {
    pub fn new(values: Vec<f64>, provenance: Provenance, target: MomentTarget) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let sampled = provenance == Provenance::Sampled;
        if !sampled && target != MomentTarget::Ppt && values.iter().any(|&v| v < MOMENT_FLOOR) {
            return Err(Error::InvalidArgument(format!("negative moment in {values:?}")));
        }
        Ok(Self { values, provenance, target, path_gaps: Vec::new() })
    }

    pub fn with_path_gaps(mut self, gaps: Vec<f64>) -> Self {
        self.path_gaps = gaps;
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `m_k`, one-based.
    pub fn get(&self, k: usize) -> Option<f64> {
        k.checked_sub(1).and_then(|i| self.values.get(i).copied())
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn target(&self) -> MomentTarget {
        self.target
    }

    pub fn path_gaps(&self) -> &[f64] {
        &self.path_gaps
    }

    pub fn max_path_gap(&self) -> f64 {
        self.path_gaps.iter().copied().fold(0.0, f64::max)
    }
}
