//! Ground-truth entanglement quantities from direct spectral computation.
//!
//! Spectra of `ρρ̃_u` are always obtained from the Hermitian matrix
//! `√ρ ρ̃_u √ρ`, which has the same eigenvalues.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schemes::{MomentSet, MomentTarget, Provenance};
use crate::states::{antilinear_transform, spin_flip, DensityMatrix, LocalUnitarySet};
use crate::tensor::linalg::clamp_psd;
use crate::tensor::{hermitian_eig, matrix_sqrt_psd, partial_transpose, realign, svd_singular_values};

/// Minimum eigenvalue of `ρ^{T_B}` still counted as PPT.
pub const PPT_TOL: f64 = 1e-10;
/// Trace norm of `R(ρ)` above `1 + CCNR_TOL` flags entanglement.
pub const CCNR_TOL: f64 = 1e-10;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SpectrumDiagnostics {
    /// Largest discarded imaginary part of a reconstructed root.
    pub max_imag: f64,
    /// Eigenvalues or roots that were negative and clamped to zero.
    pub clamped: usize,
    /// Trailing elementary symmetric polynomials set to zero as rounding noise.
    pub snapped: usize,
    /// Root-finder iterations (zero for direct eigensolves).
    pub iterations: usize,
}

/// Spectrum of `ρρ̃` with the derived concurrence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEstimate {
    /// Eigenvalues of `ρρ̃`, descending.
    pub mu: [f64; 4],
    /// Square roots of `mu`, descending.
    pub lambda: [f64; 4],
    pub concurrence: f64,
    pub diagnostics: SpectrumDiagnostics,
}

impl SpectrumEstimate {
    /// Sorts, takes square roots and applies `C = max(0, λ₁−λ₂−λ₃−λ₄)`.
    /// Entries of `mu` must already be nonnegative.
    pub fn from_mu(mut mu: [f64; 4], diagnostics: SpectrumDiagnostics) -> Self {
        mu.sort_by(|a, b| b.total_cmp(a));
        let lambda = mu.map(f64::sqrt);
        let concurrence = (lambda[0] - lambda[1] - lambda[2] - lambda[3]).max(0.0);
        Self { mu, lambda, concurrence, diagnostics }
    }
}

fn flip_spectrum(rho: &DensityMatrix, flipped: &crate::tensor::ComplexMatrix) -> Result<Vec<f64>> {
    let root = matrix_sqrt_psd(rho.matrix())?;
    let sandwich = root.matmul(flipped)?.matmul(&root)?;
    let mut values = hermitian_eig(&sandwich)?.values;
    let scale = values.first().copied().unwrap_or(0.0).abs();
    clamp_psd(&mut values, scale)?;
    Ok(values)
}

pub fn concurrence_wootters(rho: &DensityMatrix) -> Result<SpectrumEstimate> {
    rho.require_two_qubit()?;
    let raw = flip_spectrum(rho, &spin_flip(rho)?)?;
    let clamped = raw.iter().filter(|&&x| x == 0.0).count();
    let mu = [raw[0], raw[1], raw[2], raw[3]];
    Ok(SpectrumEstimate::from_mu(mu, SpectrumDiagnostics { clamped, ..Default::default() }))
}

/// `m_k = Σ_j μ_j^k` for `k = 1..=kmax` from the spectrum of `ρρ̃_u`.
pub fn spectral_moments(rho: &DensityMatrix, us: &LocalUnitarySet, kmax: usize) -> Result<MomentSet> {
    if kmax == 0 || kmax > 8 {
        return Err(Error::InvalidArgument(format!("kmax must be in 1..=8, got {kmax}")));
    }
    let mu = flip_spectrum(rho, &antilinear_transform(rho, us)?)?;
    let values = (1..=kmax as i32).map(|k| mu.iter().map(|x| x.powi(k)).sum()).collect();
    MomentSet::new(values, Provenance::Spectral, MomentTarget::Concurrence)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PptReport {
    /// Eigenvalues of the partial transpose, descending.
    pub eigenvalues: Vec<f64>,
    pub negativity: f64,
    pub is_ppt: bool,
}

pub fn negativity_ppt(rho: &DensityMatrix, cut: &str) -> Result<PptReport> {
    if rho.layout().len() != 2 {
        return Err(Error::InvalidLayout("PPT test needs a bipartite layout".into()));
    }
    let pt = partial_transpose(rho.matrix(), rho.layout(), cut)?;
    let eigenvalues = hermitian_eig(&pt)?.values;
    let negativity = eigenvalues.iter().filter(|&&x| x < 0.0).map(|x| -x).sum();
    let is_ppt = eigenvalues.last().is_none_or(|&x| x >= -PPT_TOL);
    Ok(PptReport { eigenvalues, negativity, is_ppt })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CcnrReport {
    pub singular_values: Vec<f64>,
    pub trace_norm: f64,
    pub is_entangled: bool,
}

pub fn ccnr(rho: &DensityMatrix) -> Result<CcnrReport> {
    let r = realign(rho.matrix(), rho.layout())?;
    let singular_values = svd_singular_values(&r)?;
    let trace_norm = singular_values.iter().sum::<f64>();
    Ok(CcnrReport { singular_values, trace_norm, is_entangled: trace_norm > 1.0 + CCNR_TOL })
}
