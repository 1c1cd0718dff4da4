//! Power sums to spectrum via Newton's identities and simultaneous root
//! iteration.

use num_complex::Complex64 as C64;

use super::moments::projective_moment;
use super::{MomentSet, MomentTarget};
use crate::error::{Error, Result};
use crate::oracle::{SpectrumDiagnostics, SpectrumEstimate};
use crate::states::DensityMatrix;

pub const MAX_ITERATIONS: usize = 500;
pub const CONVERGENCE: f64 = 1e-13;
/// Imaginary parts up to this size are rounding and dropped silently.
pub const IMAG_DISCARD: f64 = 1e-6;
/// Imaginary parts beyond this mean the moments fit no real spectrum.
pub const IMAG_REJECT: f64 = 1e-4;
/// Multiple of machine epsilon, relative to the size of the terms that cancel
/// in `e_j`, below which a trailing `e_j` is treated as exactly zero.
const SNAP_FACTOR: f64 = 256.0;

/// Elementary symmetric polynomials `e₁..e₄` of the spectrum, each paired with
/// the magnitude of the terms whose cancellation produced it.
fn elementary(m: [f64; 4]) -> [(f64, f64); 4] {
    let [m1, m2, m3, m4] = m;
    let e2 = (m1 * m1 - m2) / 2.0;
    let s2 = (m1 * m1 + m2.abs()) / 2.0;
    let e3 = (m1.powi(3) - 3.0 * m1 * m2 + 2.0 * m3) / 6.0;
    let s3 = (m1.abs().powi(3) + 3.0 * (m1 * m2).abs() + 2.0 * m3.abs()) / 6.0;
    let e4 = (m1.powi(4) - 6.0 * m1 * m1 * m2 + 3.0 * m2 * m2 + 8.0 * m1 * m3 - 6.0 * m4) / 24.0;
    let s4 = (m1.powi(4) + 6.0 * (m1 * m1 * m2).abs() + 3.0 * m2 * m2 + 8.0 * (m1 * m3).abs() + 6.0 * m4.abs())
        / 24.0;
    [(m1, m1.abs()), (e2, s2), (e3, s3), (e4, s4)]
}

fn eval(coeffs: &[f64], z: C64) -> C64 {
    // Monic: z^q + c_{q−1} z^{q−1} + … + c₀, coeffs listed from c_{q−1} down.
    coeffs.iter().fold(C64::new(1.0, 0.0), |acc, &c| acc * z + c)
}

/// Durand–Kerner iteration for a monic real polynomial.
pub fn durand_kerner(coeffs: &[f64]) -> Result<(Vec<C64>, usize)> {
    let q = coeffs.len();
    if q == 0 {
        return Ok((Vec::new(), 0));
    }
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite);
    }
    let radius = 1.0 + coeffs.iter().fold(0.0f64, |a, c| a.max(c.abs()));
    let mut z: Vec<C64> = (0..q)
        .map(|j| C64::from_polar(radius, 0.4 + std::f64::consts::TAU * j as f64 / q as f64))
        .collect();
    for it in 1..=MAX_ITERATIONS {
        let mut step = 0.0f64;
        for j in 0..q {
            let denom = (0..q).filter(|&l| l != j).fold(C64::new(1.0, 0.0), |acc, l| acc * (z[j] - z[l]));
            if denom == C64::new(0.0, 0.0) {
                z[j] += C64::new(1e-12, 1e-12);
                step = f64::INFINITY;
                continue;
            }
            let delta = eval(coeffs, z[j]) / denom;
            z[j] -= delta;
            step = step.max(delta.norm() / z[j].norm().max(1.0));
        }
        if step <= CONVERGENCE {
            return Ok((z, it));
        }
    }
    // Clustered roots stall at the rounding floor rather than converging to
    // the tolerance; the caller judges them by their imaginary parts.
    Ok((z, MAX_ITERATIONS))
}

/// Roots of `x⁴ − e₁x³ + e₂x² − e₃x + e₄` for the given power sums, with
/// trailing coefficients at the rounding floor set to zero and their roots
/// deflated exactly.
pub fn roots_from_moments(m: [f64; 4]) -> Result<(Vec<C64>, SpectrumDiagnostics)> {
    let e = elementary(m);
    let mut snapped = 0;
    for j in (1..4).rev() {
        let (value, scale) = e[j];
        if value.abs() <= SNAP_FACTOR * f64::EPSILON * scale {
            snapped += 1;
        } else {
            break;
        }
    }
    let live = 4 - snapped;
    // Coefficients of the deflated monic polynomial of degree `live`.
    let coeffs: Vec<f64> =
        (0..live).map(|j| if j % 2 == 0 { -e[j].0 } else { e[j].0 }).collect();
    let (mut roots, iterations) = durand_kerner(&coeffs)?;
    roots.extend(std::iter::repeat_n(C64::new(0.0, 0.0), snapped));
    Ok((roots, SpectrumDiagnostics { snapped, iterations, ..Default::default() }))
}

pub fn moments_to_spectrum(m: &MomentSet) -> Result<SpectrumEstimate> {
    if m.target() != MomentTarget::Concurrence {
        return Err(Error::InvalidArgument(format!("moments of {:?} do not determine ρρ̃", m.target())));
    }
    let values: [f64; 4] = m.values().try_into().map_err(|_| {
        Error::InvalidArgument(format!("exactly four moments needed, got {}", m.values().len()))
    })?;
    let (roots, mut diag) = roots_from_moments(values)?;
    diag.max_imag = roots.iter().fold(0.0f64, |a, r| a.max(r.im.abs()));
    if diag.max_imag > IMAG_REJECT {
        return Err(Error::InconsistentMoments(diag.max_imag));
    }
    let mut mu = [0.0; 4];
    for (slot, r) in mu.iter_mut().zip(&roots) {
        if r.re < 0.0 {
            diag.clamped += 1;
        }
        *slot = r.re.max(0.0);
    }
    Ok(SpectrumEstimate::from_mu(mu, diag))
}

pub fn concurrence_via_projections(rho: &DensityMatrix) -> Result<SpectrumEstimate> {
    moments_to_spectrum(&projective_moment(rho, 4)?)
}
