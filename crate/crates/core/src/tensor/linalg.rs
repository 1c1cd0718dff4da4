//! Hermitian eigensolver and the decompositions derived from it.
//!
//! Everything here goes through one cyclic complex Jacobi solver. The
//! matrices in this crate stay small (at most a few hundred rows), where the
//! O(n³) sweep cost is irrelevant and Jacobi's accuracy on small eigenvalues
//! is worth having.

use num_complex::Complex64 as C64;

use super::ComplexMatrix;
use crate::error::{Error, Result};

/// Largest tolerated `max |M − M†|` for input to the eigensolver.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Off-diagonal Frobenius norm, relative to `‖M‖_F`, at which Jacobi stops.
pub const JACOBI_TOL: f64 = 1e-14;
const MAX_SWEEPS: usize = 100;

/// Negative eigenvalues above this are rounding noise and get clamped to 0.
pub const PSD_CLAMP: f64 = -1e-10;
/// Negative eigenvalues below this mean the input was not PSD.
pub const PSD_REJECT: f64 = -1e-8;

#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Descending.
    pub values: Vec<f64>,
    /// Column `j` is the eigenvector of `values[j]`.
    pub vectors: ComplexMatrix,
}

pub fn hermitian_eig(m: &ComplexMatrix) -> Result<HermitianEigen> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch("eigendecomposition of a non-square matrix".into()));
    }
    let defect = m.hermiticity_defect();
    if defect > HERMITIAN_TOL * m.max_abs().max(1.0) {
        return Err(Error::NotHermitian(defect));
    }
    let n = m.rows();
    // Work on the exactly Hermitian part.
    let mut a = m.add(&m.adjoint())?.scale_real(0.5);
    for i in 0..n {
        a[(i, i)] = C64::new(a[(i, i)].re, 0.0);
    }
    let mut v = ComplexMatrix::identity(n);
    let norm = a.frobenius_norm();

    if norm > 0.0 {
        let mut previous = f64::INFINITY;
        let mut converged = false;
        for _ in 0..MAX_SWEEPS {
            let off = off_diagonal_norm(&a);
            // Stop at the target, or once rounding noise stops shrinking.
            if off <= JACOBI_TOL * norm || (off <= 1e-12 * norm && off > 0.5 * previous) {
                converged = true;
                break;
            }
            previous = off;
            for p in 0..n {
                for q in p + 1..n {
                    rotate(&mut a, &mut v, p, q);
                }
            }
        }
        if !converged && off_diagonal_norm(&a) > 1e-10 * norm {
            return Err(Error::NoConvergence(MAX_SWEEPS));
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        for r in 0..n {
            vectors[(r, col)] = v[(r, i)];
        }
    }
    Ok(HermitianEigen { values, vectors })
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for r in 0..n {
        for c in 0..n {
            if r != c {
                s += a[(r, c)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// One Jacobi rotation zeroing `a[p][q]`. The unitary is a phase fix
/// `diag(1, e^{−iφ})` followed by a real plane rotation.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let magnitude = apq.norm();
    if magnitude == 0.0 {
        return;
    }
    let phase = apq / magnitude;
    let theta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * magnitude);
    let t = if theta == 0.0 {
        1.0
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let g00 = C64::new(c, 0.0);
    let g01 = C64::new(s, 0.0);
    let g10 = -phase.conj() * s;
    let g11 = phase.conj() * c;

    let n = a.rows();
    for r in 0..n {
        let (x, y) = (a[(r, p)], a[(r, q)]);
        a[(r, p)] = x * g00 + y * g10;
        a[(r, q)] = x * g01 + y * g11;
    }
    for r in 0..n {
        let (x, y) = (a[(p, r)], a[(q, r)]);
        a[(p, r)] = g00.conj() * x + g10.conj() * y;
        a[(q, r)] = g01.conj() * x + g11.conj() * y;
    }
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
    for r in 0..n {
        let (x, y) = (v[(r, p)], v[(r, q)]);
        v[(r, p)] = x * g00 + y * g10;
        v[(r, q)] = x * g01 + y * g11;
    }
}

/// Rebuilds `V f(Λ) V†`.
pub fn spectral_function(eig: &HermitianEigen, f: impl Fn(f64) -> f64) -> ComplexMatrix {
    let n = eig.values.len();
    let mut out = ComplexMatrix::zeros(n, n);
    for (j, &lambda) in eig.values.iter().enumerate() {
        let w = f(lambda);
        if w == 0.0 {
            continue;
        }
        for r in 0..n {
            let vr = eig.vectors[(r, j)] * w;
            for c in 0..n {
                out[(r, c)] += vr * eig.vectors[(c, j)].conj();
            }
        }
    }
    out
}

/// Clamps rounding-level negative eigenvalues; rejects genuinely negative ones.
pub(crate) fn clamp_psd(values: &mut [f64], scale: f64) -> Result<()> {
    let s = scale.max(1.0);
    for v in values.iter_mut() {
        if *v < PSD_REJECT * s {
            return Err(Error::NotPsd(*v));
        }
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    Ok(())
}

pub fn matrix_sqrt_psd(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let mut eig = hermitian_eig(m)?;
    let scale = eig.values.first().copied().unwrap_or(0.0).abs();
    clamp_psd(&mut eig.values, scale)?;
    Ok(spectral_function(&eig, f64::sqrt))
}

/// Descending singular values, `min(rows, cols)` of them, by one-sided
/// Jacobi orthogonalisation of the columns. Small singular values stay
/// accurate to `ε·σ_max` absolutely, which a Gram-matrix square root loses.
pub fn svd_singular_values(m: &ComplexMatrix) -> Result<Vec<f64>> {
    let tall = if m.rows() >= m.cols() { m.clone() } else { m.adjoint() };
    let (rows, cols) = (tall.rows(), tall.cols());
    let mut columns: Vec<Vec<C64>> =
        (0..cols).map(|c| (0..rows).map(|r| tall[(r, c)]).collect()).collect();
    let norm2 = |v: &[C64]| v.iter().map(C64::norm_sqr).sum::<f64>();

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha = norm2(&columns[p]);
                let beta = norm2(&columns[q]);
                let gamma: C64 = columns[p].iter().zip(&columns[q]).map(|(a, b)| a.conj() * b).sum();
                let g = gamma.norm();
                if g <= f64::EPSILON * (alpha * beta).sqrt() || g == 0.0 {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (left, right) = columns.split_at_mut(q);
                for (x, y) in left[p].iter_mut().zip(right[0].iter_mut()) {
                    let (a, b) = (*x, *y * phase.conj());
                    *x = a * c - b * s;
                    *y = a * s + b * c;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence(MAX_SWEEPS));
    }
    let mut values: Vec<f64> = columns.iter().map(|c| norm2(c).sqrt()).collect();
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

/// Orthonormal basis (as columns) of the column space of `m`, from the
/// eigenvectors of `M M†` whose eigenvalue exceeds `rel_tol · λ_max`.
pub fn column_space_basis(m: &ComplexMatrix, rel_tol: f64) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(&m.matmul(&m.adjoint())?)?;
    let top = eig.values.first().copied().unwrap_or(0.0);
    let rank = eig.values.iter().take_while(|&&x| top > 0.0 && x > rel_tol * top).count();
    let mut basis = ComplexMatrix::zeros(m.rows(), rank);
    for c in 0..rank {
        for r in 0..m.rows() {
            basis[(r, c)] = eig.vectors[(r, c)];
        }
    }
    Ok(basis)
}
