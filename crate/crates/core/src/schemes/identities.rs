//! Residual checks of the identities that let MES projections stand in for
//! transposition, conjugation and realignment.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::states::{mes, mes_twisted, DensityMatrix, LocalUnitarySet};
use crate::tensor::{
    apply_local_at, check_cap, permute_subsystems, realign, ComplexMatrix, Permutation,
    StateVector, SubsystemLayout,
};

/// Residuals of `(A⊗I)|𝒮⟩ = (I⊗Aᵀ)|𝒮⟩` and `trA = (∏dᵢ)⟨𝒮|(I⊗A)|𝒮⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MesResiduals {
    pub transpose: f64,
    pub trace: f64,
}

/// Residuals of `(ρ⊗ρ)|𝒮_u⟩ = (I⊗ρρ̃_u)|𝒮_u⟩` and
/// `tr(ρρ̃_u) = (∏dᵢ)⟨𝒮_u|ρ⊗ρ|𝒮_u⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoCopyResiduals {
    pub product: f64,
    pub trace: f64,
}

/// Residuals of `V₁(ρ⊗I)|S⟩|S⟩ = (I⊗R)|S⟩|S⟩` and the `V₂`, `R†` analogue.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealignmentResiduals {
    pub v1: f64,
    pub v2: f64,
}

/// Layout `(1, 1̄, 2, 2̄, …)` of a system and its copy; `|𝒮⟩` built as a
/// Kronecker product of per-pair vectors is naturally laid out this way.
fn doubled(dims: &[usize]) -> Result<(SubsystemLayout, Vec<usize>, Vec<usize>)> {
    let layout = SubsystemLayout::from_dims(&dims.iter().flat_map(|&d| [d, d]).collect::<Vec<_>>())?;
    let originals = (0..dims.len()).map(|i| 2 * i).collect();
    let copies = (0..dims.len()).map(|i| 2 * i + 1).collect();
    Ok((layout, originals, copies))
}

fn product_of(vectors: impl IntoIterator<Item = Result<StateVector>>) -> Result<StateVector> {
    let mut out = StateVector::new(vec![C64::new(1.0, 0.0)]);
    for v in vectors {
        out = out.kron(&v?);
    }
    Ok(out)
}

pub fn check_lemma1(a: &ComplexMatrix, layout: &SubsystemLayout) -> Result<MesResiduals> {
    let total = layout.total_dim();
    if a.rows() != total || a.cols() != total {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} operator on a layout of dimension {total}",
            a.rows(),
            a.cols()
        )));
    }
    check_cap(total.checked_mul(total))?;
    let dims = layout.dims();
    let (big, originals, copies) = doubled(&dims)?;
    let s = product_of(dims.iter().map(|&d| mes(d)))?;

    let lhs = apply_local_at(&s, &big, &originals, a)?;
    let rhs = apply_local_at(&s, &big, &copies, &a.transpose())?;
    let on_copy = apply_local_at(&s, &big, &copies, a)?;
    let trace = (a.trace() - s.inner(&on_copy) * total as f64).norm();
    Ok(MesResiduals { transpose: lhs.distance(&rhs), trace })
}

pub fn check_theorem1(rho: &DensityMatrix, us: &LocalUnitarySet) -> Result<TwoCopyResiduals> {
    us.check_layout(rho.layout())?;
    let total = rho.dim();
    check_cap(total.checked_mul(total))?;
    let dims = rho.layout().dims();
    let (big, originals, copies) = doubled(&dims)?;
    let s = product_of(dims.iter().zip(us.unitaries()).map(|(&d, u)| mes_twisted(d, u)))?;

    let two_copies = apply_local_at(&s, &big, &originals, rho.matrix())?;
    let two_copies = apply_local_at(&two_copies, &big, &copies, rho.matrix())?;
    let product = rho.matrix().matmul(&crate::states::antilinear_transform(rho, us)?)?;
    let rhs = apply_local_at(&s, &big, &copies, &product)?;
    let trace = (product.trace() - s.inner(&two_copies) * total as f64).norm();
    Ok(TwoCopyResiduals { product: two_copies.distance(&rhs), trace })
}

/// Embeds a `d_a × d_b` operator into `d × d`, `d = max(d_a, d_b)`.
fn pad_square(rho: &DensityMatrix) -> Result<(ComplexMatrix, usize)> {
    let dims = rho.layout().dims();
    let (da, db) = (dims[0], dims[1]);
    let d = da.max(db);
    if da == db {
        return Ok((rho.matrix().clone(), d));
    }
    let mut out = ComplexMatrix::zeros(d * d, d * d);
    for i in 0..da {
        for k in 0..db {
            for j in 0..da {
                for l in 0..db {
                    out[(i * d + k, j * d + l)] = rho.matrix()[(i * db + k, j * db + l)];
                }
            }
        }
    }
    Ok((out, d))
}

pub fn check_realignment_identities(rho: &DensityMatrix) -> Result<RealignmentResiduals> {
    if rho.layout().len() != 2 {
        return Err(Error::InvalidLayout("realignment needs a bipartite state".into()));
    }
    let (sigma, d) = pad_square(rho)?;
    check_cap((d * d).checked_pow(2).and_then(|n| n.checked_mul(d * d)))?;
    // Positions 0, 1, 2, 3 hold 1, 1̄, 2, 2̄.
    let big = SubsystemLayout::from_dims(&[d; 4])?;
    let mut s = StateVector::zeros(d * d);
    for i in 0..d {
        s.amplitudes_mut()[i * d + i] = C64::new(1.0, 0.0);
    }
    let ss = s.kron(&s);
    let x = apply_local_at(&ss, &big, &[0, 2], &sigma)?;

    let v12 = Permutation::swap(4, 0, 2)?;
    let v1 = Permutation::swap(4, 1, 3)?.after(&Permutation::swap(4, 2, 3)?.after(&v12)?)?;
    let v2 = Permutation::swap(4, 1, 3)?.after(&Permutation::swap(4, 0, 1)?.after(&v12)?)?;

    let r = realign(&sigma, &SubsystemLayout::from_dims(&[d, d])?)?;
    let lhs1 = permute_subsystems(&x, &big, &v1)?;
    let rhs1 = apply_local_at(&ss, &big, &[1, 3], &r)?;
    let lhs2 = permute_subsystems(&x, &big, &v2)?;
    let rhs2 = apply_local_at(&ss, &big, &[1, 3], &r.adjoint())?;
    Ok(RealignmentResiduals { v1: lhs1.distance(&rhs1), v2: lhs2.distance(&rhs2) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{ginibre, random_unitary, seeded};
    use crate::states::{bell, random_density, BellState};

    #[test]
    fn identity_operator_has_zero_residuals() {
        let layout = SubsystemLayout::from_dims(&[2, 3]).unwrap();
        let r = check_lemma1(&ComplexMatrix::identity(6), &layout).unwrap();
        assert!(r.transpose < 1e-15 && r.trace < 1e-14);
    }

    #[test]
    fn random_operators_satisfy_transpose_trick() {
        for (seed, dims) in [(1, vec![2]), (2, vec![3]), (3, vec![2, 2]), (4, vec![3, 2])] {
            let mut rng = seeded(seed);
            let n: usize = dims.iter().product();
            let a = ginibre(&mut rng, n, n);
            let r = check_lemma1(&a, &SubsystemLayout::from_dims(&dims).unwrap()).unwrap();
            assert!(r.transpose < 1e-13 && r.trace < 1e-13, "{dims:?}: {r:?}");
        }
    }

    #[test]
    fn two_copy_identity_fixtures() {
        let mixed = DensityMatrix::two_qubit(ComplexMatrix::identity(4).scale_real(0.25)).unwrap();
        let sy = LocalUnitarySet::sigma_y(2);
        for rho in [mixed, bell(BellState::PhiPlus)] {
            let r = check_theorem1(&rho, &sy).unwrap();
            assert!(r.product < 1e-14 && r.trace < 1e-14, "{r:?}");
        }
    }

    #[test]
    fn two_copy_identity_random_frames() {
        let mut rng = seeded(9);
        for seed in 0..10 {
            let rho = random_density(seed, &[2, 3], 6).unwrap();
            let us = LocalUnitarySet::new(vec![random_unitary(&mut rng, 2), random_unitary(&mut rng, 3)])
                .unwrap();
            let r = check_theorem1(&rho, &us).unwrap();
            assert!(r.product < 1e-13 && r.trace < 1e-13, "{r:?}");
        }
    }

    #[test]
    fn realignment_identities_hold() {
        let mixed = DensityMatrix::two_qubit(ComplexMatrix::identity(4).scale_real(0.25)).unwrap();
        let r = check_realignment_identities(&mixed).unwrap();
        assert!(r.v1 < 1e-15 && r.v2 < 1e-15);
        for (seed, dims) in [(1, [2, 2]), (2, [3, 3]), (3, [2, 3])] {
            let rho = random_density(seed, &dims, dims[0] * dims[1]).unwrap();
            let r = check_realignment_identities(&rho).unwrap();
            assert!(r.v1 < 1e-13 && r.v2 < 1e-13, "{dims:?}: {r:?}");
        }
    }
}
