//! Moment evaluation paths. All multi-copy expectations are matrix-free:
//! party vectors are interleaved into copy order `a₁b₁a₂b₂…`, `⊗ρ` is applied
//! pairwise and the result permuted or projected.

use num_complex::Complex64 as C64;

use super::family::{build_projector_family, CycleConvention, FamilyVector, ProjectorId};
use super::{MomentSet, MomentTarget, Provenance};
use crate::error::{Error, Result};
use crate::states::{mes_twisted, DensityMatrix, LocalUnitarySet};
use crate::tensor::{
    apply_local_at, check_cap, partial_transpose, permute_subsystems, permuted_product_trace,
    realign, ComplexMatrix, Permutation, StateVector, SubsystemLayout,
};

fn bipartite_dims(rho: &DensityMatrix) -> Result<(usize, usize)> {
    let dims = rho.layout().dims();
    if dims.len() != 2 {
        return Err(Error::InvalidLayout(format!("expected a bipartite state, got dims {dims:?}")));
    }
    Ok((dims[0], dims[1]))
}

/// Interleaves `|v_a⟩ ∈ (C^{d_a})^{⊗n}` and `|v_b⟩ ∈ (C^{d_b})^{⊗n}` into
/// copy order `a₁b₁…a_nb_n`.
fn interleave(
    va: &StateVector,
    vb: &StateVector,
    copies: usize,
    (da, db): (usize, usize),
) -> Result<(StateVector, SubsystemLayout)> {
    let dims: Vec<usize> = std::iter::repeat_n(da, copies).chain(std::iter::repeat_n(db, copies)).collect();
    let layout = SubsystemLayout::from_dims(&dims)?;
    check_cap(Some(layout.total_dim()))?;
    if va.dim() * vb.dim() != layout.total_dim() {
        return Err(Error::DimensionMismatch(format!(
            "party vectors of dims {} and {} for {copies} copies",
            va.dim(),
            vb.dim()
        )));
    }
    let mapping = (0..copies).map(|c| 2 * c).chain((0..copies).map(|c| 2 * c + 1)).collect();
    let perm = Permutation::new(mapping)?;
    let out_layout = perm.apply_to_layout(&layout)?;
    Ok((permute_subsystems(&va.kron(vb), &layout, &perm)?, out_layout))
}

/// `ϱ_n|v⟩` with `ρ` on every pair `(2c, 2c+1)`.
fn apply_copies(rho: &DensityMatrix, v: &StateVector, layout: &SubsystemLayout) -> Result<StateVector> {
    let mut out = v.clone();
    for c in 0..layout.len() / 2 {
        out = apply_local_at(&out, layout, &[2 * c, 2 * c + 1], rho.matrix())?;
    }
    Ok(out)
}

/// Lifts a permutation of copy slots to the interleaved layout, moving both
/// parties' slots together.
fn lift_to_pairs(p: &Permutation) -> Result<Permutation> {
    let mapping = p.mapping().iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
    Permutation::new(mapping)
}

/// `⟨w_a w_b|ϱ_n|v_a v_b⟩` over `n = copies` copies of ρ.
pub fn two_party_element(
    rho: &DensityMatrix,
    copies: usize,
    bra: (&StateVector, &StateVector),
    ket: (&StateVector, &StateVector),
) -> Result<C64> {
    let dims = bipartite_dims(rho)?;
    let (k, layout) = interleave(ket.0, ket.1, copies, dims)?;
    let (b, _) = interleave(bra.0, bra.1, copies, dims)?;
    Ok(b.inner(&apply_copies(rho, &k, &layout)?))
}

/// `⟨P⊗P⟩` on `ϱ_{2k}` for the unnormalized single-party vector of `id`.
pub fn projective_expectation(rho: &DensityMatrix, id: ProjectorId) -> Result<f64> {
    rho.require_two_qubit()?;
    let v = id.vector()?;
    Ok(two_party_element(rho, 2 * id.k(), (&v, &v), (&v, &v))?.re)
}

/// Runs the recursion `m₁ = 4⟨P₀⊗P₀⟩`,
/// `m_k = ¼m₁m_{k−1} + 4^k(⟨P₁⊗P₁⟩ − ⟨P₂⊗P₂⟩)`. `p0` is `⟨P₀⊗P₀⟩` and
/// `pairs[j]` holds `(⟨P₁⊗P₁⟩, ⟨P₂⊗P₂⟩)` for `k = j + 2`.
pub fn moments_from_expectations(p0: f64, pairs: &[(f64, f64)]) -> Vec<f64> {
    let mut m = vec![4.0 * p0];
    for (j, &(p1, p2)) in pairs.iter().enumerate() {
        let k = j as i32 + 2;
        let prev = m[m.len() - 1];
        m.push(0.25 * m[0] * prev + 4f64.powi(k) * (p1 - p2));
    }
    m
}

pub fn projective_moment(rho: &DensityMatrix, k: usize) -> Result<MomentSet> {
    rho.require_two_qubit()?;
    if !(1..=4).contains(&k) {
        return Err(Error::InvalidArgument(format!("projective moments need 1 ≤ k ≤ 4, got {k}")));
    }
    let p0 = projective_expectation(rho, ProjectorId::P0)?;
    let pairs = (2..=k)
        .map(|j| {
            Ok((
                projective_expectation(rho, ProjectorId::P1(j))?,
                projective_expectation(rho, ProjectorId::P2(j))?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    MomentSet::new(moments_from_expectations(p0, &pairs), Provenance::Projective, MomentTarget::Concurrence)
}

/// `⟨φ_i φ_j|ϱ_{2k}|φ_u φ_v⟩` for family vectors, a-side first.
pub fn family_element(
    rho: &DensityMatrix,
    k: usize,
    [i, j, u, v]: [FamilyVector; 4],
) -> Result<C64> {
    rho.require_two_qubit()?;
    let fam = build_projector_family(k)?;
    two_party_element(rho, 2 * k, (fam.vector(i), fam.vector(j)), (fam.vector(u), fam.vector(v)))
}

pub fn permutation_moment(rho: &DensityMatrix, us: &LocalUnitarySet, k: usize) -> Result<MomentSet> {
    permutation_moment_with(rho, us, k, CycleConvention::FROZEN)
}

/// `m_j = (d_a d_b)^j ⟨χ|V ϱ_{2j}|χ⟩` for `j = 1..k`, where `|χ⟩` is the
/// interleaving of twisted MES products on each party and `V` cycles both
/// parties' even slots.
pub fn permutation_moment_with(
    rho: &DensityMatrix,
    us: &LocalUnitarySet,
    k: usize,
    convention: CycleConvention,
) -> Result<MomentSet> {
    let (da, db) = bipartite_dims(rho)?;
    us.check_layout(rho.layout())?;
    if !(1..=4).contains(&k) {
        return Err(Error::InvalidArgument(format!("permutation moments need 1 ≤ k ≤ 4, got {k}")));
    }
    let sa = mes_twisted(da, &us.unitaries()[0])?;
    let sb = mes_twisted(db, &us.unitaries()[1])?;
    let mut values = Vec::with_capacity(k);
    let (mut chi_a, mut chi_b) = (sa.clone(), sb.clone());
    for j in 1..=k {
        if j > 1 {
            chi_a = chi_a.kron(&sa);
            chi_b = chi_b.kron(&sb);
        }
        let slots = 2 * j;
        let (chi, layout) = interleave(&chi_a, &chi_b, slots, (da, db))?;
        let x = apply_copies(rho, &chi, &layout)?;
        let vx = permute_subsystems(&x, &layout, &lift_to_pairs(&convention.cycle(slots)?)?)?;
        values.push(((da * db) as f64).powi(j as i32) * chi.inner(&vx).re);
    }
    MomentSet::new(values, Provenance::Permutation, MomentTarget::Concurrence)
}

fn power_traces(m: &ComplexMatrix, k: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(k);
    let mut p = m.clone();
    for j in 1..=k {
        if j > 1 {
            p = p.matmul(m)?;
        }
        out.push(p.trace().re);
    }
    Ok(out)
}

/// `tr((ρ^{T_B})^j)` for `j = 1..k` from the permutation network (forward
/// cycle over the A copies, backward over the B copies). The direct
/// partial-transpose powers are recorded as path gaps.
pub fn ppt_moment(rho: &DensityMatrix, k: usize) -> Result<MomentSet> {
    let (da, db) = bipartite_dims(rho)?;
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let cut = rho.layout().labels().nth(1).expect("bipartite").to_owned();
    let direct = power_traces(&partial_transpose(rho.matrix(), rho.layout(), &cut)?, k)?;

    let mut values = Vec::with_capacity(k);
    for j in 1..=k {
        let layout = SubsystemLayout::from_dims(&[da, db].repeat(j))?;
        let a_slots: Vec<usize> = (0..j).map(|c| 2 * c).collect();
        let b_slots: Vec<usize> = (0..j).rev().map(|c| 2 * c + 1).collect();
        let perm = Permutation::cycle(2 * j, &a_slots)?.after(&Permutation::cycle(2 * j, &b_slots)?)?;
        let pairs: Vec<[usize; 2]> = (0..j).map(|c| [2 * c, 2 * c + 1]).collect();
        let factors: Vec<(&[usize], &ComplexMatrix)> =
            pairs.iter().map(|p| (&p[..], rho.matrix())).collect();
        values.push(permuted_product_trace(&perm, &layout, &factors)?.re);
    }
    let gaps = values.iter().zip(&direct).map(|(a, b)| (a - b).abs()).collect();
    Ok(MomentSet::new(values, Provenance::Permutation, MomentTarget::Ppt)?.with_path_gaps(gaps))
}

/// `tr[(RR†)^j]` for `j = 1..k` from the swap network on `2j` copies
/// (`a_{2i−1}↔a_{2i}`, `b_{2i−1}↔b_{2i−2}` with `b₀ = b_{2j}`). The direct
/// realigned-matrix powers are recorded as path gaps.
pub fn realignment_moment(rho: &DensityMatrix, k: usize) -> Result<MomentSet> {
    let (da, db) = bipartite_dims(rho)?;
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let r = realign(rho.matrix(), rho.layout())?;
    let direct = power_traces(&r.matmul(&r.adjoint())?, k)?;

    let mut values = Vec::with_capacity(k);
    for j in 1..=k {
        let slots = 2 * j;
        let n = 2 * slots;
        let layout = SubsystemLayout::from_dims(&[da, db].repeat(slots))?;
        let mut perm = Permutation::identity(n);
        for i in 0..j {
            let (c1, c2) = (2 * i, 2 * i + 1);
            let c0 = (2 * i + slots - 1) % slots;
            perm = Permutation::swap(n, 2 * c1, 2 * c2)?.after(&perm)?;
            perm = Permutation::swap(n, 2 * c1 + 1, 2 * c0 + 1)?.after(&perm)?;
        }
        let pairs: Vec<[usize; 2]> = (0..slots).map(|c| [2 * c, 2 * c + 1]).collect();
        let factors: Vec<(&[usize], &ComplexMatrix)> =
            pairs.iter().map(|p| (&p[..], rho.matrix())).collect();
        values.push(permuted_product_trace(&perm, &layout, &factors)?.re);
    }
    let gaps = values.iter().zip(&direct).map(|(a, b)| (a - b).abs()).collect();
    Ok(MomentSet::new(values, Provenance::Permutation, MomentTarget::Realignment)?.with_path_gaps(gaps))
}
