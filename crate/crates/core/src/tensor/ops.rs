use std::sync::atomic::{AtomicUsize, Ordering};

use num_complex::Complex64 as C64;

use super::{ComplexMatrix, Permutation, StateVector, SubsystemLayout};
use crate::error::{Error, Result};

/// Default cap on the number of entries of any dense matrix (2²⁰).
pub const DEFAULT_DENSE_CAP: usize = 1 << 20;

static DENSE_CAP: AtomicUsize = AtomicUsize::new(DEFAULT_DENSE_CAP);

/// Current cap on dense entries (matrices) and on matrix-free sweep lengths.
pub fn dense_cap() -> usize {
    DENSE_CAP.load(Ordering::Relaxed)
}

/// Process-wide override, set once at startup by front ends.
pub fn set_dense_cap(cap: usize) {
    DENSE_CAP.store(cap.max(1), Ordering::Relaxed);
}

pub(crate) fn check_cap(requested: Option<usize>) -> Result<usize> {
    let cap = dense_cap();
    match requested {
        Some(n) if n <= cap => Ok(n),
        Some(n) => Err(Error::DimensionCap { requested: n, cap }),
        None => Err(Error::DimensionCap { requested: usize::MAX, cap }),
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let rows = a.rows().checked_mul(b.rows());
    let cols = a.cols().checked_mul(b.cols());
    let (rows, cols) = match (rows, cols) {
        (Some(r), Some(c)) => (r, c),
        _ => return Err(Error::DimensionCap { requested: usize::MAX, cap: dense_cap() }),
    };
    check_cap(rows.checked_mul(cols))?;
    let mut out = ComplexMatrix::zeros(rows, cols);
    for ar in 0..a.rows() {
        for ac in 0..a.cols() {
            let x = a[(ar, ac)];
            if x == C64::new(0.0, 0.0) {
                continue;
            }
            for br in 0..b.rows() {
                for bc in 0..b.cols() {
                    out[(ar * b.rows() + br, ac * b.cols() + bc)] = x * b[(br, bc)];
                }
            }
        }
    }
    Ok(out)
}

/// Kronecker product of a list, left to right.
pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a ComplexMatrix>) -> Result<ComplexMatrix> {
    let mut out = ComplexMatrix::identity(1);
    for f in factors {
        out = kron(&out, f)?;
    }
    Ok(out)
}

/// Moves the amplitude at multi-index `(i₁..i_n)` to the multi-index in which
/// digit `i_j` sits at position `p[j]`. The output is laid out according to
/// `p.apply_to_layout(layout)`.
pub fn permute_subsystems(
    v: &StateVector,
    layout: &SubsystemLayout,
    p: &Permutation,
) -> Result<StateVector> {
    layout.check_dim(v.dim())?;
    let out_layout = p.apply_to_layout(layout)?;
    let out_strides = out_layout.strides();
    let dims = layout.dims();
    let n = dims.len();
    let moved: Vec<usize> = (0..n).map(|j| out_strides[p.mapping()[j]]).collect();

    let mut out = vec![C64::new(0.0, 0.0); v.dim()];
    let mut digits = vec![0usize; n];
    let mut target = 0usize;
    for &amp in v.amplitudes() {
        out[target] = amp;
        for pos in (0..n).rev() {
            digits[pos] += 1;
            target += moved[pos];
            if digits[pos] < dims[pos] {
                break;
            }
            target -= moved[pos] * dims[pos];
            digits[pos] = 0;
        }
    }
    Ok(StateVector::new(out))
}

/// Offsets of every combination of digits on `positions`, row-major in the
/// order the positions are listed.
fn offsets(dims: &[usize], strides: &[usize], positions: &[usize]) -> Vec<usize> {
    let mut out = vec![0usize];
    for &p in positions {
        let mut next = Vec::with_capacity(out.len() * dims[p]);
        for &base in &out {
            for d in 0..dims[p] {
                next.push(base + d * strides[p]);
            }
        }
        out = next;
    }
    out
}

/// Applies `m ⊗ I` where `m` acts on the listed subsystems (row-major in the
/// listed order) without building the full operator.
pub fn apply_local_operator(
    v: &StateVector,
    layout: &SubsystemLayout,
    targets: &[&str],
    m: &ComplexMatrix,
) -> Result<StateVector> {
    let positions = layout.positions(targets)?;
    apply_local_at(v, layout, &positions, m)
}

pub(crate) fn apply_local_at(
    v: &StateVector,
    layout: &SubsystemLayout,
    positions: &[usize],
    m: &ComplexMatrix,
) -> Result<StateVector> {
    layout.check_dim(v.dim())?;
    let dims = layout.dims();
    for (i, p) in positions.iter().enumerate() {
        if positions[..i].contains(p) {
            return Err(Error::InvalidArgument("repeated target subsystem".into()));
        }
    }
    let sub: usize = positions.iter().map(|&p| dims[p]).product();
    if m.rows() != sub || m.cols() != sub {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} operator on targets of dimension {sub}",
            m.rows(),
            m.cols()
        )));
    }
    let strides = layout.strides();
    let rest: Vec<usize> = (0..dims.len()).filter(|p| !positions.contains(p)).collect();
    let target_offsets = offsets(&dims, &strides, positions);
    let rest_offsets = offsets(&dims, &strides, &rest);

    let src = v.amplitudes();
    let mut out = vec![C64::new(0.0, 0.0); v.dim()];
    let mut gathered = vec![C64::new(0.0, 0.0); sub];
    for &base in &rest_offsets {
        for (g, &off) in gathered.iter_mut().zip(&target_offsets) {
            *g = src[base + off];
        }
        for (r, &off) in target_offsets.iter().enumerate() {
            out[base + off] = m.row(r).iter().zip(&gathered).map(|(a, b)| a * b).sum();
        }
    }
    Ok(StateVector::new(out))
}

/// Transposes the indices of one subsystem of a square operator.
pub fn partial_transpose(
    rho: &ComplexMatrix,
    layout: &SubsystemLayout,
    target: &str,
) -> Result<ComplexMatrix> {
    if !rho.is_square() {
        return Err(Error::DimensionMismatch("partial transpose of a non-square matrix".into()));
    }
    layout.check_dim(rho.rows())?;
    let t = layout.position(target)?;
    let stride = layout.strides()[t];
    let d = layout.dim_at(t);
    let n = rho.rows();
    let mut out = ComplexMatrix::zeros(n, n);
    for r in 0..n {
        let rt = (r / stride) % d;
        for c in 0..n {
            let ct = (c / stride) % d;
            let nr = r - rt * stride + ct * stride;
            let nc = c - ct * stride + rt * stride;
            out[(nr, nc)] = rho[(r, c)];
        }
    }
    Ok(out)
}

/// Index reshuffle `R(ρ)_{ij,kl} = ρ_{ik,jl}` of a bipartite operator; the
/// result is `d_a² × d_b²`.
pub fn realign(rho: &ComplexMatrix, layout: &SubsystemLayout) -> Result<ComplexMatrix> {
    if layout.len() != 2 {
        return Err(Error::InvalidLayout("realignment needs a bipartite layout".into()));
    }
    if !rho.is_square() {
        return Err(Error::DimensionMismatch("realignment of a non-square matrix".into()));
    }
    layout.check_dim(rho.rows())?;
    let (da, db) = (layout.dim_at(0), layout.dim_at(1));
    let mut out = ComplexMatrix::zeros(da * da, db * db);
    for i in 0..da {
        for j in 0..da {
            for k in 0..db {
                for l in 0..db {
                    out[(i * da + j, k * db + l)] = rho[(i * db + k, j * db + l)];
                }
            }
        }
    }
    Ok(out)
}

/// `tr[Π · (⊗_f F_f)]` where `Π` is the permutation operator of `perm` and
/// each factor `F_f` acts on the listed positions (row-major in the listed
/// order). Positions not covered by any factor carry the identity. Runs in
/// `O(D·n)` without materialising either operator.
pub fn permuted_product_trace(
    perm: &Permutation,
    layout: &SubsystemLayout,
    factors: &[(&[usize], &ComplexMatrix)],
) -> Result<C64> {
    let n = layout.len();
    if perm.len() != n {
        return Err(Error::DimensionMismatch("permutation size differs from layout".into()));
    }
    let dims = layout.dims();
    let total = check_cap(Some(layout.total_dim()))?;
    let mut covered = vec![false; n];
    for (positions, f) in factors {
        let sub: usize = positions.iter().map(|&p| dims[p]).product();
        if f.rows() != sub || f.cols() != sub {
            return Err(Error::DimensionMismatch(format!(
                "factor {}x{} on positions of dimension {sub}",
                f.rows(),
                f.cols()
            )));
        }
        for &p in positions.iter() {
            if p >= n || covered[p] {
                return Err(Error::InvalidArgument("factor positions overlap".into()));
            }
            covered[p] = true;
        }
    }
    let free: Vec<usize> = (0..n).filter(|&p| !covered[p]).collect();
    let map = perm.mapping();

    let mut i_digits = vec![0usize; n];
    let mut j_digits = vec![0usize; n];
    let mut acc = C64::new(0.0, 0.0);
    for _ in 0..total {
        // ⟨i|Π = ⟨j| with j[p] = i[map[p]].
        for p in 0..n {
            j_digits[p] = i_digits[map[p]];
        }
        if free.iter().all(|&p| i_digits[p] == j_digits[p]) {
            let mut term = C64::new(1.0, 0.0);
            for (positions, f) in factors {
                let mut r = 0;
                let mut c = 0;
                for &p in positions.iter() {
                    r = r * dims[p] + j_digits[p];
                    c = c * dims[p] + i_digits[p];
                }
                term *= f[(r, c)];
                if term == C64::new(0.0, 0.0) {
                    break;
                }
            }
            acc += term;
        }
        for p in (0..n).rev() {
            i_digits[p] += 1;
            if i_digits[p] < dims[p] {
                break;
            }
            i_digits[p] = 0;
        }
    }
    Ok(acc)
}

/// Dense permutation operator `Π` with `Π|i₁..i_n⟩ = |permuted⟩`.
pub fn permutation_matrix(perm: &Permutation, layout: &SubsystemLayout) -> Result<ComplexMatrix> {
    let d = layout.total_dim();
    check_cap(d.checked_mul(d))?;
    let mut out = ComplexMatrix::zeros(d, d);
    for c in 0..d {
        let col = permute_subsystems(&StateVector::basis(d, c), layout, perm)?;
        for (r, z) in col.amplitudes().iter().enumerate() {
            if *z != C64::new(0.0, 0.0) {
                out[(r, c)] = *z;
            }
        }
    }
    Ok(out)
}

/// `|tr(V⁽ᵏ⁾(A₁⊗⋯⊗A_k)) − tr(A_k⋯A₁)|` with `V⁽ᵏ⁾` the forward k-cycle,
/// evaluated with dense operators.
pub fn cycle_trace_identity_check(matrices: &[ComplexMatrix]) -> Result<f64> {
    let k = matrices.len();
    let d = matrices.first().map_or(0, ComplexMatrix::rows);
    if k == 0 || matrices.iter().any(|m| m.rows() != d || m.cols() != d) {
        return Err(Error::DimensionMismatch("need square matrices of one dimension".into()));
    }
    let total = (0..k).try_fold(1usize, |acc, _| acc.checked_mul(d));
    check_cap(total.and_then(|t| t.checked_mul(t)))?;

    let layout = SubsystemLayout::from_dims(&vec![d; k])?;
    let positions: Vec<usize> = (0..k).collect();
    let v = permutation_matrix(&Permutation::cycle(k, &positions)?, &layout)?;
    let lhs = v.matmul(&kron_all(matrices)?)?.trace();

    let mut product = ComplexMatrix::identity(d);
    for m in matrices {
        product = m.matmul(&product)?;
    }
    Ok((lhs - product.trace()).norm())
}
