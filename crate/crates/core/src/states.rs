//! Special states, fixtures and the antilinear transforms `ρ*` and `ρ̃_u`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::tensor::{hermitian_eig, kron_all, ComplexMatrix, StateVector, SubsystemLayout};

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const MIN_EIGENVALUE: f64 = -1e-9;
pub const UNITARY_TOL: f64 = 1e-10;

/// A validated density operator together with its subsystem layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix {
    rho: ComplexMatrix,
    layout: SubsystemLayout,
}

impl DensityMatrix {
    pub fn new(rho: ComplexMatrix, layout: SubsystemLayout) -> Result<Self> {
        if !rho.is_square() {
            return Err(Error::InvalidState("density matrix must be square".into()));
        }
        layout.check_dim(rho.rows())?;
        let defect = rho.hermiticity_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {defect:e})")));
        }
        let trace = rho.trace();
        if (trace.re - 1.0).abs() > TRACE_TOL || trace.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace is {:.12}, expected 1", trace.re)));
        }
        let min = hermitian_eig(&rho)?.values.last().copied().unwrap_or(0.0);
        if min < MIN_EIGENVALUE {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { rho, layout })
    }

    /// Two-qubit state on the layout `A ⊗ B`.
    pub fn two_qubit(rho: ComplexMatrix) -> Result<Self> {
        Self::new(rho, two_qubit_layout())
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.rho
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.rho.rows()
    }

    pub fn is_two_qubit(&self) -> bool {
        self.layout.dims() == [2, 2]
    }

    pub fn purity(&self) -> f64 {
        self.rho.matmul(&self.rho).map_or(f64::NAN, |m| m.trace().re)
    }

    pub(crate) fn require_two_qubit(&self) -> Result<()> {
        if self.is_two_qubit() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "expected a two-qubit state, got subsystem dims {:?}",
                self.layout.dims()
            )))
        }
    }
}

pub fn two_qubit_layout() -> SubsystemLayout {
    SubsystemLayout::new([("A", 2), ("B", 2)]).expect("static layout")
}

/// One local unitary per subsystem.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalUnitarySet {
    unitaries: Vec<ComplexMatrix>,
}

impl LocalUnitarySet {
    pub fn new(unitaries: Vec<ComplexMatrix>) -> Result<Self> {
        for u in &unitaries {
            let defect = u.unitarity_defect();
            if defect > UNITARY_TOL {
                return Err(Error::NotUnitary(defect));
            }
        }
        Ok(Self { unitaries })
    }

    /// `σ_y` on each of `n` qubits: the Wootters spin-flip frame.
    pub fn sigma_y(n: usize) -> Self {
        Self { unitaries: vec![sigma_y(); n] }
    }

    pub fn identity(dims: &[usize]) -> Self {
        Self { unitaries: dims.iter().map(|&d| ComplexMatrix::identity(d)).collect() }
    }

    pub fn unitaries(&self) -> &[ComplexMatrix] {
        &self.unitaries
    }

    pub fn len(&self) -> usize {
        self.unitaries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unitaries.is_empty()
    }

    pub(crate) fn check_layout(&self, layout: &SubsystemLayout) -> Result<()> {
        let dims: Vec<usize> = self.unitaries.iter().map(ComplexMatrix::rows).collect();
        if dims != layout.dims() {
            return Err(Error::DimensionMismatch(format!(
                "unitaries of dims {dims:?} for subsystems {:?}",
                layout.dims()
            )));
        }
        Ok(())
    }
}

pub fn sigma_x() -> ComplexMatrix {
    ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).expect("static")
}

pub fn sigma_y() -> ComplexMatrix {
    let i = C64::new(0.0, 1.0);
    ComplexMatrix::from_vec(2, 2, vec![C64::new(0.0, 0.0), -i, i, C64::new(0.0, 0.0)])
        .expect("static")
}

pub fn sigma_z() -> ComplexMatrix {
    ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0]).expect("static")
}

/// `Σ_s |ss⟩/√d` on a `d × d` system.
pub fn mes(d: usize) -> Result<StateVector> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("MES needs d ≥ 2, got {d}")));
    }
    let mut v = StateVector::zeros(d * d);
    let amp = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    for s in 0..d {
        v.amplitudes_mut()[s * d + s] = amp;
    }
    Ok(v)
}

/// `(I ⊗ U)|S⟩`; its amplitudes are the column-stacking of `U/√d`.
pub fn mes_twisted(d: usize, u: &ComplexMatrix) -> Result<StateVector> {
    if u.rows() != d || u.cols() != d {
        return Err(Error::DimensionMismatch(format!("{}x{} twist for d = {d}", u.rows(), u.cols())));
    }
    let defect = u.unitarity_defect();
    if defect > UNITARY_TOL {
        return Err(Error::NotUnitary(defect));
    }
    let mut v = StateVector::zeros(d * d);
    let scale = 1.0 / (d as f64).sqrt();
    for s in 0..d {
        for t in 0..d {
            v.amplitudes_mut()[s * d + t] = u[(t, s)] * scale;
        }
    }
    Ok(v)
}

/// `ρ̃_u = (⊗U_i) ρ* (⊗U_i†)`, conjugation taken in the computational basis.
pub fn antilinear_transform(rho: &DensityMatrix, us: &LocalUnitarySet) -> Result<ComplexMatrix> {
    us.check_layout(rho.layout())?;
    let u = kron_all(us.unitaries())?;
    u.matmul(&rho.matrix().conj())?.matmul(&u.adjoint())
}

/// Wootters spin flip `(σ_y⊗σ_y) ρ* (σ_y⊗σ_y)`.
pub fn spin_flip(rho: &DensityMatrix) -> Result<ComplexMatrix> {
    rho.require_two_qubit()?;
    antilinear_transform(rho, &LocalUnitarySet::sigma_y(2))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BellState {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellState {
    pub fn from_index(index: usize) -> Result<Self> {
        Ok(match index {
            0 => Self::PhiPlus,
            1 => Self::PhiMinus,
            2 => Self::PsiPlus,
            3 => Self::PsiMinus,
            _ => return Err(Error::InvalidArgument(format!("Bell index {index} not in 0..4"))),
        })
    }

    pub fn vector(self) -> StateVector {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let amps = match self {
            Self::PhiPlus => [h, 0.0, 0.0, h],
            Self::PhiMinus => [h, 0.0, 0.0, -h],
            Self::PsiPlus => [0.0, h, h, 0.0],
            Self::PsiMinus => [0.0, h, -h, 0.0],
        };
        StateVector::new(amps.iter().map(|&x| C64::new(x, 0.0)).collect())
    }
}

pub fn bell(which: BellState) -> DensityMatrix {
    let v = which.vector();
    DensityMatrix::two_qubit(ComplexMatrix::outer(&v, &v)).expect("Bell states are valid")
}

/// `p|Ψ⁻⟩⟨Ψ⁻| + (1−p) I/4`.
pub fn werner(p: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("Werner weight {p} outside [0, 1]")));
    }
    let v = BellState::PsiMinus.vector();
    let singlet = ComplexMatrix::outer(&v, &v).scale_real(p);
    let noise = ComplexMatrix::identity(4).scale_real((1.0 - p) / 4.0);
    DensityMatrix::two_qubit(singlet.add(&noise)?)
}

/// Pure two-qubit state from amplitudes `(a, b, c, d)` on `|00⟩..|11⟩`;
/// rescaled to unit norm.
pub fn pure(amplitudes: &[C64]) -> Result<DensityMatrix> {
    if amplitudes.len() != 4 {
        return Err(Error::InvalidArgument(format!(
            "pure two-qubit state needs 4 amplitudes, got {}",
            amplitudes.len()
        )));
    }
    let v = StateVector::new(amplitudes.to_vec()).normalized()?;
    DensityMatrix::two_qubit(ComplexMatrix::outer(&v, &v))
}

/// `GG†/tr(GG†)` with `G` a seeded complex Gaussian `dim × rank` matrix.
pub fn random_density(seed: u64, dims: &[usize], rank: usize) -> Result<DensityMatrix> {
    if rank == 0 {
        return Err(Error::InvalidArgument("rank must be at least 1".into()));
    }
    let layout = if dims == [2, 2] { two_qubit_layout() } else { SubsystemLayout::from_dims(dims)? };
    let dim = layout.total_dim();
    let mut rng = rng::seeded(seed);
    let g = rng::ginibre(&mut rng, dim, rank);
    let gg = g.matmul(&g.adjoint())?;
    let tr = gg.trace().re;
    let mut rho = gg.scale_real(1.0 / tr);
    // Remove the rounding-level anti-Hermitian part.
    rho = rho.add(&rho.adjoint())?.scale_real(0.5);
    DensityMatrix::new(rho, layout)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::apply_local_operator;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn mes_qubit_amplitudes() {
        let s = mes(2).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let want = [c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(h, 0.0)];
        assert!(s.amplitudes().iter().zip(want).all(|(a, b)| (a - b).norm() < 1e-15));
        assert!(s.is_normalized());
        assert!(mes(1).is_err());
    }

    #[test]
    fn mes_reproduces_trace() {
        let mut rng = rng::seeded(5);
        let a = rng::ginibre(&mut rng, 2, 2);
        let layout = SubsystemLayout::new([("1", 2), ("1b", 2)]).unwrap();
        let s = mes(2).unwrap();
        let moved = apply_local_operator(&s, &layout, &["1b"], &a).unwrap();
        let value = s.inner(&moved) * 2.0;
        assert!((value - a.trace()).norm() < 1e-14);
    }

    #[test]
    fn twisted_mes_with_sigma_y() {
        let v = mes_twisted(2, &sigma_y()).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let expect = [c(0.0, 0.0), c(0.0, h), c(0.0, -h), c(0.0, 0.0)];
        for (a, b) in v.amplitudes().iter().zip(expect) {
            assert!((a - b).norm() < 1e-15);
        }
        assert_eq!(mes_twisted(2, &ComplexMatrix::identity(2)).unwrap(), mes(2).unwrap());
        let bad = ComplexMatrix::from_real(2, 2, &[1.0, 1.0, 0.0, 1.0]).unwrap();
        assert!(matches!(mes_twisted(2, &bad), Err(Error::NotUnitary(_))));
    }

    #[test]
    fn twisted_mes_is_column_stacking() {
        let mut rng = rng::seeded(9);
        let u = rng::random_unitary(&mut rng, 3);
        let v = mes_twisted(3, &u).unwrap();
        assert!((v.norm() - 1.0).abs() < 1e-13);
        for s in 0..3 {
            for t in 0..3 {
                assert!((v[s * 3 + t] - u[(t, s)] / 3f64.sqrt()).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn spin_flip_fixtures() {
        let phi = bell(BellState::PhiPlus);
        assert!(spin_flip(&phi).unwrap().max_abs_diff(phi.matrix()) < 1e-15);
        let mixed = werner(0.0).unwrap();
        assert!(spin_flip(&mixed).unwrap().max_abs_diff(mixed.matrix()) < 1e-15);
        let product = pure(&[c(0.6, 0.0), c(0.0, 0.8), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        let flipped = spin_flip(&product).unwrap();
        assert!(product.matrix().matmul(&flipped).unwrap().trace().norm() < 1e-15);
    }

    #[test]
    fn spin_flip_matches_elementwise_formula() {
        // (σ_y⊗σ_y)_{ij} = -(-1)^{i+j} on the anti-diagonal, so
        // ρ̃_{ij} = s_i s_j conj(ρ_{3-i,3-j}) with s = (1, -1, -1, 1).
        let rho = random_density(21, &[2, 2], 4).unwrap();
        let flipped = spin_flip(&rho).unwrap();
        let sign = [1.0, -1.0, -1.0, 1.0];
        for i in 0..4 {
            for j in 0..4 {
                let expect = rho.matrix()[(3 - i, 3 - j)].conj() * (sign[i] * sign[j]);
                assert!((flipped[(i, j)] - expect).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn antilinear_transform_special_cases() {
        let rho = random_density(4, &[2, 2], 3).unwrap();
        let plain = antilinear_transform(&rho, &LocalUnitarySet::identity(&[2, 2])).unwrap();
        assert!(plain.max_abs_diff(&rho.matrix().conj()) < 1e-15);
        let via_sy = antilinear_transform(&rho, &LocalUnitarySet::sigma_y(2)).unwrap();
        assert!(via_sy.max_abs_diff(&spin_flip(&rho).unwrap()) < 1e-15);
        // σ_y σ_y* = -I so the transform is an involution in that frame.
        let twice = DensityMatrix::two_qubit(via_sy).unwrap();
        let back = antilinear_transform(&twice, &LocalUnitarySet::sigma_y(2)).unwrap();
        assert!(back.max_abs_diff(rho.matrix()) < 1e-12);
    }

    #[test]
    fn werner_endpoints() {
        let w0 = werner(0.0).unwrap();
        assert!(w0.matrix().max_abs_diff(&ComplexMatrix::identity(4).scale_real(0.25)) < 1e-15);
        let w1 = werner(1.0).unwrap();
        assert!(w1.matrix().max_abs_diff(bell(BellState::PsiMinus).matrix()) < 1e-15);
        assert!(werner(1.2).is_err());
        assert!(werner(-0.1).is_err());
    }

    #[test]
    fn pure_rejects_zero_vector() {
        assert!(pure(&[c(0.0, 0.0); 4]).is_err());
        assert!(pure(&[c(1.0, 0.0); 3]).is_err());
    }

    #[test]
    fn random_density_is_valid_and_deterministic() {
        let a = random_density(17, &[2, 2], 4).unwrap();
        let b = random_density(17, &[2, 2], 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, random_density(18, &[2, 2], 4).unwrap());
        let pure_like = random_density(3, &[3, 3], 1).unwrap();
        assert!((pure_like.purity() - 1.0).abs() < 1e-10);
        assert!(random_density(1, &[2, 2], 0).is_err());
    }

    #[test]
    fn validation_rejects_bad_trace() {
        let m = ComplexMatrix::identity(4).scale_real(0.9 / 4.0);
        assert!(matches!(DensityMatrix::two_qubit(m), Err(Error::InvalidState(_))));
    }
}
