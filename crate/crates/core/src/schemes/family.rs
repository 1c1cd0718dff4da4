//! Single-party vectors whose product projectors yield the moments of
//! `ρρ̃` for two qubits with `U = σ_y`.

use std::fmt;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::states::{mes_twisted, sigma_y};
use crate::tensor::{permute_subsystems, Permutation, StateVector, SubsystemLayout};

/// Which copy slots the cyclic permutation `V_{2,…,2k}` runs over. Several
/// readings reproduce the same moments; [`CycleConvention::FROZEN`] is the
/// one used everywhere outside calibration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleConvention {
    /// Slots 2, 4, …, 2k (one-based), shifted forward.
    EvenForward,
    /// Slots 2, 4, …, 2k, shifted backward.
    EvenBackward,
    /// Slots 2, 3, …, 2k, shifted forward.
    Contiguous,
}

impl CycleConvention {
    pub const FROZEN: Self = Self::EvenForward;
    pub const ALL: [Self; 3] = [Self::EvenForward, Self::EvenBackward, Self::Contiguous];

    /// The permutation on `slots` single-copy slots (`slots` even).
    pub fn cycle(self, slots: usize) -> Result<Permutation> {
        let positions: Vec<usize> = match self {
            Self::EvenForward => (1..slots).step_by(2).collect(),
            Self::EvenBackward => (1..slots).step_by(2).rev().collect(),
            Self::Contiguous => (1..slots).collect(),
        };
        Permutation::cycle(slots, &positions)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyVector {
    Phi0,
    Phi1,
    Phi2,
    Phi3,
    Psi0,
    PhiHat1,
    PhiHat2,
}

impl FamilyVector {
    pub const ALL: [Self; 7] =
        [Self::Phi0, Self::Phi1, Self::Phi2, Self::Phi3, Self::Psi0, Self::PhiHat1, Self::PhiHat2];
}

/// The seven vectors on `2k` qubits and their squared norms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectorFamily {
    k: usize,
    vectors: Vec<StateVector>,
    norms: Vec<f64>,
}

/// `|S_y⟩ = (I⊗σ_y)|S⟩` on one copy pair.
pub(crate) fn s_y() -> StateVector {
    mes_twisted(2, &sigma_y()).expect("static")
}

pub fn build_projector_family(k: usize) -> Result<ProjectorFamily> {
    ProjectorFamily::build_with(k, CycleConvention::FROZEN)
}

impl ProjectorFamily {
    pub fn build_with(k: usize, convention: CycleConvention) -> Result<Self> {
        if !(2..=4).contains(&k) {
            return Err(Error::InvalidArgument(format!("projector family needs 2 ≤ k ≤ 4, got {k}")));
        }
        let n = 2 * k;
        let layout = SubsystemLayout::from_dims(&vec![2; n])?;
        let pair = s_y();
        let mut phi0 = pair.clone();
        for _ in 1..k {
            phi0 = phi0.kron(&pair);
        }
        let phi1 = permute_subsystems(&phi0, &layout, &convention.cycle(n)?)?;
        let phi2 = permute_subsystems(&phi1, &layout, &Permutation::swap(n, n - 2, n - 1)?)?
            .scale(C64::new(-1.0, 0.0));
        let phi3 = phi1.sub(&phi2);
        let psi0 = phi1.add(&phi2);
        let half = C64::new(0.5, 0.0);
        let phihat1 = phi0.add(&phi3).scale(half);
        let phihat2 = phi0.add(&phi3.scale(C64::new(0.0, 1.0))).scale(half);

        let vectors = vec![phi0, phi1, phi2, phi3, psi0, phihat1, phihat2];
        let norms = vectors.iter().map(StateVector::norm_sqr).collect();
        Ok(Self { k, vectors, norms })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn vector(&self, which: FamilyVector) -> &StateVector {
        &self.vectors[which as usize]
    }

    /// Squared norm of a vector as built, before any normalization.
    pub fn norm_sqr(&self, which: FamilyVector) -> f64 {
        self.norms[which as usize]
    }

    pub fn layout(&self) -> SubsystemLayout {
        SubsystemLayout::from_dims(&vec![2; 2 * self.k]).expect("static")
    }

    /// `V_{2k−1,2k}` applied to one of the vectors.
    pub fn swap_last_pair(&self, which: FamilyVector) -> Result<StateVector> {
        let n = 2 * self.k;
        permute_subsystems(self.vector(which), &self.layout(), &Permutation::swap(n, n - 2, n - 1)?)
    }
}

/// One measurement setting: `P0` is `|S_y⟩⟨S_y|` on a single copy pair per
/// party; `P1(k)`, `P2(k)` are the projectors onto `φ̂₁`, `φ̂₂` on `2k` copies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProjectorId {
    P0,
    P1(usize),
    P2(usize),
}

impl ProjectorId {
    /// Settings needed for `m₁..m_kmax`, in a fixed order.
    pub fn settings(kmax: usize) -> Vec<Self> {
        let mut out = vec![Self::P0];
        for k in 2..=kmax {
            out.push(Self::P1(k));
            out.push(Self::P2(k));
        }
        out
    }

    /// Number of copy pairs per party; each setting consumes `2k` copies of ρ.
    pub fn k(self) -> usize {
        match self {
            Self::P0 => 1,
            Self::P1(k) | Self::P2(k) => k,
        }
    }

    pub fn validate(self) -> Result<Self> {
        match self {
            Self::P1(k) | Self::P2(k) if !(2..=4).contains(&k) => {
                Err(Error::InvalidArgument(format!("{self} is not a defined projector")))
            }
            _ => Ok(self),
        }
    }

    /// The single-party vector, unnormalized.
    pub fn vector(self) -> Result<StateVector> {
        match self.validate()? {
            Self::P0 => Ok(s_y()),
            Self::P1(k) => Ok(build_projector_family(k)?.vector(FamilyVector::PhiHat1).clone()),
            Self::P2(k) => Ok(build_projector_family(k)?.vector(FamilyVector::PhiHat2).clone()),
        }
    }
}

impl fmt::Display for ProjectorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::P0 => write!(f, "P0"),
            Self::P1(k) => write!(f, "P1(k={k})"),
            Self::P2(k) => write!(f, "P2(k={k})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k2_vectors() {
        let fam = build_projector_family(2).unwrap();
        let pair = s_y();
        assert!(fam.vector(FamilyVector::Phi0).distance(&pair.kron(&pair)) < 1e-15);
        assert!((fam.norm_sqr(FamilyVector::Phi0) - 1.0).abs() < 1e-14);
        let d = fam.vector(FamilyVector::PhiHat1).distance(fam.vector(FamilyVector::Phi1));
        assert!(d < 1e-14, "{d}");
    }

    #[test]
    fn entrywise_definitions_and_swap_signs() {
        for conv in CycleConvention::ALL {
            for k in 2..=4 {
                let fam = ProjectorFamily::build_with(k, conv).unwrap();
                let v = |w| fam.vector(w).amplitudes().to_vec();
                let (p0, p1, p2, p3) = (
                    v(FamilyVector::Phi0),
                    v(FamilyVector::Phi1),
                    v(FamilyVector::Phi2),
                    v(FamilyVector::Phi3),
                );
                let (h1, h2) = (v(FamilyVector::PhiHat1), v(FamilyVector::PhiHat2));
                let i = C64::new(0.0, 1.0);
                for x in 0..p0.len() {
                    assert!((p3[x] - (p1[x] - p2[x])).norm() < 1e-15);
                    assert!((h1[x] - (p0[x] + p3[x]) * 0.5).norm() < 1e-15);
                    assert!((h2[x] - (p0[x] + i * p3[x]) * 0.5).norm() < 1e-15);
                }
                let flipped = fam.swap_last_pair(FamilyVector::Phi0).unwrap();
                let neg = fam.vector(FamilyVector::Phi0).scale(C64::new(-1.0, 0.0));
                assert!(flipped.distance(&neg) < 1e-13);
                let flipped = fam.swap_last_pair(FamilyVector::Phi3).unwrap();
                assert!(flipped.distance(fam.vector(FamilyVector::Phi3)) < 1e-13);
            }
        }
    }

    #[test]
    fn rank_one_vectors_have_unit_norm() {
        for k in 2..=4 {
            let fam = build_projector_family(k).unwrap();
            for w in [FamilyVector::PhiHat1, FamilyVector::PhiHat2] {
                assert!((fam.norm_sqr(w) - 1.0).abs() < 1e-13, "k={k} {w:?}");
            }
        }
    }

    #[test]
    fn out_of_range_k() {
        assert!(build_projector_family(1).is_err());
        assert!(build_projector_family(5).is_err());
        assert!(ProjectorId::P1(5).vector().is_err());
        assert_eq!(ProjectorId::settings(4).len(), 7);
    }
}
