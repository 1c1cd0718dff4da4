use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered list of labelled subsystems. Global indices are row-major over
/// this order: the first subsystem is the most significant digit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsystemLayout {
    subsystems: Vec<(String, usize)>,
}

impl SubsystemLayout {
    pub fn new<S: Into<String>>(subsystems: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let subsystems: Vec<(String, usize)> =
            subsystems.into_iter().map(|(l, d)| (l.into(), d)).collect();
        let mut seen = HashSet::new();
        for (label, dim) in &subsystems {
            if *dim == 0 {
                return Err(Error::InvalidLayout(format!("subsystem `{label}` has dimension 0")));
            }
            if !seen.insert(label.as_str()) {
                return Err(Error::InvalidLayout(format!("duplicate label `{label}`")));
            }
        }
        Ok(Self { subsystems })
    }

    /// Layout with labels `0, 1, ...` and the given dimensions.
    pub fn from_dims(dims: &[usize]) -> Result<Self> {
        Self::new(dims.iter().enumerate().map(|(i, &d)| (i.to_string(), d)))
    }

    pub fn len(&self) -> usize {
        self.subsystems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsystems.is_empty()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.subsystems.iter().map(|(_, d)| *d).collect()
    }

    pub fn dim_at(&self, position: usize) -> usize {
        self.subsystems[position].1
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.subsystems.iter().map(|(l, _)| l.as_str())
    }

    pub fn total_dim(&self) -> usize {
        self.subsystems.iter().map(|(_, d)| d).product()
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.subsystems
            .iter()
            .position(|(l, _)| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn positions(&self, labels: &[&str]) -> Result<Vec<usize>> {
        labels.iter().map(|l| self.position(l)).collect()
    }

    /// Row-major strides, one per subsystem.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.len()];
        for i in (0..self.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.subsystems[i + 1].1;
        }
        strides
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        if self.total_dim() != dim {
            return Err(Error::DimensionMismatch(format!(
                "layout of total dimension {} annotates an object of dimension {dim}",
                self.total_dim()
            )));
        }
        Ok(())
    }

    pub(crate) fn entries(&self) -> &[(String, usize)] {
        &self.subsystems
    }
}

/// Bijection on subsystem positions: the factor at position `j` moves to
/// position `mapping[j]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Permutation {
    mapping: Vec<usize>,
}

impl Permutation {
    pub fn new(mapping: Vec<usize>) -> Result<Self> {
        let n = mapping.len();
        let mut hit = vec![false; n];
        for &m in &mapping {
            if m >= n || hit[m] {
                return Err(Error::InvalidPermutation(format!("{mapping:?} is not a bijection")));
            }
            hit[m] = true;
        }
        Ok(Self { mapping })
    }

    pub fn identity(n: usize) -> Self {
        Self { mapping: (0..n).collect() }
    }

    /// Cyclic shift over `positions`: the factor at `positions[i]` moves to
    /// `positions[i + 1]` and the last wraps to the first, so that
    /// `V|v₁⟩|v₂⟩⋯|v_l⟩ = |v_l⟩|v₁⟩⋯|v_{l−1}⟩` on those slots.
    pub fn cycle(n: usize, positions: &[usize]) -> Result<Self> {
        let mut mapping: Vec<usize> = (0..n).collect();
        let l = positions.len();
        for (i, &p) in positions.iter().enumerate() {
            if p >= n {
                return Err(Error::InvalidPermutation(format!("position {p} out of range {n}")));
            }
            mapping[p] = positions[(i + 1) % l];
        }
        Self::new(mapping)
    }

    pub fn swap(n: usize, a: usize, b: usize) -> Result<Self> {
        Self::cycle(n, &[a, b])
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    pub fn is_identity(&self) -> bool {
        self.mapping.iter().enumerate().all(|(i, &m)| i == m)
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.len()];
        for (j, &m) in self.mapping.iter().enumerate() {
            inv[m] = j;
        }
        Self { mapping: inv }
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn after(&self, first: &Self) -> Result<Self> {
        if self.len() != first.len() {
            return Err(Error::InvalidPermutation("composing permutations of different size".into()));
        }
        Ok(Self { mapping: first.mapping.iter().map(|&m| self.mapping[m]).collect() })
    }

    /// Layout of the output of `permute_subsystems`.
    pub fn apply_to_layout(&self, layout: &SubsystemLayout) -> Result<SubsystemLayout> {
        if layout.len() != self.len() {
            return Err(Error::DimensionMismatch(format!(
                "permutation on {} slots applied to a {}-subsystem layout",
                self.len(),
                layout.len()
            )));
        }
        let mut out = layout.entries().to_vec();
        for (j, entry) in layout.entries().iter().enumerate() {
            out[self.mapping[j]] = entry.clone();
        }
        SubsystemLayout::new(out)
    }
}
