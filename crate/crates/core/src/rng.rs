//! Seeded randomness.
//!
//! All streams are ChaCha20 (`rand_chacha::ChaCha20Rng`) created with
//! `seed_from_u64(seed)` and split with `set_stream(stream)`, so a
//! `(seed, stream)` pair names one reproducible sequence. Complex Gaussian
//! samples use the Box–Muller transform on two uniform draws.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::tensor::{ComplexMatrix, StateVector};

pub type Rng = ChaCha20Rng;

pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Standard complex Gaussian: real and imaginary parts are independent N(0,1).
pub fn complex_gaussian(rng: &mut Rng) -> C64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    let r = (-2.0 * u1.ln()).sqrt();
    C64::from_polar(r, 2.0 * PI * u2)
}

/// `rows × cols` matrix of independent complex Gaussians.
pub fn ginibre(rng: &mut Rng, rows: usize, cols: usize) -> ComplexMatrix {
    let data = (0..rows * cols).map(|_| complex_gaussian(rng)).collect();
    ComplexMatrix::from_vec(rows, cols, data).expect("gaussian samples are finite")
}

/// Unitary from Gram–Schmidt on the columns of a Ginibre matrix.
pub fn random_unitary(rng: &mut Rng, d: usize) -> ComplexMatrix {
    let g = ginibre(rng, d, d);
    let mut columns: Vec<StateVector> = Vec::with_capacity(d);
    for c in 0..d {
        let mut v = g.column(c);
        for q in &columns {
            v = v.sub(&q.scale(q.inner(&v)));
        }
        columns.push(v.normalized().expect("Ginibre columns are independent"));
    }
    let mut u = ComplexMatrix::zeros(d, d);
    for (c, col) in columns.iter().enumerate() {
        for r in 0..d {
            u[(r, c)] = col[r];
        }
    }
    u
}

pub fn random_vector(rng: &mut Rng, dim: usize) -> StateVector {
    StateVector::new((0..dim).map(|_| complex_gaussian(rng)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| stream(7, 1).random()).collect();
        let b: Vec<u64> = (0..4).map(|_| stream(7, 1).random()).collect();
        assert_eq!(a, b);
        let mut s1 = stream(7, 1);
        let mut s2 = stream(7, 2);
        assert_ne!(s1.random::<u64>(), s2.random::<u64>());
    }

    #[test]
    fn box_muller_moments() {
        let mut rng = seeded(3);
        let n = 200_000;
        let samples: Vec<C64> = (0..n).map(|_| complex_gaussian(&mut rng)).collect();
        let mean: C64 = samples.iter().sum::<C64>() / n as f64;
        let power = samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64;
        assert!(mean.norm() < 0.01);
        assert!((power - 2.0).abs() < 0.02);
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = seeded(11);
        for d in [2, 3, 5] {
            assert!(random_unitary(&mut rng, d).unitarity_defect() < 1e-12);
        }
    }
}
