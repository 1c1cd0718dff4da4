use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::parallel::map_indexed;
use crate::error::{Error, Result};
use crate::rng;
use crate::schemes::moments::projective_expectation;
use crate::schemes::ProjectorId;
use crate::states::DensityMatrix;

/// Shots drawn from one RNG stream. Streams are assigned per chunk, so tallies
/// do not depend on how chunks are spread over workers.
pub const CHUNK: u64 = 1 << 16;

/// Tally of one measurement setting. `norm_sqr` is `‖φ̂‖²` of the single-party
/// vector, so the unnormalized two-party expectation is
/// `p · norm_sqr²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub projector_id: ProjectorId,
    pub shots: u64,
    pub successes: u64,
    pub probability_true: f64,
    pub norm_sqr: f64,
}

impl ShotRecord {
    pub fn frequency(&self) -> f64 {
        self.successes as f64 / self.shots as f64
    }

    /// Sample estimate of the unnormalized `⟨P⊗P⟩`.
    pub fn expectation(&self) -> f64 {
        self.frequency() * self.norm_sqr * self.norm_sqr
    }
}

/// Probability of the normalized product projector, and `‖φ̂‖²`.
pub fn setting_probability(rho: &DensityMatrix, id: ProjectorId) -> Result<(f64, f64)> {
    let norm_sqr = id.vector()?.norm_sqr();
    let p = projective_expectation(rho, id)? / (norm_sqr * norm_sqr);
    if !(-1e-12..=1.0 + 1e-12).contains(&p) {
        return Err(Error::InvalidState(format!("{id} has probability {p} outside [0, 1]")));
    }
    Ok((p.clamp(0.0, 1.0), norm_sqr))
}

/// Distinct stream block per setting; chunk index in the low bits.
pub(crate) fn stream_base(id: ProjectorId) -> u64 {
    let slot = match id {
        ProjectorId::P0 => 0,
        ProjectorId::P1(k) => 2 * k as u64 - 3,
        ProjectorId::P2(k) => 2 * k as u64 - 2,
    };
    slot << 32
}

pub(crate) fn bernoulli_tally(p: f64, shots: u64, seed: u64, base: u64, workers: usize) -> u64 {
    let chunks = shots.div_ceil(CHUNK) as usize;
    map_indexed(chunks, workers, |c| {
        let n = CHUNK.min(shots - c as u64 * CHUNK);
        let mut r = rng::stream(seed, base + c as u64);
        (0..n).filter(|_| r.random::<f64>() < p).count() as u64
    })
    .into_iter()
    .sum()
}

pub fn sample_projector(rho: &DensityMatrix, id: ProjectorId, shots: u64, seed: u64) -> Result<ShotRecord> {
    sample_projector_with(rho, id, shots, seed, 1)
}

pub fn sample_projector_with(
    rho: &DensityMatrix,
    id: ProjectorId,
    shots: u64,
    seed: u64,
    workers: usize,
) -> Result<ShotRecord> {
    if shots == 0 {
        return Err(Error::InvalidArgument("at least one shot is needed".into()));
    }
    let (p, norm_sqr) = setting_probability(rho, id)?;
    let successes = bernoulli_tally(p, shots, seed, stream_base(id), workers);
    Ok(ShotRecord { projector_id: id, shots, successes, probability_true: p, norm_sqr })
}
