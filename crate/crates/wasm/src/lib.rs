//! Browser bindings for the `www/` demo page. Each export returns a JSON
//! string; the same computations are exposed as plain functions returning
//! typed results so they can be tested natively.

use entlab::oracle::{ccnr, concurrence_wootters, negativity_ppt, spectral_moments};
use entlab::sampling::{estimate_concurrence_with, EstimateOptions};
use entlab::schemes::{concurrence_via_projections, permutation_moment, projective_moment};
use entlab::states::{random_density, werner, LocalUnitarySet};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest shot count per setting accepted from the page.
pub const MAX_SHOTS: u32 = 1_000_000;
/// Bootstrap rounds are capped to keep the page responsive.
pub const MAX_ROUNDS: u32 = 2000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub p: f64,
    pub concurrence_oracle: f64,
    pub concurrence_moments: f64,
    pub negativity: f64,
    pub ccnr_trace_norm: f64,
}

/// Werner family `p|Ψ⁻⟩⟨Ψ⁻| + (1−p)I/4` on `points` evenly spaced values of `p`.
pub fn sweep(points: u32) -> entlab::Result<Vec<SweepPoint>> {
    if !(2..=401).contains(&points) {
        return Err(entlab::Error::InvalidArgument(format!("points must be in 2..=401, got {points}")));
    }
    (0..points)
        .map(|i| {
            let p = f64::from(i) / f64::from(points - 1);
            let rho = werner(p)?;
            Ok(SweepPoint {
                p,
                concurrence_oracle: concurrence_wootters(&rho)?.concurrence,
                concurrence_moments: concurrence_via_projections(&rho)?.concurrence,
                negativity: negativity_ppt(&rho, "B")?.negativity,
                ccnr_trace_norm: ccnr(&rho)?.trace_norm,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateSummary {
    pub p: f64,
    pub shots: u32,
    pub seed: u32,
    pub c_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub exact: f64,
    pub moments: Vec<f64>,
    pub moment_std: Vec<f64>,
    pub exact_moments: Vec<f64>,
    pub fit_rank: usize,
    pub inconsistent_moments: bool,
    pub bootstrap_rounds: usize,
    pub bootstrap_inconsistent: usize,
    pub frequencies: Vec<(String, f64, f64)>,
}

/// Finite-shot concurrence of a Werner state with a bootstrap interval.
pub fn estimate(p: f64, shots: u32, seed: u32, rounds: u32) -> entlab::Result<EstimateSummary> {
    if shots == 0 || shots > MAX_SHOTS {
        return Err(entlab::Error::InvalidArgument(format!("shots must be in 1..={MAX_SHOTS}")));
    }
    let rho = werner(p)?;
    let options = EstimateOptions {
        bootstrap_rounds: rounds.min(MAX_ROUNDS) as usize,
        ..EstimateOptions::new(u64::from(shots), u64::from(seed))
    };
    let e = estimate_concurrence_with(&rho, &options)?;
    let exact_moments = spectral_moments(&rho, &LocalUnitarySet::sigma_y(2), 4)?.values().to_vec();
    Ok(EstimateSummary {
        p,
        shots,
        seed,
        c_hat: e.c_hat,
        ci_low: e.ci_low,
        ci_high: e.ci_high,
        exact: concurrence_wootters(&rho)?.concurrence,
        moments: e.moments.values().to_vec(),
        moment_std: e.moment_std,
        exact_moments,
        fit_rank: e.fit.rank,
        inconsistent_moments: e.inconsistent_moments,
        bootstrap_rounds: e.bootstrap_rounds,
        bootstrap_inconsistent: e.bootstrap_inconsistent,
        frequencies: e
            .records
            .iter()
            .map(|r| (r.projector_id.to_string(), r.frequency(), r.probability_true))
            .collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RandomStateSummary {
    pub seed: u32,
    pub rank: usize,
    /// Row-major `[re, im]` entries of ρ.
    pub matrix: Vec<[f64; 2]>,
    pub mu: [f64; 4],
    pub concurrence_oracle: f64,
    pub concurrence_moments: f64,
    pub spectral: Vec<f64>,
    pub permutation: Vec<f64>,
    pub projective: Vec<f64>,
    /// Largest of the three pairwise gaps, per order.
    pub max_gap: Vec<f64>,
}

/// A seeded random two-qubit state with its moments along all three paths.
pub fn random_state(seed: u32, rank: u32) -> entlab::Result<RandomStateSummary> {
    let rank = rank as usize;
    let rho = random_density(u64::from(seed), &[2, 2], rank)?;
    let sy = LocalUnitarySet::sigma_y(2);
    let spectral = spectral_moments(&rho, &sy, 4)?.values().to_vec();
    let permutation = permutation_moment(&rho, &sy, 4)?.values().to_vec();
    let projective = projective_moment(&rho, 4)?.values().to_vec();
    let max_gap = (0..4)
        .map(|k| {
            let (s, a, b) = (spectral[k], permutation[k], projective[k]);
            (s - a).abs().max((s - b).abs()).max((a - b).abs())
        })
        .collect();
    let oracle = concurrence_wootters(&rho)?;
    Ok(RandomStateSummary {
        seed,
        rank,
        matrix: rho.matrix().as_slice().iter().map(|z| [z.re, z.im]).collect(),
        mu: oracle.mu,
        concurrence_oracle: oracle.concurrence,
        concurrence_moments: concurrence_via_projections(&rho)?.concurrence,
        spectral,
        permutation,
        projective,
        max_gap,
    })
}

fn to_json<T: Serialize>(r: entlab::Result<T>) -> Result<String, JsError> {
    let value = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn werner_sweep(points: u32) -> Result<String, JsError> {
    to_json(sweep(points))
}

#[wasm_bindgen]
pub fn estimate_werner(p: f64, shots: u32, seed: u32, rounds: u32) -> Result<String, JsError> {
    to_json(estimate(p, shots, seed, rounds))
}

#[wasm_bindgen]
pub fn random_state_paths(seed: u32, rank: u32) -> Result<String, JsError> {
    to_json(random_state(seed, rank))
}
