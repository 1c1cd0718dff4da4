//! Concurrence from shot tallies.
//!
//! Sampled moments are not exactly the power sums of any nonnegative
//! spectrum, and inverting them directly puts the roots of a near-degenerate
//! quartic wherever the noise pushes them. The point estimate instead fits a
//! nonnegative four-eigenvalue spectrum to the sampled moments by generalised
//! least squares, with the moment covariance propagated from the binomial
//! tallies. The direct inversion is still run and reported alongside.

use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use super::parallel::map_indexed;
use super::shots::{sample_projector_with, setting_probability, ShotRecord};
use crate::error::{Error, Result};
use crate::oracle::{SpectrumDiagnostics, SpectrumEstimate};
use crate::rng;
use crate::schemes::spectrum::roots_from_moments;
use crate::schemes::{moments_from_expectations, moments_to_spectrum, MomentSet, MomentTarget, Provenance, ProjectorId};
use crate::states::DensityMatrix;

const KMAX: usize = 4;
const BOOTSTRAP_STREAMS: u64 = 1 << 40;
const LM_ITERATIONS: usize = 300;
/// Fitted eigenvalues below this fraction of `m₁` are not counted in the rank.
const RANK_FLOOR: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateOptions {
    pub shots_per_setting: u64,
    pub seed: u64,
    pub bootstrap_rounds: usize,
    pub workers: usize,
    pub confidence: f64,
}

impl EstimateOptions {
    pub fn new(shots_per_setting: u64, seed: u64) -> Self {
        Self { shots_per_setting, seed, bootstrap_rounds: 1000, workers: 1, confidence: 0.95 }
    }
}

/// Constrained spectrum fit to noisy moments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumFit {
    pub spectrum: SpectrumEstimate,
    /// Fitted eigenvalues that are not numerically zero.
    pub rank: usize,
    /// Whitened squared residual of the fit.
    pub chi2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcurrenceEstimate {
    pub c_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub confidence: f64,
    /// Sampled `m₁..m₄`.
    pub moments: MomentSet,
    /// Standard deviations of the sampled moments from the propagated covariance.
    pub moment_std: Vec<f64>,
    pub fit: SpectrumFit,
    /// Direct inversion of the sampled moments; `None` when inconsistent.
    pub direct: Option<SpectrumEstimate>,
    /// The sampled moments admit no real spectrum within tolerance. The
    /// interval is then less reliable than its nominal level.
    pub inconsistent_moments: bool,
    pub bootstrap_rounds: usize,
    /// Bootstrap replicates whose moments were inconsistent.
    pub bootstrap_inconsistent: usize,
    pub records: Vec<ShotRecord>,
}

/// Moments from tallies, ordered as [`ProjectorId::settings`].
pub fn moments_from_records(records: &[ShotRecord]) -> Result<Vec<f64>> {
    let probs: Vec<f64> = records.iter().map(ShotRecord::frequency).collect();
    let norms: Vec<f64> = records.iter().map(|r| r.norm_sqr * r.norm_sqr).collect();
    check_order(records)?;
    Ok(moments_with_jacobian(&probs, &norms).0)
}

fn check_order(records: &[ShotRecord]) -> Result<()> {
    let kmax = records.len().div_ceil(2);
    let want = ProjectorId::settings(kmax);
    if records.len().is_multiple_of(2) || records.iter().map(|r| r.projector_id).ne(want) {
        return Err(Error::InvalidArgument("records must follow the setting order P0, P1(2), P2(2), …".into()));
    }
    Ok(())
}

/// Moments and their Jacobian with respect to the setting probabilities.
fn moments_with_jacobian(probs: &[f64], norms: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let s = probs.len();
    let e: Vec<f64> = probs.iter().zip(norms).map(|(p, n)| p * n).collect();
    let pairs: Vec<(f64, f64)> = e[1..].chunks(2).map(|c| (c[0], c[1])).collect();
    let m = moments_from_expectations(e[0], &pairs);
    let mut jac = vec![vec![0.0; s]];
    jac[0][0] = 4.0 * norms[0];
    for j in 1..m.len() {
        let k = j as i32 + 1;
        let mut row: Vec<f64> = (0..s).map(|i| 0.25 * (jac[0][i] * m[j - 1] + m[0] * jac[j - 1][i])).collect();
        let (i1, i2) = (2 * j - 1, 2 * j);
        row[i1] += 4f64.powi(k) * norms[i1];
        row[i2] -= 4f64.powi(k) * norms[i2];
        jac.push(row);
    }
    (m, jac)
}

fn cholesky(a: &[[f64; KMAX]; KMAX]) -> Option<[[f64; KMAX]; KMAX]> {
    let mut l = [[0.0; KMAX]; KMAX];
    for i in 0..KMAX {
        for j in 0..=i {
            let s: f64 = a[i][j] - (0..j).map(|t| l[i][t] * l[j][t]).sum::<f64>();
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Some(l)
}

fn forward_solve(l: &[[f64; KMAX]; KMAX], v: &[f64; KMAX]) -> [f64; KMAX] {
    let mut y = [0.0; KMAX];
    for i in 0..KMAX {
        y[i] = (v[i] - (0..i).map(|t| l[i][t] * y[t]).sum::<f64>()) / l[i][i];
    }
    y
}

/// Solves a small dense system by Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c] == 0.0 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        let pivot = a[c].clone();
        for r in c + 1..n {
            let f = a[r][c] / pivot[c];
            for (x, y) in a[r][c..].iter_mut().zip(&pivot[c..]) {
                *x -= f * y;
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        x[r] = (b[r] - (r + 1..n).map(|t| a[r][t] * x[t]).sum::<f64>()) / a[r][r];
    }
    Some(x)
}

struct Whitened {
    l: [[f64; KMAX]; KMAX],
    target: [f64; KMAX],
}

impl Whitened {
    fn residual(&self, x: &[f64]) -> [f64; KMAX] {
        let mut diff = [0.0; KMAX];
        for (k, d) in diff.iter_mut().enumerate() {
            *d = x.iter().map(|xi| (xi * xi).powi(k as i32 + 1)).sum::<f64>() - self.target[k];
        }
        forward_solve(&self.l, &diff)
    }

    fn cost(&self, x: &[f64]) -> f64 {
        self.residual(x).iter().map(|r| r * r).sum()
    }

    /// Whitened Jacobian, one column per parameter.
    fn jacobian(&self, x: &[f64]) -> Vec<[f64; KMAX]> {
        x.iter()
            .map(|&xi| {
                let mu = xi * xi;
                let mut col = [0.0; KMAX];
                for (k, c) in col.iter_mut().enumerate() {
                    let k1 = k as i32 + 1;
                    *c = k1 as f64 * mu.powi(k1 - 1) * 2.0 * xi;
                }
                forward_solve(&self.l, &col)
            })
            .collect()
    }

    /// Levenberg–Marquardt on `μ = x²`.
    fn minimise(&self, mut x: Vec<f64>) -> (Vec<f64>, f64) {
        let n = x.len();
        let mut cost = self.cost(&x);
        let mut lambda = 1e-3;
        for _ in 0..LM_ITERATIONS {
            let r = self.residual(&x);
            let jac = self.jacobian(&x);
            let mut a = vec![vec![0.0; n]; n];
            let mut g = vec![0.0; n];
            for i in 0..n {
                g[i] = (0..KMAX).map(|k| jac[i][k] * r[k]).sum();
                for j in 0..n {
                    a[i][j] = (0..KMAX).map(|k| jac[i][k] * jac[j][k]).sum();
                }
            }
            let mut improved = false;
            while lambda < 1e16 {
                let mut damped = a.clone();
                for (i, row) in damped.iter_mut().enumerate() {
                    row[i] += lambda * (a[i][i] + 1e-12);
                }
                let Some(step) = solve(damped, g.iter().map(|v| -v).collect()) else {
                    lambda *= 4.0;
                    continue;
                };
                let trial: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + b).collect();
                let c = self.cost(&trial);
                if c < cost {
                    let gain = cost - c;
                    x = trial;
                    cost = c;
                    lambda = (lambda / 3.0).max(1e-12);
                    improved = gain > 1e-15 * cost.max(1e-300);
                    break;
                }
                lambda *= 4.0;
            }
            if !improved {
                break;
            }
        }
        (x, cost)
    }
}

/// Fits a nonnegative spectrum to sampled moments `m` with covariance `cov`.
pub fn fit_spectrum(m: &[f64], cov: &[[f64; KMAX]; KMAX]) -> Result<SpectrumFit> {
    let target: [f64; KMAX] = m
        .try_into()
        .map_err(|_| Error::InvalidArgument(format!("four moments needed, got {}", m.len())))?;
    if target.iter().chain(cov.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let mut jitter = 0.0;
    let scale = (0..KMAX).map(|i| cov[i][i]).fold(0.0f64, f64::max).max(1e-300);
    let l = loop {
        let mut c = *cov;
        for (i, row) in c.iter_mut().enumerate() {
            row[i] += jitter;
        }
        if let Some(l) = cholesky(&c) {
            break l;
        }
        jitter = if jitter == 0.0 { 1e-14 * scale } else { jitter * 100.0 };
        if jitter > scale {
            return Err(Error::InvalidArgument("moment covariance is not positive definite".into()));
        }
    };
    let w = Whitened { l, target };

    let m1 = target[0].max(1e-12);
    let mut root_init: Vec<f64> = roots_from_moments(target)
        .map(|(r, _)| r.iter().map(|z| z.re.max(0.0)).collect())
        .unwrap_or_else(|_| vec![m1 / 4.0; 4]);
    root_init.sort_by(|a, b| b.total_cmp(a));

    let starts = [
        root_init.clone(),
        vec![m1, 1e-3 * m1, 1e-3 * m1, 1e-3 * m1],
        vec![m1 / 4.0; 4],
        vec![0.7 * m1, 0.1 * m1, 0.1 * m1, 0.1 * m1],
    ];
    let mut best: Option<(Vec<f64>, f64)> = None;
    for s in starts {
        let x0 = s.iter().map(|&mu| mu.max(1e-8 * m1).sqrt()).collect();
        let (x, cost) = w.minimise(x0);
        if best.as_ref().is_none_or(|(_, c)| cost < *c) {
            best = Some((x, cost));
        }
    }
    let (x, chi2) = best.expect("at least one start");
    let mut mu = [0.0; KMAX];
    for (slot, xi) in mu.iter_mut().zip(&x) {
        *slot = xi * xi;
    }
    let rank = mu.iter().filter(|&&v| v > RANK_FLOOR * m1).count();
    Ok(SpectrumFit { spectrum: SpectrumEstimate::from_mu(mu, SpectrumDiagnostics::default()), rank, chi2 })
}

/// Moments and their covariance from per-setting frequencies.
fn moments_and_covariance(probs: &[f64], norms: &[f64], shots: &[u64]) -> (Vec<f64>, [[f64; KMAX]; KMAX]) {
    let (m, jac) = moments_with_jacobian(probs, norms);
    let var: Vec<f64> = probs
        .iter()
        .zip(shots)
        .map(|(&p, &n)| (p * (1.0 - p)).max(1.0 / n as f64) / n as f64)
        .collect();
    let mut cov = [[0.0; KMAX]; KMAX];
    for i in 0..KMAX {
        for j in 0..KMAX {
            cov[i][j] = (0..probs.len()).map(|s| jac[i][s] * var[s] * jac[j][s]).sum();
        }
    }
    (m, cov)
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn direct_inversion(m: &[f64]) -> Option<SpectrumEstimate> {
    let set = MomentSet::new(m.to_vec(), Provenance::Sampled, MomentTarget::Concurrence).ok()?;
    moments_to_spectrum(&set).ok()
}

/// Infinite-shot limit: exact setting probabilities through the same
/// moment assembly, inverted directly.
pub fn analytic_concurrence(rho: &DensityMatrix) -> Result<SpectrumEstimate> {
    let mut probs = Vec::new();
    let mut norms = Vec::new();
    for id in ProjectorId::settings(KMAX) {
        let (p, n) = setting_probability(rho, id)?;
        probs.push(p);
        norms.push(n * n);
    }
    let m = moments_with_jacobian(&probs, &norms).0;
    moments_to_spectrum(&MomentSet::new(m, Provenance::Projective, MomentTarget::Concurrence)?)
}

pub fn estimate_concurrence(
    rho: &DensityMatrix,
    shots_per_setting: u64,
    seed: u64,
    bootstrap_rounds: usize,
) -> Result<ConcurrenceEstimate> {
    let options = EstimateOptions { bootstrap_rounds, ..EstimateOptions::new(shots_per_setting, seed) };
    estimate_concurrence_with(rho, &options)
}

pub fn estimate_concurrence_with(rho: &DensityMatrix, options: &EstimateOptions) -> Result<ConcurrenceEstimate> {
    rho.require_two_qubit()?;
    if options.bootstrap_rounds < 100 {
        return Err(Error::InvalidArgument(format!(
            "at least 100 bootstrap rounds needed, got {}",
            options.bootstrap_rounds
        )));
    }
    if !(0.0 < options.confidence && options.confidence < 1.0) {
        return Err(Error::InvalidArgument(format!("confidence {} outside (0, 1)", options.confidence)));
    }
    let records = ProjectorId::settings(KMAX)
        .into_iter()
        .map(|id| sample_projector_with(rho, id, options.shots_per_setting, options.seed, options.workers))
        .collect::<Result<Vec<_>>>()?;
    let probs: Vec<f64> = records.iter().map(ShotRecord::frequency).collect();
    let norms: Vec<f64> = records.iter().map(|r| r.norm_sqr * r.norm_sqr).collect();
    let shots: Vec<u64> = records.iter().map(|r| r.shots).collect();

    let (m, cov) = moments_and_covariance(&probs, &norms, &shots);
    let fit = fit_spectrum(&m, &cov)?;
    let direct = direct_inversion(&m);

    let replicates = map_indexed(options.bootstrap_rounds, options.workers, |b| {
        let mut r = rng::stream(options.seed, BOOTSTRAP_STREAMS + b as u64);
        let resampled: Vec<f64> = probs
            .iter()
            .zip(&shots)
            .map(|(&p, &n)| {
                let draw = Binomial::new(n, p).expect("p is a frequency").sample(&mut r);
                draw as f64 / n as f64
            })
            .collect();
        let (mb, cb) = moments_and_covariance(&resampled, &norms, &shots);
        let c = fit_spectrum(&mb, &cb).map(|f| f.spectrum.concurrence);
        (c, direct_inversion(&mb).is_none())
    });
    let mut values = Vec::with_capacity(replicates.len());
    let mut bootstrap_inconsistent = 0;
    for (c, inconsistent) in replicates {
        values.push(c?);
        bootstrap_inconsistent += usize::from(inconsistent);
    }
    values.sort_by(f64::total_cmp);
    let tail = (1.0 - options.confidence) / 2.0;

    Ok(ConcurrenceEstimate {
        c_hat: fit.spectrum.concurrence,
        ci_low: percentile(&values, tail),
        ci_high: percentile(&values, 1.0 - tail),
        confidence: options.confidence,
        moment_std: (0..KMAX).map(|i| cov[i][i].sqrt()).collect(),
        moments: MomentSet::new(m, Provenance::Sampled, MomentTarget::Concurrence)?,
        fit,
        inconsistent_moments: direct.is_none(),
        direct,
        bootstrap_rounds: options.bootstrap_rounds,
        bootstrap_inconsistent,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::concurrence_wootters;
    use crate::schemes::projective_moment;
    use crate::states::{bell, random_density, werner, BellState};

    #[test]
    fn analytic_limit_matches_oracle() {
        for seed in 0..10 {
            let rho = random_density(seed, &[2, 2], 1 + seed as usize % 4).unwrap();
            let a = analytic_concurrence(&rho).unwrap().concurrence;
            let o = concurrence_wootters(&rho).unwrap().concurrence;
            assert!((a - o).abs() < 1e-6, "seed {seed}: {a} vs {o}");
        }
        assert!((analytic_concurrence(&bell(BellState::PhiMinus)).unwrap().concurrence - 1.0).abs() < 1e-6);
    }

    #[test]
    fn exact_moments_fit_exactly() {
        let rho = random_density(4, &[2, 2], 4).unwrap();
        let m = projective_moment(&rho, 4).unwrap();
        let mut cov = [[0.0; KMAX]; KMAX];
        for (i, row) in cov.iter_mut().enumerate() {
            row[i] = 1e-26;
        }
        let fit = fit_spectrum(m.values(), &cov).unwrap();
        let o = concurrence_wootters(&rho).unwrap();
        assert!((fit.spectrum.concurrence - o.concurrence).abs() < 1e-4, "{fit:?} {o:?}");
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let probs = [0.2, 0.05, 0.01, 0.03, 0.004, 0.02, 0.001];
        let norms = [1.0, 1.1, 0.9, 1.0, 1.2, 0.8, 1.3];
        let (m, jac) = moments_with_jacobian(&probs, &norms);
        for s in 0..probs.len() {
            let mut p = probs;
            p[s] += 1e-7;
            let (mp, _) = moments_with_jacobian(&p, &norms);
            for k in 0..KMAX {
                let fd = (mp[k] - m[k]) / 1e-7;
                assert!((fd - jac[k][s]).abs() < 1e-5 * (1.0 + fd.abs()), "k={k} s={s}");
            }
        }
    }

    #[test]
    fn bell_estimate_is_deterministic_and_covers_one() {
        let rho = bell(BellState::PhiPlus);
        let mut opts = EstimateOptions::new(100_000, 3);
        opts.bootstrap_rounds = 200;
        let a = estimate_concurrence_with(&rho, &opts).unwrap();
        opts.workers = 3;
        let b = estimate_concurrence_with(&rho, &opts).unwrap();
        assert_eq!(a, b);
        assert!(a.ci_low <= a.c_hat && a.c_hat <= a.ci_high + 1e-12);
        assert!((a.c_hat - 1.0).abs() < 0.1, "{}", a.c_hat);
    }

    #[test]
    fn separable_interval_touches_zero() {
        let est = estimate_concurrence(&werner(0.2).unwrap(), 10_000, 5, 200).unwrap();
        assert!(est.ci_low <= 0.0, "{est:?}");
    }

    #[test]
    fn records_order_is_checked() {
        let rho = bell(BellState::PhiPlus);
        let est = estimate_concurrence(&rho, 1000, 1, 100).unwrap();
        let m = moments_from_records(&est.records).unwrap();
        assert_eq!(m, est.moments.values());
        assert!(moments_from_records(&est.records[1..]).is_err());
        assert!(estimate_concurrence(&rho, 1000, 1, 99).is_err());
    }
}
