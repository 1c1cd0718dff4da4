use entlab::oracle::{ccnr, concurrence_wootters, negativity_ppt, spectral_moments, SpectrumEstimate};
use entlab::rng::{ginibre, random_unitary, seeded};
use entlab::sampling::sequential::run_sequential_protocol_with;
use entlab::sampling::{
    analytic_concurrence, build_sequential_machine, estimate_concurrence_with, resource_comparison,
    EstimateOptions,
};
use entlab::schemes::moments::family_element;
use entlab::schemes::{
    build_projector_family, check_lemma1, check_realignment_identities, check_theorem1, concurrence_via_projections,
    moments_to_spectrum, permutation_moment, ppt_moment, projective_expectation, projective_moment,
    realignment_moment, FamilyVector, ProjectorId,
};
use entlab::states::{bell, pure, random_density, BellState, DensityMatrix, LocalUnitarySet};
use entlab::tensor::{hermitian_eig, partial_transpose, SubsystemLayout};
use num_complex::Complex64 as C64;
use serde_json::{json, Value};

use crate::report::{sig6, Check, Report};
use crate::statefile::StateFile;
use crate::{CliError, ConcurrenceArgs, Context, EstimateArgs, Method, ResourcesArgs, StateArgs, Suite, VerifyArgs};

/// Tolerance overrides: a bare number applies to every check, `NAME=VALUE`
/// to checks whose name starts with `NAME`.
struct Tolerances(Vec<(Option<String>, f64)>);

impl Tolerances {
    fn parse(raw: &[String]) -> Result<Self, CliError> {
        raw.iter()
            .map(|t| {
                let (name, value) = match t.split_once('=') {
                    Some((n, v)) => (Some(n.trim().to_owned()), v),
                    None => (None, t.as_str()),
                };
                let value: f64 = value
                    .trim()
                    .parse()
                    .ok()
                    .filter(|v: &f64| *v >= 0.0)
                    .ok_or_else(|| CliError::Usage(format!("bad tolerance `{t}`")))?;
                Ok((name, value))
            })
            .collect::<Result<_, _>>()
            .map(Self)
    }

    fn get(&self, name: &str, default: f64) -> f64 {
        self.0
            .iter()
            .rev()
            .find(|(n, _)| n.as_deref().is_none_or(|n| name.starts_with(n)))
            .map_or(default, |&(_, v)| v)
    }
}

struct Verifier<'a> {
    report: Report,
    tolerances: &'a Tolerances,
    seed: u64,
    seeds: u64,
}

impl Verifier<'_> {
    fn check(&mut self, name: &str, value: f64, default_tol: f64) {
        let tol = self.tolerances.get(name, default_tol);
        self.report.check(Check::at_most(name, value, tol));
    }

    fn state(&self, i: u64, rank: usize) -> Result<DensityMatrix, CliError> {
        Ok(random_density(self.seed.wrapping_add(i), &[2, 2], rank)?)
    }

    fn lemma1(&mut self) -> Result<(), CliError> {
        let layouts: [&[usize]; 5] = [&[2], &[3], &[2, 2], &[2, 3], &[3, 3]];
        let mut worst = 0.0f64;
        for i in 0..self.seeds {
            let dims = layouts[(i % 5) as usize];
            let n: usize = dims.iter().product();
            let a = ginibre(&mut seeded(self.seed.wrapping_add(i)), n, n);
            let r = check_lemma1(&a, &SubsystemLayout::from_dims(dims)?)?;
            worst = worst.max(r.transpose).max(r.trace);
        }
        self.check("lemma1 residual", worst, 1e-12);
        Ok(())
    }

    fn theorem1(&mut self) -> Result<(), CliError> {
        let (mut sy, mut frame, mut qutrit) = (0.0f64, 0.0f64, 0.0f64);
        for i in 0..self.seeds {
            let rho = self.state(i, 1 + (i % 4) as usize)?;
            let r = check_theorem1(&rho, &LocalUnitarySet::sigma_y(2))?;
            sy = sy.max(r.product).max(r.trace);
            let mut rng = seeded(self.seed.wrapping_add(i) ^ 0x5eed);
            let us = LocalUnitarySet::new(vec![random_unitary(&mut rng, 2), random_unitary(&mut rng, 2)])?;
            let r = check_theorem1(&rho, &us)?;
            frame = frame.max(r.product).max(r.trace);
            let dims = if i % 2 == 0 { [2, 3] } else { [3, 3] };
            let rho3 = random_density(self.seed.wrapping_add(i), &dims, dims[0] * dims[1])?;
            let us = LocalUnitarySet::new(dims.iter().map(|&d| random_unitary(&mut rng, d)).collect())?;
            let r = check_theorem1(&rho3, &us)?;
            qutrit = qutrit.max(r.product).max(r.trace);
        }
        self.check("theorem1 residual sigma_y", sy, 1e-12);
        self.check("theorem1 residual random frame", frame, 1e-12);
        self.check("theorem1 residual qutrit", qutrit, 1e-12);
        Ok(())
    }

    fn lemma2(&mut self) -> Result<(), CliError> {
        let (mut sy, mut frame) = (0.0f64, 0.0f64);
        for i in 0..self.seeds {
            let rho = self.state(i, 1 + (i % 4) as usize)?;
            let us = LocalUnitarySet::sigma_y(2);
            sy = sy.max(gap(spectral_moments(&rho, &us, 4)?.values(), permutation_moment(&rho, &us, 4)?.values()));
            let mut rng = seeded(self.seed.wrapping_add(i) ^ 0x5eed);
            let us = LocalUnitarySet::new(vec![random_unitary(&mut rng, 2), random_unitary(&mut rng, 2)])?;
            frame = frame.max(gap(spectral_moments(&rho, &us, 4)?.values(), permutation_moment(&rho, &us, 4)?.values()));
        }
        self.check("lemma2 permutation vs spectral", sy, 1e-9);
        self.check("lemma2 permutation vs spectral random frame", frame, 1e-9);
        Ok(())
    }

    fn theorem2(&mut self) -> Result<(), CliError> {
        let us = LocalUnitarySet::sigma_y(2);
        let (mut moments, mut p1, mut conc) = (0.0f64, 0.0f64, 0.0f64);
        for i in 0..self.seeds {
            let rho = self.state(i, 1 + (i % 4) as usize)?;
            let q = projective_moment(&rho, 4)?;
            moments = moments.max(gap(spectral_moments(&rho, &us, 4)?.values(), q.values()));
            let m1 = q.values()[0];
            p1 = p1.max((projective_expectation(&rho, ProjectorId::P1(2))? - m1 * m1 / 16.0).abs());
            let full = self.state(i, 4)?;
            let c = concurrence_via_projections(&full)?.concurrence;
            conc = conc.max((c - concurrence_wootters(&full)?.concurrence).abs());
        }
        let mut signs = 0.0f64;
        for k in 2..=4 {
            let fam = build_projector_family(k)?;
            let neg0 = fam.vector(FamilyVector::Phi0).scale(C64::new(-1.0, 0.0));
            signs = signs.max(fam.swap_last_pair(FamilyVector::Phi0)?.distance(&neg0));
            signs = signs.max(fam.swap_last_pair(FamilyVector::Phi3)?.distance(fam.vector(FamilyVector::Phi3)));
        }
        let mut odd = 0.0f64;
        for i in 0..self.seeds.min(5) {
            let rho = self.state(i, 4)?;
            for k in 2..=3 {
                for mask in 0u32..16 {
                    if (4 - mask.count_ones()) % 2 == 1 {
                        let pick = |b: u32| if mask >> b & 1 == 0 { FamilyVector::Phi0 } else { FamilyVector::Phi3 };
                        odd = odd.max(family_element(&rho, k, [pick(0), pick(1), pick(2), pick(3)])?.norm());
                    }
                }
            }
        }
        self.check("theorem2 projective vs spectral", moments, 1e-9);
        self.check("theorem2 k=2 P1 expectation vs m1^2/16", p1, 1e-10);
        self.check("theorem2 swap signs", signs, 1e-13);
        self.check("theorem2 odd-zero elements", odd, 1e-10);
        self.check("theorem2 concurrence vs oracle", conc, 1e-6);
        Ok(())
    }

    fn ppt(&mut self) -> Result<(), CliError> {
        let mut worst = 0.0f64;
        for i in 0..self.seeds {
            let rho = self.state(i, 1 + (i % 4) as usize)?;
            worst = worst.max(ppt_moment(&rho, 3)?.max_path_gap());
        }
        let b = bell(BellState::PhiPlus);
        let eig = hermitian_eig(&partial_transpose(b.matrix(), b.layout(), "B")?)?;
        let oracle: f64 = eig.values.iter().map(|l| l.powi(3)).sum();
        self.check("ppt network vs direct", worst, 1e-10);
        self.check("ppt bell k=3 vs eigensolver", (ppt_moment(&b, 3)?.values()[2] - oracle).abs(), 1e-12);
        self.check("ppt bell k=3 vs 1/4", (oracle - 0.25).abs(), 1e-12);
        Ok(())
    }

    fn realignment(&mut self) -> Result<(), CliError> {
        let (mut ident, mut moments) = (0.0f64, 0.0f64);
        for i in 0..self.seeds {
            let dims = if i % 2 == 0 { [2, 2] } else { [3, 3] };
            let rho = random_density(self.seed.wrapping_add(i), &dims, dims[0] * dims[1])?;
            let r = check_realignment_identities(&rho)?;
            ident = ident.max(r.v1).max(r.v2);
            let rho = self.state(i, 1 + (i % 4) as usize)?;
            moments = moments.max(realignment_moment(&rho, 2)?.max_path_gap());
        }
        let mes = ccnr(&bell(BellState::PhiPlus))?.trace_norm;
        let prod = ccnr(&pure(&[0.6, 0.8, 0.0, 0.0].map(|x| C64::new(x, 0.0)))?)?.trace_norm;
        self.check("realignment V1/V2 residual", ident, 1e-13);
        self.check("realignment network vs direct", moments, 1e-10);
        self.check("realignment ccnr mes = 2", (mes - 2.0).abs(), 1e-10);
        self.check("realignment ccnr product = 1", (prod - 1.0).abs(), 1e-10);
        Ok(())
    }
}

fn gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn verify(ctx: &Context, args: &VerifyArgs) -> Result<Report, CliError> {
    if args.seeds == 0 {
        return Err(CliError::Usage("--seeds must be at least 1".into()));
    }
    let tolerances = Tolerances::parse(&args.tolerance)?;
    let suite = format!("{:?}", args.suite).to_lowercase();
    let params = json!({ "suite": suite, "seeds": args.seeds, "tolerance": args.tolerance });
    let mut v = Verifier { report: Report::new("verify", params, Some(ctx.seed)), tolerances: &tolerances, seed: ctx.seed, seeds: args.seeds };
    let all = args.suite == Suite::All;
    if all || args.suite == Suite::Lemma1 {
        v.lemma1()?;
    }
    if all || args.suite == Suite::Theorem1 {
        v.theorem1()?;
    }
    if all || args.suite == Suite::Lemma2 {
        v.lemma2()?;
    }
    if all || args.suite == Suite::Theorem2 {
        v.theorem2()?;
    }
    if all || args.suite == Suite::Ppt {
        v.ppt()?;
    }
    if all || args.suite == Suite::Realignment {
        v.realignment()?;
    }
    v.report.line(format!("suite {suite}, {} seeds", args.seeds));
    Ok(v.report)
}

fn spectrum_lines(report: &mut Report, label: &str, s: &SpectrumEstimate) {
    let lambda: Vec<String> = s.lambda.iter().map(|&x| sig6(x)).collect();
    report.line(format!("{label:<12} lambda = [{}]  C = {:.6}", lambda.join(", "), s.concurrence));
}

pub fn concurrence(args: &ConcurrenceArgs) -> Result<Report, CliError> {
    let rho = StateFile::read(&args.state)?.to_density()?;
    let method = format!("{:?}", args.method).to_lowercase();
    let mut report = Report::new("concurrence", json!({ "method": method, "tolerance": args.tolerance }), None);
    let cut = rho.layout().labels().nth(1).map(str::to_owned);
    let mut data = serde_json::Map::new();
    if let Some(cut) = cut.filter(|_| rho.layout().len() == 2) {
        let ppt = negativity_ppt(&rho, &cut)?;
        let re = ccnr(&rho)?;
        report.line(format!("negativity   {}  (ppt: {})", sig6(ppt.negativity), ppt.is_ppt));
        report.line(format!("ccnr         ‖R‖₁ = {}  (entangled: {})", sig6(re.trace_norm), re.is_entangled));
        data.insert("negativity".into(), serde_json::to_value(&ppt).expect("serializable"));
        data.insert("ccnr".into(), serde_json::to_value(&re).expect("serializable"));
    }
    if !rho.is_two_qubit() {
        if args.method != Method::Oracle {
            return Err(CliError::Input(format!(
                "the {method} scheme reconstructs concurrence for two qubits only (state dims {:?}); use --method oracle",
                rho.layout().dims()
            )));
        }
        report.line("concurrence is defined here for two qubits only; PPT and CCNR results shown");
        report.data = Value::Object(data);
        return Ok(report);
    }

    let oracle = concurrence_wootters(&rho)?;
    spectrum_lines(&mut report, "oracle", &oracle);
    data.insert("oracle".into(), serde_json::to_value(&oracle).expect("serializable"));
    let mut methods = Vec::new();
    if matches!(args.method, Method::Projective | Method::All) {
        methods.push(("projective", projective_moment(&rho, 4)?));
    }
    if matches!(args.method, Method::Permutation | Method::All) {
        methods.push(("permutation", permutation_moment(&rho, &LocalUnitarySet::sigma_y(2), 4)?));
    }
    for (name, m) in methods {
        let s = moments_to_spectrum(&m)?;
        spectrum_lines(&mut report, name, &s);
        let moments: Vec<String> = m.values().iter().map(|&x| sig6(x)).collect();
        report.line(format!("{:<12} moments = [{}]", "", moments.join(", ")));
        let mu_gap = s.mu.iter().zip(&oracle.mu).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        report.check(Check::at_most(format!("{name} C gap vs oracle"), (s.concurrence - oracle.concurrence).abs(), args.tolerance));
        data.insert(name.into(), json!({ "moments": m, "spectrum": s, "mu_gap": mu_gap }));
    }
    report.data = Value::Object(data);
    Ok(report)
}

pub fn estimate(ctx: &Context, args: &EstimateArgs) -> Result<Report, CliError> {
    if args.shots < 100 {
        return Err(CliError::Usage(format!("--shots must be at least 100, got {}", args.shots)));
    }
    if args.bootstrap < 100 {
        return Err(CliError::Usage(format!("--bootstrap must be at least 100, got {}", args.bootstrap)));
    }
    let rho = StateFile::read(&args.state)?.to_density()?;
    if !rho.is_two_qubit() {
        return Err(CliError::Input("shot estimates need a two-qubit state".into()));
    }
    let options = EstimateOptions {
        shots_per_setting: args.shots,
        seed: ctx.seed,
        bootstrap_rounds: args.bootstrap,
        workers: ctx.workers,
        confidence: args.confidence,
    };
    let est = estimate_concurrence_with(&rho, &options).map_err(|e| match e {
        entlab::Error::InvalidArgument(m) => CliError::Usage(m),
        other => other.into(),
    })?;
    let analytic = analytic_concurrence(&rho)?;
    let oracle = concurrence_wootters(&rho)?;
    let exact = projective_moment(&rho, 4)?;

    let params = json!({ "shots": args.shots, "bootstrap": args.bootstrap, "confidence": args.confidence });
    let mut report = Report::new("estimate", params, Some(ctx.seed));
    report.line(format!("{:<10} {:>10} {:>10} {:>12} {:>12}", "setting", "shots", "successes", "frequency", "p (exact)"));
    for r in &est.records {
        report.line(format!(
            "{:<10} {:>10} {:>10} {:>12} {:>12}",
            r.projector_id.to_string(),
            r.shots,
            r.successes,
            sig6(r.frequency()),
            sig6(r.probability_true)
        ));
    }
    report.line(format!("{:<4} {:>12} {:>12} {:>12}", "k", "sampled", "std", "exact"));
    for k in 0..4 {
        report.line(format!(
            "m{:<3} {:>12} {:>12} {:>12}",
            k + 1,
            sig6(est.moments.values()[k]),
            sig6(est.moment_std[k]),
            sig6(exact.values()[k])
        ));
    }
    report.line(format!(
        "C_hat = {:.6}  {:.0}% CI [{:.6}, {:.6}]  (fit rank {}, {} bootstrap rounds)",
        est.c_hat,
        100.0 * est.confidence,
        est.ci_low,
        est.ci_high,
        est.fit.rank,
        est.bootstrap_rounds
    ));
    match &est.direct {
        Some(d) => report.line(format!("direct inversion of sampled moments: C = {:.6}", d.concurrence)),
        None => report.line("direct inversion of sampled moments: inconsistent (no real spectrum)"),
    }
    report.line(format!(
        "bootstrap replicates with inconsistent moments: {}/{}",
        est.bootstrap_inconsistent, est.bootstrap_rounds
    ));
    report.line(format!("infinite-shot C = {:.6}, oracle C = {:.6}", analytic.concurrence, oracle.concurrence));
    report.data = json!({ "estimate": est, "infinite_shot": analytic, "oracle_concurrence": oracle.concurrence });
    Ok(report)
}

pub fn resources(ctx: &Context, args: &ResourcesArgs) -> Result<Report, CliError> {
    if !(1..=4).contains(&args.k) {
        return Err(CliError::Usage(format!("--k must be in 1..=4, got {}", args.k)));
    }
    if args.attempts == 0 {
        return Err(CliError::Usage("--attempts must be at least 1".into()));
    }
    let rho = StateFile::read(&args.state)?.to_density()?;
    if !rho.is_two_qubit() {
        return Err(CliError::Input("the sequential protocol is defined for two qubits".into()));
    }
    let params = json!({ "k": args.k, "attempts": args.attempts });
    let mut report = Report::new("resources", params, Some(ctx.seed));
    report.line(format!(
        "{:<10} {:>5} {:>12} {:>12} {:>12} {:>12} {:>10}",
        "setting", "bond", "p analytic", "p empirical", "pairs/att", "empirical", "pairs"
    ));
    let mut runs = Vec::new();
    for (i, id) in ProjectorId::settings(args.k).into_iter().enumerate() {
        let machine = build_sequential_machine(&id.vector()?, id.k())?;
        // Each setting draws from its own seed so tallies are independent.
        let r = run_sequential_protocol_with(&rho, &machine, &machine, args.attempts, ctx.seed.wrapping_add(i as u64), ctx.workers)?;
        report.line(format!(
            "{:<10} {:>5} {:>12} {:>12} {:>12} {:>12} {:>10}",
            id.to_string(),
            machine.max_bond_dim(),
            sig6(r.analytic_success_probability),
            sig6(r.empirical_success_rate),
            sig6(r.expected_pairs_per_attempt),
            sig6(r.empirical_pairs_per_attempt),
            r.pairs_generated_total
        ));
        let p = r.analytic_success_probability;
        let sigma = (p * (1.0 - p) / r.attempts as f64).sqrt().max(1e-300);
        report.check(Check::at_most(format!("{id} success deviation / sigma"), (r.empirical_success_rate - p).abs() / sigma, 4.0));
        report.check(Check::at_most(
            format!("{id} pairs per attempt relative gap"),
            (r.empirical_pairs_per_attempt / r.expected_pairs_per_attempt - 1.0).abs(),
            0.02,
        ));
        report.check(Check::at_most(format!("{id} live pairs"), r.max_live_pairs as f64, 1.0));
        runs.push(json!({ "projector_id": id, "max_bond_dim": machine.max_bond_dim(), "report": r }));
    }
    let comparison = resource_comparison(&rho, args.k)?;
    report.line(format!(
        "expected pairs per determination of m1..m{}: {}  (every attempt completing: {})",
        args.k,
        sig6(comparison.pairs_per_determination),
        comparison.pairs_per_determination_no_abort
    ));
    report.line(format!("tomography baseline: {} pairs (local settings)", comparison.tomography_baseline_pairs));
    report.line(&comparison.annotation);
    report.data = json!({ "settings": runs, "comparison": comparison });
    Ok(report)
}

pub fn state(ctx: &Context, args: &StateArgs) -> Result<Report, CliError> {
    let mut params = serde_json::Map::new();
    if let Some(p) = args.p {
        params.insert("p".into(), json!(p));
    }
    if let Some(w) = &args.which {
        params.insert("which".into(), w.parse::<u64>().map_or_else(|_| json!(w), |i| json!(i)));
    }
    if !args.amplitudes.is_empty() {
        params.insert("amplitudes".into(), json!(args.amplitudes));
    }
    if args.family == "random" {
        params.insert("seed".into(), json!(ctx.seed));
        params.insert("dims".into(), json!(args.dims));
        if let Some(r) = args.rank {
            params.insert("rank".into(), json!(r));
        }
    }
    let file = StateFile::Family { family: args.family.clone(), params: Value::Object(params) };
    let rho = file.to_density()?;
    let mut report = Report::new("state", Value::Null, Some(ctx.seed));
    report.data = serde_json::to_value(StateFile::from_density(&rho)).expect("serializable");
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_overrides() {
        let t = Tolerances::parse(&["1e-3".into(), "ppt=1e-20".into()]).unwrap();
        assert_eq!(t.get("ppt network vs direct", 1e-10), 1e-20);
        assert_eq!(t.get("lemma1 residual", 1e-12), 1e-3);
        assert!(Tolerances::parse(&["abc".into()]).is_err());
        assert!(Tolerances::parse(&["x=-1".into()]).is_err());
    }
}
