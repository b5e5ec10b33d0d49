//! Named check suites. Each numbered criterion is one routine returning
//! reports; suites group criteria by module. Errors inside a check become
//! failing reports instead of propagating.

use std::collections::BTreeSet;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use crate::counterexamples::{delta_pair, exact_heat_l1, fractional_l1_bound, gaussian_ou_flatness};
use crate::cube::{apply_multiplier, dirichlet_form, fwht, group_convolve, ifwht, lp_norm, DegreeMultiplier};
use crate::error::{Error, Result};
use crate::families::{case_rng, rademacher_spectrum, uniform_values};
use crate::inequalities::{abp_gap_with, bonami_ratio, cp_lower, decay_rate, derivative_identity_check, heat_smoothing_l1, tilde_cp};
use crate::kernel::{build_plan, heat_kernel, verify_modification};
use crate::report::{record, VerificationReport};
use crate::search::{constant_scan_with, rates_trend_down, worst_ratio_search, SearchConfig, TREND_NOISE};
use crate::subordination::{verify_subordination, StableDensityEvaluator};
use crate::Status;

pub const SUITES: [&str; 7] = ["core", "subordination", "kernel", "inequalities", "counterexamples", "search", "all"];
pub const CRITERIA: usize = 13;

/// Overrides for the suite defaults; `None` keeps the default of each check.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SuiteParams {
    pub n: Option<usize>,
    pub p: Option<f64>,
    pub gamma: Option<f64>,
    pub t: Option<f64>,
    pub band: Option<BTreeSet<usize>>,
    pub seed: u64,
}

/// Criteria run by each suite; `all` runs every criterion once.
pub fn suite_criteria(suite: &str) -> Result<Vec<usize>> {
    Ok(match suite {
        "core" => vec![1],
        "subordination" => vec![2, 3, 4],
        "kernel" => vec![5],
        "inequalities" => vec![8, 9, 10, 11],
        "counterexamples" => vec![6, 7, 12],
        "search" => vec![13],
        "all" => (1..=CRITERIA).collect(),
        other => return Err(Error::invalid_input(format!("unknown suite '{other}', expected one of {}", SUITES.join(", ")))),
    })
}

pub fn run_suite(suite: &str, params: &SuiteParams) -> Result<Vec<VerificationReport>> {
    let mut out = Vec::new();
    if suite == "core" || suite == "all" {
        out.extend(guard("core_invariants", || core_invariants(params)));
    }
    for k in suite_criteria(suite)? {
        out.extend(criterion(k, params)?);
    }
    if suite == "inequalities" {
        out.extend(guard("decay_rate", || decay_checks(params)));
    }
    Ok(out)
}

/// Reports for criterion `k` (1-based), each tagged with a `criterion` param.
pub fn criterion(k: usize, params: &SuiteParams) -> Result<Vec<VerificationReport>> {
    let reports = match k {
        1 => guard("transform", || transform_checks(params)),
        2 => guard("subordination_identity", || subordination_checks(params)),
        3 => guard("half_stable_closed_form", || closed_form_checks()),
        4 => guard("tail_asymptotic", || tail_checks(params)),
        5 => guard("modified_kernel", || kernel_checks(params)),
        6 => guard("counterexample_sum", || counterexample_sum_checks()),
        7 => guard("fractional_counterexample", || fractional_checks()),
        8 => guard("heat_smoothing_l1", || smoothing_checks(params)),
        9 => guard("bonami", || bonami_checks(params)),
        10 => guard("tilde_cp", || cp_checks(params)),
        11 => guard("derivative_identity", || derivative_checks(params)),
        12 => guard("gaussian_counterexample", || gaussian_checks()),
        13 => {
            let mut r = guard("decay_rate", || decay_checks(params));
            r.extend(guard("extremal_search", || search_checks(params)));
            r
        }
        _ => return Err(Error::invalid_input(format!("criterion {k} outside 1..={CRITERIA}"))),
    };
    Ok(reports.into_iter().map(|r| r.param("criterion", k)).collect())
}

fn guard(name: &str, check: impl FnOnce() -> Result<Vec<VerificationReport>>) -> Vec<VerificationReport> {
    match check() {
        Ok(r) => r,
        Err(e) => vec![VerificationReport::failed(name, e.to_string())],
    }
}

/// Report for a count of violations that must be zero.
fn violations(name: &str, count: usize, cases: usize) -> VerificationReport {
    VerificationReport::at_most(name, count as f64, 0.0, 0.0).param("cases", cases)
}

fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..points).map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp()).collect()
}

fn core_invariants(params: &SuiteParams) -> Result<Vec<VerificationReport>> {
    let n = params.n.unwrap_or(12).min(16);
    let gamma = params.gamma.unwrap_or(0.5);
    let t = params.t.unwrap_or(0.7);
    let f = uniform_values(&mut case_rng(params.seed, 0), n)?;
    let g = uniform_values(&mut case_rng(params.seed, 1), n)?;
    let scale = lp_norm(&f, 2.0)? * lp_norm(&g, 2.0)?;
    // E grad f . grad g = -E f Lap g
    let lap_g = apply_multiplier(&g, &DegreeMultiplier::Laplacian);
    let lhs = dirichlet_form(&f, &g)?;
    let rhs = -f.values().iter().zip(lap_g.values()).map(|(a, b)| a * b).sum::<f64>() / f.len() as f64;
    let dirichlet = VerificationReport::near("laplacian_dirichlet_form", lhs, rhs, 1e-10 * scale.max(1.0)).param("n", n);
    // semigroup: e^(s L) e^(t L) = e^((s+t) L)
    let twice = apply_multiplier(&apply_multiplier(&f, &DegreeMultiplier::heat(t, gamma)?), &DegreeMultiplier::heat(t, gamma)?);
    let once = apply_multiplier(&f, &DegreeMultiplier::heat(2.0 * t, gamma)?);
    let semigroup_err = twice.values().iter().zip(once.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let semigroup = VerificationReport::at_most("heat_semigroup", semigroup_err, 1e-12 * f.max_abs().max(1.0), 0.0)
        .param("n", n)
        .param("gamma", gamma)
        .param("t", t);
    // heat operator = convolution with its kernel, which is a probability density
    let kernel = heat_kernel(n, t, gamma)?;
    let conv = group_convolve(&kernel, &f)?;
    let conv_err = conv.values().iter().zip(apply_multiplier(&f, &DegreeMultiplier::heat(t, gamma)?).values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let min_k = kernel.values().iter().cloned().fold(f64::INFINITY, f64::min);
    let convolution = VerificationReport::at_most("heat_kernel_convolution", conv_err, 1e-12 * f.max_abs().max(1.0), 0.0)
        .param("n", n)
        .param("min_kernel", min_k)
        .condition("kernel_nonnegative", min_k >= -1e-15)
        .condition("kernel_mass_one", (lp_norm(&kernel, 1.0)? - 1.0).abs() <= 1e-12);
    Ok(vec![dirichlet, semigroup, convolution])
}

fn transform_checks(params: &SuiteParams) -> Result<Vec<VerificationReport>> {
    let n = params.n.unwrap_or(16);
    let cases = 1000;
    let errs: Vec<(f64, f64)> = (0..cases as u64)
        .into_par_iter()
        .map(|i| -> Result<(f64, f64)> {
            let f = uniform_values(&mut case_rng(params.seed, i), n)?;
            let a = fwht(&f);
            let back = ifwht(&a);
            let top = f.max_abs();
            let round = f.values().iter().zip(back.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / top;
            let l2 = lp_norm(&f, 2.0)?.powi(2);
            Ok((round, (a.energy() - l2).abs() / l2))
        })
        .collect::<Result<_>>()?;
    let round = errs.iter().map(|e| e.0).fold(0.0, f64::max);
    let parseval = errs.iter().map(|e| e.1).fold(0.0, f64::max);
    let big = uniform_values(&mut case_rng(params.seed, 1_000_000), 20)?;
    let start = Instant::now();
    let a = fwht(&big);
    let secs = start.elapsed().as_secs_f64();
    std::hint::black_box(&a);
    Ok(vec![
        VerificationReport::at_most("fwht_roundtrip", round, 1e-10, 0.0).param("n", n).param("cases", cases),
        VerificationReport::at_most("parseval", parseval, 1e-10, 0.0).param("n", n).param("cases", cases),
        VerificationReport::at_most("fwht_time_n20_seconds", secs, 2.0, 0.0).param("n", 20),
    ])
}

fn subordination_checks(params: &SuiteParams) -> Result<Vec<VerificationReport>> {
    let gammas = match params.gamma {
        Some(g) => vec![g],
        None => vec![0.3, 0.5, 0.7, 0.9],
    };
    let start = Instant::now();
    let mut out = Vec::new();
    for g in gammas {
        let ev = StableDensityEvaluator::new(g)?;
        out.push(verify_subordination(&ev, &[0.0, 0.1, 1.0, 10.0, 50.0])?);
    }
    out.push(VerificationReport::at_most("subordination_seconds", start.elapsed().as_secs_f64(), 60.0, 0.0));
    Ok(out)
}

/// Levy density `tau^(-3/2) e^(-1/(4 tau)) / (2 sqrt(pi))`, the stable law of index 1/2.
pub fn levy_density(tau: f64) -> f64 {
    if tau <= 0.0 {
        return 0.0;
    }
    (-0.25 / tau).exp() * tau.powf(-1.5) / (2.0 * std::f64::consts::PI.sqrt())
}

fn closed_form_checks() -> Result<Vec<VerificationReport>> {
    let ev = StableDensityEvaluator::new(0.5)?;
    let grid = log_grid(0.05, 100.0, 400);
    let diffs: Vec<f64> = grid
        .par_iter()
        .map(|&tau| Ok((ev.density(tau)? - levy_density(tau)).abs()))
        .collect::<Result<_>>()?;
    let (i_worst, worst) = diffs.iter().enumerate().fold((0, 0.0), |b, (i, d)| if *d > b.1 { (i, *d) } else { b });
    let tail = (2.0 * std::f64::consts::PI.sqrt() - 1.0 / ev.tail_constant()).abs();
    Ok(vec![
        VerificationReport::at_most("half_stable_density", worst, 1e-7, 0.0)
            .param("points", grid.len())
            .param("worst_tau", grid[i_worst]),
        VerificationReport::at_most("half_stable_tail_constant", tail, 1e-8, 0.0),
    ])
}

fn tail_checks(params: &SuiteParams) -> Result<Vec<VerificationReport>> {
    let gammas = match params.gamma {
        Some(g) => vec![g],
        None => vec![0.3, 0.5, 0.7],
    };
    gammas
        .into_iter()
        .map(|g| {
            let ev = StableDensityEvaluator::new(g)?;
            let ratio = ev.tail_ratio(1e3)?;
            Ok(VerificationReport::near("tail_ratio", ratio, 1.0, 0.02).param("gamma", g).param("tau", 1e3))
        })
        .collect()
}

fn kernel_checks(params: &SuiteParams) -> Result<Vec<VerificationReport>> {
    let gamma = params.gamma.unwrap_or(0.5);
    let n = params.n.unwrap_or(12);
    let bands: Vec<BTreeSet<usize>> = match &params.band {
        Some(b) => vec![b.clone()],
        None => vec![[1, 2].into(), [2, 3, 7].into()],
    };
    let mut out = Vec::new();
    for band in bands {
        let plan = build_plan(gamma, &band)?;
        for frac in [0.25, 0.5, 1.0] {
            out.push(verify_modification(&plan, n, frac * plan.t0)?.param("t_over_t0", frac));
        }
    }
    Ok(out)
}

/// `||e^(t Lap) delta_pair(n)||_1` by transforming all `2^n` values.
pub fn brute_force_heat_l1(n: usize, t: f64) -> Result<f64> {
    let f = delta_pair(n)?;
    lp_norm(&apply_multiplier(&f, &DegreeMultiplier::heat(t, 1.0)?), 1.0)
}

fn counterexample_sum_checks() -> Result<Vec<VerificationReport>> {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for n in 1..=16 {
        let exact = exact_heat_l1(n, 1.0)?;
        let brute = brute_force_heat_l1(n, 1.0)?;
        worst = worst.max((exact - brute).abs() / brute.abs());
    }
    let big = exact_heat_l1(2000, 1.0)?;
    Ok(vec![
        VerificationReport::at_most("exact_vs_brute_force", worst, 1e-12, 0.0).param("n_max", 16).param("t", 1.0),
        VerificationReport::at_least("exact_heat_l1_n2000", big, 0.49, 0.0).param("n", 2000).param("t", 1.0),
        VerificationReport::at_most("counterexample_seconds", start.elapsed().as_secs_f64(), 30.0, 0.0),
    ])
}

fn fractional_checks() -> Result<Vec<VerificationReport>> {
    let ev = StableDensityEvaluator::new(0.5)?;
    let small = fractional_l1_bound(10_000, 1.0, &ev)?;
    let large = fractional_l1_bound(1_000_000, 1.0, &ev)?;
    Ok(vec![
        VerificationReport::at_least("fractional_l1_bound_n1e4", small, 0.4, 0.0).param("n", 10_000).param("gamma", 0.5),
        VerificationReport::near("fractional_l1_bound_n1e6", large, 0.5, 0.05).param("n", 1_000_000).param("gamma", 0.5),
    ])
}

fn n_range(params: &SuiteParams) -> (usize, usize) {
    let top = params.n.unwrap_or(12).clamp(1, 12);
    (top.min(4), top)
}

fn smoothing_checks(params: &SuiteParams) -> Result<Vec<VerificationReport>> {
    let (lo, hi) = n_range(params);
    let cases = 200;
    let results: Vec<(usize, f64)> = (0..cases as u64)
        .into_par_iter()
        .map(|i| -> Result<(usize, f64)> {
            let mut rng = case_rng(params.seed, i);
            let n = rng.gen_range(lo..=hi);
            let k = rng.gen_range(1..=3usize.min(n));
            let mut degrees: Vec<usize> = (1..k).filter(|_| rng.gen::<bool>()).collect();
            degrees.push(k);
            let f = rademacher_spectrum(&mut rng, n, &degrees)?;
            let mut bad = 0;
            let mut worst = f64::NEG_INFINITY;
            for mult in [3.0, 6.0] {
                let r = heat_smoothing_l1(&f, mult * k as f64 * 3f64.ln())?;
                worst = worst.max(r.measured / r.bound);
                bad += usize::from(!r.pass);
            }
            Ok((bad, worst))
        })
        .collect::<Result<_>>()?;
    let bad = results.iter().map(|r| r.0).sum();
    let worst = results.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(vec![violations("heat_smoothing_violations", bad, 2 * cases).param("worst_ratio_to_bound", worst)])
}

fn bonami_checks(params: &SuiteParams) -> Result<Vec<VerificationReport>> {
    let (lo, hi) = n_range(params);
    let cases = 500;
    let results: Vec<(bool, f64)> = (0..cases as u64)
        .into_par_iter()
        .map(|i| -> Result<(bool, f64)> {
            let mut rng = case_rng(params.seed ^ 0x9e37_79b9, i);
            let n = rng.gen_range(lo..=hi);
            let k = rng.gen_range(1..=4usize.min(n));
            let mut degrees: Vec<usize> = (0..k).filter(|_| rng.gen::<bool>()).collect();
            degrees.push(k);
            let f = rademacher_spectrum(&mut rng, n, &degrees)?;
            let (ratio, deg) = bonami_ratio(&f)?;
            let bound = 3f64.powf(0.5 * deg as f64);
            Ok((ratio <= bound * (1.0 + 1e-12), ratio / bound))
        })
        .collect::<Result<_>>()?;
    let bad = results.iter().filter(|r| !r.0).count();
    let worst = results.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(vec![violations("bonami_violations", bad, cases).param("worst_ratio_to_bound", worst)])
}

fn cp_checks(params: &SuiteParams) -> Result<Vec<VerificationReport>> {
    let at2 = tilde_cp(2.0)?;
    let grid: Vec<f64> = (1..=50).map(|i| 64f64.powf(i as f64 / 50.0)).collect();
    let cps: Vec<f64> = grid.par_iter().map(|&p| tilde_cp(p)).collect::<Result<_>>()?;
    let lower_bad = grid.iter().zip(&cps).filter(|(p, c)| **c < cp_lower(**p) - 1e-9).count();
    let triples = 100_000;
    let abp_bad = (0..triples as u64 / 1000)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = case_rng(params.seed ^ 0xabcd, chunk);
            (0..1000)
                .filter(|_| {
                    let j = rng.gen_range(0..grid.len());
                    let (a, b) = (rng.gen_range(-2.0..=2.0), rng.gen_range(-2.0..=2.0));
                    let (lhs, rhs) = abp_gap_with(cps[j], grid[j], a, b);
                    lhs < rhs - 1e-12 * (lhs.abs() + rhs.abs())
                })
                .count()
        })
        .sum();
    Ok(vec![
        VerificationReport::near("tilde_cp_at_2", at2, 1.0, 1e-9),
        violations("tilde_cp_lower_bound_violations", lower_bad, grid.len()),
        violations("abp_gap_violations", abp_bad, triples),
    ])
}

fn derivative_checks(params: &SuiteParams) -> Result<Vec<VerificationReport>> {
    let hi = params.n.unwrap_or(10).clamp(1, 10);
    let h = 1e-4;
    let wanted = 100;
    let mut worst: f64 = 0.0;
    let mut skipped = 0;
    let mut done = 0;
    let mut index = 0u64;
    while done < wanted {
        if index > 100 * wanted as u64 {
            return Err(Error::numeric("too many draws near the zero set", skipped as f64));
        }
        let mut rng = case_rng(params.seed ^ 0x5eed, index);
        index += 1;
        let gamma = if done % 2 == 0 { 0.5 } else { 1.0 };
        let n = rng.gen_range(1.min(hi)..=hi);
        let f = uniform_values(&mut rng, n)?;
        let t = rng.gen_range(0.2..2.0);
        let r = derivative_identity_check(&f, gamma, t, h)?;
        if r.status == Status::Inconclusive {
            skipped += 1;
            continue;
        }
        worst = worst.max((r.measured - r.bound).abs());
        done += 1;
    }
    Ok(vec![VerificationReport::at_most("derivative_identity_max_error", worst, 1e-6, 0.0)
        .param("cases", done)
        .param("skipped_near_zero_set", skipped)
        .param("h", h)])
}

fn gaussian_checks() -> Result<Vec<VerificationReport>> {
    let (integral, slope) = gaussian_ou_flatness()?;
    Ok(vec![
        VerificationReport::at_most("ou_sign_integral_x3", integral.abs(), 1e-10, 0.0),
        VerificationReport::at_least("ou_defect_exponent", slope, 1.9, 0.0).param("t_min", 1e-3).param("t_max", 1e-1),
    ])
}

fn decay_checks(params: &SuiteParams) -> Result<Vec<VerificationReport>> {
    let (lo, hi) = n_range(params);
    let t_grid = [0.1, 0.5, 1.0, 2.0, 4.0];
    let mut out = Vec::new();
    for p in [1.0, 1.5, 2.0, 4.0] {
        let mins: Vec<f64> = (lo..=hi)
            .into_par_iter()
            .map(|n| {
                let mut rng = case_rng(params.seed ^ 0xdeca, (n as u64) << 8 | (p * 4.0) as u64);
                let (f, gamma) = if p == 1.0 {
                    (rademacher_spectrum(&mut rng, n, &[1, 2])?, 0.5)
                } else {
                    (uniform_values(&mut rng, n)?, params.gamma.unwrap_or(1.0))
                };
                Ok(decay_rate(&f, p, gamma, &t_grid)?.1)
            })
            .collect::<Result<_>>()?;
        let min = mins.iter().cloned().fold(f64::INFINITY, f64::min);
        out.push(
            VerificationReport::at_least("decay_rate_min", min, 0.0, 0.0)
                .param("p", p)
                .param("n_range", vec![lo, hi])
                .condition("strictly_positive", min > 0.0)
                .with_extra(mins.iter().zip(lo..=hi).map(|(m, n)| record([("n", n.into()), ("min_rate", (*m).into())])).collect()),
        );
    }
    Ok(out)
}

fn search_checks(params: &SuiteParams) -> Result<Vec<VerificationReport>> {
    let n = params.n.unwrap_or(8).clamp(1, 12);
    let t = params.t.unwrap_or(1.0);
    let mut out = Vec::new();
    for gamma in [1.0, 0.5] {
        let cfg = SearchConfig { seed: params.seed, ..SearchConfig::new(n, 2.0, gamma, t) };
        let found = worst_ratio_search(&cfg)?;
        out.push(
            VerificationReport::near("search_p2_optimum", found.ratio, (-t).exp(), 1e-6)
                .param("n", n)
                .param("gamma", gamma)
                .param("t", t),
        );
    }
    let base = SearchConfig { seed: params.seed, ..SearchConfig::new(n, 2.0, params.gamma.unwrap_or(1.0), t) };
    let scan = constant_scan_with(&base, &[1.1, 1.5, 2.0])?;
    let trend = rates_trend_down(&scan, TREND_NOISE);
    let low = scan[0].1;
    out.push(
        VerificationReport::at_most("search_rate_blow_down", low, scan[1].1 * (1.0 + TREND_NOISE), 0.0)
            .param("n", n)
            .param("t", t)
            .condition("trend_nonincreasing", trend)
            .with_extra(scan.iter().map(|(p, r)| record([("p", (*p).into()), ("rate", (*r).into())])).collect()),
    );
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite_is_rejected() {
        assert!(matches!(run_suite("bogus", &SuiteParams::default()), Err(Error::InvalidInput(_))));
        assert!(criterion(0, &SuiteParams::default()).is_err());
        assert!(criterion(14, &SuiteParams::default()).is_err());
    }

    #[test]
    fn levy_density_matches_laplace_transform() {
        // int e^(-lambda tau) p(tau) dtau = e^(-sqrt(lambda))
        let f = |tau: f64| (-tau).exp() * levy_density(tau);
        let r = crate::quad::integrate(f, 0.0, 200.0, crate::quad::Tolerance::abs(1e-13), 200).unwrap();
        assert!((r.value - (-1.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn errors_become_failing_reports() {
        let r = guard("x", || Err(Error::numeric("boom", 1.0)));
        assert_eq!(r.len(), 1);
        assert!(!r[0].pass);
    }

    #[test]
    fn core_suite_small() {
        let params = SuiteParams { n: Some(6), seed: 7, ..Default::default() };
        let reports = guard("core_invariants", || core_invariants(&params));
        assert!(reports.iter().all(|r| r.pass), "{reports:?}");
    }
}
