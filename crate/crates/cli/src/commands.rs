use std::collections::{BTreeMap, BTreeSet};

use cube_spectral::counterexamples::{
    almost1_report, fractional_heat_l1, fractional_l1_bound, gaussian_l1, defect_grid, GaussianPolynomial,
};
use cube_spectral::kernel::{build_plan, modification_summary};
use cube_spectral::report::record;
use cube_spectral::search::{rates_trend_down, worst_ratio_search, Projection, SearchConfig, TREND_NOISE};
use cube_spectral::suites::{criterion, levy_density, run_suite, SuiteParams};
use cube_spectral::{Error, Result, StableDensityEvaluator, VerificationReport};
use rayon::prelude::*;
use serde_json::Value;

use crate::manifest::RunManifest;
use crate::output::float;
use crate::{Common, Outcome, Which};

fn base_params(common: &Common) -> BTreeMap<String, Value> {
    BTreeMap::from([
        ("n".to_string(), serde_json::to_value(common.n).unwrap()),
        ("p".to_string(), serde_json::to_value(common.p).unwrap()),
        ("gamma".to_string(), serde_json::to_value(common.gamma).unwrap()),
        ("t".to_string(), serde_json::to_value(common.t).unwrap()),
        ("band".to_string(), serde_json::to_value(&common.band).unwrap()),
        ("seed".to_string(), Value::from(common.seed)),
    ])
}

fn outcome(command: &str, params: BTreeMap<String, Value>, common: &Common, reports: Vec<VerificationReport>, header: Vec<&'static str>, rows: Vec<Vec<String>>) -> Outcome {
    let mut manifest = RunManifest::new(command, params, common.seed);
    manifest.reports = reports;
    Outcome { manifest, table: (header, rows) }
}

pub fn verify(suite: Option<&str>, k: Option<usize>, common: &Common) -> Result<Outcome> {
    let sp = SuiteParams {
        n: common.n,
        p: common.p,
        gamma: common.gamma,
        t: common.t,
        band: common.band_set(),
        seed: common.seed,
    };
    let mut params = base_params(common);
    let reports = match (suite, k) {
        (Some(s), _) => {
            params.insert("suite".into(), Value::from(s));
            run_suite(s, &sp)?
        }
        (None, Some(k)) => {
            params.insert("criterion".into(), Value::from(k));
            criterion(k, &sp)?
        }
        (None, None) => return Err(Error::InvalidInput("verify needs --suite or --criterion".into())),
    };
    let rows = reports
        .iter()
        .map(|r| {
            vec![
                r.name.clone(),
                serde_json::to_string(&r.params).unwrap(),
                float(r.measured),
                float(r.bound),
                r.pass.to_string(),
            ]
        })
        .collect();
    Ok(outcome("verify", params, common, reports, vec!["name", "params", "measured", "bound", "pass"], rows))
}

pub fn density(tau_min: f64, tau_max: f64, points: usize, common: &Common) -> Result<Outcome> {
    if !(tau_min > 0.0 && tau_max > tau_min && tau_max.is_finite() && points >= 2) {
        return Err(Error::InvalidParameter("need 0 < tau_min < tau_max and points >= 2".into()));
    }
    let gamma = common.gamma.unwrap_or(0.5);
    let ev = StableDensityEvaluator::new(gamma)?;
    let taus: Vec<f64> = (0..points)
        .map(|i| tau_min * (tau_max / tau_min).powf(i as f64 / (points - 1) as f64))
        .collect();
    let values: Vec<(f64, f64)> = taus
        .par_iter()
        .map(|&tau| Ok((ev.density(tau)?, ev.tail_ratio(tau)?)))
        .collect::<Result<_>>()?;
    let min = values.iter().map(|v| v.0).fold(f64::INFINITY, f64::min);
    let mut reports = vec![VerificationReport::at_least("density_nonnegative", min, 0.0, 1e-9)
        .param("gamma", gamma)
        .param("tail_constant", ev.tail_constant())];
    if gamma == 0.5 {
        let worst = taus.iter().zip(&values).map(|(t, v)| (v.0 - levy_density(*t)).abs()).fold(0.0, f64::max);
        reports.push(VerificationReport::at_most("half_stable_closed_form", worst, 1e-7, 0.0));
    }
    let rows = taus.iter().zip(&values).map(|(t, v)| vec![float(*t), float(v.0), float(v.1)]).collect();
    let mut params = base_params(common);
    params.insert("gamma".into(), Value::from(gamma));
    params.insert("tau_min".into(), Value::from(tau_min));
    params.insert("tau_max".into(), Value::from(tau_max));
    params.insert("points".into(), Value::from(points));
    Ok(outcome("density", params, common, reports, vec!["tau", "p_gamma", "tail_ratio"], rows))
}

pub fn kernel(common: &Common) -> Result<Outcome> {
    let gamma = common.gamma.unwrap_or(0.5);
    let band = common.band_set().unwrap_or_else(|| BTreeSet::from([1, 2]));
    let n = common.n.unwrap_or(12);
    let plan = build_plan(gamma, &band)?;
    let times = match common.t {
        Some(t) => vec![t],
        None => vec![0.25 * plan.t0, 0.5 * plan.t0, plan.t0],
    };
    let mut reports = Vec::new();
    let mut rows = Vec::new();
    for t in times {
        let s = modification_summary(&plan, n, t)?;
        rows.push(vec![
            float(s.gamma),
            serde_json::to_string(&s.band).unwrap(),
            float(s.kappa),
            float(s.t0),
            float(s.t),
            s.n.to_string(),
            float(s.min_value),
            float(s.band_dev),
            float(s.l1_norm),
            float(s.bound),
            s.pass.to_string(),
        ]);
        let summary = match serde_json::to_value(&s).unwrap() {
            Value::Object(m) => m.into_iter().collect(),
            _ => unreachable!("summary is a struct"),
        };
        reports.push(s.to_report().with_extra(vec![summary]));
    }
    let mut params = base_params(common);
    params.insert("gamma".into(), Value::from(gamma));
    params.insert("band".into(), serde_json::to_value(&band).unwrap());
    params.insert("n".into(), Value::from(n));
    let header = vec!["gamma", "band", "kappa", "t0", "t", "n", "min_value", "band_dev", "l1_norm", "bound", "pass"];
    Ok(outcome("kernel", params, common, reports, header, rows))
}

pub fn counterexample(which: Which, common: &Common) -> Result<Outcome> {
    let t = common.t.unwrap_or(1.0);
    let mut params = base_params(common);
    params.insert("t".into(), Value::from(t));
    let header = vec!["n", "t", "gamma", "value", "bound"];
    let (name, reports, rows) = match which {
        Which::Delta => {
            let ns = common.n.map_or(vec![11, 101, 1001, 2000], |n| vec![n]);
            let mut reports = Vec::new();
            let mut rows = Vec::new();
            for n in ns {
                let r = almost1_report(n, t)?;
                rows.push(vec![n.to_string(), float(t), float(1.0), float(r.measured), float(r.bound)]);
                reports.push(r);
            }
            ("delta", reports, rows)
        }
        Which::Fractional => {
            let gamma = common.gamma.unwrap_or(0.5);
            params.insert("gamma".into(), Value::from(gamma));
            let ev = StableDensityEvaluator::new(gamma)?;
            let ns = common.n.map_or(vec![100, 10_000, 1_000_000], |n| vec![n]);
            let mut reports = Vec::new();
            let mut rows = Vec::new();
            for n in ns {
                let value = fractional_heat_l1(n, t, &ev)?;
                let bound = fractional_l1_bound(n, t, &ev)?;
                rows.push(vec![n.to_string(), float(t), float(gamma), float(value), float(bound)]);
                reports.push(
                    VerificationReport::at_least("fractional_heat_l1", value, bound, 1e-6)
                        .param("n", n)
                        .param("t", t)
                        .param("gamma", gamma),
                );
            }
            ("fractional", reports, rows)
        }
        Which::Gaussian => {
            let f = GaussianPolynomial::cubic();
            let base = gaussian_l1(&f)?;
            let mut rows = Vec::new();
            let mut extra = Vec::new();
            for s in defect_grid(21) {
                let ratio = gaussian_l1(&f.ou_heat(s))? / base;
                rows.push(vec!["3".to_string(), float(s), float(1.0), float(ratio), float(1.0)]);
                extra.push(record([("t", s.into()), ("ratio", ratio.into())]));
            }
            let mut reports = criterion(12, &SuiteParams::default())?;
            if let Some(last) = reports.last_mut() {
                last.extra = extra;
            }
            ("gaussian", reports, rows)
        }
    };
    params.insert("which".into(), Value::from(name));
    Ok(outcome("counterexample", params, common, reports, header, rows))
}

pub fn search(p_grid: Option<&[f64]>, iterations: usize, restarts: usize, common: &Common) -> Result<Outcome> {
    let n = common.n.unwrap_or(8);
    let gamma = common.gamma.unwrap_or(1.0);
    let t = common.t.unwrap_or(1.0);
    let ps = match p_grid {
        Some(g) => {
            if g.iter().any(|p| !(*p > 1.0)) {
                return Err(Error::InvalidParameter("--p-grid values must exceed 1".into()));
            }
            g.to_vec()
        }
        None => vec![common.p.unwrap_or(2.0)],
    };
    let projection = match common.band_set() {
        Some(b) => Projection::Band(b),
        None => Projection::MeanZero,
    };
    let lowest = match &projection {
        Projection::Band(b) => *b.iter().next().unwrap_or(&1),
        Projection::MeanZero => 1,
    };
    let mut reports = Vec::new();
    let mut rows = Vec::new();
    let mut scan = Vec::new();
    for &p in &ps {
        let cfg = SearchConfig {
            iterations,
            restarts,
            seed: common.seed,
            projection: projection.clone(),
            ..SearchConfig::new(n, p, gamma, t)
        };
        let out = worst_ratio_search(&cfg)?;
        let rate = -out.ratio.ln() / t;
        scan.push((p, rate));
        rows.push(vec![float(p), float(gamma), float(t), n.to_string(), float(out.ratio), float(rate), restarts.to_string()]);
        reports.push(
            VerificationReport::at_most("search_contraction", out.ratio, 1.0, 1e-12)
                .param("p", p)
                .param("rate", rate)
                .param("best_restart", out.restart),
        );
        if p == 2.0 {
            let optimum = (-t * (lowest as f64).powf(gamma)).exp();
            reports.push(VerificationReport::near("search_p2_optimum", out.ratio, optimum, 1e-6).param("lowest_degree", lowest));
        }
    }
    if scan.len() > 1 {
        let trend = rates_trend_down(&scan, TREND_NOISE);
        reports.push(VerificationReport::at_least("rate_trend", f64::from(u8::from(trend)), 1.0, 0.0).param("noise", TREND_NOISE));
    }
    let mut params = base_params(common);
    params.insert("n".into(), Value::from(n));
    params.insert("gamma".into(), Value::from(gamma));
    params.insert("t".into(), Value::from(t));
    params.insert("p_grid".into(), serde_json::to_value(&ps).unwrap());
    params.insert("iterations".into(), Value::from(iterations));
    params.insert("restarts".into(), Value::from(restarts));
    let header = vec!["p", "gamma", "t", "n", "ratio", "rate", "restarts"];
    Ok(outcome("search", params, common, reports, header, rows))
}
