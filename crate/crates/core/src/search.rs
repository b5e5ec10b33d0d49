//! Multi-start coordinate ascent for the worst ratio
//! `||e^(t Lap_gamma) f0||_p / ||f0||_p` over projected functions `f0`.

use std::collections::BTreeSet;

use rand::Rng;
use rayon::prelude::*;

use crate::cube::{check_exponent, ifwht, lp_norm_slice, CubeFunction, DegreeMultiplier, Spectrum};
use crate::error::{Error, Result};
use crate::families::{case_rng, rademacher_spectrum};

pub const MAX_SEARCH_DIM: usize = 12;
pub const DEFAULT_RESTARTS: usize = 32;
/// Relative slack allowed when checking the p -> 1 trend of measured rates.
pub const TREND_NOISE: f64 = 0.05;

#[derive(Clone, Debug, PartialEq)]
pub enum Projection {
    MeanZero,
    Band(BTreeSet<usize>),
}

impl Projection {
    fn multiplier(&self) -> DegreeMultiplier {
        match self {
            Projection::MeanZero => DegreeMultiplier::projection(1..=MAX_SEARCH_DIM),
            Projection::Band(d) => DegreeMultiplier::DegreeProjection(d.clone()),
        }
    }

    fn lowest_degree(&self) -> usize {
        match self {
            Projection::MeanZero => 1,
            Projection::Band(d) => d.iter().next().copied().unwrap_or(1),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchConfig {
    pub n: usize,
    pub p: f64,
    pub gamma: f64,
    pub t: f64,
    /// Single-coordinate trial steps per restart.
    pub iterations: usize,
    pub restarts: usize,
    pub seed: u64,
    /// First step, relative to `max |f0|`.
    pub initial_step: f64,
    /// Step multiplier applied after every iteration.
    pub decay: f64,
    pub projection: Projection,
}

impl SearchConfig {
    pub fn new(n: usize, p: f64, gamma: f64, t: f64) -> Self {
        SearchConfig {
            n,
            p,
            gamma,
            t,
            iterations: 2000,
            restarts: DEFAULT_RESTARTS,
            seed: 0,
            initial_step: 0.5,
            decay: 0.998,
            projection: Projection::MeanZero,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > MAX_SEARCH_DIM {
            return Err(Error::invalid_parameter(format!("search needs 1 <= n <= {MAX_SEARCH_DIM}, got {}", self.n)));
        }
        check_exponent(self.p)?;
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(Error::invalid_parameter(format!("heat time t = {} must be > 0", self.t)));
        }
        DegreeMultiplier::heat(self.t, self.gamma)?;
        if self.restarts == 0 {
            return Err(Error::invalid_parameter("restarts must be >= 1"));
        }
        if !(self.initial_step > 0.0 && self.decay > 0.0 && self.decay <= 1.0) {
            return Err(Error::invalid_parameter("step schedule needs initial_step > 0 and 0 < decay <= 1"));
        }
        if let Projection::Band(d) = &self.projection {
            if d.is_empty() || d.iter().any(|&k| k > self.n) {
                return Err(Error::invalid_parameter(format!("band {d:?} must be nonempty within 0..={}", self.n)));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchOutcome {
    /// Best projected function found.
    pub f: CubeFunction,
    pub ratio: f64,
    pub restart: usize,
}

/// Values of `z -> sum_S m(|S|) z^S`, so `(M f)(y) = 2^-n sum_x k(x xor y) f(x)`.
fn kernel_values(n: usize, m: impl Fn(usize) -> f64) -> Result<Vec<f64>> {
    let profile: Vec<f64> = (0..=n).map(m).collect();
    Ok(ifwht(&Spectrum::from_degree_profile(n, &profile)?).into_values())
}

/// Scales both vectors so that `max |g| = 1`; returns the new maximum.
fn rescale(g: &mut [f64], h: &mut [f64]) -> f64 {
    let top = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if top > 0.0 && top != 1.0 {
        let inv = 1.0 / top;
        g.iter_mut().for_each(|v| *v *= inv);
        h.iter_mut().for_each(|v| *v *= inv);
    }
    if top > 0.0 {
        1.0
    } else {
        0.0
    }
}

struct Ascent<'a> {
    cfg: &'a SearchConfig,
    proj_kernel: Vec<f64>,
    heat_kernel: Vec<f64>,
}

impl Ascent<'_> {
    fn project(&self, f: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let len = f.len();
        let scale = 1.0 / len as f64;
        let mut g = vec![0.0; len];
        let mut h = vec![0.0; len];
        for (x, &fx) in f.iter().enumerate() {
            if fx == 0.0 {
                continue;
            }
            let c = fx * scale;
            for y in 0..len {
                g[y] += c * self.proj_kernel[x ^ y];
                h[y] += c * self.heat_kernel[x ^ y];
            }
        }
        (g, h)
    }

    fn ratio(&self, g: &[f64], h: &[f64]) -> f64 {
        let den = lp_norm_slice(g, self.cfg.p);
        if den > 0.0 {
            lp_norm_slice(h, self.cfg.p) / den
        } else {
            0.0
        }
    }

    fn initial<R: Rng>(&self, rng: &mut R, restart: usize) -> Result<Vec<f64>> {
        let n = self.cfg.n;
        let len = 1usize << n;
        Ok(match restart % 3 {
            0 => (0..len).map(|_| rng.gen_range(-1.0..=1.0)).collect(),
            1 => {
                let x = rng.gen_range(0..len);
                let mut f = vec![0.0; len];
                f[x] = 1.0;
                f[x ^ (len - 1)] = -1.0;
                f
            }
            _ => rademacher_spectrum(rng, n, &[self.cfg.projection.lowest_degree()])?.into_values(),
        })
    }

    fn run(&self, restart: usize) -> Result<(Vec<f64>, f64)> {
        let cfg = self.cfg;
        let mut rng = case_rng(cfg.seed, restart as u64);
        let len = 1usize << cfg.n;
        let f = self.initial(&mut rng, restart)?;
        let (mut g, mut h) = self.project(&f);
        while g.iter().all(|v| v.abs() < 1e-300) {
            let f: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            (g, h) = self.project(&f);
        }
        // the iterate is the projected function itself, kept at max |g| = 1
        let mut top = rescale(&mut g, &mut h);
        let mut best = self.ratio(&g, &h);
        let mut step = cfg.initial_step;
        let inv = 1.0 / len as f64;
        let (mut g_try, mut h_try) = (vec![0.0; len], vec![0.0; len]);
        for _ in 0..cfg.iterations {
            let x = rng.gen_range(0..len);
            let size = step * top;
            let mut accepted: Option<(f64, f64)> = None;
            for delta in [size, -size] {
                let c = delta * inv;
                for y in 0..len {
                    g_try[y] = g[y] + c * self.proj_kernel[x ^ y];
                    h_try[y] = h[y] + c * self.heat_kernel[x ^ y];
                }
                let r = self.ratio(&g_try, &h_try);
                if r > best && accepted.map_or(true, |(_, ra)| r > ra) {
                    accepted = Some((delta, r));
                }
            }
            if let Some((delta, r)) = accepted {
                let c = delta * inv;
                for y in 0..len {
                    g[y] += c * self.proj_kernel[x ^ y];
                    h[y] += c * self.heat_kernel[x ^ y];
                }
                top = rescale(&mut g, &mut h);
                best = r;
            }
            step *= cfg.decay;
        }
        // recompute from scratch to shed accumulated rounding
        let (g, h) = self.project(&g);
        let ratio = self.ratio(&g, &h);
        Ok((g, ratio))
    }
}

/// Best ratio over `cfg.restarts` seeded restarts. Restarts cycle through
/// uniform random values, antipodal delta pairs and random spectra on the
/// lowest admissible degree.
pub fn worst_ratio_search(cfg: &SearchConfig) -> Result<SearchOutcome> {
    cfg.validate()?;
    let proj = cfg.projection.multiplier();
    let heat = DegreeMultiplier::heat(cfg.t, cfg.gamma)?;
    let ascent = Ascent {
        cfg,
        proj_kernel: kernel_values(cfg.n, |d| proj.factor(d))?,
        heat_kernel: kernel_values(cfg.n, |d| proj.factor(d) * heat.factor(d))?,
    };
    let runs: Vec<(Vec<f64>, f64)> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| ascent.run(r))
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, run) in runs.iter().enumerate() {
        if run.1 > runs[best].1 {
            best = i;
        }
    }
    let (values, ratio) = runs.into_iter().nth(best).expect("at least one restart");
    Ok(SearchOutcome { f: CubeFunction::new(cfg.n, values)?, ratio, restart: best })
}

/// `(p, -ln(best ratio) / t)` for each `p` in the grid, all other settings from `base`.
pub fn constant_scan_with(base: &SearchConfig, p_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    p_grid
        .iter()
        .map(|&p| {
            if !(p > 1.0) {
                return Err(Error::invalid_parameter(format!("scan exponent p = {p} must exceed 1")));
            }
            let cfg = SearchConfig { p, ..base.clone() };
            let out = worst_ratio_search(&cfg)?;
            Ok((p, -out.ratio.ln() / cfg.t))
        })
        .collect()
}

pub fn constant_scan(p_grid: &[f64], gamma: f64, t: f64, n: usize) -> Result<Vec<(f64, f64)>> {
    constant_scan_with(&SearchConfig::new(n, 2.0, gamma, t), p_grid)
}

/// True when the rate never exceeds the rate at a larger `p` by more than
/// the relative `noise`.
pub fn rates_trend_down(scan: &[(f64, f64)], noise: f64) -> bool {
    scan.iter().all(|&(p, r)| scan.iter().all(|&(q, s)| !(p < q) || r <= s * (1.0 + noise)))
}
