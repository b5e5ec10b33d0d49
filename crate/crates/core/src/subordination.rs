//! The one-sided stable density `p_gamma` with Laplace transform
//! `exp(-lambda^gamma)`, and the constants derived from its tail.
//!
//! For moderate `tau` the density is the oscillatory integral
//!
//! ```text
//! p(tau) = 1/pi int_0^inf exp(-y^g cos(g pi/2)) cos(tau y - y^g sin(g pi/2)) dy
//! ```
//!
//! evaluated panel by panel between consecutive zeros of the cosine, with the
//! partial sums accelerated by Wynn's epsilon algorithm. Beyond
//! [`TAIL_SWITCH`] the convergent large-`tau` series
//! `p(tau) = sum_k a_k tau^(-k g - 1)` is used; its first coefficient is the
//! tail constant `C_g`.

use std::cell::Cell;
use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::quad::{bracketed_root, integrate, integrate_pieces, wynn_epsilon, Tolerance};
use crate::report::{record, VerificationReport};

pub const DEFAULT_QUAD_TOL: f64 = 1e-9;
/// Above this `tau` the density is summed from its large-`tau` series.
pub const TAIL_SWITCH: f64 = 1e3;
/// Lower floor for the tail threshold `R0`.
pub const R0_FLOOR: f64 = 16.0;
/// Upper end of the grid on which the tail bound is verified.
pub const R0_GRID_TOP: f64 = 1e6;
/// Grid points per decade used by [`find_r0`].
pub const R0_POINTS_PER_DECADE: usize = 64;
/// Largest `tau` at which a tail-bound failure is tolerated by [`find_r0`].
pub const R0_FAIL_LIMIT: f64 = 1e4;
/// Tolerance on the subordination identity.
pub const SUBORDINATION_TOL: f64 = 1e-6;

/// The oscillatory integrand is cut where its amplitude drops below `e^-45`.
const AMP_LOG_CUTOFF: f64 = 45.0;
const MAX_PANELS: usize = 20_000;
const MIN_EXTRAPOLATION_TERMS: usize = 8;
const EXTRAPOLATION_WINDOW: usize = 40;
const MAX_SERIES_TERMS: usize = 200;
/// Breakpoints for integrals against the density on `[0, TAIL_SWITCH]`.
const DENSITY_BREAKS: [f64; 10] = [0.0, 1e-4, 1e-3, 1e-2, 0.1, 1.0, 10.0, 100.0, 500.0, TAIL_SWITCH];

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid_parameter(format!(
            "stable index gamma = {gamma} outside (0, 1)"
        )))
    }
}

/// `C_g` from `1/C_g = int_0^inf (1 - e^-t) t^-(1+g) dt`, by adaptive
/// quadrature with both singular ends removed by substitution.
pub fn tail_constant(gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    let tol = Tolerance::new(0.0, 1e-13);
    // [0, 1]: t = v^(1/(1-g)), integrand becomes (1 - e^-t)/t / (1-g)
    let head = integrate(
        |v: f64| {
            let t = v.powf(1.0 / (1.0 - gamma));
            if t == 0.0 {
                1.0 / (1.0 - gamma)
            } else {
                -(-t).exp_m1() / t / (1.0 - gamma)
            }
        },
        0.0,
        1.0,
        tol,
        2000,
    )?;
    // [1, inf): t = u^(-1/g), integrand becomes (1 - e^-t)/g
    let tail = integrate(
        |u: f64| -(-u.powf(-1.0 / gamma)).exp_m1() / gamma,
        0.0,
        1.0,
        tol,
        2000,
    )?;
    Ok(1.0 / (head.value + tail.value))
}

/// Configured evaluator for `p_gamma` with its cached tail constants.
#[derive(Clone, Debug)]
pub struct StableDensityEvaluator {
    gamma: f64,
    quad_tol: f64,
    tail_constant: f64,
    r0: f64,
    t0: f64,
    cos_g: f64,
    sin_g: f64,
    /// `a_k` for `k = 1..`, including the `1/pi`.
    series: Vec<f64>,
}

impl StableDensityEvaluator {
    pub fn new(gamma: f64) -> Result<Self> {
        Self::with_tolerance(gamma, DEFAULT_QUAD_TOL)
    }

    pub fn with_tolerance(gamma: f64, quad_tol: f64) -> Result<Self> {
        check_gamma(gamma)?;
        if !(quad_tol > 0.0 && quad_tol < 1.0) {
            return Err(Error::invalid_parameter(format!("quad_tol = {quad_tol} outside (0, 1)")));
        }
        let tail_constant = tail_constant(gamma)?;
        let mut series = Vec::new();
        for k in 1..=MAX_SERIES_TERMS {
            let kf = k as f64;
            let mag = (ln_gamma(kf * gamma + 1.0) - ln_gamma(kf + 1.0)).exp() / PI;
            if mag < 1e-300 {
                break;
            }
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            series.push(sign * mag * (PI * (kf * gamma).rem_euclid(2.0)).sin());
        }
        let mut ev = StableDensityEvaluator {
            gamma,
            quad_tol,
            tail_constant,
            r0: f64::NAN,
            t0: f64::NAN,
            cos_g: (gamma * FRAC_PI_2).cos(),
            sin_g: (gamma * FRAC_PI_2).sin(),
            series,
        };
        ev.r0 = find_r0(&ev)?;
        ev.t0 = ev.r0.powf(-gamma);
        Ok(ev)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn quad_tol(&self) -> f64 {
        self.quad_tol
    }

    /// `C_g = lim tau^(1+g) p_g(tau)`.
    pub fn tail_constant(&self) -> f64 {
        self.tail_constant
    }

    /// Threshold beyond which `p_g(tau) >= C_g tau^-(1+g) / 2`.
    pub fn r0(&self) -> f64 {
        self.r0
    }

    /// Admissible time `R0^-g`.
    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// Leading series coefficient `Gamma(1+g) sin(pi g) / pi`, which equals `C_g`.
    pub fn series_leading_coefficient(&self) -> f64 {
        self.series[0]
    }

    /// `p_g(tau)`; exactly zero for `tau <= 0`.
    pub fn density(&self, tau: f64) -> Result<f64> {
        if tau.is_nan() {
            return Err(Error::invalid_input("tau is NaN"));
        }
        if tau <= 0.0 || tau == f64::INFINITY {
            return Ok(0.0);
        }
        if tau > TAIL_SWITCH {
            return Ok(self.series_density(tau));
        }
        self.oscillatory_density(tau)
    }

    /// `tau^(1+g) p_g(tau) / C_g`.
    pub fn tail_ratio(&self, tau: f64) -> Result<f64> {
        Ok(tau.powf(1.0 + self.gamma) * self.density(tau)? / self.tail_constant)
    }

    fn series_density(&self, tau: f64) -> f64 {
        let x = tau.powf(-self.gamma);
        self.series_sum(x) / tau
    }

    /// `sum_k a_k x^k`.
    fn series_sum(&self, x: f64) -> f64 {
        let mut sum = 0.0;
        let mut power = 1.0;
        for a in &self.series {
            power *= x;
            let term = a * power;
            sum += term;
            if term.abs() < 1e-18 * sum.abs() && power < 1.0 {
                break;
            }
        }
        sum
    }

    /// `p(tau) dtau/du` for `tau = u^(-1/g)`, which is `sum_k a_k u^(k-1) / g`.
    fn tail_weight(&self, u: f64) -> f64 {
        if u == 0.0 {
            return self.series[0] / self.gamma;
        }
        self.series_sum(u) / (u * self.gamma)
    }

    /// Relative size of the series beyond its leading term at `tau`,
    /// bounded termwise.
    fn series_remainder_bound(&self, tau: f64) -> f64 {
        let x = tau.powf(-self.gamma);
        let mut power = 1.0;
        let mut total = 0.0;
        for a in &self.series[1..] {
            power *= x;
            total += a.abs() * power;
        }
        total / self.series[0]
    }

    fn oscillatory_density(&self, tau: f64) -> Result<f64> {
        let g = self.gamma;
        let (a, b) = (self.cos_g, self.sin_g);
        let integrand = |y: f64| {
            let yg = y.powf(g);
            (-a * yg).exp() * (tau * y - b * yg).cos()
        };
        let phase = |y: f64| tau * y - b * y.powf(g);
        let dphase = |y: f64| tau - b * g * y.powf(g - 1.0);
        let panel_tol = Tolerance::abs(self.quad_tol * 1e-3);
        let panel = |lo: f64, hi: f64| -> Result<f64> {
            Ok(integrate(integrand, lo, hi, panel_tol, 400)?.value)
        };

        let y_cut = (AMP_LOG_CUTOFF / a).powf(1.0 / g);
        // the phase decreases on [0, y_turn] and increases afterwards
        let y_turn = (b * g / tau).powf(1.0 / (1.0 - g)).min(y_cut);
        let psi_turn = phase(y_turn);

        let mut total = 0.0;
        let mut left = 0.0;
        let mut level = -FRAC_PI_2;
        while level > psi_turn {
            let root = bracketed_root(|y| phase(y) - level, dphase, left, y_turn, 1e-15);
            total += panel(left, root)?;
            left = root;
            level -= PI;
        }
        total += panel(left, y_turn)?;
        left = y_turn;
        if y_turn >= y_cut {
            return Ok(total / PI);
        }

        let mut k = ((psi_turn - FRAC_PI_2) / PI).floor() + 1.0;
        let half_period = PI / tau;
        let target = 0.1 * self.quad_tol * PI;
        let mut sums = Vec::new();
        let mut previous = f64::NAN;
        let mut last_err = f64::INFINITY;
        while sums.len() < MAX_PANELS {
            let level = FRAC_PI_2 + k * PI;
            let mut hi = left + half_period;
            while phase(hi) < level {
                hi = left + 2.0 * (hi - left);
            }
            let root = bracketed_root(|y| phase(y) - level, dphase, left, hi, 1e-15);
            if root >= y_cut {
                total += panel(left, y_cut)?;
                return Ok(total / PI);
            }
            total += panel(left, root)?;
            left = root;
            k += 1.0;
            sums.push(total);
            if sums.len() >= MIN_EXTRAPOLATION_TERMS {
                let window = &sums[sums.len().saturating_sub(EXTRAPOLATION_WINDOW)..];
                let (estimate, err) = wynn_epsilon(window);
                last_err = err.max((estimate - previous).abs());
                if last_err <= target {
                    return Ok(estimate / PI);
                }
                previous = estimate;
            }
        }
        Err(Error::numeric(
            format!("stable density at tau = {tau}"),
            last_err / PI,
        ))
    }

    /// `int_0^inf g(tau) p(tau) dtau` for a bounded `g`, by adaptive
    /// quadrature against [`Self::density`]. The part beyond
    /// [`TAIL_SWITCH`] is mapped to `u = tau^-g` in `(0, TAIL_SWITCH^-g]`, where
    /// the integrand is bounded. `g` must tolerate `tau = +inf`.
    pub fn expectation<G: Fn(f64) -> f64>(&self, g: G, tol: f64) -> Result<f64> {
        let failure: Cell<Option<Error>> = Cell::new(None);
        let body = integrate_pieces(
            |tau| match self.density(tau) {
                Ok(p) if p != 0.0 => g(tau) * p,
                Ok(_) => 0.0,
                Err(e) => {
                    failure.set(Some(e));
                    0.0
                }
            },
            &DENSITY_BREAKS,
            Tolerance::abs(0.5 * tol),
            2000,
        )?;
        if let Some(e) = failure.take() {
            return Err(e);
        }
        let u_max = TAIL_SWITCH.powf(-self.gamma);
        let tail = integrate(
            |u| {
                let w = self.tail_weight(u);
                let tau = if u == 0.0 { f64::INFINITY } else { u.powf(-1.0 / self.gamma) };
                g(tau) * w
            },
            0.0,
            u_max,
            Tolerance::abs(0.5 * tol),
            2000,
        )?;
        Ok(body.value + tail.value)
    }

    /// `int_0^inf e^(-lambda tau) p(tau) dtau`.
    pub fn laplace_transform(&self, lambda: f64) -> Result<f64> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::invalid_parameter(format!("lambda = {lambda} must be finite and >= 0")));
        }
        if lambda == 0.0 {
            return self.expectation(|_| 1.0, 1e-10);
        }
        self.expectation(|tau| (-lambda * tau).exp(), 1e-10)
    }
}

/// Smallest grid-verified `R0 >= 16` with `tau^(1+g) p(tau) >= C_g / 2` for
/// all grid `tau >= R0` up to `10^6`; beyond the grid the bound is checked
/// against the series remainder.
pub fn find_r0(ev: &StableDensityEvaluator) -> Result<f64> {
    let per_decade = R0_POINTS_PER_DECADE as f64;
    let lo = (R0_FLOOR.log10() * per_decade).ceil() as i64;
    let hi = (R0_GRID_TOP.log10() * per_decade).round() as i64;
    let mut grid: Vec<f64> = vec![R0_FLOOR];
    grid.extend((lo..=hi).map(|j| 10f64.powf(j as f64 / per_decade)));
    let half = 0.5 * ev.tail_constant;
    let ok: Vec<bool> = grid
        .par_iter()
        .map(|&tau| Ok(tau.powf(1.0 + ev.gamma) * ev.density(tau)? >= half))
        .collect::<Result<_>>()?;
    if ev.series_remainder_bound(R0_GRID_TOP) >= 0.5 {
        return Err(Error::ConstructionFailure(format!(
            "tail bound not certified beyond tau = {R0_GRID_TOP:e} for gamma = {}",
            ev.gamma
        )));
    }
    match ok.iter().rposition(|good| !good) {
        None => Ok(R0_FLOOR),
        Some(i) if grid[i] >= R0_FAIL_LIMIT => Err(Error::ConstructionFailure(format!(
            "tail bound fails at tau = {:e} for gamma = {}",
            grid[i], ev.gamma
        ))),
        Some(i) => Ok(grid[i + 1].max(R0_FLOOR)),
    }
}

/// Checks `exp(-lambda^g) = int e^(-lambda tau) p_g(tau) dtau` on a grid.
pub fn verify_subordination(ev: &StableDensityEvaluator, lambdas: &[f64]) -> Result<VerificationReport> {
    if lambdas.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
        return Err(Error::invalid_parameter("lambda grid must be finite and nonnegative"));
    }
    let rows: Vec<(f64, f64, f64)> = lambdas
        .par_iter()
        .map(|&lambda| {
            let exact = (-lambda.powf(ev.gamma)).exp();
            Ok((lambda, exact, ev.laplace_transform(lambda)?))
        })
        .collect::<Result<_>>()?;
    let max_err = rows.iter().fold(0.0f64, |m, (_, e, q)| m.max((e - q).abs()));
    let extra = rows
        .iter()
        .map(|(l, e, q)| {
            record([
                ("lambda", (*l).into()),
                ("exact", (*e).into()),
                ("quadrature", (*q).into()),
                ("error", (e - q).abs().into()),
            ])
        })
        .collect();
    Ok(
        VerificationReport::at_most("subordination_identity", max_err, SUBORDINATION_TOL, 0.0)
            .param("gamma", ev.gamma)
            .param("lambdas", lambdas.to_vec())
            .with_extra(extra),
    )
}
