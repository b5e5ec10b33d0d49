//! Functionals behind the Lp and L1 spectral-gap inequalities, evaluated
//! pointwise on the cube.

use crate::cube::{
    check_exponent, expectation, fwht, ifwht, lp_norm_slice, CubeFunction, DegreeMultiplier, Spectrum,
};
use crate::error::{Error, Result};
use crate::quad::golden_section_min;
use crate::report::{record, VerificationReport};

/// Grid size of the `tilde_cp` minimization before golden-section refinement.
pub const CP_GRID: usize = 4096;
/// `|f(x)| <= ZERO_TOL` counts as `f(x) = 0` in indicator terms.
pub const ZERO_TOL: f64 = 1e-12;
/// Spectral tolerance for mean-zero and band-support preconditions.
pub const SPECTRAL_TOL: f64 = 1e-10;
/// Degree cutoff: coefficients at or below this size are ignored.
pub const DEGREE_TOL: f64 = 1e-12;

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `|x|^q sgn x`.
fn signed_pow(x: f64, q: f64) -> f64 {
    sgn(x) * x.abs().powf(q)
}

fn check_p(p: f64) -> Result<()> {
    if p > 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid_parameter(format!("p = {p} must be finite and > 1")))
    }
}

/// `2 min(1/p, 1/p')`.
pub fn cp_lower(p: f64) -> f64 {
    2.0 * (1.0 / p).min(1.0 - 1.0 / p)
}

/// `(1 - t^(2/p))/(1 - t) * (1 - t^(2/p'))/(1 - t)` with its limits at the ends.
fn cp_product(p: f64, t: f64) -> f64 {
    let (a, b) = (2.0 / p, 2.0 * (1.0 - 1.0 / p));
    if t <= 0.0 {
        return 1.0;
    }
    if t >= 1.0 {
        return a * b;
    }
    let lt = t.ln();
    let den = lt.exp_m1();
    ((a * lt).exp_m1() / den) * ((b * lt).exp_m1() / den)
}

/// `min_{0<=t<=1} (1 - t^(2/p))/(1 - t) * (1 - t^(2/p'))/(1 - t)`.
pub fn tilde_cp(p: f64) -> Result<f64> {
    check_p(p)?;
    let h = 1.0 / (CP_GRID - 1) as f64;
    let (i_best, v_best) = (0..CP_GRID)
        .map(|i| (i, cp_product(p, i as f64 * h)))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
    let lo = (i_best as f64 - 1.0).max(0.0) * h;
    let hi = ((i_best as f64 + 1.0) * h).min(1.0);
    let (_, v) = golden_section_min(|t| cp_product(p, t), lo, hi, 1e-14);
    Ok(v.min(v_best))
}

/// Both sides of `(a-b)(|a|^(p-1)sgn a - |b|^(p-1)sgn b) >= c~_p (|a|^(p/2)sgn a - |b|^(p/2)sgn b)^2`.
pub fn abp_gap(p: f64, a: f64, b: f64) -> Result<(f64, f64)> {
    let cp = tilde_cp(p)?;
    Ok(abp_gap_with(cp, p, a, b))
}

/// [`abp_gap`] with a precomputed `tilde_cp(p)`.
pub fn abp_gap_with(cp: f64, p: f64, a: f64, b: f64) -> (f64, f64) {
    let lhs = (a - b) * (signed_pow(a, p - 1.0) - signed_pow(b, p - 1.0));
    let d = signed_pow(a, 0.5 * p) - signed_pow(b, 0.5 * p);
    (lhs, cp * d * d)
}

/// `(E|g - Eg|^2, E|g|^2, E[|g|^beta sgn g])`.
pub fn moment_comparison(g: &CubeFunction, beta: f64) -> Result<(f64, f64, f64)> {
    if !(beta > 0.0 && beta <= 2.0) {
        return Err(Error::invalid_parameter(format!("beta = {beta} outside (0, 2]")));
    }
    let m = expectation(g);
    let len = g.len() as f64;
    let var2 = g.values().iter().map(|v| (v - m).powi(2)).sum::<f64>() / len;
    let l2 = g.values().iter().map(|v| v * v).sum::<f64>() / len;
    let signed = g.values().iter().map(|v| signed_pow(*v, beta)).sum::<f64>() / len;
    Ok((var2, l2, signed))
}

/// `-E(Lap f |f|^(p-1) sgn f)`.
pub fn pth_dirichlet_functional(f: &CubeFunction, p: f64) -> Result<f64> {
    check_p(p)?;
    let lap = crate::cube::apply_multiplier(f, &DegreeMultiplier::Laplacian);
    let total: f64 = lap
        .values()
        .iter()
        .zip(f.values())
        .map(|(l, v)| l * signed_pow(*v, p - 1.0))
        .sum();
    Ok(-total / f.len() as f64)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid_parameter(format!("gamma = {gamma} outside (0, 1]")))
    }
}

/// Highest degree carrying a coefficient above [`DEGREE_TOL`]; `None` for `f = 0`.
pub fn spectral_degree(a: &Spectrum) -> Option<usize> {
    a.max_degree(DEGREE_TOL)
}

/// `E(sgn F Lap_g F 1_{F != 0}) - E(|Lap_g F| 1_{F = 0})`.
fn left_derivative(f: &[f64], lap: &[f64]) -> f64 {
    let total: f64 = f
        .iter()
        .zip(lap)
        .map(|(v, l)| if v.abs() > ZERO_TOL { l * sgn(*v) } else { -l.abs() })
        .sum();
    total / f.len() as f64
}

/// `E[(-Lap_g f) sgn f 1_{f != 0}] - E[|Lap_g f| 1_{f = 0}]`.
fn l1_energy(f: &[f64], lap: &[f64]) -> f64 {
    let total: f64 = f
        .iter()
        .zip(lap)
        .map(|(v, l)| if v.abs() > ZERO_TOL { -l * sgn(*v) } else { -l.abs() })
        .sum();
    total / f.len() as f64
}

/// Returns `(rhs, ||f||_1, alpha_k)` where `rhs` is the L1 fractional
/// Dirichlet functional with its zero-set term and `alpha_k = k^-g 3^(-3k)`.
pub fn poincare_l1_functional(f: &CubeFunction, gamma: f64) -> Result<(f64, f64, f64)> {
    check_gamma(gamma)?;
    let a = fwht(f);
    let k = spectral_degree(&a).ok_or_else(|| Error::invalid_input("f is identically zero"))?;
    if a.coeff(0).abs() > SPECTRAL_TOL {
        return Err(Error::invalid_input(format!("f has nonzero mean {}", a.coeff(0))));
    }
    if k == 0 {
        return Err(Error::invalid_input("f has no mode of positive degree"));
    }
    let lap = ifwht(&a.apply(&DegreeMultiplier::fractional(gamma)?));
    let rhs = l1_energy(f.values(), lap.values());
    let alpha = (k as f64).powf(-gamma) * 3f64.powi(-3 * k as i32);
    Ok((rhs, lp_norm_slice(f.values(), 1.0), alpha))
}

/// `(||f||_4 / ||f||_2, k)` with `k` the degree of `f`.
pub fn bonami_ratio(f: &CubeFunction) -> Result<(f64, usize)> {
    let a = fwht(f);
    let k = spectral_degree(&a).ok_or_else(|| Error::invalid_input("f is identically zero"))?;
    let ratio = lp_norm_slice(f.values(), 4.0) / lp_norm_slice(f.values(), 2.0);
    Ok((ratio, k))
}

/// Compares `||e^(t Lap) f||_1` with `e^(-t/2) ||f||_1`. The inequality is
/// claimed only for `t >= 3 k ln 3`; the report carries `required` accordingly.
pub fn heat_smoothing_l1(f: &CubeFunction, t: f64) -> Result<VerificationReport> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid_parameter(format!("t = {t} must be positive")));
    }
    let a = fwht(f);
    let scale = a.coeffs().iter().fold(0.0f64, |m, c| m.max(c.abs())).max(1.0);
    if a.coeff(0).abs() > SPECTRAL_TOL * scale {
        return Err(Error::invalid_input(format!("f has nonzero mean {}", a.coeff(0))));
    }
    let k = spectral_degree(&a).unwrap_or(0);
    let evolved = ifwht(&a.apply(&DegreeMultiplier::heat(t, 1.0)?));
    let lhs = lp_norm_slice(evolved.values(), 1.0);
    let l1 = lp_norm_slice(f.values(), 1.0);
    let threshold = 3.0 * k as f64 * 3f64.ln();
    Ok(VerificationReport::at_most("heat_smoothing_l1", lhs, (-0.5 * t).exp() * l1, 1e-12)
        .param("n", f.n())
        .param("t", t)
        .param("k", k)
        .param("threshold", threshold)
        .param("required", t >= threshold))
}

/// `rate(t) = -ln(||e^(t Lap_g) f0||_p / ||f0||_p) / t` with `f0 = f - Ef`,
/// and the minimum over the grid.
pub fn decay_rate(f: &CubeFunction, p: f64, gamma: f64, t_grid: &[f64]) -> Result<(Vec<f64>, f64)> {
    check_exponent(p)?;
    check_gamma(gamma)?;
    if t_grid.is_empty() || t_grid.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(Error::invalid_parameter("time grid must be nonempty and positive"));
    }
    let f0 = f.centered();
    let base = lp_norm_slice(f0.values(), p);
    if base == 0.0 {
        return Err(Error::invalid_input("f - Ef vanishes"));
    }
    let a = fwht(&f0);
    let mut rates = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let evolved = ifwht(&a.apply(&DegreeMultiplier::heat(t, gamma)?));
        rates.push(-(lp_norm_slice(evolved.values(), p) / base).ln() / t);
    }
    let min = rates.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok((rates, min))
}

/// `F_t = e^(t Lap_g) f` and `Lap_g F_t`.
fn evolve_with_generator(a: &Spectrum, gamma: f64, t: f64) -> Result<(CubeFunction, CubeFunction)> {
    let heat = a.apply(&DegreeMultiplier::heat(t, gamma)?);
    let lap = heat.apply(&DegreeMultiplier::fractional(gamma)?);
    Ok((ifwht(&heat), ifwht(&lap)))
}

/// `E(sgn F_t Lap_g F_t 1_{F_t != 0}) - E(|Lap_g F_t| 1_{F_t = 0})`: the
/// derivative of `E|F_t|` off the zero set; on the zero set it is the
/// derivative from the left.
pub fn derivative_identity(f: &CubeFunction, gamma: f64, t: f64) -> Result<f64> {
    check_gamma(gamma)?;
    let (big_f, lap) = evolve_with_generator(&fwht(f), gamma, t)?;
    Ok(left_derivative(big_f.values(), lap.values()))
}

/// `I(t) = E|e^(t Lap_g) f|`.
pub fn heat_l1(f: &CubeFunction, gamma: f64, t: f64) -> Result<f64> {
    let evolved = crate::cube::apply_multiplier(f, &DegreeMultiplier::heat(t, gamma)?);
    Ok(lp_norm_slice(evolved.values(), 1.0))
}

/// Compares [`derivative_identity`] at `t` with `(I(t+h) - I(t-h)) / 2h`.
/// Inconclusive when some `|F_t(x)| < 10 h`.
pub fn derivative_identity_check(f: &CubeFunction, gamma: f64, t: f64, h: f64) -> Result<VerificationReport> {
    check_gamma(gamma)?;
    if !(h > 0.0 && t > h && t.is_finite()) {
        return Err(Error::invalid_parameter(format!("need t > h > 0, got t = {t}, h = {h}")));
    }
    let a = fwht(f);
    let (big_f, lap) = evolve_with_generator(&a, gamma, t)?;
    let analytic = left_derivative(big_f.values(), lap.values());
    let plus = lp_norm_slice(ifwht(&a.apply(&DegreeMultiplier::heat(t + h, gamma)?)).values(), 1.0);
    let minus = lp_norm_slice(ifwht(&a.apply(&DegreeMultiplier::heat(t - h, gamma)?)).values(), 1.0);
    let central = (plus - minus) / (2.0 * h);
    // third time derivative bounds the central-difference error
    let third = a
        .apply(&DegreeMultiplier::heat(t, gamma)?)
        .coeffs()
        .iter()
        .enumerate()
        .map(|(s, c)| (c * (s.count_ones() as f64).powf(3.0 * gamma)).abs())
        .sum::<f64>();
    let scale = third.max(1.0);
    let tol = 1e-6f64.max(10.0 * h * h * scale);
    let min_abs = big_f.values().iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let report = VerificationReport::near("derivative_identity", analytic, central, tol)
        .param("n", f.n())
        .param("gamma", gamma)
        .param("t", t)
        .param("h", h)
        .param("min_abs_f", min_abs)
        .with_extra(vec![record([("analytic", analytic.into()), ("central", central.into())])]);
    Ok(if min_abs < 10.0 * h { report.inconclusive() } else { report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::{apply_multiplier, lp_norm};

    fn coord(n: usize, j: usize) -> CubeFunction {
        CubeFunction::coordinate(n, j).unwrap()
    }

    #[test]
    fn tilde_cp_values() {
        assert!((tilde_cp(2.0).unwrap() - 1.0).abs() < 1e-12);
        let c4 = tilde_cp(4.0).unwrap();
        assert!(c4 >= 0.5 - 1e-9 && c4 <= 1.0);
        // grid oracle, independent of the refinement
        let brute = (1..200_000)
            .map(|i| {
                let t = i as f64 / 200_000.0;
                (1.0 - t.powf(0.5)) * (1.0 - t.powf(1.5)) / (1.0 - t).powi(2)
            })
            .fold(0.75f64, f64::min);
        assert!((c4 - brute).abs() < 1e-9, "{c4} vs {brute}");
        let c = tilde_cp(1.01).unwrap();
        assert!(c > 0.0 && c < 0.1, "{c}");
        assert!(tilde_cp(1.0).is_err());
        assert!(tilde_cp(0.5).is_err());
    }

    #[test]
    fn abp_examples() {
        let (l, r) = abp_gap(2.0, 1.3, -0.4).unwrap();
        assert!((l - 1.7f64.powi(2)).abs() < 1e-12 && (r - 1.7f64.powi(2)).abs() < 1e-12);
        assert_eq!(abp_gap(3.0, 0.7, 0.7).unwrap(), (0.0, 0.0));
        let (l, r) = abp_gap(3.0, 1.0, -1.0).unwrap();
        assert!((l - 4.0).abs() < 1e-12);
        assert!((r - 4.0 * tilde_cp(3.0).unwrap()).abs() < 1e-12 && r <= 4.0);
    }

    #[test]
    fn moment_comparison_examples() {
        let one = CubeFunction::constant(3, 1.0).unwrap();
        assert_eq!(moment_comparison(&one, 1.0).unwrap(), (0.0, 1.0, 1.0));
        assert_eq!(moment_comparison(&coord(3, 1), 1.0).unwrap(), (1.0, 1.0, 0.0));
        let g = CubeFunction::new(1, vec![2.0, 0.0]).unwrap();
        assert_eq!(moment_comparison(&g, 2.0).unwrap(), (1.0, 2.0, 2.0));
        assert!(moment_comparison(&g, 2.5).is_err());
        assert!(moment_comparison(&g, 0.0).is_err());
    }

    #[test]
    fn dirichlet_functional_examples() {
        for p in [1.5, 2.0, 5.0] {
            assert!((pth_dirichlet_functional(&coord(4, 1), p).unwrap() - 1.0).abs() < 1e-12);
        }
        let c = CubeFunction::constant(3, -2.0).unwrap();
        assert!(pth_dirichlet_functional(&c, 3.0).unwrap().abs() < 1e-12);
        // f = x1 + x2: values 2, 0, 0, -2 and Lap f = -f
        let f = coord(2, 1).add(&coord(2, 2)).unwrap();
        let want = (2.0 * 4.0 + 2.0 * 4.0) / 4.0;
        assert!((pth_dirichlet_functional(&f, 3.0).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn poincare_examples() {
        let (rhs, l1, alpha) = poincare_l1_functional(&coord(5, 1), 0.5).unwrap();
        assert!((rhs - 1.0).abs() < 1e-12 && (l1 - 1.0).abs() < 1e-12);
        assert!((alpha - 1.0 / 27.0).abs() < 1e-15);
        assert!((rhs / (alpha * l1) - 27.0).abs() < 1e-9);

        // x1 + x2 vanishes at two of four points, where Lap_g f = -f = 0 too
        let f = coord(2, 1).add(&coord(2, 2)).unwrap();
        let (rhs, l1, _) = poincare_l1_functional(&f, 0.5).unwrap();
        assert!((rhs - 1.0).abs() < 1e-12 && (l1 - 1.0).abs() < 1e-12);

        let g = CubeFunction::character(4, 0b11).unwrap();
        let (rhs, _, alpha) = poincare_l1_functional(&g, 0.3).unwrap();
        assert!((rhs - 2f64.powf(0.3)).abs() < 1e-12);
        assert!((alpha - 2f64.powf(-0.3) / 729.0).abs() < 1e-15);

        assert!(poincare_l1_functional(&CubeFunction::constant(2, 1.0).unwrap(), 0.5).is_err());
        let shifted = coord(3, 1).map(|v| v + 0.1).unwrap();
        assert!(poincare_l1_functional(&shifted, 0.5).is_err());
    }

    #[test]
    fn poincare_zero_set_term_is_subtracted() {
        // f = x1 + x1 x2 vanishes where x2 = -1, and Lap_g f does not
        let f = coord(3, 1).add(&CubeFunction::character(3, 0b11).unwrap()).unwrap();
        let lap = apply_multiplier(&f, &DegreeMultiplier::fractional(0.5).unwrap());
        let mut want = 0.0;
        for m in 0..8 {
            let (v, l) = (f.values()[m], lap.values()[m]);
            want += if v != 0.0 { -l * v.signum() } else { -l.abs() };
        }
        let (rhs, _, _) = poincare_l1_functional(&f, 0.5).unwrap();
        assert!((rhs - want / 8.0).abs() < 1e-12);
        assert!(f.values().iter().any(|v| *v == 0.0));
    }

    #[test]
    fn bonami_examples() {
        let (r, k) = bonami_ratio(&coord(3, 1)).unwrap();
        assert!((r - 1.0).abs() < 1e-12 && k == 1);
        let f = CubeFunction::character(4, 0b0011)
            .unwrap()
            .add(&CubeFunction::character(4, 0b1100).unwrap())
            .unwrap();
        let (r, k) = bonami_ratio(&f).unwrap();
        assert_eq!(k, 2);
        assert!((r - 8f64.powf(0.25) / 2f64.sqrt()).abs() < 1e-12);
        assert!(bonami_ratio(&CubeFunction::constant(2, 0.0).unwrap()).is_err());
    }

    #[test]
    fn heat_smoothing_examples() {
        let t = 3.0 * 3f64.ln();
        let r = heat_smoothing_l1(&coord(4, 2), t).unwrap();
        assert!((r.measured - (-t).exp()).abs() < 1e-12);
        assert!(r.pass);
        assert_eq!(r.params["required"], true);
        let r = heat_smoothing_l1(&coord(4, 2), 0.01).unwrap();
        assert_eq!(r.params["required"], false);
        assert!(heat_smoothing_l1(&CubeFunction::constant(2, 1.0).unwrap(), 1.0).is_err());
    }

    #[test]
    fn decay_rate_examples() {
        let grid = [0.1, 0.5, 2.0];
        for p in [1.0, 1.5, 4.0] {
            let (rates, min) = decay_rate(&coord(5, 3), p, 0.7, &grid).unwrap();
            assert!(rates.iter().all(|r| (r - 1.0).abs() < 1e-12));
            assert!((min - 1.0).abs() < 1e-12);
        }
        let g = CubeFunction::character(3, 0b101).unwrap();
        let (_, min) = decay_rate(&g, 1.0, 0.5, &grid).unwrap();
        assert!((min - 2f64.sqrt()).abs() < 1e-12);
        assert!(decay_rate(&CubeFunction::constant(2, 3.0).unwrap(), 2.0, 0.5, &grid).is_err());
    }

    #[test]
    fn derivative_single_mode() {
        let f = coord(3, 1);
        let t = 0.8;
        assert!((derivative_identity(&f, 1.0, t).unwrap() + (-t).exp()).abs() < 1e-14);
        let r = derivative_identity_check(&f, 1.0, t, 1e-3).unwrap();
        assert!(r.pass && (r.measured - r.bound).abs() <= 1e-6);
        assert!(derivative_identity_check(&f, 1.0, 1e-5, 1e-4).is_err());
    }

    #[test]
    fn derivative_mixed_modes() {
        let f = coord(4, 1).add(&CubeFunction::character(4, 0b111).unwrap()).unwrap();
        let r = derivative_identity_check(&f, 0.5, 0.7, 1e-4).unwrap();
        assert_eq!(r.status, crate::report::Status::Pass);
        assert!((r.measured - r.bound).abs() <= 1e-6);
        // finite-difference oracle with a smaller step
        let h = 1e-6;
        let fd = (heat_l1(&f, 0.5, 0.7 + h).unwrap() - heat_l1(&f, 0.5, 0.7 - h).unwrap()) / (2.0 * h);
        assert!((r.measured - fd).abs() < 1e-7);
    }

    #[test]
    fn derivative_zero_set_term_sign() {
        // f = x1 + c x1 x2 with c = e^t0: F_t0 = e^-t0 x1 (1 + x2) vanishes where x2 = -1
        let t0: f64 = 0.6;
        let c = t0.exp();
        let f = coord(2, 1).add(&CubeFunction::character(2, 0b11).unwrap().scale(c).unwrap()).unwrap();
        let big_f = apply_multiplier(&f, &DegreeMultiplier::heat(t0, 1.0).unwrap());
        assert!(big_f.values().iter().filter(|v| v.abs() < 1e-15).count() == 2);
        let analytic = derivative_identity(&f, 1.0, t0).unwrap();
        let h = 1e-7;
        let i0 = heat_l1(&f, 1.0, t0).unwrap();
        let backward = (i0 - heat_l1(&f, 1.0, t0 - h).unwrap()) / h;
        let forward = (heat_l1(&f, 1.0, t0 + h).unwrap() - i0) / h;
        assert!((analytic - backward).abs() < 1e-5, "{analytic} vs {backward}");
        // from the right the zero-set term enters with the opposite sign
        assert!(forward > analytic + 0.1);
        let r = derivative_identity_check(&f, 1.0, t0, 1e-4).unwrap();
        assert_eq!(r.status, crate::report::Status::Inconclusive);
        assert!(lp_norm(&big_f, 1.0).unwrap() > 0.0);
    }
}
