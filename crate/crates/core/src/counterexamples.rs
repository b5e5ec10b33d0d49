//! The delta-pair counterexamples to a dimension-free L1 gap, and the
//! Gaussian `x^3` example showing only quadratic decay for small time.

use astro_float::{BigFloat, Consts, RoundingMode};
use num_bigint::BigUint;
use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::cube::CubeFunction;
use crate::error::{Error, Result};
use crate::quad::GaussLaguerre;
use crate::report::VerificationReport;
use crate::subordination::StableDensityEvaluator;

pub const MAX_DELTA_PAIR_DIM: usize = 20;
pub const MAX_EXACT_DIM: usize = 10_000;
/// Working precision of [`exact_heat_l1`] in bits (about 77 decimal digits).
pub const WORK_PRECISION: usize = 256;
pub const MAX_HERMITE_DEGREE: usize = 16;
const CHUNK: usize = 512;
const RM: RoundingMode = RoundingMode::ToEven;

/// `2^(n-1)` at all-ones, `-2^(n-1)` at all-minus-ones, zero elsewhere.
pub fn delta_pair(n: usize) -> Result<CubeFunction> {
    if n == 0 || n > MAX_DELTA_PAIR_DIM {
        return Err(Error::invalid_parameter(format!(
            "delta pair dimension n = {n} outside 1..={MAX_DELTA_PAIR_DIM}"
        )));
    }
    let mut values = vec![0.0; 1 << n];
    let half = 2f64.powi(n as i32 - 1);
    values[0] = half;
    values[(1 << n) - 1] = -half;
    CubeFunction::new(n, values)
}

fn check_heat_args(n: usize, t: f64) -> Result<()> {
    if n == 0 || n > MAX_EXACT_DIM {
        return Err(Error::invalid_parameter(format!("n = {n} outside 1..={MAX_EXACT_DIM}")));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid_parameter(format!("t = {t} must be positive")));
    }
    Ok(())
}

fn big_from_biguint(c: &BigUint, p: usize) -> BigFloat {
    // keep the leading 320 bits; the dropped tail is far below 2^-p relative
    let shift = c.bits().saturating_sub(320);
    let top = c >> shift;
    let word = BigFloat::from_u64(1 << 32, p).mul(&BigFloat::from_u64(1 << 32, p), p, RM);
    let mut acc = BigFloat::from_u64(0, p);
    for limb in top.to_u64_digits().iter().rev() {
        acc = acc.mul(&word, p, RM).add(&BigFloat::from_u64(*limb, p), p, RM);
    }
    if shift > 0 {
        acc = acc.mul(&BigFloat::from_u64(2, p).powi(shift as usize, p, RM), p, RM);
    }
    acc
}

fn big_to_f64(x: &BigFloat) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    x.to_string().parse().unwrap_or(f64::NAN)
}

fn binomial(n: usize, k: usize) -> BigUint {
    let mut c = BigUint::from(1u32);
    for i in 0..k {
        c = c * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    c
}

/// `sum_{k in range} C(n,k) [(1+e)^(n-k)(1-e)^k - (1-e)^(n-k)(1+e)^k]`.
fn partial_sum(n: usize, e: &BigFloat, range: std::ops::Range<usize>, p: usize) -> BigFloat {
    let one = BigFloat::from_u64(1, p);
    let plus = one.add(e, p, RM);
    let minus = one.sub(e, p, RM);
    let k0 = range.start;
    let mut a = plus.powi(n - k0, p, RM).mul(&minus.powi(k0, p, RM), p, RM);
    let mut b = minus.powi(n - k0, p, RM).mul(&plus.powi(k0, p, RM), p, RM);
    let down = minus.div(&plus, p, RM);
    let up = plus.div(&minus, p, RM);
    let mut c = binomial(n, k0);
    let mut total = BigFloat::from_u64(0, p);
    for k in range {
        let term = big_from_biguint(&c, p).mul(&a.sub(&b, p, RM), p, RM);
        total = total.add(&term, p, RM);
        c = c * BigUint::from(n - k) / BigUint::from(k + 1);
        a = a.mul(&down, p, RM);
        b = b.mul(&up, p, RM);
    }
    total
}

/// `||e^(t Lap) delta_pair(n)||_1` from the closed-form binomial sum, in
/// 256-bit arithmetic with exact integer binomials.
pub fn exact_heat_l1(n: usize, t: f64) -> Result<f64> {
    check_heat_args(n, t)?;
    let p = WORK_PRECISION;
    let mut cc = Consts::new().map_err(|e| Error::numeric(format!("constants cache: {e:?}"), f64::NAN))?;
    let e = BigFloat::from_f64(-t, p).exp(p, RM, &mut cc);
    let last = n / 2;
    let ranges: Vec<std::ops::Range<usize>> = (0..=last)
        .step_by(CHUNK)
        .map(|s| s..(s + CHUNK).min(last + 1))
        .collect();
    let parts: Vec<BigFloat> = ranges
        .into_par_iter()
        .map(|r| partial_sum(n, &e, r, p))
        .collect();
    let mut total = BigFloat::from_u64(0, p);
    for part in &parts {
        total = total.add(part, p, RM);
    }
    let scale = BigFloat::from_u64(2, p).powi(n, p, RM);
    let value = big_to_f64(&total.div(&scale, p, RM));
    if !value.is_finite() {
        return Err(Error::numeric("extended-precision binomial sum", f64::NAN));
    }
    Ok(value)
}

/// `P(X < n/2) - P(X > n/2)` for `X ~ Bin(n, q)`, summed in log space over a
/// window around the bulk of the distribution.
fn binomial_sign_balance(n: usize, q: f64) -> f64 {
    if q <= 0.0 {
        return 1.0;
    }
    if q >= 0.5 {
        return 0.0;
    }
    let nf = n as f64;
    let mean = nf * q;
    let width = 40.0 * (nf * q * (1.0 - q)).sqrt() + 40.0;
    let lo = (mean - width).floor().max(0.0) as usize;
    let hi = ((mean + width).ceil() as usize).min(n);
    let ln_ratio = (q / (1.0 - q)).ln();
    let mut log_pmf = ln_gamma(nf + 1.0) - ln_gamma(lo as f64 + 1.0) - ln_gamma((n - lo) as f64 + 1.0)
        + lo as f64 * q.ln()
        + (n - lo) as f64 * (-q).ln_1p();
    let (mut below, mut above) = (0.0, 0.0);
    for k in lo..=hi {
        let pmf = log_pmf.exp();
        if 2 * k < n {
            below += pmf;
        } else if 2 * k > n {
            above += pmf;
        }
        log_pmf += ((n - k) as f64 / (k + 1) as f64).ln() + ln_ratio;
    }
    below - above
}

/// `||e^(t Lap) delta_pair(n)||_1` as a function of `eps = e^-t`, in double
/// precision; meant for integrands evaluated many times.
pub fn heat_l1_from_eps(n: usize, eps: f64) -> f64 {
    binomial_sign_balance(n, 0.5 * (1.0 - eps))
}

/// `(1 - (1 - eps^2)^(n/2)) / 2`. The underlying estimate is proved for odd
/// `n`; for even `n` the value is only heuristic (see [`almost1_report`]).
pub fn almost1_bound(n: usize, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::invalid_parameter(format!("eps = {eps} outside (0, 1/2]")));
    }
    if n == 0 {
        return Err(Error::invalid_parameter("n must be positive"));
    }
    Ok(-0.5 * (0.5 * n as f64 * (-eps * eps).ln_1p()).exp_m1())
}

/// `exact_heat_l1(n, t) >= almost1_bound(n, e^-t)`, flagged heuristic for even `n`.
pub fn almost1_report(n: usize, t: f64) -> Result<VerificationReport> {
    let value = exact_heat_l1(n, t)?;
    let bound = almost1_bound(n, (-t).exp())?;
    Ok(VerificationReport::at_least("almost1_bound", value, bound, 0.0)
        .param("n", n)
        .param("t", t)
        .param("heuristic", n % 2 == 0))
}

fn check_evaluator_args(n: usize, t: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid_parameter("n must be positive"));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid_parameter(format!("t = {t} must be positive")));
    }
    Ok(())
}

/// `1/2 int (1 - (1 - e^(-2 tau t^(1/g)))^(n/2)) p_g(tau) dtau`.
pub fn fractional_l1_bound(n: usize, t: f64, ev: &StableDensityEvaluator) -> Result<f64> {
    check_evaluator_args(n, t)?;
    let s = t.powf(1.0 / ev.gamma());
    let half_n = 0.5 * n as f64;
    let integral = ev.expectation(
        |tau| -(half_n * (-(-2.0 * tau * s).exp()).ln_1p()).exp_m1(),
        1e-7,
    )?;
    Ok(0.5 * integral)
}

/// `||e^(t Lap_g) delta_pair(n)||_1`: the binomial sum integrated against `p_g`.
pub fn fractional_heat_l1(n: usize, t: f64, ev: &StableDensityEvaluator) -> Result<f64> {
    check_evaluator_args(n, t)?;
    let s = t.powf(1.0 / ev.gamma());
    ev.expectation(|tau| heat_l1_from_eps(n, (-tau * s).exp()), 1e-7)
}

/// `sum_k b_k He_k(x)` in the probabilists' Hermite basis, at most degree 16.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianPolynomial {
    pub hermite_coeffs: Vec<f64>,
}

impl GaussianPolynomial {
    pub fn new(hermite_coeffs: Vec<f64>) -> Result<Self> {
        if hermite_coeffs.is_empty() || hermite_coeffs.len() > MAX_HERMITE_DEGREE + 1 {
            return Err(Error::invalid_input(format!(
                "need 1..={} Hermite coefficients",
                MAX_HERMITE_DEGREE + 1
            )));
        }
        if hermite_coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid_input("non-finite Hermite coefficient"));
        }
        Ok(GaussianPolynomial { hermite_coeffs })
    }

    /// `x^3 = He_3 + 3 He_1`.
    pub fn cubic() -> Self {
        GaussianPolynomial { hermite_coeffs: vec![0.0, 3.0, 0.0, 1.0] }
    }

    pub fn degree(&self) -> usize {
        self.hermite_coeffs.len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (mut prev, mut cur) = (0.0, 1.0);
        let mut total = 0.0;
        for (k, b) in self.hermite_coeffs.iter().enumerate() {
            total += b * cur;
            let next = x * cur - k as f64 * prev;
            prev = cur;
            cur = next;
        }
        total
    }

    fn scaled(&self, by_degree: impl Fn(usize) -> f64) -> Self {
        GaussianPolynomial {
            hermite_coeffs: self.hermite_coeffs.iter().enumerate().map(|(k, b)| b * by_degree(k)).collect(),
        }
    }

    /// `Lap_ou = d^2/dx^2 - x d/dx`, acting as `-k` on `He_k`.
    pub fn ou_generator(&self) -> Self {
        self.scaled(|k| -(k as f64))
    }

    pub fn ou_heat(&self, t: f64) -> Self {
        self.scaled(|k| (-t * k as f64).exp())
    }
}

/// `int_0^inf g(x) e^(-x^2/2) dx` for polynomial `g` of degree at most 2m-1,
/// exactly, via `u = x^2/2`: the even part meets `u^(-1/2) e^-u`, the odd
/// part `e^-u`.
struct HalfLineGauss {
    even: GaussLaguerre,
    odd: GaussLaguerre,
}

impl HalfLineGauss {
    fn new(points: usize) -> Result<Self> {
        Ok(HalfLineGauss {
            even: GaussLaguerre::new(points, -0.5)?,
            odd: GaussLaguerre::new(points, 0.0)?,
        })
    }

    fn integrate<G: Fn(f64) -> f64>(&self, g: G) -> f64 {
        let even = self.even.integrate(|u| {
            let x = (2.0 * u).sqrt();
            0.5 * (g(x) + g(-x))
        }) / 2f64.sqrt();
        let odd = self.odd.integrate(|u| {
            let x = (2.0 * u).sqrt();
            if x == 0.0 {
                0.0
            } else {
                0.5 * (g(x) - g(-x)) / x
            }
        });
        even + odd
    }
}

fn gauss_rule() -> Result<HalfLineGauss> {
    HalfLineGauss::new(2 * MAX_HERMITE_DEGREE + 2)
}

/// Signs of `f` on `(0, inf)` and `(-inf, 0)`; errors if `f` changes sign
/// inside either half-line.
fn half_line_signs(f: &GaussianPolynomial) -> Result<(f64, f64)> {
    let probe: Vec<f64> = (1..=400).map(|i| 0.025 * i as f64).collect();
    let sign_on = |dir: f64| -> Result<f64> {
        let mut sign = 0.0;
        for &x in &probe {
            let v = f.eval(dir * x);
            if v != 0.0 {
                if sign != 0.0 && v.signum() != sign {
                    return Err(Error::invalid_input("polynomial changes sign away from x = 0"));
                }
                sign = v.signum();
            }
        }
        Ok(sign)
    };
    Ok((sign_on(1.0)?, sign_on(-1.0)?))
}

/// `int |f| rho / sqrt(2 pi)` for `f` with constant sign on each half-line.
pub fn gaussian_l1(f: &GaussianPolynomial) -> Result<f64> {
    let (plus, minus) = half_line_signs(f)?;
    let rule = gauss_rule()?;
    let right = rule.integrate(|x| plus * f.eval(x));
    let left = rule.integrate(|x| minus * f.eval(-x));
    Ok((right + left) / (2.0 * std::f64::consts::PI).sqrt())
}

/// `int_{f != 0} (-Lap_ou f) sgn f rho / sqrt(2 pi)`.
pub fn ou_sign_integral(f: &GaussianPolynomial) -> Result<f64> {
    let (plus, minus) = half_line_signs(f)?;
    let g = f.ou_generator();
    let rule = gauss_rule()?;
    let right = rule.integrate(|x| -plus * g.eval(x));
    let left = rule.integrate(|x| -minus * g.eval(-x));
    Ok((right + left) / (2.0 * std::f64::consts::PI).sqrt())
}

/// Time grid for the defect regression: log-spaced on `[1e-3, 1e-1]`.
pub fn defect_grid(points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| 10f64.powf(-3.0 + 2.0 * i as f64 / (points - 1) as f64))
        .collect()
}

/// `(integral, slope)`: the sign integral for `x^3`, and the least-squares
/// slope of `ln(1 - ||e^(t Lap_ou) f||_1 / ||f||_1)` against `ln t`.
pub fn gaussian_ou_flatness() -> Result<(f64, f64)> {
    let f = GaussianPolynomial::cubic();
    let integral = ou_sign_integral(&f)?;
    let base = gaussian_l1(&f)?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for t in defect_grid(21) {
        let ratio = gaussian_l1(&f.ou_heat(t))? / base;
        let defect = 1.0 - ratio;
        if !(defect > 0.0) {
            return Err(Error::numeric(format!("norm defect at t = {t} is {defect:e}"), defect.abs()));
        }
        xs.push(t.ln());
        ys.push(defect.ln());
    }
    Ok((integral, least_squares_slope(&xs, &ys)))
}

pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::{apply_multiplier, expectation, lp_norm, DegreeMultiplier};

    fn brute(n: usize, t: f64) -> f64 {
        let f = delta_pair(n).unwrap();
        lp_norm(&apply_multiplier(&f, &DegreeMultiplier::heat(t, 1.0).unwrap()), 1.0).unwrap()
    }

    #[test]
    fn delta_pair_shape() {
        assert_eq!(delta_pair(1).unwrap().values(), &[1.0, -1.0]);
        let f = delta_pair(3).unwrap();
        assert_eq!(f.values(), &[4.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -4.0]);
        for n in [2, 7, 12] {
            let f = delta_pair(n).unwrap();
            assert_eq!(expectation(&f), 0.0);
            assert_eq!(lp_norm(&f, 1.0).unwrap(), 1.0);
        }
        assert!(delta_pair(0).is_err());
        assert!(delta_pair(21).is_err());
    }

    #[test]
    fn exact_sum_small_cases() {
        for t in [0.3, 1.0, 2.5] {
            let v = exact_heat_l1(1, t).unwrap();
            assert!((v - (-t).exp()).abs() < 1e-15);
        }
        assert!((exact_heat_l1(2, 2f64.ln()).unwrap() - 0.5).abs() < 1e-15);
        assert!(exact_heat_l1(0, 1.0).is_err());
        assert!(exact_heat_l1(3, 0.0).is_err());
    }

    #[test]
    fn exact_sum_matches_brute_force() {
        for n in [2, 5, 9, 12] {
            for t in [0.1, 1.0, 5.0] {
                let (e, b) = (exact_heat_l1(n, t).unwrap(), brute(n, t));
                assert!(((e - b) / b).abs() < 1e-12, "n {n} t {t}: {e} vs {b}");
            }
        }
    }

    #[test]
    fn big_binomial_conversion() {
        let c = binomial(3000, 1500);
        let x = big_from_biguint(&c, 256);
        let mut cc = Consts::new().unwrap();
        let ln_c = big_to_f64(&x.ln(256, RM, &mut cc));
        let want = ln_gamma(3001.0) - 2.0 * ln_gamma(1501.0);
        assert!((ln_c - want).abs() < 1e-9 * want);
        assert_eq!(big_to_f64(&big_from_biguint(&BigUint::from(12345u32), 256)), 12345.0);
    }

    #[test]
    fn double_precision_variant_agrees() {
        for n in [1, 2, 7, 40, 301] {
            for t in [0.05, 0.7, 3.0] {
                let e = exact_heat_l1(n, t).unwrap();
                let d = heat_l1_from_eps(n, (-t).exp());
                assert!((e - d).abs() < 1e-12, "n {n} t {t}: {e} vs {d}");
            }
        }
        assert_eq!(heat_l1_from_eps(10, 1.0), 1.0);
        assert_eq!(heat_l1_from_eps(10, 0.0), 0.0);
    }

    #[test]
    fn almost1_examples() {
        assert!((almost1_bound(10, 0.5).unwrap() - 0.5 * (1.0 - 0.75f64.powi(5))).abs() < 1e-15);
        assert!((almost1_bound(10, 0.5).unwrap() - 0.38135).abs() < 1e-5);
        assert!(almost1_bound(10, 1e-12).unwrap() < 1e-20);
        assert!((almost1_bound(1_000_000, 0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!(almost1_bound(10, 0.6).is_err());
        assert!(almost1_bound(10, 0.0).is_err());
        let r = almost1_report(51, 2f64.ln()).unwrap();
        assert!(r.pass && r.params["heuristic"] == false);
    }

    #[test]
    fn hermite_evaluation() {
        let f = GaussianPolynomial::cubic();
        for x in [-2.0, -0.3, 0.0, 1.7] {
            assert!((f.eval(x) - x * x * x).abs() < 1e-13);
        }
        let g = f.ou_generator();
        for x in [-1.1, 0.4, 2.0] {
            // f'' - x f' = 6x - 3x^3
            assert!((g.eval(x) - (6.0 * x - 3.0 * x * x * x)).abs() < 1e-12);
        }
        assert!(GaussianPolynomial::new(vec![1.0; 18]).is_err());
    }

    #[test]
    fn half_line_moments() {
        let rule = gauss_rule().unwrap();
        assert!((rule.integrate(|x| x) - 1.0).abs() < 1e-12);
        assert!((rule.integrate(|x| x.powi(3)) - 2.0).abs() < 1e-12);
        let half_gauss = (std::f64::consts::PI / 2.0).sqrt();
        assert!((rule.integrate(|_| 1.0) - half_gauss).abs() < 1e-12);
        assert!((rule.integrate(|x| x * x) - half_gauss).abs() < 1e-12);
        // E|x|^3 = 2 sqrt(2/pi)
        let l1 = gaussian_l1(&GaussianPolynomial::cubic()).unwrap();
        assert!((l1 - 2.0 * (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn ou_flatness() {
        let (integral, slope) = gaussian_ou_flatness().unwrap();
        assert!(integral.abs() < 1e-10);
        assert!(slope >= 1.9 && slope < 2.1, "{slope}");
        let f = GaussianPolynomial::cubic();
        assert_eq!(f.ou_heat(0.0), f);
        // closed form of the norm ratio: (3 e^-t - e^-3t) / 2 + O(t^3)
        let t: f64 = 1e-2;
        let ratio = gaussian_l1(&f.ou_heat(t)).unwrap() / gaussian_l1(&f).unwrap();
        assert!((1.0 - ratio - 1.5 * t * t).abs() < 3.0 * t.powi(3));
    }
}
