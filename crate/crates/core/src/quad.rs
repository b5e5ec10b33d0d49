//! Numerical integration and one-dimensional search primitives.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

// 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21).
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_478_796,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Requested accuracy: stop once the error estimate is below
/// `max(abs, rel * |integral|)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub fn abs(abs: f64) -> Self {
        Tolerance { abs, rel: 0.0 }
    }

    pub fn new(abs: f64, rel: f64) -> Self {
        Tolerance { abs, rel }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub abs_err: f64,
    pub evals: usize,
}

#[derive(Clone, Copy, Debug)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// One application of the 21-point Gauss-Kronrod rule on `[a, b]`.
/// Returns the Kronrod estimate and a QUADPACK-style error estimate.
pub fn kronrod21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let res_k = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();

    let mut err = ((res_k - res_g * half) ).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (1.0f64).min((200.0 * err / res_asc).powf(1.5));
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (res_k, err)
}

/// Globally adaptive Gauss-Kronrod quadrature on a finite interval
/// (bisection of the segment with the largest error estimate).
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    tol: Tolerance,
    max_segments: usize,
) -> Result<Integral> {
    if a == b {
        return Ok(Integral { value: 0.0, abs_err: 0.0, evals: 0 });
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::invalid_parameter("integration limits must be finite"));
    }
    let (value, err) = kronrod21(&mut f, a, b);
    let mut evals = 21;
    if !value.is_finite() {
        return Err(Error::numeric("adaptive quadrature (non-finite integrand)", f64::INFINITY));
    }
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, err });
    let mut total = value;
    let mut total_err = err;
    // segments too narrow to split further; their error is accepted as is
    let mut frozen_err = 0.0;
    let mut frozen_value = 0.0;

    while total_err > tol.target(total) {
        if heap.len() >= max_segments {
            return Err(Error::numeric("adaptive quadrature (segment limit)", total_err));
        }
        let Some(seg) = heap.pop() else { break };
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a.min(seg.b) || mid >= seg.a.max(seg.b) || (seg.b - seg.a).abs() < 1e3 * f64::EPSILON * mid.abs().max(f64::MIN_POSITIVE) {
            frozen_err += seg.err;
            frozen_value += seg.value;
            if heap.is_empty() {
                break;
            }
            continue;
        }
        let (v1, e1) = kronrod21(&mut f, seg.a, mid);
        let (v2, e2) = kronrod21(&mut f, mid, seg.b);
        evals += 42;
        if !(v1.is_finite() && v2.is_finite()) {
            return Err(Error::numeric("adaptive quadrature (non-finite integrand)", f64::INFINITY));
        }
        heap.push(Segment { a: seg.a, b: mid, value: v1, err: e1 });
        heap.push(Segment { a: mid, b: seg.b, value: v2, err: e2 });
        // resum to avoid drift from incremental updates
        total = frozen_value + heap.iter().map(|s| s.value).sum::<f64>();
        total_err = frozen_err + heap.iter().map(|s| s.err).sum::<f64>();
    }
    if frozen_err > tol.target(total) {
        return Err(Error::numeric("adaptive quadrature (roundoff limit)", total_err));
    }
    Ok(Integral { value: total, abs_err: total_err, evals })
}

/// Integrates over consecutive breakpoints and sums the pieces.
pub fn integrate_pieces<F: FnMut(f64) -> f64>(
    mut f: F,
    breaks: &[f64],
    tol: Tolerance,
    max_segments: usize,
) -> Result<Integral> {
    let pieces = breaks.len().saturating_sub(1).max(1) as f64;
    let piece_tol = Tolerance::new(tol.abs / pieces, tol.rel);
    let mut out = Integral { value: 0.0, abs_err: 0.0, evals: 0 };
    for w in breaks.windows(2) {
        let r = integrate(&mut f, w[0], w[1], piece_tol, max_segments)?;
        out.value += r.value;
        out.abs_err += r.abs_err;
        out.evals += r.evals;
    }
    Ok(out)
}

/// Wynn's epsilon algorithm applied to a sequence of partial sums.
///
/// Returns the extrapolated limit taken from the highest even column that
/// could be formed, together with the distance to the previous even-column
/// estimate as an error indicator.
pub fn wynn_epsilon(sums: &[f64]) -> (f64, f64) {
    let len = sums.len();
    match len {
        0 => return (0.0, f64::INFINITY),
        1 => return (sums[0], f64::INFINITY),
        _ => {}
    }
    // prev = column k-1, cur = column k; column -1 is all zeros
    let mut prev: Vec<f64> = vec![0.0; len + 1];
    let mut cur: Vec<f64> = sums.to_vec();
    let mut best = sums[len - 1];
    let mut best_err = (sums[len - 1] - sums[len - 2]).abs();
    let mut last_even = best;
    let mut col = 0;
    while cur.len() > 1 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        let mut ok = true;
        for i in 0..cur.len() - 1 {
            let diff = cur[i + 1] - cur[i];
            if diff == 0.0 || !diff.is_finite() {
                ok = false;
                break;
            }
            next.push(prev[i + 1] + 1.0 / diff);
        }
        if !ok || next.iter().any(|v| !v.is_finite()) {
            break;
        }
        col += 1;
        prev = cur;
        cur = next;
        if col % 2 == 0 {
            let est = cur[cur.len() - 1];
            best_err = (est - last_even).abs();
            if cur.len() >= 2 {
                best_err = best_err.max((est - cur[cur.len() - 2]).abs());
            }
            best = est;
            last_even = est;
        }
    }
    (best, best_err)
}

/// Minimizes a unimodal function on `[a, b]` by golden-section search.
/// Returns `(argmin, min)`.
pub fn golden_section_min<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, x_tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > x_tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Root of a monotone function on a bracket `[lo, hi]` with
/// `f(lo) <= 0 <= f(hi)` (or the reverse), by Newton steps safeguarded with
/// bisection.
pub fn bracketed_root<F, D>(f: F, df: D, mut lo: f64, mut hi: f64, x_tol: f64) -> f64
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    let increasing = flo < 0.0;
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = f(x);
        if fx == 0.0 {
            return x;
        }
        if (fx < 0.0) == increasing {
            lo = x;
        } else {
            hi = x;
        }
        if (hi - lo).abs() <= x_tol * x.abs().max(1e-300) {
            break;
        }
        let d = df(x);
        let newton = x - fx / d;
        x = if d != 0.0 && newton > lo.min(hi) && newton < hi.max(lo) {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (x - lo).abs() <= f64::EPSILON * x.abs() || (hi - x).abs() <= f64::EPSILON * x.abs() {
            // Newton landed on the bracket edge; one bisection step keeps progress
            x = 0.5 * (lo + hi);
        }
    }
    x
}

/// `(L_m^alpha(x), L_{m-1}^alpha(x))` by the three-term recurrence.
fn laguerre_pair(m: usize, alpha: f64, x: f64) -> (f64, f64) {
    let (mut prev, mut cur) = (0.0, 1.0);
    for k in 0..m {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + alpha - x) * cur - (kf + alpha) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

/// Generalized Gauss-Laguerre rule for `int_0^inf x^alpha e^-x g(x) dx`,
/// computed with the Golub-Welsch eigenvalue method.
#[derive(Clone, Debug)]
pub struct GaussLaguerre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLaguerre {
    pub fn new(points: usize, alpha: f64) -> Result<Self> {
        if points == 0 || alpha <= -1.0 {
            return Err(Error::invalid_parameter("Gauss-Laguerre needs points > 0 and alpha > -1"));
        }
        let mut jacobi = DMatrix::<f64>::zeros(points, points);
        for i in 0..points {
            let k = i as f64;
            jacobi[(i, i)] = 2.0 * k + alpha + 1.0;
            if i + 1 < points {
                let off = ((k + 1.0) * (k + 1.0 + alpha)).sqrt();
                jacobi[(i, i + 1)] = off;
                jacobi[(i + 1, i)] = off;
            }
        }
        let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().cloned().collect();
        nodes.sort_by(|a, b| a.total_cmp(b));
        let n = points as f64;
        // Newton polish on L_n^alpha, then w_i = Gamma(n+alpha+1)/n! * x_i / ((n+1) L_{n+1}(x_i))^2
        let scale = (1..=points).fold(gamma(alpha + 1.0), |acc, k| acc * (k as f64 + alpha) / k as f64);
        let mut weights = Vec::with_capacity(points);
        for x in nodes.iter_mut() {
            for _ in 0..4 {
                let (ln, ln1) = laguerre_pair(points, alpha, *x);
                let deriv = (n * ln - (n + alpha) * ln1) / *x;
                let step = ln / deriv;
                *x -= step;
                if step.abs() <= 1e-16 * x.abs() {
                    break;
                }
            }
            let (next, _) = laguerre_pair(points + 1, alpha, *x);
            weights.push(scale * *x / ((n + 1.0) * next).powi(2));
        }
        Ok(GaussLaguerre { nodes, weights })
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, g: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * g(*x)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_weights_are_consistent() {
        let total: f64 = 2.0 * WGK[..10].iter().sum::<f64>() + WGK[10];
        assert!((total - 2.0).abs() < 1e-15);
        let gauss: f64 = 2.0 * WG.iter().sum::<f64>();
        assert!((gauss - 2.0).abs() < 1e-15);
        // exact for polynomials up to degree 31
        let (v, _) = kronrod21(&mut |x: f64| x.powi(30), -1.0, 1.0);
        assert!((v - 2.0 / 31.0).abs() < 1e-15);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let r = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, Tolerance::new(1e-12, 1e-12), 500).unwrap();
        assert!((r.value - 2.0).abs() < 1e-10, "{r:?}");
        let r = integrate(|x: f64| x.ln(), 0.0, 1.0, Tolerance::new(1e-12, 0.0), 500).unwrap();
        assert!((r.value + 1.0).abs() < 1e-11);
    }

    #[test]
    fn adaptive_reports_failure() {
        let r = integrate(|x: f64| (1.0 / x).sin() / x, 1e-9, 1.0, Tolerance::abs(1e-14), 8);
        assert!(matches!(r, Err(Error::NumericFailure { .. })));
    }

    #[test]
    fn epsilon_accelerates_alternating_series() {
        // ln 2 = 1 - 1/2 + 1/3 - ...
        let mut sums = Vec::new();
        let mut s = 0.0;
        for k in 1..=20 {
            s += if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64;
            sums.push(s);
        }
        let (est, _) = wynn_epsilon(&sums);
        assert!((est - 2f64.ln()).abs() < 1e-12, "{est}");
    }

    #[test]
    fn golden_section_finds_minimum() {
        let (x, fx) = golden_section_min(|x| (x - 0.3).powi(2), 0.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-9 && fx < 1e-18);
    }

    #[test]
    fn bracketed_root_on_monotone_function() {
        let r = bracketed_root(|x| x.powf(0.3) - 2.0, |x| 0.3 * x.powf(-0.7), 1.0, 100.0, 1e-15);
        assert!((r - 2f64.powf(1.0 / 0.3)).abs() < 1e-12);
    }

    #[test]
    fn laguerre_moments() {
        let rule = GaussLaguerre::new(20, 0.0).unwrap();
        // int x^k e^-x = k!
        assert!((rule.integrate(|x| x.powi(5)) - 120.0).abs() < 1e-9);
        let half = GaussLaguerre::new(20, -0.5).unwrap();
        // int x^-1/2 e^-x = sqrt(pi)
        assert!((half.integrate(|_| 1.0) - std::f64::consts::PI.sqrt()).abs() < 1e-12);
        assert!(GaussLaguerre::new(0, 0.0).is_err());
    }
}
