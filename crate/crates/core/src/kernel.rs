//! Fractional heat kernels on the cube and their band-preserving,
//! nonnegative modification.
//!
//! The modification subtracts `kappa t^((1+g)/g) phi(t^(1/g) tau)` from the
//! subordinating density, where `phi` is a bump on `[1, 2]` whose exponential
//! moments vanish at every degree of the band. On the cube this shifts the
//! degree-`d` coefficient by `kappa t mu_d` with `mu_d = int e^(-d u) phi(u) du`.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cube::{fwht, ifwht, lp_norm_slice, CubeFunction, Spectrum};
use crate::error::{Error, Result};
use crate::quad::{golden_section_min, integrate, Tolerance};
use crate::report::VerificationReport;
use crate::subordination::StableDensityEvaluator;

pub use crate::cube::group_convolve;

pub const MAX_HEAT_KERNEL_DIM: usize = 20;
pub const MAX_MODIFIED_DIM: usize = 16;
pub const MAX_BAND_DEGREE: usize = 16;
/// Points of the nonnegativity grid over the bump support.
pub const MARGIN_GRID: usize = 1024;
pub const BAND_TOL: f64 = 1e-8;
const MOMENT_TOL: f64 = 1e-10;
const SUP_SAMPLES: usize = 20_001;

/// `exp(-1/(1-(2u-3)^2))` on `(1, 2)`, zero elsewhere.
pub fn master_bump(u: f64) -> f64 {
    let s = 2.0 * u - 3.0;
    let w = 1.0 - s * s;
    if w <= 0.0 {
        0.0
    } else {
        (-1.0 / w).exp()
    }
}

fn bump_integral<F: Fn(f64) -> f64>(f: F) -> Result<f64> {
    Ok(integrate(f, 1.0, 2.0, Tolerance::new(1e-13, 1e-12), 2000)?.value)
}

/// Heat kernel `K_t^g(x) = sum_S e^(-t |S|^g) x^S`.
pub fn heat_kernel(n: usize, t: f64, gamma: f64) -> Result<CubeFunction> {
    if n == 0 || n > MAX_HEAT_KERNEL_DIM {
        return Err(Error::invalid_parameter(format!(
            "heat kernel dimension n = {n} outside 1..={MAX_HEAT_KERNEL_DIM}"
        )));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid_parameter(format!("t = {t} must be positive")));
    }
    let m = crate::cube::DegreeMultiplier::heat(t, gamma)?;
    Ok(ifwht(&Spectrum::from_degree_profile(n, &m.factors(n))?))
}

/// `phi(u) = q(u) eta(u)` with `q(u) = sum_i c_i u^i`, normalized to unit mass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpFunction {
    pub band: Vec<usize>,
    pub poly_coeffs: Vec<f64>,
    pub sup_norm: f64,
    pub mass: f64,
}

impl BumpFunction {
    pub fn poly(&self, u: f64) -> f64 {
        self.poly_coeffs.iter().rev().fold(0.0, |acc, c| acc * u + c)
    }

    pub fn eval(&self, u: f64) -> f64 {
        let eta = master_bump(u);
        if eta == 0.0 {
            0.0
        } else {
            self.poly(u) * eta
        }
    }

    /// `int e^(-m u) phi(u) du`.
    pub fn moment(&self, m: usize) -> Result<f64> {
        let mf = m as f64;
        bump_integral(|u| (-mf * u).exp() * self.eval(u))
    }
}

fn check_band(band: &BTreeSet<usize>) -> Result<()> {
    if band.is_empty() {
        return Err(Error::invalid_parameter("band must be nonempty"));
    }
    if band.contains(&0) || band.iter().any(|&d| d > MAX_BAND_DEGREE) {
        return Err(Error::invalid_parameter(format!(
            "band degrees must lie in 1..={MAX_BAND_DEGREE}"
        )));
    }
    Ok(())
}

/// Gram-type entries `int e^(-m u) u^j eta(u) du` and masses `int u^j eta`.
fn moment_system(band: &[usize], degree: usize) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let mut a = DMatrix::zeros(band.len(), degree + 1);
    let mut mass = DVector::zeros(degree + 1);
    for j in 0..=degree {
        let jj = j as i32;
        mass[j] = bump_integral(|u| u.powi(jj) * master_bump(u))?;
        for (i, &m) in band.iter().enumerate() {
            let mf = m as f64;
            a[(i, j)] = bump_integral(|u| (-mf * u).exp() * u.powi(jj) * master_bump(u))?;
        }
    }
    Ok((a, mass))
}

/// Null vector of the `|band| x (|band|+1)` moment system, or `None` when the
/// kernel is not one-dimensional or carries no mass.
fn null_vector_solution(band: &[usize]) -> Result<Option<Vec<f64>>> {
    let b = band.len();
    let (a, mass) = moment_system(band, b)?;
    // pad to square so the full right singular basis is available
    let mut square = DMatrix::zeros(b + 1, b + 1);
    square.view_mut((0, 0), (b, b + 1)).copy_from(&a);
    let svd = square.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let sv = &svd.singular_values;
    let mut order: Vec<usize> = (0..=b).collect();
    order.sort_by(|&i, &j| sv[i].total_cmp(&sv[j]));
    let largest = sv[order[b]];
    // one padded zero is expected; a second tiny value means a degenerate kernel
    if b >= 1 && sv[order[1]] <= 1e-12 * largest {
        return Ok(None);
    }
    let c: Vec<f64> = v_t.row(order[0]).iter().cloned().collect();
    let m: f64 = c.iter().zip(mass.iter()).map(|(x, y)| x * y).sum();
    if m.abs() <= 1e-12 {
        return Ok(None);
    }
    Ok(Some(c.into_iter().map(|x| x / m).collect()))
}

/// Degree `|band| + 1` fallback: least-norm solution of `[A; mass] c = [0; 1]`.
fn least_norm_solution(band: &[usize]) -> Result<Vec<f64>> {
    let b = band.len();
    let (a, mass) = moment_system(band, b + 1)?;
    let mut sys = DMatrix::zeros(b + 1, b + 2);
    sys.view_mut((0, 0), (b, b + 2)).copy_from(&a);
    sys.row_mut(b).copy_from(&mass.transpose());
    let mut rhs = DVector::zeros(b + 1);
    rhs[b] = 1.0;
    let svd = sys.svd(true, true);
    let c = svd
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::ConstructionFailure(format!("least-norm bump solve: {e}")))?;
    Ok(c.iter().cloned().collect())
}

/// Bump on `[1, 2]` with `int e^(-m u) phi = 0` for `m` in the band and unit mass.
pub fn construct_bump(band: &BTreeSet<usize>) -> Result<BumpFunction> {
    check_band(band)?;
    let degrees: Vec<usize> = band.iter().cloned().collect();
    let coeffs = match null_vector_solution(&degrees)? {
        Some(c) => c,
        None => least_norm_solution(&degrees)?,
    };
    let mut bump = BumpFunction {
        band: degrees,
        poly_coeffs: coeffs,
        sup_norm: f64::NAN,
        mass: f64::NAN,
    };
    bump.mass = bump.moment(0)?;
    if (bump.mass - 1.0).abs() > 1e-9 {
        return Err(Error::ConstructionFailure(format!("bump mass {} after normalization", bump.mass)));
    }
    for &m in &bump.band {
        let mu = bump.moment(m)?;
        if mu.abs() > MOMENT_TOL {
            return Err(Error::ConstructionFailure(format!(
                "exponential moment at degree {m} is {mu:e}"
            )));
        }
    }
    bump.sup_norm = sup_norm(&bump);
    Ok(bump)
}

fn sup_norm(bump: &BumpFunction) -> f64 {
    let h = 1.0 / (SUP_SAMPLES - 1) as f64;
    let (i_best, _) = (0..SUP_SAMPLES)
        .map(|i| (i, bump.eval(1.0 + i as f64 * h).abs()))
        .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
    let lo = (1.0 + (i_best as f64 - 1.0) * h).max(1.0);
    let hi = (1.0 + (i_best as f64 + 1.0) * h).min(2.0);
    let (_, neg) = golden_section_min(|u| -bump.eval(u).abs(), lo, hi, 1e-13);
    (-neg).max(bump.eval(1.0 + i_best as f64 * h).abs())
}

/// Everything needed to build the modified kernel for `t` in `(0, t0]`.
#[derive(Clone, Debug)]
pub struct ModificationPlan {
    pub gamma: f64,
    pub band: Vec<usize>,
    pub bump: BumpFunction,
    pub kappa: f64,
    pub r0: f64,
    pub t0: f64,
    pub density: StableDensityEvaluator,
    /// `mu_d` for `d = 0..=MAX_MODIFIED_DIM`, with `mu_0 = 1`.
    pub moments: Vec<f64>,
    /// Smallest grid value of `p(tau) - kappa t^((1+g)/g) phi(t^(1/g) tau)`
    /// for `t = t0, t0/2, t0/4`.
    pub margins: Vec<(f64, f64)>,
}

pub fn build_plan(gamma: f64, band: &BTreeSet<usize>) -> Result<ModificationPlan> {
    let density = StableDensityEvaluator::new(gamma)?;
    build_plan_with(density, band)
}

/// [`build_plan`] reusing an already configured evaluator.
pub fn build_plan_with(density: StableDensityEvaluator, band: &BTreeSet<usize>) -> Result<ModificationPlan> {
    let bump = construct_bump(band)?;
    let gamma = density.gamma();
    let c = density.tail_constant();
    let kappa = c / (2f64.powf(3.0 + gamma) * bump.sup_norm);
    let (r0, t0) = (density.r0(), density.t0());

    let mut moments = vec![1.0];
    for d in 1..=MAX_MODIFIED_DIM {
        moments.push(bump.moment(d)?);
    }

    let mut margins = Vec::new();
    for t in [t0, 0.5 * t0, 0.25 * t0] {
        let s = t.powf(1.0 / gamma);
        let amp = kappa * t.powf((1.0 + gamma) / gamma);
        let (lo, hi) = (1.0 / s, 2.0 / s);
        let rows: Vec<(f64, f64)> = (0..MARGIN_GRID)
            .into_par_iter()
            .map(|i| {
                let tau = lo + (hi - lo) * i as f64 / (MARGIN_GRID - 1) as f64;
                Ok((tau, density.density(tau)? - amp * bump.eval(s * tau)))
            })
            .collect::<Result<_>>()?;
        let (tau_min, min) = rows
            .into_iter()
            .fold((f64::NAN, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
        if min < 0.0 {
            return Err(Error::ConstructionFailure(format!(
                "modified density negative ({min:e}) at tau = {tau_min} for t = {t}"
            )));
        }
        margins.push((t, min));
    }

    Ok(ModificationPlan {
        gamma,
        band: bump.band.clone(),
        bump,
        kappa,
        r0,
        t0,
        density,
        moments,
        margins,
    })
}

fn check_modified_args(plan: &ModificationPlan, n: usize, t: f64) -> Result<()> {
    if n == 0 || n > MAX_MODIFIED_DIM {
        return Err(Error::invalid_parameter(format!(
            "modified kernel dimension n = {n} outside 1..={MAX_MODIFIED_DIM}"
        )));
    }
    if !(t > 0.0 && t <= plan.t0 * (1.0 + 1e-12)) {
        return Err(Error::invalid_parameter(format!("t = {t} outside (0, t0 = {}]", plan.t0)));
    }
    Ok(())
}

/// Degree profile of the modified kernel: `e^(-t d^g) - kappa t mu_d`.
pub fn modified_profile(plan: &ModificationPlan, n: usize, t: f64) -> Result<Vec<f64>> {
    check_modified_args(plan, n, t)?;
    Ok((0..=n)
        .map(|d| (-t * (d as f64).powf(plan.gamma)).exp() - plan.kappa * t * plan.moments[d])
        .collect())
}

pub fn modified_kernel(plan: &ModificationPlan, n: usize, t: f64) -> Result<CubeFunction> {
    let profile = modified_profile(plan, n, t)?;
    Ok(ifwht(&Spectrum::from_degree_profile(n, &profile)?))
}

/// Fields reported by the `kernel` command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSummary {
    pub gamma: f64,
    pub band: Vec<usize>,
    pub kappa: f64,
    pub t0: f64,
    pub t: f64,
    pub n: usize,
    pub min_value: f64,
    pub band_dev: f64,
    pub l1_norm: f64,
    pub bound: f64,
    pub pass: bool,
}

pub fn modification_summary(plan: &ModificationPlan, n: usize, t: f64) -> Result<KernelSummary> {
    let k = modified_kernel(plan, n, t)?;
    let min_value = k.values().iter().cloned().fold(f64::INFINITY, f64::min);
    let l1_norm = lp_norm_slice(k.values(), 1.0);
    let spectrum = fwht(&k);
    let band_dev = spectrum
        .coeffs()
        .iter()
        .enumerate()
        .filter(|(s, _)| plan.band.contains(&(s.count_ones() as usize)))
        .map(|(s, a)| (a - (-t * (s.count_ones() as f64).powf(plan.gamma)).exp()).abs())
        .fold(0.0, f64::max);
    let bound = (-0.5 * plan.kappa * t).exp();
    let mass = 1.0 - plan.kappa * t;
    let pass = min_value >= 0.0
        && band_dev <= BAND_TOL
        && (l1_norm - mass).abs() <= 1e-10
        && l1_norm <= bound;
    Ok(KernelSummary {
        gamma: plan.gamma,
        band: plan.band.clone(),
        kappa: plan.kappa,
        t0: plan.t0,
        t,
        n,
        min_value,
        band_dev,
        l1_norm,
        bound,
        pass,
    })
}

impl KernelSummary {
    pub fn to_report(&self) -> VerificationReport {
        VerificationReport::at_most("modified_kernel", self.l1_norm, self.bound, 0.0)
            .param("gamma", self.gamma)
            .param("band", self.band.clone())
            .param("kappa", self.kappa)
            .param("t0", self.t0)
            .param("t", self.t)
            .param("n", self.n)
            .param("min_value", self.min_value)
            .param("band_dev", self.band_dev)
            .condition("nonnegative", self.min_value >= 0.0)
            .condition("band_preserved", self.band_dev <= BAND_TOL)
            .condition("l1_equals_mass", (self.l1_norm - (1.0 - self.kappa * self.t)).abs() <= 1e-10)
    }
}

pub fn verify_modification(plan: &ModificationPlan, n: usize, t: f64) -> Result<VerificationReport> {
    Ok(modification_summary(plan, n, t)?.to_report())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::{apply_multiplier, DegreeMultiplier};

    fn band(v: &[usize]) -> BTreeSet<usize> {
        v.iter().cloned().collect()
    }

    #[test]
    fn heat_kernel_product_formula() {
        let t = 0.7;
        let k = heat_kernel(1, t, 1.0).unwrap();
        let e = (-t).exp();
        assert!((k.values()[0] - (1.0 + e)).abs() < 1e-15);
        assert!((k.values()[1] - (1.0 - e)).abs() < 1e-15);
        for gamma in [0.3, 1.0] {
            let k = heat_kernel(9, 0.2, gamma).unwrap();
            assert!((crate::cube::expectation(&k) - 1.0).abs() < 1e-12);
            assert!(k.values().iter().all(|v| *v >= -1e-9));
        }
        assert!(heat_kernel(21, 1.0, 1.0).is_err());
        assert!(heat_kernel(3, 0.0, 1.0).is_err());
    }

    #[test]
    fn heat_kernel_matches_subordination_integral() {
        let (n, t, gamma) = (8usize, 0.5, 0.5);
        let ev = StableDensityEvaluator::new(gamma).unwrap();
        let k = heat_kernel(n, t, gamma).unwrap();
        let s = t.powf(1.0 / gamma);
        for minus in 0..=n {
            let want = ev
                .expectation(
                    |tau| {
                        let e = (-tau * s).exp();
                        (1.0 + e).powi((n - minus) as i32) * (1.0 - e).powi(minus as i32)
                    },
                    1e-9,
                )
                .unwrap();
            let mask = (1usize << minus) - 1;
            assert!((k.values()[mask] - want).abs() < 1e-5, "{minus}: {} vs {want}", k.values()[mask]);
        }
    }

    #[test]
    fn convolution_with_heat_kernel_is_the_multiplier() {
        let f = CubeFunction::from_fn(6, |m| ((m * 37 % 11) as f64 - 5.0) / 3.0).unwrap();
        let k = heat_kernel(6, 0.4, 0.5).unwrap();
        let a = group_convolve(&k, &f).unwrap();
        let b = apply_multiplier(&f, &DegreeMultiplier::heat(0.4, 0.5).unwrap());
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn bump_moments_vanish() {
        for b in [band(&[1]), band(&[1, 2]), band(&[2, 3, 7])] {
            let bump = construct_bump(&b).unwrap();
            assert_eq!(bump.poly_coeffs.len(), b.len() + 1);
            assert!((bump.moment(0).unwrap() - 1.0).abs() < 1e-10);
            for &m in &b {
                assert!(bump.moment(m).unwrap().abs() < 1e-10, "{b:?} degree {m}");
            }
            assert!(bump.sup_norm.is_finite() && bump.sup_norm > 0.0);
            assert_eq!(bump.eval(0.99), 0.0);
            assert_eq!(bump.eval(2.01), 0.0);
        }
    }

    #[test]
    fn bump_for_single_degree_against_direct_solve() {
        // q(u) = c0 + c1 u with c0 A0 + c1 A1 = 0
        let a0 = bump_integral(|u| (-u).exp() * master_bump(u)).unwrap();
        let a1 = bump_integral(|u| (-u).exp() * u * master_bump(u)).unwrap();
        let m0 = bump_integral(master_bump).unwrap();
        let m1 = bump_integral(|u| u * master_bump(u)).unwrap();
        let (c0, c1) = (a1, -a0);
        let norm = c0 * m0 + c1 * m1;
        let bump = construct_bump(&band(&[1])).unwrap();
        assert!((bump.poly_coeffs[0] - c0 / norm).abs() < 1e-8 * (c0 / norm).abs());
        assert!((bump.poly_coeffs[1] - c1 / norm).abs() < 1e-8 * (c1 / norm).abs());
    }

    #[test]
    fn construct_bump_rejects_bad_band() {
        assert!(construct_bump(&band(&[])).is_err());
        assert!(construct_bump(&band(&[0, 1])).is_err());
        assert!(construct_bump(&band(&[17])).is_err());
    }

    #[test]
    fn plan_at_half() {
        let plan = build_plan(0.5, &band(&[1, 2])).unwrap();
        assert!(plan.kappa > 0.0);
        assert!((plan.t0 - 0.25).abs() < 1e-15);
        let c = plan.density.tail_constant();
        assert!(plan.kappa * plan.bump.sup_norm * 2f64.powf(3.5) <= c + 1e-12);
        assert!(plan.margins.iter().all(|(_, m)| *m >= 0.0));
    }

    #[test]
    fn modified_kernel_modes_and_positivity() {
        let plan = build_plan(0.5, &band(&[1, 2])).unwrap();
        let t = plan.t0;
        let k = modified_kernel(&plan, 12, t).unwrap();
        assert!(k.values().iter().all(|v| *v >= 0.0));
        let a = fwht(&k);
        assert!((a.coeff(0) - (1.0 - plan.kappa * t)).abs() < 1e-12);
        assert!((a.coeff(0b11) - (-t * 2f64.sqrt()).exp()).abs() < 1e-8);
        assert!((a.coeff(0b1000) - (-t).exp()).abs() < 1e-8);
        assert!(modified_kernel(&plan, 12, 2.0 * t).is_err());
        assert!(modified_kernel(&plan, 12, 0.0).is_err());
        let r = verify_modification(&plan, 12, 0.5 * t).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn mass_bound_elementary() {
        for i in 1..=100 {
            let x = i as f64 / 100.0;
            assert!(1.0 - x <= (-0.5 * x).exp());
        }
    }
}
