//! Functions on the Hamming cube `{-1, 1}^n` and their Walsh-Fourier spectra.
//!
//! A point is encoded by a bitmask `m < 2^n`: bit `j` of `m` is set exactly when
//! the coordinate `x_{j+1}` equals `-1`. A subset `S` of `{1, .., n}` is encoded
//! the same way, so the character `x^S` evaluated at the point `m` is
//! `(-1)^popcount(S & m)`. All expectations are taken under the uniform
//! probability measure, i.e. they divide by `2^n`.

mod io;
mod transform;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{FORMAT_MAGIC, FORMAT_VERSION};

/// Largest supported dimension; `2^24` reals occupy 128 MiB.
pub const MAX_DIM: usize = 24;

/// A real-valued function on `{-1, 1}^n`, stored pointwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFunction", into = "RawFunction")]
pub struct CubeFunction {
    n: usize,
    values: Vec<f64>,
}

/// Walsh-Fourier coefficients `a_S = E[f x^S]`, indexed by subset bitmask.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpectrum", into = "RawSpectrum")]
pub struct Spectrum {
    n: usize,
    coeffs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawFunction {
    n: usize,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawSpectrum {
    n: usize,
    coeffs: Vec<f64>,
}

impl TryFrom<RawFunction> for CubeFunction {
    type Error = Error;
    fn try_from(raw: RawFunction) -> Result<Self> {
        CubeFunction::new(raw.n, raw.values)
    }
}

impl From<CubeFunction> for RawFunction {
    fn from(f: CubeFunction) -> Self {
        RawFunction { n: f.n, values: f.values }
    }
}

impl TryFrom<RawSpectrum> for Spectrum {
    type Error = Error;
    fn try_from(raw: RawSpectrum) -> Result<Self> {
        Spectrum::new(raw.n, raw.coeffs)
    }
}

impl From<Spectrum> for RawSpectrum {
    fn from(s: Spectrum) -> Self {
        RawSpectrum { n: s.n, coeffs: s.coeffs }
    }
}

fn check_table(n: usize, data: &[f64]) -> Result<()> {
    if n == 0 || n > MAX_DIM {
        return Err(Error::invalid_input(format!(
            "dimension n = {n} outside 1..={MAX_DIM}"
        )));
    }
    if data.len() != 1usize << n {
        return Err(Error::invalid_input(format!(
            "expected 2^{n} = {} entries, got {}",
            1usize << n,
            data.len()
        )));
    }
    if let Some(i) = data.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid_input(format!("non-finite entry at index {i}")));
    }
    Ok(())
}

/// Value of the coordinate `x_j` (1-based `j`) at the point `mask`.
#[inline]
pub fn coordinate_sign(mask: usize, j: usize) -> f64 {
    if mask >> (j - 1) & 1 == 1 {
        -1.0
    } else {
        1.0
    }
}

/// Value of the character `x^S` at the point `mask`.
#[inline]
pub fn character_sign(subset: usize, mask: usize) -> f64 {
    if (subset & mask).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl CubeFunction {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        check_table(n, &values)?;
        Ok(CubeFunction { n, values })
    }

    /// Builds `f` from a closure over point masks.
    pub fn from_fn(n: usize, f: impl Fn(usize) -> f64) -> Result<Self> {
        if n == 0 || n > MAX_DIM {
            return Err(Error::invalid_input(format!(
                "dimension n = {n} outside 1..={MAX_DIM}"
            )));
        }
        CubeFunction::new(n, (0..1usize << n).map(f).collect())
    }

    pub fn constant(n: usize, c: f64) -> Result<Self> {
        CubeFunction::from_fn(n, |_| c)
    }

    /// The character `x^S` for the subset encoded by `subset`.
    pub fn character(n: usize, subset: usize) -> Result<Self> {
        if n > 0 && n <= MAX_DIM && subset >> n != 0 {
            return Err(Error::invalid_input(format!(
                "subset mask {subset:#b} has bits beyond n = {n}"
            )));
        }
        CubeFunction::from_fn(n, |m| character_sign(subset, m))
    }

    /// The coordinate function `x_j`, `1 <= j <= n`.
    pub fn coordinate(n: usize, j: usize) -> Result<Self> {
        if j == 0 || j > n {
            return Err(Error::invalid_parameter(format!("coordinate {j} outside 1..={n}")));
        }
        CubeFunction::character(n, 1 << (j - 1))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        CubeFunction::new(self.n, self.values.iter().map(|v| f(*v)).collect())
    }

    pub fn zip_with(&self, other: &CubeFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        same_dim(self.n, other.n)?;
        CubeFunction::new(
            self.n,
            self.values.iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect(),
        )
    }

    pub fn scale(&self, c: f64) -> Result<Self> {
        self.map(|v| c * v)
    }

    pub fn add(&self, other: &CubeFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &CubeFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// `f - E f`.
    pub fn centered(&self) -> CubeFunction {
        let mean = expectation(self);
        CubeFunction {
            n: self.n,
            values: self.values.iter().map(|v| v - mean).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

impl Spectrum {
    pub fn new(n: usize, coeffs: Vec<f64>) -> Result<Self> {
        check_table(n, &coeffs)?;
        Ok(Spectrum { n, coeffs })
    }

    /// Coefficients that depend only on the degree: `a_S = by_degree[|S|]`.
    pub fn from_degree_profile(n: usize, by_degree: &[f64]) -> Result<Self> {
        if by_degree.len() != n + 1 {
            return Err(Error::invalid_input(format!(
                "degree profile needs n + 1 = {} entries, got {}",
                n + 1,
                by_degree.len()
            )));
        }
        if n == 0 || n > MAX_DIM {
            return Err(Error::invalid_input(format!(
                "dimension n = {n} outside 1..={MAX_DIM}"
            )));
        }
        Spectrum::new(
            n,
            (0..1usize << n)
                .map(|s| by_degree[s.count_ones() as usize])
                .collect(),
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn coeff(&self, subset: usize) -> f64 {
        self.coeffs[subset]
    }

    /// Largest `|S|` with `|a_S| > tol`, or `None` for the zero spectrum.
    pub fn max_degree(&self, tol: f64) -> Option<usize> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, a)| a.abs() > tol)
            .map(|(s, _)| s.count_ones() as usize)
            .max()
    }

    /// Smallest `|S|` with `|a_S| > tol`.
    pub fn min_degree(&self, tol: f64) -> Option<usize> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, a)| a.abs() > tol)
            .map(|(s, _)| s.count_ones() as usize)
            .min()
    }

    /// `sum_S a_S^2`.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|a| a * a).sum()
    }

    /// `sum_S |S| a_S^2`.
    pub fn weighted_energy(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(s, a)| s.count_ones() as f64 * a * a)
            .sum()
    }

    /// Scales every coefficient by the multiplier evaluated at its degree.
    pub fn apply(&self, m: &DegreeMultiplier) -> Spectrum {
        let factors = m.factors(self.n);
        Spectrum {
            n: self.n,
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(s, a)| a * factors[s.count_ones() as usize])
                .collect(),
        }
    }
}

/// A Fourier multiplier that depends only on the degree `|S|`.
#[derive(Clone, Debug, PartialEq)]
pub enum DegreeMultiplier {
    /// `d -> -d`.
    Laplacian,
    /// `d -> -d^gamma`, `0 < gamma <= 1`.
    Fractional { gamma: f64 },
    /// `d -> exp(-t d^gamma)`, `t >= 0`, `0 < gamma <= 1`.
    Heat { t: f64, gamma: f64 },
    /// `d -> 1` if `d` is in the set, else `0`.
    DegreeProjection(BTreeSet<usize>),
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid_parameter(format!("gamma = {gamma} outside (0, 1]")))
    }
}

impl DegreeMultiplier {
    pub fn fractional(gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(DegreeMultiplier::Fractional { gamma })
    }

    pub fn heat(t: f64, gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::invalid_parameter(format!("heat time t = {t} must be finite and >= 0")));
        }
        Ok(DegreeMultiplier::Heat { t, gamma })
    }

    pub fn projection(degrees: impl IntoIterator<Item = usize>) -> Self {
        DegreeMultiplier::DegreeProjection(degrees.into_iter().collect())
    }

    /// Factor applied at degree `d`.
    pub fn factor(&self, d: usize) -> f64 {
        let df = d as f64;
        match self {
            DegreeMultiplier::Laplacian => -df,
            DegreeMultiplier::Fractional { gamma } => -df.powf(*gamma),
            DegreeMultiplier::Heat { t, gamma } => (-t * df.powf(*gamma)).exp(),
            DegreeMultiplier::DegreeProjection(set) => {
                if set.contains(&d) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Factors for degrees `0..=n`.
    pub fn factors(&self, n: usize) -> Vec<f64> {
        (0..=n).map(|d| self.factor(d)).collect()
    }
}

fn same_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Forward transform `a_S = 2^-n sum_x f(x) x^S`.
pub fn fwht(f: &CubeFunction) -> Spectrum {
    let mut coeffs = f.values.clone();
    transform::walsh_hadamard_in_place(&mut coeffs);
    let scale = 1.0 / coeffs.len() as f64;
    coeffs.iter_mut().for_each(|c| *c *= scale);
    Spectrum { n: f.n, coeffs }
}

/// Inverse transform `f(x) = sum_S a_S x^S`.
pub fn ifwht(a: &Spectrum) -> CubeFunction {
    let mut values = a.coeffs.clone();
    transform::walsh_hadamard_in_place(&mut values);
    CubeFunction { n: a.n, values }
}

pub fn expectation(f: &CubeFunction) -> f64 {
    f.values.iter().sum::<f64>() / f.values.len() as f64
}

/// `(E |f|^p)^(1/p)`; pass `f64::INFINITY` for the sup norm.
pub fn lp_norm(f: &CubeFunction, p: f64) -> Result<f64> {
    check_exponent(p)?;
    Ok(lp_norm_slice(&f.values, p))
}

pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid_parameter(format!("norm exponent p = {p} must be >= 1")))
    }
}

pub(crate) fn lp_norm_slice(values: &[f64], p: f64) -> f64 {
    let len = values.len() as f64;
    if p == f64::INFINITY {
        values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    } else if p == 1.0 {
        values.iter().map(|v| v.abs()).sum::<f64>() / len
    } else if p == 2.0 {
        (values.iter().map(|v| v * v).sum::<f64>() / len).sqrt()
    } else {
        // scale by the max to keep |v|^p representable for large p
        let top = values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if top == 0.0 {
            return 0.0;
        }
        let mean = values.iter().map(|v| (v.abs() / top).powf(p)).sum::<f64>() / len;
        top * mean.powf(1.0 / p)
    }
}

/// Half-difference along coordinate `j` (1-based):
/// `(f(.., x_j = 1, ..) - f(.., x_j = -1, ..)) / 2`.
pub fn partial_gradient(f: &CubeFunction, j: usize) -> Result<CubeFunction> {
    if j == 0 || j > f.n {
        return Err(Error::invalid_parameter(format!(
            "coordinate {j} outside 1..={}",
            f.n
        )));
    }
    let bit = 1usize << (j - 1);
    let values = (0..f.values.len())
        .map(|m| 0.5 * (f.values[m & !bit] - f.values[m | bit]))
        .collect();
    Ok(CubeFunction { n: f.n, values })
}

/// `|grad f|^2 = sum_j (grad_j f)^2`, pointwise.
pub fn gradient_sq(f: &CubeFunction) -> CubeFunction {
    let mut out = vec![0.0; f.values.len()];
    for j in 0..f.n {
        let bit = 1usize << j;
        for (m, o) in out.iter_mut().enumerate() {
            let d = 0.5 * (f.values[m & !bit] - f.values[m | bit]);
            *o += d * d;
        }
    }
    CubeFunction { n: f.n, values: out }
}

/// Applies a degree multiplier: transform, scale per degree, transform back.
pub fn apply_multiplier(f: &CubeFunction, m: &DegreeMultiplier) -> CubeFunction {
    ifwht(&fwht(f).apply(m))
}

/// `E sum_j grad_j f * grad_j g`, which equals `-E[f * Lap g]`.
pub fn dirichlet_form(f: &CubeFunction, g: &CubeFunction) -> Result<f64> {
    same_dim(f.n, g.n)?;
    let mut total = 0.0;
    for j in 0..f.n {
        let bit = 1usize << j;
        for m in 0..f.values.len() {
            let df = 0.5 * (f.values[m & !bit] - f.values[m | bit]);
            let dg = 0.5 * (g.values[m & !bit] - g.values[m | bit]);
            total += df * dg;
        }
    }
    Ok(total / f.values.len() as f64)
}

/// Group convolution `(K * f)(x) = E_y K(x y) f(y)` on `{-1,1}^n ~ F_2^n`,
/// computed through the transform: `(K * f)^(S) = K^(S) f^(S)`.
pub fn group_convolve(kernel: &CubeFunction, f: &CubeFunction) -> Result<CubeFunction> {
    same_dim(kernel.n, f.n)?;
    let k = fwht(kernel);
    let mut a = fwht(f);
    a.coeffs.iter_mut().zip(&k.coeffs).for_each(|(x, y)| *x *= y);
    Ok(ifwht(&a))
}
