//! Seeded random test families: Rademacher spectra on fixed degree sets and
//! pointwise iid uniform values.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cube::{ifwht, CubeFunction, Spectrum};
use crate::error::Result;

/// Deterministic generator for case `index` of a family seeded by `seed`.
pub fn case_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `f = sum_{|S| in degrees} eps_S x^S / sqrt(#S)` with iid signs, so `||f||_2 = 1`.
pub fn rademacher_spectrum<R: Rng>(rng: &mut R, n: usize, degrees: &[usize]) -> Result<CubeFunction> {
    let len = 1usize << n;
    let mut coeffs = vec![0.0; len];
    let mut count = 0usize;
    for (s, c) in coeffs.iter_mut().enumerate() {
        if degrees.contains(&(s.count_ones() as usize)) {
            *c = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            count += 1;
        }
    }
    if count > 0 {
        let scale = 1.0 / (count as f64).sqrt();
        coeffs.iter_mut().for_each(|c| *c *= scale);
    }
    Ok(ifwht(&Spectrum::new(n, coeffs)?))
}

/// Values iid uniform on `[-1, 1]`.
pub fn uniform_values<R: Rng>(rng: &mut R, n: usize) -> Result<CubeFunction> {
    CubeFunction::new(n, (0..1usize << n).map(|_| rng.gen_range(-1.0..=1.0)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::{fwht, lp_norm};

    #[test]
    fn rademacher_is_normalized_and_band_limited() {
        let mut rng = case_rng(3, 0);
        let f = rademacher_spectrum(&mut rng, 8, &[1, 3]).unwrap();
        assert!((lp_norm(&f, 2.0).unwrap() - 1.0).abs() < 1e-12);
        let a = fwht(&f);
        assert_eq!(a.min_degree(1e-12), Some(1));
        assert_eq!(a.max_degree(1e-12), Some(3));
        assert!(a.coeffs().iter().enumerate().all(|(s, c)| s.count_ones() != 2 || c.abs() < 1e-12));
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a = uniform_values(&mut case_rng(1, 4), 5).unwrap();
        let b = uniform_values(&mut case_rng(1, 4), 5).unwrap();
        let c = uniform_values(&mut case_rng(1, 5), 5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
