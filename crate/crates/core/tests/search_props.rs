use cube_spectral::search::{worst_ratio_search, Projection, SearchConfig};
use proptest::prelude::*;

fn config(n: usize, p: f64, gamma: f64, t: f64, seed: u64) -> SearchConfig {
    SearchConfig { iterations: 200, restarts: 4, seed, ..SearchConfig::new(n, p, gamma, t) }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ratio_never_exceeds_one(n in 1usize..=7, p in 1.0f64..6.0, gamma in 0.1f64..=1.0, t in 0.01f64..3.0, seed in any::<u64>(), band in any::<bool>()) {
        let mut cfg = config(n, p, gamma, t, seed);
        if band {
            cfg.projection = Projection::Band((1..=n).step_by(2).collect());
        }
        let out = worst_ratio_search(&cfg).unwrap();
        prop_assert!(out.ratio <= 1.0 + 1e-12);
        prop_assert!(out.ratio > 0.0);
    }

    #[test]
    fn p2_optimum(n in 1usize..=8, gamma in 0.1f64..=1.0, t in 0.05f64..3.0, seed in any::<u64>()) {
        let out = worst_ratio_search(&config(n, 2.0, gamma, t, seed)).unwrap();
        prop_assert!((out.ratio - (-t).exp()).abs() <= 1e-6);
    }

    #[test]
    fn bit_reproducible(n in 1usize..=6, p in 1.0f64..4.0, seed in any::<u64>()) {
        let cfg = config(n, p, 0.5, 0.8, seed);
        let a = worst_ratio_search(&cfg).unwrap();
        let b = worst_ratio_search(&cfg).unwrap();
        prop_assert_eq!(a.ratio.to_bits(), b.ratio.to_bits());
        prop_assert_eq!(a.f.values(), b.f.values());
    }
}
