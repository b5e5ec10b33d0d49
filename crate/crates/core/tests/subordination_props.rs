use cube_spectral::StableDensityEvaluator;

const GAMMAS: [f64; 4] = [0.3, 0.5, 0.7, 0.9];

fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    (0..points).map(|i| lo * (hi / lo).powf(i as f64 / (points - 1) as f64)).collect()
}

#[test]
fn density_nonnegative_on_grid() {
    for g in GAMMAS {
        let ev = StableDensityEvaluator::new(g).unwrap();
        for tau in log_grid(1e-2, 1e4, 121) {
            let p = ev.density(tau).unwrap();
            assert!(p >= -1e-9, "gamma {g}, tau {tau}: {p}");
        }
    }
}

#[test]
fn density_normalized() {
    for g in GAMMAS {
        let ev = StableDensityEvaluator::new(g).unwrap();
        let mass = ev.expectation(|_| 1.0, 1e-9).unwrap();
        assert!((mass - 1.0).abs() <= 1e-6, "gamma {g}: {mass}");
        assert!((ev.laplace_transform(0.0).unwrap() - 1.0).abs() <= 1e-6);
    }
}

#[test]
fn tail_within_two_percent_beyond_1e3() {
    let mut bad = Vec::new();
    for g in GAMMAS {
        let ev = StableDensityEvaluator::new(g).unwrap();
        for tau in [1e3, 1e4, 1e5, 1e6] {
            let r = ev.tail_ratio(tau).unwrap();
            if (r - 1.0).abs() > 0.02 {
                bad.push((g, tau, r));
            }
        }
    }
    assert!(bad.is_empty(), "tail ratio off by more than 2%: {bad:?}");
}
