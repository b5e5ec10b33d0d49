use cube_spectral::counterexamples::{almost1_bound, exact_heat_l1};
use cube_spectral::suites::brute_force_heat_l1;

#[test]
fn exact_sum_matches_brute_force_across_times() {
    for t in [0.1, 0.5, 1.0, 2.0, 5.0] {
        for n in 1..=16 {
            let exact = exact_heat_l1(n, t).unwrap();
            let brute = brute_force_heat_l1(n, t).unwrap();
            assert!((exact - brute).abs() <= 1e-12 * brute, "n {n} t {t}: {exact} vs {brute}");
        }
    }
}

#[test]
fn almost1_bound_holds_for_odd_n() {
    for n in (51..=2001).step_by(50) {
        for t in [2f64.ln(), 1.0, 2.0] {
            let value = exact_heat_l1(n, t).unwrap();
            let bound = almost1_bound(n, (-t).exp()).unwrap();
            assert!(value >= bound, "n {n} t {t}: {value} < {bound}");
        }
    }
}

#[test]
fn exact_sum_nonincreasing_in_time() {
    for n in [3, 10, 41, 300] {
        let values: Vec<f64> = [0.05, 0.2, 0.5, 1.0, 2.0, 4.0, 8.0].iter().map(|&t| exact_heat_l1(n, t).unwrap()).collect();
        assert!(values.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-14)), "n {n}: {values:?}");
    }
}
