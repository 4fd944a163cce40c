use chaoslink::fit::{expsum_eval, fit_expsum, fit_expsum_with, load_table2, FitGrid, FitOptions};
use chaoslink::special::dcsk_conditional_ber;
use proptest::prelude::*;

#[test]
fn published_start_is_never_worsened() {
    let grid = FitGrid::default();
    let opts = FitOptions { restarts: 2, ..FitOptions::default() };
    for row in load_table2() {
        let refit = fit_expsum_with(row.noise_a(), 32, 4, &grid, Some(&row), &opts).unwrap();
        assert!(refit.fit_cost(&grid).unwrap() <= row.fit_cost(&grid).unwrap() * (1.0 + 1e-12), "a {}", row.noise_a());
    }
}

#[test]
fn laplacian_fit_tracks_kernel() {
    let approx = fit_expsum(1.0, 32, 4, &FitGrid::default(), None).unwrap();
    let exact = dcsk_conditional_ber(10.0, 32, 1.0).unwrap();
    assert!((expsum_eval(&approx, 10.0) / exact - 1.0).abs() < 0.05);
    assert!(approx.max_rel_error() < 0.05);
}

#[test]
fn fit_is_deterministic() {
    let opts = FitOptions { restarts: 4, ..FitOptions::default() };
    let a = fit_expsum_with(2.0, 16, 3, &FitGrid::default(), None, &opts).unwrap();
    let b = fit_expsum_with(2.0, 16, 3, &FitGrid::default(), None, &opts).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

proptest! {
    #[test]
    fn published_approximations_decay(i in 0usize..4, g in 0.0f64..500.0, dg in 0.0f64..50.0) {
        let row = &load_table2()[i];
        let v = row.eval(g);
        prop_assert!(v > 0.0);
        prop_assert!(row.eval(g + dg) <= v);
    }
}
