use chaoslink::channel::sample_gamma;
use chaoslink::special::{gamma_sum_pdf, gamma_sum_series, DEFAULT_MAX_TERMS};
use chaoslink::GammaDist;
use chaoslink_oracle::quad::integrate_to_infinity;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn series_cdf_matches_empirical() {
    let comps = [GammaDist::new(1.5, 1.0).unwrap(), GammaDist::new(2.0, 0.4).unwrap(), GammaDist::new(0.8, 2.5).unwrap()];
    let series = gamma_sum_pdf(&comps, 1e-14).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = 200_000;
    let mut xs: Vec<f64> = (0..n).map(|_| comps.iter().map(|c| sample_gamma(c, &mut rng)).sum()).collect();
    xs.sort_by(f64::total_cmp);
    for q in 1..10 {
        let x = xs[q * n / 10];
        let emp = xs.partition_point(|&v| v <= x) as f64 / n as f64;
        let model = series.cdf(x);
        let se = (model * (1.0 - model) / n as f64).sqrt();
        assert!((emp - model).abs() < 4.0 * se, "x={x}: {emp} vs {model}");
    }
    assert!((series.mean() - (1.5 + 0.8 + 2.0)).abs() < 1e-10);
}

fn component() -> impl Strategy<Value = (f64, f64)> {
    (0.5f64..6.0, 0.2f64..3.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn series_is_a_density(parts in prop::collection::vec(component(), 2..5)) {
        let comps: Vec<GammaDist> = parts.iter().map(|&(k, t)| GammaDist::new(k, t).unwrap()).collect();
        let s = gamma_sum_series(&comps, 1e-10, 4 * DEFAULT_MAX_TERMS).unwrap();
        let w: f64 = s.weights().iter().sum();
        prop_assert!(w <= 1.0 + 1e-12 && w > 1.0 - 1e-8);
        prop_assert!(s.weights().iter().all(|&x| x >= 0.0));
        let mass = integrate_to_infinity(|x| s.pdf(x), 0.0, 1e-12);
        prop_assert!((mass - 1.0).abs() < 1e-6, "mass {}", mass);
        let mut prev = 0.0;
        for i in 1..40 {
            let c = s.cdf(0.5 * i as f64);
            prop_assert!(c + 1e-15 >= prev);
            prev = c;
        }
    }
}
