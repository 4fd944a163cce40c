use chaoslink::montecarlo::sim_waveform_ber;
use chaoslink::special::dcsk_conditional_ber;
use chaoslink::NoiseModel;
use chaoslink_oracle::dcsk::exact_ber;

#[test]
fn matches_exact_correlator_statistics() {
    for (snr_db, seed) in [(0.0, 1), (7.0, 2), (10.0, 3)] {
        let e = sim_waveform_ber(32, snr_db, &NoiseModel::gaussian(), 200_000, seed).unwrap();
        let want = exact_ber(32, chaoslink::db_to_linear(snr_db));
        let se = (want * (1.0 - want) / 200_000.0).sqrt();
        assert!((e.ber_hat - want).abs() < 4.0 * se, "{snr_db} dB: {} vs {want}", e.ber_hat);
    }
}

#[test]
fn gaussian_approximation_is_close_at_moderate_snr() {
    let e = sim_waveform_ber(32, 5.0f64.log10() * 10.0, &NoiseModel::gaussian(), 200_000, 4).unwrap();
    let k = dcsk_conditional_ber(5.0, 32, 2.0).unwrap();
    assert!((e.ber_hat / k - 1.0).abs() < 0.1);
}
