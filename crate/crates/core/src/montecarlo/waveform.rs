use rand::RngExt;
use rand_distr::Distribution;
use rayon::prelude::*;

use super::{chunk_rng, chunks, McEstimate};
use crate::channel::{GgnSampler, NoiseModel};
use crate::chaos::{correlate_detect, generate_chaotic, is_degenerate_state, modulate, Bit};
use crate::error::{config, Result};

const TAG: u64 = 0x5741_5645; // "WAVE"

/// Hard-decision BER of single-link DCSK with spreading `2M` at per-bit SNR `snr_db`.
///
/// Each frame uses a fresh power-normalized chaotic reference (unit power per
/// chip), a random data bit and unit channel gain. With reference power 1 the
/// correlator output has mean `±M` and, for per-chip noise variance `σ²`,
/// variance `2Mσ² + Mσ⁴`. Choosing `σ² = M/γ` makes its deflection ratio
/// `M/(2σ² + σ⁴)` equal `γ²/(2γ + M)`, the argument of the kernel.
pub fn sim_waveform_ber(
    spreading_half_m: u32,
    snr_db: f64,
    noise: &NoiseModel,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    if spreading_half_m == 0 {
        return Err(config("spreading factor M must be at least 1"));
    }
    if trials == 0 {
        return Err(config("trials must be at least 1"));
    }
    if !snr_db.is_finite() {
        return Err(config(format!("SNR must be finite, got {snr_db} dB")));
    }
    let m = spreading_half_m as usize;
    let sigma = (m as f64 / crate::db_to_linear(snr_db)).sqrt();
    let sampler = GgnSampler::new(noise, sigma)?;
    let errors: Vec<u64> = chunks(trials)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(chunk, n)| {
            let mut rng = chunk_rng(seed, TAG, chunk);
            let mut errors = 0;
            for _ in 0..n {
                let bit = if rng.random::<bool>() { Bit::Plus } else { Bit::Minus };
                let start = loop {
                    let s: f64 = rng.random();
                    if s > 0.0 && !is_degenerate_state(s) {
                        break s;
                    }
                };
                let reference = generate_chaotic(start, m).expect("seed screened above");
                let rx = modulate(bit, &reference).through_channel(1.0, || sampler.sample(&mut rng));
                if correlate_detect(&rx).decision != bit {
                    errors += 1;
                }
            }
            errors
        })
        .collect();
    Ok(McEstimate::from_counts(errors.iter().sum(), trials, seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_regime_has_no_errors() {
        let e = sim_waveform_ber(32, 60.0, &NoiseModel::gaussian(), 10_000, 1).unwrap();
        assert_eq!(e.errors_observed, 0);
        assert_eq!(e.ber_hat, 0.0);
    }

    #[test]
    fn reproducible() {
        let a = sim_waveform_ber(8, 5.0, &NoiseModel::laplacian(), 5000, 42).unwrap();
        let b = sim_waveform_ber(8, 5.0, &NoiseModel::laplacian(), 5000, 42).unwrap();
        assert_eq!(a, b);
        let c = sim_waveform_ber(8, 5.0, &NoiseModel::laplacian(), 5000, 43).unwrap();
        assert_ne!(a.errors_observed, c.errors_observed);
    }

    #[test]
    fn rejects_zero_trials() {
        assert!(sim_waveform_ber(32, 10.0, &NoiseModel::gaussian(), 0, 1).is_err());
    }
}
