//! Simulation oracles for the closed forms.
//!
//! * [`sim_waveform_ber`] pushes chaotic DCSK frames through generalized
//!   Gaussian noise and counts hard-decision errors.
//! * [`sim_system_ber`] draws link SNRs and averages the conditional error
//!   probability (a semi-analytic estimator), for EF and DF at once.
//!
//! Work is split into fixed-size chunks, each with its own ChaCha8 stream
//! derived from `(master seed, purpose tag, chunk index)`. Chunks are reduced
//! in index order, so results do not depend on the number of worker threads.

mod accum;
mod system;
mod waveform;

pub use accum::MeanAccumulator;
pub use system::{sim_system_ber, sim_system_grid, sweep, Kernel, SystemEstimate};
pub use waveform::sim_waveform_ber;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Trials per independently seeded work unit.
pub const CHUNK_TRIALS: u64 = 1 << 16;

/// Point estimate of an error probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub ber_hat: f64,
    /// Bernoulli standard error for hard-decision counts; sample standard
    /// error of the conditional probabilities for the semi-analytic estimator.
    pub std_err: f64,
    pub trials: u64,
    pub errors_observed: u64,
    pub master_seed: u64,
}

impl McEstimate {
    fn from_counts(errors: u64, trials: u64, master_seed: u64) -> Self {
        let p = errors as f64 / trials as f64;
        Self {
            ber_hat: p,
            std_err: (p * (1.0 - p) / trials as f64).sqrt(),
            trials,
            errors_observed: errors,
            master_seed,
        }
    }

    fn from_accumulator(acc: &MeanAccumulator, master_seed: u64) -> Self {
        let trials = acc.count();
        let mean = acc.mean();
        Self {
            ber_hat: mean,
            std_err: acc.std_err(),
            trials,
            errors_observed: (mean * trials as f64).round() as u64,
            master_seed,
        }
    }
}

pub(crate) fn chunk_rng(master_seed: u64, tag: u64, chunk: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master_seed.to_le_bytes());
    key[8..16].copy_from_slice(&tag.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(chunk);
    rng
}

/// `(chunk index, trials in chunk)` covering `trials`.
pub(crate) fn chunks(trials: u64) -> impl Iterator<Item = (u64, u64)> {
    let n = trials.div_ceil(CHUNK_TRIALS);
    (0..n).map(move |c| (c, CHUNK_TRIALS.min(trials - c * CHUNK_TRIALS)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngExt;

    #[test]
    fn chunking_covers_trials() {
        let v: Vec<_> = chunks(2 * CHUNK_TRIALS + 5).collect();
        assert_eq!(v, vec![(0, CHUNK_TRIALS), (1, CHUNK_TRIALS), (2, 5)]);
        assert_eq!(chunks(0).count(), 0);
    }

    #[test]
    fn streams_are_distinct_and_reproducible() {
        let draw = |s, t, c| chunk_rng(s, t, c).random::<u64>();
        assert_eq!(draw(1, 2, 3), draw(1, 2, 3));
        assert_ne!(draw(1, 2, 3), draw(1, 2, 4));
        assert_ne!(draw(1, 2, 3), draw(1, 5, 3));
        assert_ne!(draw(1, 2, 3), draw(7, 2, 3));
    }

    #[test]
    fn bernoulli_estimate_fields() {
        let e = McEstimate::from_counts(25, 100, 9);
        assert_eq!(e.ber_hat, 0.25);
        assert!((e.std_err - (0.25f64 * 0.75 / 100.0).sqrt()).abs() < 1e-16);
        assert_eq!((e.errors_observed, e.trials, e.master_seed), (25, 100, 9));
    }
}
