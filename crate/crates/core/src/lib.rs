//! Error-rate analysis of DCSK multi-access MIMO relay cooperative diversity.
//!
//! The crate is organised as the analysis pipeline runs:
//!
//! * [`chaos`]: chaotic reference generation, the DCSK modulator and the
//!   correlator/threshold detector.
//! * [`channel`]: gamma-distributed link SNRs, Nakagami-m envelopes and
//!   additive white generalized Gaussian noise, plus the [`Scenario`]
//!   description that ties them together.
//! * [`special`]: incomplete gamma, the generalized Q-function, the DCSK
//!   conditional BER kernel and the Moschopoulos gamma-sum series.
//! * [`fit`]: exponential-sum approximation of the kernel by
//!   Levenberg-Marquardt.
//! * [`analytic`]: closed-form average BER for error-free and
//!   decode-and-forward relaying.
//! * [`montecarlo`]: waveform-level and semi-analytic system-level
//!   simulators used to cross-check the closed forms.
//!
//! ```
//! use chaoslink::{analytic, fit, Scenario};
//!
//! let approx = fit::fit_expsum(2.0, 32, 4, &fit::FitGrid::default(), None).unwrap();
//! let scenario = Scenario::builder().dest_antennas(3).users(2).paths(2).build().unwrap();
//! let ber = analytic::aber_ef(&scenario, &approx, 15.0).unwrap();
//! assert!(ber > 1e-3 && ber < 0.1);
//! ```

pub mod analytic;
pub mod channel;
pub mod chaos;
mod error;
pub mod fit;
pub mod montecarlo;
pub mod special;

pub use channel::{GammaDist, LinkSet, NoiseModel, Protocol, Scenario};
pub use error::{Error, FitError, Result};
pub use fit::ExpSumApprox;

/// Converts a power ratio in dB to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
