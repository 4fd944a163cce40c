//! Exact error probability of the DCSK correlator with a unit-power reference.
//!
//! With per-chip noise variance `σ² = M/γ`, the statistic satisfies
//! `b·c = (ΣA² − ΣB²)/4` where `ΣA²/2σ²` is noncentral chi-square with `M`
//! degrees of freedom and noncentrality `2γ`, and `ΣB²/2σ²` is an independent
//! central chi-square with `M` degrees of freedom. Mixing the noncentral law
//! over its Poisson index gives
//! `P_e = Σ_j Pois(j; γ) · I_{1/2}(M/2 + j, M/2)`.

use statrs::function::beta::beta_reg;
use statrs::function::gamma::ln_gamma;

/// Exact hard-decision BER for half-spreading `m_half` at SNR `gamma` (linear).
pub fn exact_ber(m_half: u32, gamma: f64) -> f64 {
    let half = m_half as f64 / 2.0;
    if gamma == 0.0 {
        return beta_reg(half, half, 0.5);
    }
    let j_max = (gamma + 40.0 * gamma.sqrt() + 60.0).ceil() as u64;
    let mut total = 0.0;
    for j in 0..=j_max {
        let jf = j as f64;
        let log_pois = -gamma + jf * gamma.ln() - ln_gamma(jf + 1.0);
        total += log_pois.exp() * beta_reg(half + jf, half, 0.5);
    }
    total
}
