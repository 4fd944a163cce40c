use super::incgamma::{gamma_q_prepared, ln_gamma};
use crate::error::{domain, Result};

/// Tail probability of the unit-variance generalized Gaussian law with exponent `a`.
///
/// For `x >= 0`, `Q_a(x) = Γ(1/a, (Λ₀x)^a) / (2Γ(1/a))`; negative arguments use
/// `Q_a(−x) = 1 − Q_a(x)`. `Q_2` is the classical Gaussian Q-function and `Q_1`
/// the Laplacian tail `e^{−√2·x}/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralizedQ {
    a: f64,
    inv_a: f64,
    lambda0: f64,
    ln_gamma_inv_a: f64,
}

impl GeneralizedQ {
    pub fn new(a: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(domain(format!("Q_a needs a > 0, got {a}")));
        }
        let lambda0 = (0.5 * (ln_gamma(3.0 / a) - ln_gamma(1.0 / a))).exp();
        Ok(Self { a, inv_a: 1.0 / a, lambda0, ln_gamma_inv_a: ln_gamma(1.0 / a) })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        let upper = self.upper_tail(x.abs());
        if x >= 0.0 {
            upper
        } else {
            1.0 - upper
        }
    }

    #[inline]
    fn upper_tail(&self, x: f64) -> f64 {
        let y = (self.lambda0 * x).powf(self.a);
        0.5 * gamma_q_prepared(self.inv_a, self.ln_gamma_inv_a, y).expect("series and fraction converge for s = 1/a")
    }
}

pub fn q_generalized(a: f64, x: f64) -> Result<f64> {
    Ok(GeneralizedQ::new(a)?.eval(x))
}

/// Conditional DCSK bit error probability `Q_a(√(γ²/(2γ+M)))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcskKernel {
    m_half: f64,
    q: GeneralizedQ,
}

impl DcskKernel {
    pub fn new(spreading_half_m: u32, a: f64) -> Result<Self> {
        if spreading_half_m == 0 {
            return Err(domain("spreading factor M must be at least 1"));
        }
        Ok(Self { m_half: spreading_half_m as f64, q: GeneralizedQ::new(a)? })
    }

    pub fn q(&self) -> &GeneralizedQ {
        &self.q
    }

    /// Kernel at SNR `gamma >= 0` (linear).
    #[inline]
    pub fn eval(&self, gamma: f64) -> f64 {
        self.q.eval((gamma * gamma / (2.0 * gamma + self.m_half)).sqrt())
    }
}

pub fn dcsk_conditional_ber(gamma: f64, spreading_half_m: u32, a: f64) -> Result<f64> {
    if !(gamma >= 0.0) {
        return Err(domain(format!("SNR must be nonnegative, got {gamma}")));
    }
    Ok(DcskKernel::new(spreading_half_m, a)?.eval(gamma))
}
