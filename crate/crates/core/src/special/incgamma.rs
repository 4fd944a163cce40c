use crate::error::{domain, Error, Result};

const MAX_ITER: usize = 100_000;
const EPS: f64 = f64::EPSILON;
// Below this log-prefactor Q(s, x) < e^{-745}/(x + 1 - s) underflows to zero.
const LN_UNDERFLOW: f64 = -750.0;
const TINY: f64 = 1e-300;

/// Natural log of the gamma function (Lanczos, via statrs).
pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// Regularized lower incomplete gamma `P(s, x) = γ(s, x) / Γ(s)`.
pub fn gamma_p(s: f64, x: f64) -> Result<f64> {
    check(s, x)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let lg = ln_gamma(s);
    if x < s + 1.0 {
        lower_series(s, lg, x)
    } else {
        Ok(1.0 - upper_fraction(s, lg, x)?)
    }
}

/// Regularized upper incomplete gamma `Q(s, x) = Γ(s, x) / Γ(s)`.
pub fn gamma_q(s: f64, x: f64) -> Result<f64> {
    check(s, x)?;
    gamma_q_prepared(s, ln_gamma(s), x)
}

/// `Q(s, x)` with `ln Γ(s)` supplied; arguments are assumed already checked.
pub(crate) fn gamma_q_prepared(s: f64, ln_gamma_s: f64, x: f64) -> Result<f64> {
    if x == 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    if x < s + 1.0 {
        Ok(1.0 - lower_series(s, ln_gamma_s, x)?)
    } else {
        upper_fraction(s, ln_gamma_s, x)
    }
}

fn check(s: f64, x: f64) -> Result<()> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(domain(format!("incomplete gamma needs s > 0, got {s}")));
    }
    if !(x >= 0.0) {
        return Err(domain(format!("incomplete gamma needs x >= 0, got {x}")));
    }
    Ok(())
}

// x^s e^{-x} / Γ(s), in the log domain.
#[inline]
fn ln_prefactor(s: f64, ln_gamma_s: f64, x: f64) -> f64 {
    s * x.ln() - x - ln_gamma_s
}

// P(s,x) = x^s e^{-x}/Γ(s+1) · Σ_n x^n / ((s+1)…(s+n))
fn lower_series(s: f64, lg: f64, x: f64) -> Result<f64> {
    let mut denom = s;
    let mut term = 1.0 / s;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        denom += 1.0;
        term *= x / denom;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            return Ok((ln_prefactor(s, lg, x) + sum.ln()).exp().min(1.0));
        }
    }
    Err(Error::Truncation(format!("incomplete gamma series did not converge at s={s}, x={x}")))
}

// Q(s,x) by the modified Lentz evaluation of the Legendre continued fraction.
fn upper_fraction(s: f64, lg: f64, x: f64) -> Result<f64> {
    let ln_pre = ln_prefactor(s, lg, x);
    if ln_pre < LN_UNDERFLOW {
        return Ok(0.0);
    }
    let mut b = x + 1.0 - s;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - s);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            return Ok((ln_pre + h.ln()).exp().min(1.0));
        }
    }
    Err(Error::Truncation(format!("incomplete gamma fraction did not converge at s={s}, x={x}")))
}
