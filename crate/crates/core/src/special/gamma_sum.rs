//! Density of a sum of independent gamma variables with arbitrary scales.
//!
//! With `b0 = min b_k`, `ρ = Σ a_k` and `c = Π (b0/b_k)^{a_k}`, the sum has density
//!
//! ```text
//! f(x) = Σ_i  c·η_i · x^{ρ+i−1} e^{−x/b0} / (Γ(ρ+i) b0^{ρ+i})
//! ```
//!
//! a mixture of `G(ρ+i, b0)` laws with weights `w_i = c·η_i`, where
//! `z_j = Σ_k (a_k/j)(1 − b0/b_k)^j`, `η_0 = 1` and
//! `η_{i+1} = (1/(i+1)) Σ_{t=1}^{i+1} t·z_t·η_{i+1−t}`.
//! The weights are nonnegative and sum to one, so `1 − Σ_{i≤n} w_i` is the
//! exact probability mass left out by truncating after term `n`.

use super::incgamma::{gamma_p, ln_gamma};
use crate::channel::GammaDist;
use crate::error::{config, Error, Result};

pub const DEFAULT_MAX_TERMS: usize = 512;

const EQUAL_SCALE_RTOL: f64 = 1e-12;
// Consecutive negligible weights required before stopping.
const QUIET_RUN: usize = 3;
// Rounding in c = exp(ln c) and in the η recursion leaves the computed weights
// off by roughly ε·(|ln c| + i) relative, so `1 − Σ w` stalls near
// ε·(|ln c| + Σ i·w_i) however many terms are added. The stop rule accepts a
// tail within a few times that estimate.
const TAIL_FLOOR: f64 = 16.0 * f64::EPSILON;
const ROUNDING_SLACK: f64 = 4.0 * f64::EPSILON;

#[derive(Debug, Clone, PartialEq)]
pub struct GammaSumSeries {
    rho: f64,
    b0: f64,
    c: f64,
    eta: Vec<f64>,
    weights: Vec<f64>,
    tail_bound: f64,
}

impl GammaSumSeries {
    fn single(shape: f64, scale: f64) -> Self {
        Self { rho: shape, b0: scale, c: 1.0, eta: vec![1.0], weights: vec![1.0], tail_bound: 0.0 }
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn b0(&self) -> f64 {
        self.b0
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    /// Mixture weights `c·η_i`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Index of the last retained term.
    pub fn truncation_index(&self) -> usize {
        self.weights.len() - 1
    }

    /// Probability mass dropped by truncation.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    /// True when the sum collapsed to one exact gamma law.
    pub fn is_single_gamma(&self) -> bool {
        self.weights.len() == 1
    }

    /// `(weight, shape)` of each retained mixture component; every scale is `b0`.
    pub fn components(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.weights.iter().enumerate().map(move |(i, &w)| (w, self.rho + i as f64))
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if !(x >= 0.0) {
            return 0.0;
        }
        if x == 0.0 {
            // Only the first term can be nonzero at the origin.
            return if self.rho > 1.0 {
                0.0
            } else if self.rho == 1.0 {
                self.weights[0] / self.b0
            } else {
                f64::INFINITY
            };
        }
        let lx = x.ln();
        let lb = self.b0.ln();
        self.components()
            .filter(|&(w, _)| w > 0.0)
            .map(|(w, k)| (w.ln() + (k - 1.0) * lx - x / self.b0 - k * lb - ln_gamma(k)).exp())
            .sum()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if !(x > 0.0) {
            return 0.0;
        }
        let u = x / self.b0;
        self.components()
            .map(|(w, k)| w * gamma_p(k, u).expect("positive shape"))
            .sum::<f64>()
            .min(1.0)
    }

    /// Mean of the truncated mixture.
    pub fn mean(&self) -> f64 {
        self.components().map(|(w, k)| w * k * self.b0).sum()
    }
}

/// Sum-of-gammas density; equal scales (relative `1e-12`) collapse to one gamma law.
pub fn gamma_sum_pdf(components: &[GammaDist], tolerance: f64) -> Result<GammaSumSeries> {
    gamma_sum_pdf_with(components, tolerance, DEFAULT_MAX_TERMS)
}

pub fn gamma_sum_pdf_with(components: &[GammaDist], tolerance: f64, max_terms: usize) -> Result<GammaSumSeries> {
    if has_equal_scales(components) {
        let rho = components.iter().map(GammaDist::shape).sum();
        return Ok(GammaSumSeries::single(rho, scale_range(components).0));
    }
    gamma_sum_series(components, tolerance, max_terms)
}

/// True for a nonempty set whose scales agree to relative `1e-12`.
pub fn has_equal_scales(components: &[GammaDist]) -> bool {
    let (lo, hi) = scale_range(components);
    !components.is_empty() && hi - lo <= EQUAL_SCALE_RTOL * hi
}

/// Always expands the series, even for equal scales.
///
/// A requested tolerance finer than the rounding error of the weights is met
/// at that rounding level instead.
pub fn gamma_sum_series(components: &[GammaDist], tolerance: f64, max_terms: usize) -> Result<GammaSumSeries> {
    if components.is_empty() {
        return Err(config("gamma sum needs at least one component"));
    }
    if !(tolerance > 0.0) {
        return Err(config(format!("series tolerance must be positive, got {tolerance}")));
    }
    if max_terms == 0 {
        return Err(config("series needs at least one term"));
    }
    let (b0, _) = scale_range(components);
    let rho: f64 = components.iter().map(GammaDist::shape).sum();
    let ln_c: f64 = components.iter().map(|g| g.shape() * (b0 / g.scale()).ln()).sum();
    let c = ln_c.exp();
    if c == 0.0 {
        return Err(Error::Truncation(format!("series leading weight underflows (ln c = {ln_c})")));
    }
    let ratios: Vec<(f64, f64)> = components.iter().map(|g| (g.shape(), 1.0 - b0 / g.scale())).collect();
    // z[j-1] = z_j
    let mut z: Vec<f64> = Vec::new();
    let mut eta = vec![1.0];
    let mut weights = vec![c];
    let mut mass = Neumaier::new(c);
    let mut index_mass = 0.0;
    let mut quiet = if c < tolerance { 1 } else { 0 };
    loop {
        let tail = (1.0 - mass.value()).max(0.0);
        let floor = TAIL_FLOOR + ROUNDING_SLACK * (ln_c.abs() + index_mass);
        if quiet >= QUIET_RUN && tail < tolerance.max(floor) {
            return Ok(GammaSumSeries { rho, b0, c, eta, weights, tail_bound: tail });
        }
        if weights.len() >= max_terms {
            return Err(Error::Truncation(format!(
                "gamma-sum series still missing mass {tail:e} after {max_terms} terms"
            )));
        }
        let j = z.len() + 1;
        z.push(ratios.iter().map(|&(a, r)| a / j as f64 * r.powi(j as i32)).sum());
        let next = eta.len();
        let s: f64 = (1..=next).map(|t| t as f64 * z[t - 1] * eta[next - t]).sum();
        let e = s / next as f64;
        let w = c * e;
        eta.push(e);
        weights.push(w);
        mass.add(w);
        index_mass += next as f64 * w;
        quiet = if w < tolerance { quiet + 1 } else { 0 };
    }
}

struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn new(x: f64) -> Self {
        Self { sum: x, comp: 0.0 }
    }

    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        self.comp += if self.sum.abs() >= x.abs() { (self.sum - t) + x } else { (x - t) + self.sum };
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Density of `series` at `x`.
pub fn gamma_sum_eval(series: &GammaSumSeries, x: f64) -> f64 {
    series.pdf(x)
}

fn scale_range(components: &[GammaDist]) -> (f64, f64) {
    components.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), g| (lo.min(g.scale()), hi.max(g.scale())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chaoslink_oracle::quad::{integrate, integrate_to_infinity};

    fn g(shape: f64, scale: f64) -> GammaDist {
        GammaDist::new(shape, scale).unwrap()
    }

    #[test]
    fn equal_scales_collapse() {
        let s = gamma_sum_pdf(&[g(2.0, 0.7), g(3.0, 0.7)], 1e-12).unwrap();
        assert!(s.is_single_gamma());
        let exact = g(5.0, 0.7);
        for x in [0.1, 1.0, 3.5, 9.0] {
            assert!((s.pdf(x) - exact.pdf(x)).abs() < 1e-12 * exact.pdf(x).max(1.0));
        }
    }

    #[test]
    fn forced_series_on_equal_scales_matches_exact() {
        let s = gamma_sum_series(&[g(2.0, 0.7), g(3.0, 0.7)], 1e-12, DEFAULT_MAX_TERMS).unwrap();
        assert_eq!(s.eta()[0], 1.0);
        assert!(s.weights()[1..].iter().all(|&w| w == 0.0));
        for x in [0.1, 1.0, 3.5] {
            assert!((s.pdf(x) - g(5.0, 0.7).pdf(x)).abs() < 1e-14);
        }
    }

    #[test]
    fn single_component() {
        let s = gamma_sum_pdf(&[g(2.0, 1.0)], 1e-12).unwrap();
        assert!((gamma_sum_eval(&s, 1.0) - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(gamma_sum_eval(&s, 0.0), 0.0);
    }

    #[test]
    fn two_exponentials_closed_form() {
        // Exp(mean 1) + Exp(mean 2): f(x) = e^{-x/2} − e^{-x}.
        let s = gamma_sum_pdf(&[g(1.0, 1.0), g(1.0, 2.0)], 1e-14).unwrap();
        for x in [0.05, 0.5, 1.0, 4.0, 15.0] {
            let want = (-x / 2.0f64).exp() - (-x as f64).exp();
            assert!((s.pdf(x) - want).abs() < 1e-12, "x={x}: {} vs {want}", s.pdf(x));
        }
        assert!(s.tail_bound() < 1e-14);
    }

    #[test]
    fn matches_numeric_convolution() {
        let (a, b) = (g(2.0, 0.5), g(1.5, 1.7));
        let s = gamma_sum_pdf(&[a, b], 1e-13).unwrap();
        for x in [0.3, 1.2, 3.0, 8.0] {
            let conv = integrate(|t| a.pdf(t) * b.pdf(x - t), 0.0, x, 1e-14, 1e-13);
            assert!((s.pdf(x) - conv).abs() < 1e-9, "x={x}: {} vs {conv}", s.pdf(x));
        }
    }

    #[test]
    fn integrates_to_one_and_mean() {
        let parts = [g(2.0, 0.5), g(3.0, 1.5), g(1.0, 1.0)];
        let s = gamma_sum_pdf(&parts, 1e-12).unwrap();
        let total = integrate_to_infinity(|x| s.pdf(x), 0.0, 1e-14);
        assert!((total - 1.0).abs() < 1e-9, "{total}");
        let exact_mean: f64 = parts.iter().map(GammaDist::mean).sum();
        assert!((s.mean() - exact_mean).abs() < 1e-9 * exact_mean);
        assert!((s.cdf(1e6) - 1.0).abs() < 1e-11);
    }

    #[test]
    fn tolerance_below_rounding_still_terminates() {
        let s = gamma_sum_series(&[g(2.0, 0.5), g(3.0, 4.0), g(1.5, 1.1)], 1e-18, DEFAULT_MAX_TERMS).unwrap();
        assert!(s.tail_bound() <= 1e-13);
    }

    #[test]
    fn errors() {
        assert!(matches!(gamma_sum_pdf(&[], 1e-9), Err(Error::Config(_))));
        assert!(matches!(gamma_sum_series(&[g(1.0, 1.0), g(30.0, 50.0)], 1e-12, 16), Err(Error::Truncation(_))));
    }
}
