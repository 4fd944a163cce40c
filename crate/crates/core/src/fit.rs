//! Exponential-sum approximation `Q_a(√(γ²/(2γ+M))) ≈ Σ_r δ_r e^{−μ_r γ}`.
//!
//! Fitting minimizes squared relative error on a dB-uniform grid by
//! Levenberg-Marquardt over `(δ, ln μ)`, restarted from several random
//! decay-rate guesses with the amplitudes solved by linear least squares.

use std::cmp::Ordering;

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::storage::Owned;
use nalgebra::{DMatrix, DVector, Dyn};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{config, FitError, Result};
use crate::special::DcskKernel;

/// One `δ·e^{−μγ}` term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpTerm {
    pub delta: f64,
    pub mu: f64,
}

/// Fitted (or published) exponential-sum approximation of the DCSK kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ExpSumRepr", into = "ExpSumRepr")]
pub struct ExpSumApprox {
    noise_a: f64,
    spreading_m: u32,
    terms: Vec<ExpTerm>,
    max_rel_error: f64,
    fit_domain_db: (f64, f64),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExpSumRepr {
    a: f64,
    #[serde(rename = "M")]
    m: u32,
    terms: Vec<ExpTerm>,
    max_rel_error: f64,
    domain_db: (f64, f64),
}

impl TryFrom<ExpSumRepr> for ExpSumApprox {
    type Error = crate::Error;

    fn try_from(r: ExpSumRepr) -> Result<Self> {
        Self::new(r.a, r.m, r.terms, r.domain_db, r.max_rel_error)
    }
}

impl From<ExpSumApprox> for ExpSumRepr {
    fn from(e: ExpSumApprox) -> Self {
        Self { a: e.noise_a, m: e.spreading_m, terms: e.terms, max_rel_error: e.max_rel_error, domain_db: e.fit_domain_db }
    }
}

impl ExpSumApprox {
    pub fn new(
        noise_a: f64,
        spreading_m: u32,
        terms: Vec<ExpTerm>,
        fit_domain_db: (f64, f64),
        max_rel_error: f64,
    ) -> Result<Self> {
        if !(noise_a > 0.0 && noise_a.is_finite()) {
            return Err(config(format!("approximation exponent a must be positive, got {noise_a}")));
        }
        if spreading_m == 0 {
            return Err(config("approximation M must be at least 1"));
        }
        if terms.is_empty() {
            return Err(config("approximation needs at least one term"));
        }
        for t in &terms {
            if !t.delta.is_finite() || !(t.mu > 0.0 && t.mu.is_finite()) {
                return Err(config(format!("invalid term delta={} mu={} (mu must be positive)", t.delta, t.mu)));
            }
        }
        if !(max_rel_error >= 0.0 && max_rel_error.is_finite()) {
            return Err(config(format!("max_rel_error must be finite and nonnegative, got {max_rel_error}")));
        }
        if !(fit_domain_db.0.is_finite() && fit_domain_db.1.is_finite() && fit_domain_db.0 < fit_domain_db.1) {
            return Err(config(format!("invalid fit domain {fit_domain_db:?}")));
        }
        Ok(Self { noise_a, spreading_m, terms, max_rel_error, fit_domain_db })
    }

    pub fn noise_a(&self) -> f64 {
        self.noise_a
    }

    pub fn spreading_m(&self) -> u32 {
        self.spreading_m
    }

    pub fn terms(&self) -> &[ExpTerm] {
        &self.terms
    }

    pub fn max_rel_error(&self) -> f64 {
        self.max_rel_error
    }

    pub fn fit_domain_db(&self) -> (f64, f64) {
        self.fit_domain_db
    }

    #[inline]
    pub fn eval(&self, gamma: f64) -> f64 {
        self.terms.iter().map(|t| t.delta * (-t.mu * gamma).exp()).sum()
    }

    /// `|approx(0) − 1/2|`; the kernel saturates at one half.
    pub fn saturation_error(&self) -> f64 {
        (self.eval(0.0) - 0.5).abs()
    }

    /// Half the sum of squared relative residuals against the kernel on `grid`.
    pub fn fit_cost(&self, grid: &FitGrid) -> Result<f64> {
        let target = kernel_target(self.noise_a, self.spreading_m)?;
        let gammas = grid.gammas();
        Ok(0.5 * gammas.iter().map(|&g| (self.eval(g) / target(g) - 1.0).powi(2)).sum::<f64>())
    }

    /// Max relative error against the kernel on `grid`.
    pub fn measure_rel_error(&self, grid: &FitGrid) -> Result<f64> {
        let target = kernel_target(self.noise_a, self.spreading_m)?;
        Ok(max_rel_error(&self.terms, &target, &grid.gammas()))
    }
}

pub fn expsum_eval(approx: &ExpSumApprox, gamma: f64) -> f64 {
    approx.eval(gamma)
}

/// SNR grid uniform in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitGrid {
    pub lo_db: f64,
    pub hi_db: f64,
    pub points: usize,
}

impl Default for FitGrid {
    fn default() -> Self {
        Self { lo_db: 0.0, hi_db: 25.0, points: 200 }
    }
}

impl FitGrid {
    pub fn new(lo_db: f64, hi_db: f64, points: usize) -> Result<Self> {
        if !(lo_db.is_finite() && hi_db.is_finite() && lo_db < hi_db) {
            return Err(config(format!("grid bounds must satisfy lo < hi, got {lo_db}:{hi_db}")));
        }
        if points < 2 {
            return Err(config("grid needs at least two points"));
        }
        Ok(Self { lo_db, hi_db, points })
    }

    pub fn db(&self) -> Vec<f64> {
        let step = (self.hi_db - self.lo_db) / (self.points - 1) as f64;
        (0..self.points).map(|i| if i + 1 == self.points { self.hi_db } else { self.lo_db + step * i as f64 }).collect()
    }

    pub fn gammas(&self) -> Vec<f64> {
        self.db().into_iter().map(crate::db_to_linear).collect()
    }

    /// Same span, ten times denser (every fit point is also a validation point).
    pub fn validation(&self) -> Self {
        Self { points: (self.points - 1) * 10 + 1, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub restarts: usize,
    pub seed: u64,
    /// Evaluation budget per start, in units of (parameters + 1).
    pub patience: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { restarts: 16, seed: 0x5eed_f17e, patience: 400 }
    }
}

/// Outcome of a generic fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// Sorted by ascending `mu`.
    pub terms: Vec<ExpTerm>,
    /// Half the sum of squared relative residuals on the fit grid.
    pub cost: f64,
    /// Max relative error on the validation grid.
    pub max_rel_error: f64,
}

/// Fits an `r`-term approximation of the `(a, M)` kernel.
pub fn fit_expsum(a: f64, m: u32, r: usize, grid: &FitGrid, init: Option<&ExpSumApprox>) -> Result<ExpSumApprox> {
    fit_expsum_with(a, m, r, grid, init, &FitOptions::default())
}

pub fn fit_expsum_with(
    a: f64,
    m: u32,
    r: usize,
    grid: &FitGrid,
    init: Option<&ExpSumApprox>,
    opts: &FitOptions,
) -> Result<ExpSumApprox> {
    if r == 0 {
        return Err(config("number of terms must be at least 1"));
    }
    if grid.points < 4 * r {
        return Err(config(format!("grid has {} points; {r} terms need at least {}", grid.points, 4 * r)));
    }
    if grid.lo_db > 0.0 || grid.hi_db < 25.0 {
        return Err(config(format!("fit grid {}:{} dB must cover 0:25 dB", grid.lo_db, grid.hi_db)));
    }
    if let Some(init) = init {
        if init.terms.len() != r {
            return Err(config(format!("initial guess has {} terms, expected {r}", init.terms.len())));
        }
    }
    let target = kernel_target(a, m)?;
    let res = fit_expsum_to(&target, r, grid, init.map(|i| i.terms.as_slice()), opts);
    let wrap = |f: FitResult| ExpSumApprox::new(a, m, f.terms, (grid.lo_db, grid.hi_db), f.max_rel_error);
    match res {
        Ok(f) => wrap(f),
        Err((reason, best)) => Err(FitError { reason, best: best.and_then(|b| wrap(b).ok()).map(Box::new) }.into()),
    }
}

/// Fits `Σ δ_r e^{−μ_r γ}` to an arbitrary positive target on `grid`.
///
/// On failure returns the reason and the best finite candidate, if any.
pub fn fit_expsum_to<F>(
    target: &F,
    r: usize,
    grid: &FitGrid,
    init: Option<&[ExpTerm]>,
    opts: &FitOptions,
) -> std::result::Result<FitResult, (String, Option<FitResult>)>
where
    F: Fn(f64) -> f64 + Sync,
{
    let gammas = grid.gammas();
    let y: Vec<f64> = gammas.iter().map(|&g| target(g)).collect();
    if let Some(bad) = y.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
        return Err((format!("target is not positive and finite at {} dB", grid.db()[bad]), None));
    }
    let inv_y: Vec<f64> = y.iter().map(|v| 1.0 / v).collect();
    let validation = grid.validation().gammas();

    let mut starts: Vec<Option<Vec<f64>>> = Vec::new();
    if let Some(init) = init {
        let mut p: Vec<f64> = init.iter().map(|t| t.delta).collect();
        p.extend(init.iter().map(|t| t.mu.ln()));
        starts.push(Some(p));
    }
    starts.extend((0..opts.restarts).map(|_| None));

    let runs: Vec<(Vec<ExpTerm>, f64, bool)> = starts
        .into_par_iter()
        .enumerate()
        .map(|(k, start)| {
            let p0 = start.unwrap_or_else(|| random_start(r, opts.seed, k as u64, &gammas, &inv_y));
            let problem = ExpSumProblem::new(&gammas, &inv_y, r, p0);
            let (solved, report) = LevenbergMarquardt::new().with_patience(opts.patience).minimize(problem);
            let terms = solved.terms();
            let cost = solved.cost();
            (terms, cost, report.termination.was_successful())
        })
        .collect();

    let best = runs
        .iter()
        .filter(|(t, c, _)| c.is_finite() && t.iter().all(|t| t.delta.is_finite() && t.mu > 0.0 && t.mu.is_finite()))
        .min_by(|x, y| x.1.partial_cmp(&y.1).unwrap_or(Ordering::Equal).then_with(|| lex(&x.0, &y.0)));
    let Some((terms, cost, _)) = best else {
        return Err(("every start diverged".into(), None));
    };
    let result =
        FitResult { terms: terms.clone(), cost: *cost, max_rel_error: max_rel_error(terms, target, &validation) };
    if !result.max_rel_error.is_finite() {
        return Err(("best candidate has non-finite error".into(), Some(result)));
    }
    if !runs.iter().any(|run| run.2) {
        return Err(("no start converged within the iteration budget".into(), Some(result)));
    }
    Ok(result)
}

fn lex(x: &[ExpTerm], y: &[ExpTerm]) -> Ordering {
    x.iter()
        .flat_map(|t| [t.mu, t.delta])
        .zip(y.iter().flat_map(|t| [t.mu, t.delta]))
        .map(|(a, b)| a.total_cmp(&b))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

fn kernel_target(a: f64, m: u32) -> Result<impl Fn(f64) -> f64 + Sync> {
    let k = DcskKernel::new(m, a)?;
    Ok(move |g: f64| k.eval(g))
}

fn max_rel_error<F: Fn(f64) -> f64>(terms: &[ExpTerm], target: &F, gammas: &[f64]) -> f64 {
    gammas
        .iter()
        .map(|&g| {
            let approx: f64 = terms.iter().map(|t| t.delta * (-t.mu * g).exp()).sum();
            (approx / target(g) - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

// Decay rates log-uniform in [1e-3, 2]; amplitudes by weighted linear least squares.
fn random_start(r: usize, seed: u64, index: u64, gammas: &[f64], inv_y: &[f64]) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let (lo, hi) = (1e-3f64.ln(), 2f64.ln());
    let mut theta: Vec<f64> = (0..r).map(|_| rng.random_range(lo..hi)).collect();
    theta.sort_by(f64::total_cmp);
    let a = DMatrix::from_fn(gammas.len(), r, |j, k| (-theta[k].exp() * gammas[j]).exp() * inv_y[j]);
    let b = DVector::from_element(gammas.len(), 1.0);
    let delta = a
        .svd(true, true)
        .solve(&b, 1e-15)
        .map(|d| d.iter().copied().collect::<Vec<_>>())
        .unwrap_or_else(|_| vec![0.5 / r as f64; r]);
    delta.into_iter().chain(theta).collect()
}

// ln μ is clamped so that extreme trial steps stay finite.
const THETA_MIN: f64 = -30.0;
const THETA_MAX: f64 = 8.0;

struct ExpSumProblem<'a> {
    gammas: &'a [f64],
    inv_y: &'a [f64],
    r: usize,
    p: DVector<f64>,
}

impl<'a> ExpSumProblem<'a> {
    fn new(gammas: &'a [f64], inv_y: &'a [f64], r: usize, p: Vec<f64>) -> Self {
        Self { gammas, inv_y, r, p: DVector::from_vec(p) }
    }

    fn mu(&self, k: usize) -> f64 {
        self.p[self.r + k].clamp(THETA_MIN, THETA_MAX).exp()
    }

    fn residual_vec(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.gammas.len(),
            self.gammas.iter().zip(self.inv_y).map(|(&g, &w)| {
                let s: f64 = (0..self.r).map(|k| self.p[k] * (-self.mu(k) * g).exp()).sum();
                s * w - 1.0
            }),
        )
    }

    fn cost(&self) -> f64 {
        0.5 * self.residual_vec().norm_squared()
    }

    fn terms(&self) -> Vec<ExpTerm> {
        let mut t: Vec<ExpTerm> = (0..self.r).map(|k| ExpTerm { delta: self.p[k], mu: self.mu(k) }).collect();
        t.sort_by(|x, y| x.mu.total_cmp(&y.mu).then(x.delta.total_cmp(&y.delta)));
        t
    }
}

impl LeastSquaresProblem<f64, Dyn, Dyn> for ExpSumProblem<'_> {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, Dyn>;
    type ParameterStorage = Owned<f64, Dyn>;

    fn set_params(&mut self, x: &DVector<f64>) {
        self.p.copy_from(x);
    }

    fn params(&self) -> DVector<f64> {
        self.p.clone()
    }

    fn residuals(&self) -> Option<DVector<f64>> {
        Some(self.residual_vec())
    }

    fn jacobian(&self) -> Option<DMatrix<f64>> {
        let mut j = DMatrix::zeros(self.gammas.len(), 2 * self.r);
        for k in 0..self.r {
            let theta = self.p[self.r + k];
            let clamped = !(THETA_MIN..=THETA_MAX).contains(&theta);
            let mu = self.mu(k);
            for (row, (&g, &w)) in self.gammas.iter().zip(self.inv_y).enumerate() {
                let e = (-mu * g).exp() * w;
                j[(row, k)] = e;
                j[(row, self.r + k)] = if clamped { 0.0 } else { -self.p[k] * g * mu * e };
            }
        }
        Some(j)
    }
}

/// The four published parameter sets for `M = 32`, verbatim and in published order.
///
/// These are unverified reference data: several rows miss the kernel's value
/// of one half at `γ = 0` by a wide margin. `max_rel_error` is measured here
/// against the kernel on the default validation grid. Use [`fit_expsum`] for
/// anything downstream.
pub fn load_table2() -> Vec<ExpSumApprox> {
    const ROWS: [(f64, [f64; 4], [f64; 4]); 4] = [
        (1.0, [0.1078, 0.4294, -0.009, 0.1788], [0.5424, 0.2477, 0.7834, 0.1044]),
        (1.5, [0.4140, 0.0955, 0.0928, -0.127], [0.2113, 0.6214, 0.1321, 0.6197]),
        (2.0, [0.2520, 0.3976, -0.611, 0.4621], [0.5162, 0.2243, 0.4096, 0.2243]),
        (2.5, [0.6083, -1.1060, 0.2360, 0.8107], [0.2541, 0.3982, 0.6922, 0.2534]),
    ];
    let grid = FitGrid::default();
    ROWS.iter()
        .map(|&(a, delta, mu)| {
            let terms: Vec<ExpTerm> = delta.iter().zip(mu).map(|(&delta, mu)| ExpTerm { delta, mu }).collect();
            let target = kernel_target(a, 32).expect("valid exponent");
            let err = max_rel_error(&terms, &target, &grid.validation().gammas());
            ExpSumApprox::new(a, 32, terms, (grid.lo_db, grid.hi_db), err).expect("published rows are well-formed")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_rows_verbatim() {
        let rows = load_table2();
        assert_eq!(rows.len(), 4);
        let a15 = &rows[1];
        assert_eq!(a15.noise_a(), 1.5);
        let d: Vec<f64> = a15.terms().iter().map(|t| t.delta).collect();
        let m: Vec<f64> = a15.terms().iter().map(|t| t.mu).collect();
        assert_eq!(d, [0.4140, 0.0955, 0.0928, -0.127]);
        assert_eq!(m, [0.2113, 0.6214, 0.1321, 0.6197]);
        let a25 = &rows[3];
        assert_eq!(a25.terms()[1], ExpTerm { delta: -1.1060, mu: 0.3982 });
        assert!(rows.iter().all(|r| r.spreading_m() == 32 && r.max_rel_error().is_finite()));
    }

    #[test]
    fn published_saturation_values() {
        let rows = load_table2();
        assert!((rows[2].eval(0.0) - 0.5007).abs() < 1e-12);
        assert!((rows[0].eval(0.0) - 0.707).abs() < 1e-12);
        // The a = 1 row does not reproduce the kernel at the origin.
        assert!(rows[0].saturation_error() > 0.2);
    }

    #[test]
    fn eval_decays() {
        for row in load_table2() {
            assert!(row.eval(1e4).abs() < 1e-300);
        }
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let e = ExpSumApprox::new(
            2.0,
            32,
            vec![ExpTerm { delta: 0.1 + 0.2, mu: 1.0 / 3.0 }, ExpTerm { delta: -1e-17, mu: 2.0f64.sqrt() }],
            (0.0, 25.0),
            0.012345678901234568,
        )
        .unwrap();
        let s = serde_json::to_string(&e).unwrap();
        assert!(s.starts_with(r#"{"a":2.0,"M":32,"terms":[{"delta":"#), "{s}");
        let back: ExpSumApprox = serde_json::from_str(&s).unwrap();
        assert_eq!(back, e);
        assert_eq!(serde_json::to_string(&back).unwrap(), s);
    }

    #[test]
    fn json_rejects_bad_documents() {
        let bad_mu = r#"{"a":2,"M":32,"terms":[{"delta":0.5,"mu":-1}],"max_rel_error":0,"domain_db":[0,25]}"#;
        assert!(serde_json::from_str::<ExpSumApprox>(bad_mu).is_err());
        let extra = r#"{"a":2,"M":32,"terms":[{"delta":0.5,"mu":1}],"max_rel_error":0,"domain_db":[0,25],"x":1}"#;
        assert!(serde_json::from_str::<ExpSumApprox>(extra).is_err());
    }

    #[test]
    fn grid_shapes() {
        let g = FitGrid::default();
        let db = g.db();
        assert_eq!(db.len(), 200);
        assert_eq!((db[0], db[199]), (0.0, 25.0));
        let v = g.validation();
        assert_eq!(v.points, 1991);
        assert!((v.db()[10] - db[1]).abs() < 1e-14);
    }

    #[test]
    fn recovers_single_exponential() {
        let target = |g: f64| 0.4 * (-0.3 * g).exp();
        let grid = FitGrid::new(0.0, 10.0, 40).unwrap();
        let fit = fit_expsum_to(&target, 1, &grid, None, &FitOptions::default()).unwrap();
        assert!((fit.terms[0].delta - 0.4).abs() < 1e-6, "{:?}", fit.terms);
        assert!((fit.terms[0].mu - 0.3).abs() < 1e-6, "{:?}", fit.terms);
    }

    #[test]
    fn rejects_bad_requests() {
        assert!(fit_expsum(2.0, 32, 0, &FitGrid::default(), None).is_err());
        assert!(fit_expsum(2.0, 32, 4, &FitGrid::new(0.0, 25.0, 10).unwrap(), None).is_err());
        assert!(fit_expsum(2.0, 32, 4, &FitGrid::new(0.0, 20.0, 200).unwrap(), None).is_err());
        assert!(fit_expsum(0.0, 32, 4, &FitGrid::default(), None).is_err());
    }
}
