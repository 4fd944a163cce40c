//! Acceptance suite behind `chaoslink validate`.
//!
//! Each criterion returns its measured values next to the limits it was held
//! to. Limits are fixed here; the only knobs are the master seed and, for quick
//! runs, the Monte Carlo sample counts.

use std::time::Instant;

use chaoslink::analytic::{aber_df_expanded, aber_df_with, aber_ef_with, df_compose, df_parts, AberOptions};
use chaoslink::channel::{build_links, GammaSampler};
use chaoslink::fit::{fit_expsum, FitGrid};
use chaoslink::montecarlo::{sim_system_grid, sim_waveform_ber, Kernel};
use chaoslink::special::{dcsk_conditional_ber, gamma_sum_series, q_generalized, GammaSumSeries};
use chaoslink::{GammaDist, NoiseModel, Protocol, Scenario};
use chaoslink_oracle::quad::integrate_to_infinity;
use chaoslink_oracle::{dcsk::exact_ber, gaussian_q, generalized_q_quadrature};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::commands::{agreement, render_curve, write_output, CurveRequest};
use crate::fixtures::FixtureSet;
use crate::{resolve_seed, CliError, Common, KernelChoice, Mode, ValidateArgs};

pub const DEFAULT_VALIDATE_SEED: u64 = 0x00c4_a05e;
pub const SCHEMA_VERSION: u32 = 1;

/// Sample counts for the stochastic criteria.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleCounts {
    pub gamma_sum_draws: u64,
    pub algebra_trials: u64,
    pub fidelity_trials: u64,
    pub waveform_trials: u64,
    pub determinism_trials: u64,
}

impl Default for SampleCounts {
    fn default() -> Self {
        Self {
            gamma_sum_draws: 10_000_000,
            algebra_trials: 10_000_000,
            fidelity_trials: 2_000_000,
            waveform_trials: 10_000_000,
            determinism_trials: 100_000,
        }
    }
}

impl SampleCounts {
    /// Every count set to `n`.
    pub fn uniform(n: u64) -> Self {
        Self { gamma_sum_draws: n, algebra_trials: n, fidelity_trials: n, waveform_trials: n, determinism_trials: n }
    }
}

#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub seed: u64,
    pub samples: SampleCounts,
    /// Criteria to run; empty means all.
    pub only: Vec<u8>,
    pub analytic: AberOptions,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self { seed: DEFAULT_VALIDATE_SEED, samples: SampleCounts::default(), only: Vec::new(), analytic: AberOptions::default() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub pass: bool,
    /// Numerical condition alone, ignoring the runtime budget.
    pub within_limits: bool,
    pub within_budget: bool,
    pub runtime_s: f64,
    pub budget_s: Option<f64>,
    pub limits: Value,
    pub measured: Value,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        let budget = self.budget_s.map(|b| format!(" (budget {b} s)")).unwrap_or_default();
        format!("[{verdict}] {}: {} | {} | {:.2} s{budget}", self.id, self.name, self.headline(), self.runtime_s)
    }

    fn headline(&self) -> String {
        match self.measured.get("headline") {
            Some(Value::String(s)) => s.clone(),
            _ => String::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub seed: u64,
    pub samples: SampleCounts,
    pub criteria: Vec<CriterionResult>,
    pub all_pass: bool,
}

struct Outcome {
    ok: bool,
    limits: Value,
    measured: Value,
    /// Budget compared against the slowest unit of work instead of the total.
    slowest_unit_s: Option<f64>,
}

type Check = fn(&SuiteConfig, &FixtureSet) -> Result<Outcome, CliError>;

const CRITERIA: [(u8, &str, Option<f64>, Check); 9] = [
    (1, "kernel identity", Some(1.0), kernel_identity),
    (2, "Q_a quadrature equivalence", Some(10.0), quadrature_equivalence),
    (3, "gamma-sum correctness", Some(60.0), gamma_sum_correctness),
    (4, "fit quality", Some(30.0), fit_quality),
    (5, "algebra isolation", Some(300.0), algebra_isolation),
    (6, "end-to-end fidelity", Some(300.0), end_to_end_fidelity),
    (7, "waveform sanity", Some(120.0), waveform_sanity),
    (8, "DF limit properties", Some(1.0), df_limits),
    (9, "determinism", None, determinism),
];

/// Runs the selected criteria, calling `progress` after each one.
pub fn run_suite(cfg: &SuiteConfig, fx: &FixtureSet, mut progress: impl FnMut(&CriterionResult)) -> Result<Report, CliError> {
    if let Some(bad) = cfg.only.iter().find(|id| !CRITERIA.iter().any(|c| c.0 == **id)) {
        return Err(CliError::Usage(format!("no criterion with id {bad}")));
    }
    let mut criteria = Vec::new();
    for (id, name, budget_s, check) in CRITERIA {
        if !cfg.only.is_empty() && !cfg.only.contains(&id) {
            continue;
        }
        let t0 = Instant::now();
        let out = check(cfg, fx)?;
        let runtime_s = t0.elapsed().as_secs_f64();
        let within_budget = budget_s.is_none_or(|b| out.slowest_unit_s.unwrap_or(runtime_s) < b);
        let r = CriterionResult {
            id,
            name,
            pass: out.ok && within_budget,
            within_limits: out.ok,
            within_budget,
            runtime_s,
            budget_s,
            limits: out.limits,
            measured: out.measured,
        };
        progress(&r);
        criteria.push(r);
    }
    let all_pass = criteria.iter().all(|c| c.pass);
    Ok(Report { schema_version: SCHEMA_VERSION, seed: cfg.seed, samples: cfg.samples, criteria, all_pass })
}

pub fn cmd_validate(args: &ValidateArgs, common: &Common) -> Result<(), CliError> {
    let fx = match &args.fixtures {
        Some(dir) => FixtureSet::load(dir)?,
        None => FixtureSet::builtin(),
    };
    let mut cfg = SuiteConfig { seed: resolve_seed(common.seed, None, DEFAULT_VALIDATE_SEED)?, only: args.only.clone(), ..Default::default() };
    if let Some(n) = common.trials {
        if n == 0 {
            return Err(CliError::Usage("--trials must be at least 1".into()));
        }
        cfg.samples = SampleCounts::uniform(n);
    }
    if let Some(t) = common.tolerance {
        if !(t > 0.0 && t < 1.0) {
            return Err(CliError::Usage(format!("--tolerance must lie in (0, 1), got {t}")));
        }
        cfg.analytic.tolerance = t;
    }
    let report = run_suite(&cfg, &fx, |r| eprintln!("{}", r.line()))?;
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    write_output(args.out.as_deref(), text.as_bytes())?;
    if report.all_pass {
        Ok(())
    } else {
        let failed: Vec<String> = report.criteria.iter().filter(|c| !c.pass).map(|c| c.id.to_string()).collect();
        Err(CliError::Validation(format!("criteria failed: {}", failed.join(", "))))
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
}

fn kernel_identity(_: &SuiteConfig, _: &FixtureSet) -> Result<Outcome, CliError> {
    const TOL: f64 = 1e-10;
    let (mut worst, mut at) = (0.0f64, 0.0);
    for x in linspace(-8.0, 8.0, 1000) {
        let e = (q_generalized(2.0, x)? - gaussian_q(x)).abs();
        if e > worst {
            (worst, at) = (e, x);
        }
    }
    Ok(Outcome {
        ok: worst <= TOL,
        limits: json!({"max_abs_error": TOL, "points": 1000, "x_range": [-8.0, 8.0]}),
        measured: json!({"headline": format!("max |Q_2 - Q| = {worst:.3e} at x = {at:.4}"), "max_abs_error": worst, "at_x": at}),
        slowest_unit_s: None,
    })
}

fn quadrature_equivalence(_: &SuiteConfig, _: &FixtureSet) -> Result<Outcome, CliError> {
    const TOL: f64 = 1e-9;
    const SHAPES: [f64; 6] = [0.5, 1.0, 1.5, 2.0, 2.5, 20.0];
    let mut per_a = Vec::new();
    for a in SHAPES {
        let mut worst = 0.0f64;
        for x in linspace(-5.0, 5.0, 100) {
            worst = worst.max((q_generalized(a, x)? - generalized_q_quadrature(a, x)).abs());
        }
        per_a.push(worst);
    }
    let worst = per_a.iter().copied().fold(0.0, f64::max);
    Ok(Outcome {
        ok: worst <= TOL,
        limits: json!({"max_abs_error": TOL, "points_per_a": 100, "x_range": [-5.0, 5.0]}),
        measured: json!({"headline": format!("max |Q_a - quadrature| = {worst:.3e}"), "a": SHAPES, "max_abs_error": per_a}),
        slowest_unit_s: None,
    })
}

/// Quantile of the series by bisection on its CDF.
fn series_quantile(s: &GammaSumSeries, p: f64) -> f64 {
    let mut hi = s.mean().max(1.0);
    while s.cdf(hi) < p {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if s.cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn gamma_sum_correctness(cfg: &SuiteConfig, _: &FixtureSet) -> Result<Outcome, CliError> {
    const MASS_TOL: f64 = 1e-6;
    const Z_MAX: f64 = 3.0;
    const QUANTILES: usize = 20;
    const SETS: u64 = 5;
    let n = cfg.samples.gamma_sum_draws;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(0x6753);
    let mut ok = true;
    let mut sets = Vec::new();
    for set in 0..SETS {
        let k = rng.random_range(2..=4);
        let comps: Vec<GammaDist> = (0..k)
            .map(|_| GammaDist::new(rng.random_range(0.5..4.0), rng.random_range(0.5..2.5)).expect("positive parameters"))
            .collect();
        let series = gamma_sum_series(&comps, 1e-13, 4096)?;
        let mass = integrate_to_infinity(|x| series.pdf(x), 0.0, 1e-13);
        let probs: Vec<f64> = (1..=QUANTILES).map(|i| i as f64 / (QUANTILES + 1) as f64).collect();
        let xs: Vec<f64> = probs.iter().map(|&p| series_quantile(&series, p)).collect();
        let counts = empirical_counts(&comps, &xs, n, cfg.seed, set);
        let z: Vec<f64> = probs
            .iter()
            .zip(&counts)
            .map(|(&p, &c)| (c as f64 / n as f64 - p).abs() / (p * (1.0 - p) / n as f64).sqrt())
            .collect();
        let max_z = z.iter().copied().fold(0.0, f64::max);
        let set_ok = (mass - 1.0).abs() <= MASS_TOL && max_z <= Z_MAX;
        ok &= set_ok;
        sets.push(json!({
            "components": comps.iter().map(|g| [g.shape(), g.scale()]).collect::<Vec<_>>(),
            "series_terms": series.weights().len(),
            "mass_error": mass - 1.0,
            "max_z": max_z,
            "pass": set_ok,
        }));
    }
    let worst_z = sets.iter().map(|s| s["max_z"].as_f64().unwrap()).fold(0.0, f64::max);
    let worst_mass = sets.iter().map(|s| s["mass_error"].as_f64().unwrap().abs()).fold(0.0, f64::max);
    Ok(Outcome {
        ok,
        limits: json!({"mass_abs_error": MASS_TOL, "max_z": Z_MAX, "quantiles": QUANTILES, "draws": n}),
        measured: json!({
            "headline": format!("worst |mass - 1| = {worst_mass:.2e}, worst z = {worst_z:.2} over {SETS} sets"),
            "sets": sets,
        }),
        slowest_unit_s: None,
    })
}

/// How many of `n` sums of independent draws fall at or below each of `xs`.
fn empirical_counts(comps: &[GammaDist], xs: &[f64], n: u64, seed: u64, set: u64) -> Vec<u64> {
    const CHUNK: u64 = 1 << 16;
    let samplers: Vec<GammaSampler> = comps.iter().map(GammaDist::sampler).collect();
    (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6753_0000 ^ set);
            rng.set_stream(c);
            let mut counts = vec![0u64; xs.len()];
            for _ in 0..CHUNK.min(n - c * CHUNK) {
                let s: f64 = samplers.iter().map(|g| g.sample(&mut rng)).sum();
                for (cnt, &x) in counts.iter_mut().zip(xs) {
                    *cnt += (s <= x) as u64;
                }
            }
            counts
        })
        .reduce(|| vec![0; xs.len()], |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect())
}

const FIT_SHAPES: [f64; 4] = [1.0, 1.5, 2.0, 2.5];

fn fit_quality(_: &SuiteConfig, fx: &FixtureSet) -> Result<Outcome, CliError> {
    const MAX_REL: f64 = 0.05;
    // Refits are deterministic; the slack only absorbs libm differences.
    const FIXTURE_RTOL: f64 = 1e-6;
    let grid = FitGrid::default();
    let mut ok = true;
    let (mut errors, mut drift, mut times) = (Vec::new(), Vec::new(), Vec::new());
    for a in FIT_SHAPES {
        let t0 = Instant::now();
        let fit = fit_expsum(a, 32, 4, &grid, None)?;
        times.push(t0.elapsed().as_secs_f64());
        let row = fx.row(a)?;
        let d = fit
            .terms()
            .iter()
            .zip(row.terms())
            .flat_map(|(f, r)| [(f.delta - r.delta) / f.delta, (f.mu - r.mu) / f.mu])
            .map(f64::abs)
            .fold(0.0, f64::max);
        ok &= fit.max_rel_error() <= MAX_REL && d <= FIXTURE_RTOL;
        errors.push(fit.max_rel_error());
        drift.push(d);
    }
    let slowest = times.iter().copied().fold(0.0, f64::max);
    let headline = FIT_SHAPES
        .iter()
        .zip(&errors)
        .map(|(a, e)| format!("a={a}: {e:.4}"))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(Outcome {
        ok,
        limits: json!({"max_rel_error": MAX_REL, "fixture_param_rtol": FIXTURE_RTOL, "M": 32, "terms": 4, "domain_db": [0.0, 25.0]}),
        measured: json!({
            "headline": format!("max rel error {headline}; fixture drift {:.1e}", drift.iter().copied().fold(0.0, f64::max)),
            "a": FIT_SHAPES,
            "max_rel_error": errors,
            "fixture_param_drift": drift,
            "fit_seconds": times,
        }),
        slowest_unit_s: Some(slowest),
    })
}

fn closed_form(sc: &Scenario, p: Protocol, approx: &chaoslink::ExpSumApprox, db: f64, opts: &AberOptions) -> Result<f64, CliError> {
    Ok(match p {
        Protocol::ErrorFree => aber_ef_with(sc, approx, db, opts)?,
        Protocol::DecodeForward => aber_df_with(sc, approx, db, opts)?,
    })
}

const PROTOCOLS: [Protocol; 2] = [Protocol::ErrorFree, Protocol::DecodeForward];

fn algebra_isolation(cfg: &SuiteConfig, fx: &FixtureSet) -> Result<Outcome, CliError> {
    const Z_MAX: f64 = 3.0;
    let n = cfg.samples.algebra_trials;
    let (mut worst, mut points, mut failures) = (0.0f64, 0usize, Vec::new());
    for (name, file) in &fx.scenarios {
        let sc = file.scenario()?;
        let approx = fx.row(sc.noise.shape())?;
        let est = sim_system_grid(&sc, &sc.snr_grid_db, n, cfg.seed, &[Kernel::Approx(approx.clone())])?;
        for (i, &db) in sc.snr_grid_db.iter().enumerate() {
            for p in PROTOCOLS {
                let an = closed_form(&sc, p, approx, db, &cfg.analytic)?;
                let mc = est[i][0].get(p);
                let z = agreement(an, mc.ber_hat, mc.std_err);
                points += 1;
                worst = worst.max(z);
                if !(z <= Z_MAX) {
                    failures.push(json!({"scenario": name, "protocol": p.to_string(), "snr_db": db,
                        "analytic": an, "mc": mc.ber_hat, "std_err": mc.std_err, "z": z}));
                }
            }
        }
    }
    Ok(Outcome {
        ok: failures.is_empty(),
        limits: json!({"max_z": Z_MAX, "trials": n}),
        measured: json!({
            "headline": format!("worst z = {worst:.3e}; {} of {points} points above {Z_MAX}", failures.len()),
            "points": points,
            "worst_z": worst,
            "failures": failures,
        }),
        slowest_unit_s: None,
    })
}

fn end_to_end_fidelity(cfg: &SuiteConfig, fx: &FixtureSet) -> Result<Outcome, CliError> {
    const REL_MAX: f64 = 0.10;
    const BER_MIN: f64 = 1e-5;
    let n = cfg.samples.fidelity_trials;
    let (mut worst, mut points, mut failures) = (0.0f64, 0usize, Vec::new());
    for (name, file) in &fx.scenarios {
        let sc = file.scenario()?;
        let approx = fx.row(sc.noise.shape())?;
        let est = sim_system_grid(&sc, &sc.snr_grid_db, n, cfg.seed, &[Kernel::Exact])?;
        for (i, &db) in sc.snr_grid_db.iter().enumerate() {
            for p in PROTOCOLS {
                let mc = est[i][0].get(p);
                if mc.ber_hat < BER_MIN {
                    continue;
                }
                let an = closed_form(&sc, p, approx, db, &cfg.analytic)?;
                let rel = (an / mc.ber_hat - 1.0).abs();
                points += 1;
                worst = worst.max(rel);
                if !(rel <= REL_MAX) {
                    failures.push(json!({"scenario": name, "protocol": p.to_string(), "snr_db": db,
                        "analytic": an, "mc": mc.ber_hat, "rel_error": rel}));
                }
            }
        }
    }
    Ok(Outcome {
        ok: failures.is_empty() && points > 0,
        limits: json!({"max_rel_error": REL_MAX, "min_ber": BER_MIN, "trials": n}),
        measured: json!({
            "headline": format!("worst rel error = {worst:.4} over {points} points with BER >= {BER_MIN:e}"),
            "points": points,
            "worst_rel_error": worst,
            "failures": failures,
        }),
        slowest_unit_s: None,
    })
}

fn waveform_sanity(cfg: &SuiteConfig, _: &FixtureSet) -> Result<Outcome, CliError> {
    const REL_MAX: f64 = 0.10;
    const GAMMAS: [f64; 3] = [5.0, 10.0, 20.0];
    let n = cfg.samples.waveform_trials;
    let mut rows = Vec::new();
    let mut ok = true;
    for g in GAMMAS {
        let est = sim_waveform_ber(32, 10.0 * g.log10(), &NoiseModel::gaussian(), n, cfg.seed)?;
        let kernel = dcsk_conditional_ber(g, 32, 2.0)?;
        let rel = (est.ber_hat / kernel - 1.0).abs();
        ok &= rel <= REL_MAX;
        rows.push(json!({"gamma": g, "simulated": est.ber_hat, "std_err": est.std_err, "kernel": kernel,
            "rel_error": rel, "exact_correlator": exact_ber(32, g)}));
    }
    let headline = rows
        .iter()
        .map(|r| format!("γ={}: {:+.3}", r["gamma"], r["simulated"].as_f64().unwrap() / r["kernel"].as_f64().unwrap() - 1.0))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(Outcome {
        ok,
        limits: json!({"max_rel_error": REL_MAX, "M": 32, "a": 2.0, "trials": n}),
        measured: json!({"headline": format!("sim/kernel - 1: {headline}"), "points": rows}),
        slowest_unit_s: None,
    })
}

fn df_limits(cfg: &SuiteConfig, fx: &FixtureSet) -> Result<Outcome, CliError> {
    const COLLAPSE_RTOL: f64 = 1e-6;
    const EXPANSION_RTOL: f64 = 1e-12;
    const DRAWS: usize = 100;
    // Random distances spread the link scales widely; give the series room.
    let opts = &AberOptions { max_terms: 8192, ..cfg.analytic };

    let exact_identity = [(0.3, 0.01), (1e-3, 1e-9), (0.5, 0.5)].iter().all(|&(sd, d)| df_compose(0.0, sd, d) == d);
    let mut collapse = Vec::new();
    for (name, file) in &fx.scenarios {
        let base = file.scenario()?;
        let approx = fx.row(base.noise.shape())?;
        let mut prev = f64::INFINITY;
        let mut shrinking = true;
        let mut last = (0.0, 0.0);
        for d_sr in [1.0, 1e-1, 1e-2, 1e-3, 1e-4] {
            let sc = Scenario { d_sr, ..base.clone() };
            let parts = df_parts(&sc, approx, 10.0, opts)?;
            let ef = aber_ef_with(&sc, approx, 10.0, opts)?;
            let gap = ((parts.compose() - ef) / ef).abs();
            shrinking &= gap <= prev;
            prev = gap;
            last = (parts.ber_sr, gap);
        }
        collapse.push(json!({"scenario": name, "ber_sr": last.0, "rel_gap": last.1, "monotone": shrinking,
            "pass": shrinking && last.1 <= COLLAPSE_RTOL}));
    }
    let collapse_ok = collapse.iter().all(|c| c["pass"] == true);

    // Rows that are not usable approximations (negative "probabilities" from
    // large alternating coefficients) make both sums ill-conditioned; they are
    // measured but do not decide the criterion.
    const WELL_POSED: [f64; 3] = [1.0, 1.5, 2.0];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(0x4446);
    let (mut worst, mut worst_ill) = (0.0f64, 0.0f64);
    for _ in 0..DRAWS {
        let a = FIT_SHAPES[rng.random_range(0..FIT_SHAPES.len())];
        let sc = Scenario {
            relay_antennas: rng.random_range(1..=3),
            dest_antennas: rng.random_range(1..=4),
            users: rng.random_range(1..=3),
            paths: rng.random_range(1..=3),
            fading_m: rng.random_range(0.5..4.0),
            d_sr: rng.random_range(0.5..2.0),
            d_sd: rng.random_range(0.5..2.0),
            d_rd: rng.random_range(0.5..2.0),
            noise: NoiseModel::new(a)?,
            ..Scenario::default()
        };
        let db = rng.random_range(0.0..30.0);
        let approx = fx.row(a)?;
        let composed = df_parts(&sc, approx, db, opts)?.compose();
        let expanded = aber_df_expanded(&build_links(&sc, chaoslink::db_to_linear(db))?, approx, opts)?;
        let rel = ((composed - expanded) / composed).abs();
        if WELL_POSED.contains(&a) {
            worst = worst.max(rel);
        } else {
            worst_ill = worst_ill.max(rel);
        }
    }
    Ok(Outcome {
        ok: exact_identity && collapse_ok && worst <= EXPANSION_RTOL,
        limits: json!({"collapse_rel_gap": COLLAPSE_RTOL, "expansion_rel_error": EXPANSION_RTOL, "draws": DRAWS,
            "deciding_rows_a": WELL_POSED}),
        measured: json!({
            "headline": format!("collapse ok = {collapse_ok}, worst expansion rel error = {worst:.2e}"),
            "zero_sr_identity": exact_identity,
            "collapse": collapse,
            "worst_expansion_rel_error": worst,
            "worst_expansion_rel_error_other_rows": worst_ill,
        }),
        slowest_unit_s: None,
    })
}

fn determinism(cfg: &SuiteConfig, fx: &FixtureSet) -> Result<Outcome, CliError> {
    let (_, file) = &fx.scenarios[0];
    let approx = fx.row(file.noise_a)?.clone();
    let req = CurveRequest {
        file: file.clone(),
        mode: Mode::Both,
        params: Some(approx),
        kernel: KernelChoice::Approx,
        seed: cfg.seed,
        trials: cfg.samples.determinism_trials,
        tolerance: Some(cfg.analytic.tolerance),
    };
    let in_pool = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| CliError::Numeric(format!("thread pool: {e}")))?;
        pool.install(|| render_curve(&req)).map(|o| o.csv)
    };
    let first = in_pool(1)?;
    let again = in_pool(1)?;
    let wide = in_pool(4)?;
    let repeat_ok = first == again;
    let threads_ok = first == wide;
    Ok(Outcome {
        ok: repeat_ok && threads_ok,
        limits: json!({"threads": [1, 4], "trials": cfg.samples.determinism_trials}),
        measured: json!({
            "headline": format!("repeat identical = {repeat_ok}, threads 1 vs 4 identical = {threads_ok}"),
            "csv_bytes": first.len(),
            "repeat_identical": repeat_ok,
            "threads_identical": threads_ok,
        }),
        slowest_unit_s: None,
    })
}
