use std::io::Write;
use std::path::{Path, PathBuf};

use chaoslink::analytic::{curve_with, fmt_float, AberCurve, AberOptions};
use chaoslink::fit::{fit_expsum_with, FitGrid, FitOptions};
use chaoslink::montecarlo::{sweep, Kernel};
use chaoslink::ExpSumApprox;

use crate::{resolve_seed, CliError, Common, CurveArgs, FitArgs, KernelChoice, Mode, ScenarioFile, DEFAULT_SEED, DEFAULT_TRIALS};

/// Parses `lo:hi:points`.
pub fn parse_grid(spec: &str) -> Result<FitGrid, CliError> {
    let bad = || CliError::Usage(format!("--grid-db expects lo:hi:points, got {spec:?}"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [lo, hi, n] = parts.as_slice() else { return Err(bad()) };
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    Ok(FitGrid::new(lo, hi, n)?)
}

pub fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", p.display()))),
        None => std::io::stdout().write_all(bytes).map_err(|e| CliError::Usage(format!("cannot write to stdout: {e}"))),
    }
}

pub fn load_params(path: &Path) -> Result<ExpSumApprox, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read params {}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de)
        .map_err(|e| CliError::Usage(format!("params {} field `{}`: {}", path.display(), e.path(), e.inner())))
}

pub fn params_json(approx: &ExpSumApprox) -> String {
    let mut s = serde_json::to_string_pretty(approx).expect("approximation serializes");
    s.push('\n');
    s
}

pub fn cmd_fit(args: &FitArgs, common: &Common) -> Result<(), CliError> {
    let grid = parse_grid(&args.grid_db)?;
    let opts = FitOptions { seed: resolve_seed(common.seed, None, FitOptions::default().seed)?, ..FitOptions::default() };
    let approx = fit_expsum_with(args.a, args.m, args.terms, &grid, None, &opts)?;
    write_output(args.out.as_deref(), params_json(&approx).as_bytes())?;
    eprintln!("max_rel_error {}", fmt_float(approx.max_rel_error()));
    Ok(())
}

/// Everything `curve` needs once files and flags are resolved.
#[derive(Debug, Clone)]
pub struct CurveRequest {
    pub file: ScenarioFile,
    pub mode: Mode,
    /// Explicit approximation; otherwise fitted with default settings.
    pub params: Option<ExpSumApprox>,
    pub kernel: KernelChoice,
    pub seed: u64,
    pub trials: u64,
    pub tolerance: Option<f64>,
}

/// CSV text and whether every point evaluated.
pub struct CurveOutput {
    pub csv: String,
    pub complete: bool,
}

pub const BOTH_HEADER: &str = "snr_db,ber,protocol,provenance,std_err,agreement";

pub fn render_curve(req: &CurveRequest) -> Result<CurveOutput, CliError> {
    let sc = req.file.scenario()?;
    let mut opts = AberOptions::default();
    if let Some(t) = req.tolerance {
        if !(t > 0.0 && t < 1.0) {
            return Err(CliError::Usage(format!("--tolerance must lie in (0, 1), got {t}")));
        }
        opts.tolerance = t;
    }
    if req.trials == 0 && req.mode != Mode::Analytic {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let needs_approx = req.mode != Mode::Mc || req.kernel == KernelChoice::Approx;
    let approx = match (&req.params, needs_approx) {
        (Some(p), _) => Some(p.clone()),
        (None, true) => Some(chaoslink::fit::fit_expsum(
            sc.noise.shape(),
            sc.spreading_half_m,
            4,
            &FitGrid::default(),
            None,
        )?),
        (None, false) => None,
    };
    let analytic = match req.mode {
        Mode::Mc => None,
        _ => Some(curve_with(&sc, approx.as_ref().expect("approximation resolved"), &opts)?),
    };
    let mc = match req.mode {
        Mode::Analytic => None,
        _ => {
            let kernel = match req.kernel {
                KernelChoice::Exact => Kernel::Exact,
                KernelChoice::Approx => Kernel::Approx(approx.clone().expect("approximation resolved")),
            };
            Some(sweep(&sc, req.trials, req.seed, &kernel)?)
        }
    };
    let complete = [&analytic, &mc].iter().all(|c| c.as_ref().is_none_or(|c| c.ber.iter().all(Option::is_some)));
    let mut out = Vec::new();
    match (analytic, mc) {
        (Some(a), None) | (None, Some(a)) => a.write_csv(&mut out).expect("in-memory write"),
        (Some(a), Some(m)) => write_both(&a, &m, &mut out),
        (None, None) => unreachable!("every mode yields a curve"),
    }
    Ok(CurveOutput { csv: String::from_utf8(out).expect("CSV is ASCII"), complete })
}

fn write_both(a: &AberCurve, m: &AberCurve, out: &mut Vec<u8>) {
    let se = m.std_err.as_ref().expect("simulated curve has std_err");
    writeln!(out, "{BOTH_HEADER}").unwrap();
    for (x, y) in a.snr_db.iter().zip(&a.ber) {
        writeln!(out, "{},{},{},{},,", fmt_float(*x), y.map(fmt_float).unwrap_or_default(), a.protocol, a.provenance).unwrap();
    }
    for (i, (x, y)) in m.snr_db.iter().zip(&m.ber).enumerate() {
        let agreement = match (a.ber[i], y) {
            (Some(an), Some(mc)) => fmt_float(agreement(an, *mc, se[i])),
            _ => String::new(),
        };
        writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_float(*x),
            y.map(fmt_float).unwrap_or_default(),
            m.protocol,
            m.provenance,
            fmt_float(se[i]),
            agreement
        )
        .unwrap();
    }
}

/// `|analytic − mc| / std_err`, infinite when a nonzero gap meets zero spread.
pub fn agreement(analytic: f64, mc: f64, std_err: f64) -> f64 {
    let gap = (analytic - mc).abs();
    if gap == 0.0 {
        0.0
    } else {
        gap / std_err
    }
}

fn relative_to(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub fn cmd_curve(args: &CurveArgs, common: &Common) -> Result<(), CliError> {
    let file = ScenarioFile::load(&args.scenario)?;
    let base = args.scenario.parent().unwrap_or(Path::new("."));
    let params = match (&args.params, &file.params) {
        (Some(p), _) => Some(load_params(p)?),
        (None, Some(p)) => Some(load_params(&relative_to(base, p))?),
        (None, None) => None,
    };
    let seed = if args.mode == Mode::Analytic { DEFAULT_SEED } else { resolve_seed(common.seed, file.seed, DEFAULT_SEED)? };
    let req = CurveRequest {
        mode: args.mode,
        params,
        kernel: args.kernel,
        seed,
        trials: common.trials.or(file.trials).unwrap_or(DEFAULT_TRIALS),
        tolerance: common.tolerance.or(file.tolerance),
        file: file.clone(),
    };
    let out = render_curve(&req)?;
    let dest = args.out.clone().or_else(|| file.out.as_ref().map(|p| relative_to(base, p)));
    write_output(dest.as_deref(), out.csv.as_bytes())?;
    if out.complete {
        Ok(())
    } else {
        Err(CliError::Numeric("some grid points failed to evaluate (empty ber fields)".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spec() {
        let g = parse_grid("0:25:200").unwrap();
        assert_eq!((g.lo_db, g.hi_db, g.points), (0.0, 25.0, 200));
        assert!(matches!(parse_grid("0:25"), Err(CliError::Usage(_))));
        assert!(matches!(parse_grid("a:25:3"), Err(CliError::Usage(_))));
        assert!(parse_grid("25:0:10").is_err());
    }

    #[test]
    fn agreement_ratio() {
        assert_eq!(agreement(0.1, 0.1, 0.0), 0.0);
        assert_eq!(agreement(0.1, 0.1, 1e-3), 0.0);
        assert!((agreement(0.1, 0.098, 1e-3) - 2.0).abs() < 1e-9);
        assert!(agreement(0.1, 0.09, 0.0).is_infinite());
    }
}
