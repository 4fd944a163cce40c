//! Closed-form average BER for error-free (EF) and decode-and-forward (DF) relaying.
//!
//! Every average reduces to the gamma moment generating function
//! `E[e^{−μγ}] = (1 + μβ)^{−α}` for `γ ~ G(α, β)`, applied term by term to the
//! exponential-sum kernel and, for unequal destination scales, to every
//! component of the sum-of-gammas mixture.

use std::fmt;
use std::io::{self, Write};

use crate::channel::{build_links, GammaDist, LinkSet, Protocol, Scenario};
use crate::error::{config, Result};
use crate::fit::ExpSumApprox;
use crate::special::{gamma_sum_pdf, gamma_sum_pdf_with, gamma_sum_series, has_equal_scales, ln_gamma, GammaSumSeries};

/// Reported BERs are clamped into `[BER_FLOOR, 0.5]`.
pub const BER_FLOOR: f64 = 1e-300;

/// Rate used for the equal-scale destination law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RateConvention {
    /// `β = 1/β_SD`, the rate of the exact gamma sum.
    #[default]
    Standard,
    /// `β = √2/β_SD`, an alternative rate for the equal-scale branch. Kept only to
    /// quantify the discrepancy; it does not match the channel model.
    Sqrt2Scaled,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AberOptions {
    /// Probability mass the destination series may leave out.
    pub tolerance: f64,
    pub max_terms: usize,
    pub rate: RateConvention,
    /// Expand the destination series even when the scales coincide.
    pub force_series: bool,
}

impl Default for AberOptions {
    fn default() -> Self {
        Self { tolerance: 1e-15, max_terms: crate::special::DEFAULT_MAX_TERMS, rate: RateConvention::Standard, force_series: false }
    }
}

/// Density of `γ_SD + γ_RD`.
pub fn destination_pdf(links: &LinkSet, tolerance: f64) -> Result<GammaSumSeries> {
    gamma_sum_pdf(&[links.sd, links.rd], tolerance)
}

fn destination_with(links: &LinkSet, opts: &AberOptions) -> Result<GammaSumSeries> {
    let parts = [links.sd, links.rd];
    if opts.force_series {
        gamma_sum_series(&parts, opts.tolerance, opts.max_terms)
    } else {
        gamma_sum_pdf_with(&parts, opts.tolerance, opts.max_terms)
    }
}

/// `E[Σ δ_r e^{−μ_r γ}]` for `γ ~ dist`: `Σ δ_r (1 + μ_r β)^{−α}`.
pub fn aber_single_link(dist: &GammaDist, approx: &ExpSumApprox) -> f64 {
    mgf_sum(approx, dist.shape(), dist.scale())
}

#[inline]
fn mgf_sum(approx: &ExpSumApprox, shape: f64, scale: f64) -> f64 {
    approx.terms().iter().map(|t| t.delta * (-shape * (t.mu * scale).ln_1p()).exp()).sum()
}

/// Unclamped EF average over a destination mixture.
pub(crate) fn mixture_aber(series: &GammaSumSeries, approx: &ExpSumApprox, rate: RateConvention) -> f64 {
    let scale = match rate {
        RateConvention::Sqrt2Scaled if series.is_single_gamma() => series.b0() / std::f64::consts::SQRT_2,
        _ => series.b0(),
    };
    series.components().map(|(w, shape)| w * mgf_sum(approx, shape, scale)).sum()
}

fn clamp_ber(p: f64) -> f64 {
    if p.is_nan() {
        p
    } else {
        p.clamp(BER_FLOOR, 0.5)
    }
}

fn check_pairing(sc: &Scenario, approx: &ExpSumApprox) -> Result<()> {
    if approx.noise_a() != sc.noise.shape() || approx.spreading_m() != sc.spreading_half_m {
        return Err(config(format!(
            "approximation is for a={}, M={} but the scenario has a={}, M={}",
            approx.noise_a(),
            approx.spreading_m(),
            sc.noise.shape(),
            sc.spreading_half_m
        )));
    }
    Ok(())
}

fn links_at(sc: &Scenario, approx: &ExpSumApprox, mean_snr_db: f64) -> Result<LinkSet> {
    check_pairing(sc, approx)?;
    if !mean_snr_db.is_finite() {
        return Err(config(format!("mean SNR must be finite, got {mean_snr_db} dB")));
    }
    build_links(sc, crate::db_to_linear(mean_snr_db))
}

/// Per-link pieces of the DF composition, before clamping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DfParts {
    pub ber_sr: f64,
    pub ber_sd: f64,
    /// The EF average `BER_D`.
    pub ber_d: f64,
}

impl DfParts {
    pub fn compose(&self) -> f64 {
        df_compose(self.ber_sr, self.ber_sd, self.ber_d)
    }
}

/// `BER_SR·BER_SD + (1 − BER_SR)·BER_D`.
pub fn df_compose(ber_sr: f64, ber_sd: f64, ber_d: f64) -> f64 {
    ber_sr * ber_sd + (1.0 - ber_sr) * ber_d
}

pub fn aber_ef(sc: &Scenario, approx: &ExpSumApprox, mean_snr_db: f64) -> Result<f64> {
    aber_ef_with(sc, approx, mean_snr_db, &AberOptions::default())
}

pub fn aber_ef_with(sc: &Scenario, approx: &ExpSumApprox, mean_snr_db: f64, opts: &AberOptions) -> Result<f64> {
    let links = links_at(sc, approx, mean_snr_db)?;
    let dest = destination_with(&links, opts)?;
    Ok(clamp_ber(mixture_aber(&dest, approx, opts.rate)))
}

pub fn aber_df(sc: &Scenario, approx: &ExpSumApprox, mean_snr_db: f64) -> Result<f64> {
    aber_df_with(sc, approx, mean_snr_db, &AberOptions::default())
}

pub fn aber_df_with(sc: &Scenario, approx: &ExpSumApprox, mean_snr_db: f64, opts: &AberOptions) -> Result<f64> {
    Ok(clamp_ber(df_parts(sc, approx, mean_snr_db, opts)?.compose()))
}

pub fn df_parts(sc: &Scenario, approx: &ExpSumApprox, mean_snr_db: f64, opts: &AberOptions) -> Result<DfParts> {
    let links = links_at(sc, approx, mean_snr_db)?;
    let dest = destination_with(&links, opts)?;
    Ok(DfParts {
        ber_sr: aber_single_link(&links.sr, approx),
        ber_sd: aber_single_link(&links.sd, approx),
        ber_d: mixture_aber(&dest, approx, opts.rate),
    })
}

// ψ̃·Γ(m̃) for one (component, term) pair, written out with the normalized
// density constant ψ = w·β^m̃/Γ(m̃) and ψ̃ = ψ·δ/(β + μ)^m̃.
fn psi_tilde_gamma(weight: f64, shape: f64, rate: f64, delta: f64, mu: f64) -> f64 {
    let ln_psi = weight.ln() + shape * rate.ln() - ln_gamma(shape);
    let ln_abs = ln_psi + delta.abs().ln() - shape * (rate + mu).ln() + ln_gamma(shape);
    delta.signum() * ln_abs.exp()
}

/// DF average as the expanded triple sum
/// `ΣΣ Ψ₁ Γ(m̃_SR)Γ(m̃_SD) + Σ ψ̃_D Γ(m̃_D) − ΣΣ Ψ₂ Γ(m̃_D)Γ(m̃_SR)`, unclamped.
///
/// Mathematically identical to [`df_compose`] over [`DfParts`]; kept as an
/// independent evaluation route.
pub fn aber_df_expanded(links: &LinkSet, approx: &ExpSumApprox, opts: &AberOptions) -> Result<f64> {
    let dest = destination_with(links, opts)?;
    let terms = approx.terms();
    let rate_sr = 1.0 / links.sr.scale();
    let rate_sd = 1.0 / links.sd.scale();
    let rate_d = match opts.rate {
        RateConvention::Sqrt2Scaled if dest.is_single_gamma() => std::f64::consts::SQRT_2 / dest.b0(),
        _ => 1.0 / dest.b0(),
    };
    let sr: Vec<f64> =
        terms.iter().map(|t| psi_tilde_gamma(1.0, links.sr.shape(), rate_sr, t.delta, t.mu)).collect();
    let sd: Vec<f64> =
        terms.iter().map(|t| psi_tilde_gamma(1.0, links.sd.shape(), rate_sd, t.delta, t.mu)).collect();
    let d: Vec<f64> = terms
        .iter()
        .map(|t| {
            dest.components()
                .filter(|&(w, _)| w > 0.0)
                .map(|(w, shape)| psi_tilde_gamma(w, shape, rate_d, t.delta, t.mu))
                .sum()
        })
        .collect();
    let mut first = 0.0;
    for a in &sr {
        for b in &sd {
            first += a * b;
        }
    }
    let middle: f64 = d.iter().sum();
    let mut last = 0.0;
    for a in &d {
        for b in &sr {
            last += a * b;
        }
    }
    Ok(first + middle - last)
}

/// Origin of a curve's values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    AnalyticEqualScale,
    AnalyticSeries,
    MonteCarlo,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::AnalyticEqualScale => "analytic-equal-scale",
            Provenance::AnalyticSeries => "analytic-series",
            Provenance::MonteCarlo => "monte-carlo",
        })
    }
}

/// BER against mean SNR. A `None` entry marks a point whose evaluation failed.
#[derive(Debug, Clone, PartialEq)]
pub struct AberCurve {
    pub snr_db: Vec<f64>,
    pub ber: Vec<Option<f64>>,
    /// Present for Monte Carlo curves.
    pub std_err: Option<Vec<f64>>,
    pub protocol: Protocol,
    pub provenance: Provenance,
}

impl AberCurve {
    pub fn len(&self) -> usize {
        self.snr_db.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snr_db.is_empty()
    }

    pub fn csv_header(&self) -> &'static str {
        if self.std_err.is_some() {
            "snr_db,ber,protocol,provenance,std_err"
        } else {
            "snr_db,ber,protocol,provenance"
        }
    }

    /// Data rows without the header; failed points leave the `ber` field empty.
    pub fn write_csv_rows<W: Write>(&self, mut w: W) -> io::Result<()> {
        for (i, (x, y)) in self.snr_db.iter().zip(&self.ber).enumerate() {
            write!(w, "{},{},{},{}", fmt_float(*x), y.map(fmt_float).unwrap_or_default(), self.protocol, self.provenance)?;
            if let Some(se) = &self.std_err {
                write!(w, ",{}", fmt_float(se[i]))?;
            }
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", self.csv_header())?;
        self.write_csv_rows(w)
    }
}

/// Scientific notation with 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Evaluates the scenario's protocol at every grid point.
pub fn curve(sc: &Scenario, approx: &ExpSumApprox) -> Result<AberCurve> {
    curve_with(sc, approx, &AberOptions::default())
}

pub fn curve_with(sc: &Scenario, approx: &ExpSumApprox, opts: &AberOptions) -> Result<AberCurve> {
    sc.validate()?;
    check_pairing(sc, approx)?;
    // The scale ratio, and so the branch, does not depend on the mean SNR.
    let probe = build_links(sc, 1.0)?;
    let single = !opts.force_series && has_equal_scales(&[probe.sd, probe.rd]);
    let provenance = if single { Provenance::AnalyticEqualScale } else { Provenance::AnalyticSeries };
    let ber = sc
        .snr_grid_db
        .iter()
        .map(|&db| {
            match sc.protocol {
                Protocol::ErrorFree => aber_ef_with(sc, approx, db, opts),
                Protocol::DecodeForward => aber_df_with(sc, approx, db, opts),
            }
            .ok()
        })
        .collect();
    Ok(AberCurve { snr_db: sc.snr_grid_db.clone(), ber, std_err: None, protocol: sc.protocol, provenance })
}
