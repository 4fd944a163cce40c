use rand_distr::Distribution;
use rayon::prelude::*;

use super::{chunk_rng, chunks, McEstimate, MeanAccumulator};
use crate::analytic::{AberCurve, Provenance};
use crate::channel::{build_links, GammaDist, Protocol, Scenario};
use crate::error::{config, Result};
use crate::fit::ExpSumApprox;
use crate::special::DcskKernel;

const TAG: u64 = 0x5359_5354; // "SYST"

/// Conditional BER averaged by the system simulator.
#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    /// `Q_a(√(γ²/(2γ+M)))` for the scenario's `a` and `M`.
    Exact,
    /// A fitted exponential sum, evaluated without clamping.
    Approx(ExpSumApprox),
}

enum Prepared<'a> {
    Exact(DcskKernel),
    Approx(&'a ExpSumApprox),
}

impl Prepared<'_> {
    #[inline]
    fn eval(&self, gamma: f64) -> f64 {
        match self {
            Prepared::Exact(k) => k.eval(gamma),
            Prepared::Approx(a) => a.eval(gamma),
        }
    }
}

/// EF and DF estimates from the same channel draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemEstimate {
    pub ef: McEstimate,
    pub df: McEstimate,
}

impl SystemEstimate {
    pub fn get(&self, protocol: Protocol) -> &McEstimate {
        match protocol {
            Protocol::ErrorFree => &self.ef,
            Protocol::DecodeForward => &self.df,
        }
    }
}

/// Semi-analytic estimate at one mean SNR.
///
/// Per trial it draws `(γ_SR, γ_SD, γ_RD)` and averages `k(γ_SD + γ_RD)` for EF
/// and `k(γ_SR)·k(γ_SD) + (1 − k(γ_SR))·k(γ_SD + γ_RD)` for DF.
pub fn sim_system_ber(sc: &Scenario, mean_snr_db: f64, trials: u64, seed: u64, kernel: &Kernel) -> Result<SystemEstimate> {
    let mut out = sim_system_grid(sc, &[mean_snr_db], trials, seed, std::slice::from_ref(kernel))?;
    Ok(out.remove(0).remove(0))
}

/// Estimates for every `(grid point, kernel)` pair, indexed `[point][kernel]`.
///
/// Link SNRs are drawn once per trial at unit scale and rescaled for each grid
/// point, so all points and kernels share common random numbers. A one-point
/// grid reproduces [`sim_system_ber`] exactly.
pub fn sim_system_grid(
    sc: &Scenario,
    grid_db: &[f64],
    trials: u64,
    seed: u64,
    kernels: &[Kernel],
) -> Result<Vec<Vec<SystemEstimate>>> {
    sc.validate()?;
    if trials == 0 {
        return Err(config("trials must be at least 1"));
    }
    let prepared = kernels
        .iter()
        .map(|k| match k {
            Kernel::Exact => Ok(Prepared::Exact(DcskKernel::new(sc.spreading_half_m, sc.noise.shape())?)),
            Kernel::Approx(a) => {
                if a.noise_a() != sc.noise.shape() || a.spreading_m() != sc.spreading_half_m {
                    return Err(config("approximation does not match the scenario's a and M"));
                }
                Ok(Prepared::Approx(a))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let mut scales = Vec::with_capacity(grid_db.len());
    for &db in grid_db {
        if !db.is_finite() {
            return Err(config(format!("mean SNR must be finite, got {db} dB")));
        }
        let l = build_links(sc, crate::db_to_linear(db))?;
        scales.push([l.sr.scale(), l.sd.scale(), l.rd.scale()]);
    }
    let unit = build_links(sc, 1.0)?;
    let samplers = [unit.sr, unit.sd, unit.rd].map(|g| GammaDist::new(g.shape(), 1.0).expect("valid shape").sampler());

    let (np, nk) = (grid_db.len(), prepared.len());
    let slot = |p: usize, k: usize| 2 * (p * nk + k);
    let partials: Vec<Vec<MeanAccumulator>> = chunks(trials)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(chunk, n)| {
            let mut rng = chunk_rng(seed, TAG, chunk);
            let mut acc = vec![MeanAccumulator::new(); 2 * np * nk];
            for _ in 0..n {
                let u = [samplers[0].sample(&mut rng), samplers[1].sample(&mut rng), samplers[2].sample(&mut rng)];
                for (p, s) in scales.iter().enumerate() {
                    let (g_sr, g_sd, g_rd) = (u[0] * s[0], u[1] * s[1], u[2] * s[2]);
                    for (k, kern) in prepared.iter().enumerate() {
                        let k_sr = kern.eval(g_sr);
                        let k_sd = kern.eval(g_sd);
                        let k_d = kern.eval(g_sd + g_rd);
                        acc[slot(p, k)].push(k_d);
                        acc[slot(p, k) + 1].push(k_sr * k_sd + (1.0 - k_sr) * k_d);
                    }
                }
            }
            acc
        })
        .collect();
    let mut total = vec![MeanAccumulator::new(); 2 * np * nk];
    for part in &partials {
        for (t, a) in total.iter_mut().zip(part) {
            *t = t.merge(a);
        }
    }
    Ok((0..np)
        .map(|p| {
            (0..nk)
                .map(|k| SystemEstimate {
                    ef: McEstimate::from_accumulator(&total[slot(p, k)], seed),
                    df: McEstimate::from_accumulator(&total[slot(p, k) + 1], seed),
                })
                .collect()
        })
        .collect())
}

/// Monte Carlo curve over the scenario grid for its protocol.
pub fn sweep(sc: &Scenario, trials_per_point: u64, seed: u64, kernel: &Kernel) -> Result<AberCurve> {
    let est = sim_system_grid(sc, &sc.snr_grid_db, trials_per_point, seed, std::slice::from_ref(kernel))?;
    let picked: Vec<McEstimate> = est.iter().map(|e| *e[0].get(sc.protocol)).collect();
    Ok(AberCurve {
        snr_db: sc.snr_grid_db.clone(),
        ber: picked.iter().map(|e| Some(e.ber_hat)).collect(),
        std_err: Some(picked.iter().map(|e| e.std_err).collect()),
        protocol: sc.protocol,
        provenance: Provenance::MonteCarlo,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_user_scenario() -> Scenario {
        Scenario::builder().dest_antennas(3).users(2).paths(2).build().unwrap()
    }

    #[test]
    fn low_snr_saturates() {
        let e = sim_system_ber(&two_user_scenario(), -60.0, 20_000, 3, &Kernel::Exact).unwrap();
        assert!((e.ef.ber_hat - 0.5).abs() < 1e-3);
        assert!((e.df.ber_hat - 0.5).abs() < 1e-3);
    }

    #[test]
    fn ef_never_exceeds_df_with_common_draws() {
        let grid = [0.0, 6.0, 12.0, 18.0];
        let est = sim_system_grid(&two_user_scenario(), &grid, 50_000, 11, &[Kernel::Exact]).unwrap();
        for row in &est {
            assert!(row[0].ef.ber_hat <= row[0].df.ber_hat);
        }
    }

    #[test]
    fn one_point_grid_matches_single_call() {
        let a = sim_system_ber(&two_user_scenario(), 9.0, 70_000, 5, &Kernel::Exact).unwrap();
        let b = sim_system_grid(&two_user_scenario(), &[3.0, 9.0], 70_000, 5, &[Kernel::Exact]).unwrap();
        assert_eq!(a, b[1][0]);
    }

    #[test]
    fn sweep_rows_follow_grid() {
        let mut sc = two_user_scenario();
        sc.snr_grid_db = vec![0.0, 10.0, 20.0];
        sc.protocol = Protocol::DecodeForward;
        let c = sweep(&sc, 10_000, 1, &Kernel::Exact).unwrap();
        assert_eq!(c.snr_db, sc.snr_grid_db);
        assert_eq!(c.std_err.as_ref().unwrap().len(), 3);
        assert_eq!(c.provenance, Provenance::MonteCarlo);
    }

    #[test]
    fn rejects_mismatched_approx() {
        let a1 = crate::fit::load_table2().remove(0);
        assert!(sim_system_ber(&two_user_scenario(), 10.0, 10, 1, &Kernel::Approx(a1)).is_err());
    }
}
