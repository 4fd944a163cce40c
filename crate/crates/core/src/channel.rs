//! Link SNR distributions, fading envelopes and generalized Gaussian noise.
//!
//! Every link SNR is gamma distributed. With `M_R` relay antennas, `M_D`
//! destination antennas, `n` users, `L` paths, fading severity `m` and mean
//! SNR `γ̄`, the three links are
//!
//! ```text
//! γ_SR ~ G(M_R·m·L,      γ̄ / (2·M_R·d_SR²·m·n·L))
//! γ_SD ~ G(M_D·m·L,      γ̄ / (2·M_D·d_SD²·m·n·L))
//! γ_RD ~ G(M_R·M_D·m·L,  γ̄ / (2·M_R·M_D·d_RD²·m·n·L))
//! ```
//!
//! where `G(shape, scale)` has density `x^{shape−1} e^{−x/scale} / (scale^shape Γ(shape))`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngExt};
use rand_distr::{Distribution, Gamma, Normal};
use statrs::function::gamma::ln_gamma;

use crate::error::{config, domain, Result};

/// Gamma law `G(shape, scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaDist {
    shape: f64,
    scale: f64,
}

impl GammaDist {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite()) {
            return Err(domain(format!("gamma shape must be positive, got {shape}")));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(domain(format!("gamma scale must be positive, got {scale}")));
        }
        Ok(Self { shape, scale })
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn mean(&self) -> f64 {
        self.shape * self.scale
    }

    pub fn variance(&self) -> f64 {
        self.shape * self.scale * self.scale
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return f64::NEG_INFINITY;
        }
        (self.shape - 1.0) * x.ln() - x / self.scale - self.shape * self.scale.ln() - ln_gamma(self.shape)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x == 0.0 {
            return match self.shape.partial_cmp(&1.0) {
                Some(std::cmp::Ordering::Greater) => 0.0,
                Some(std::cmp::Ordering::Equal) => 1.0 / self.scale,
                _ => f64::INFINITY,
            };
        }
        self.ln_pdf(x).exp()
    }

    /// Prepared sampler for repeated draws.
    pub fn sampler(&self) -> GammaSampler {
        GammaSampler(Gamma::new(self.shape, self.scale).expect("validated parameters"))
    }
}

/// Marsaglia-Tsang squeeze sampler (with the shape-boost for shape < 1).
#[derive(Debug, Clone, Copy)]
pub struct GammaSampler(Gamma<f64>);

impl Distribution<f64> for GammaSampler {
    #[inline]
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.0.sample(rng)
    }
}

pub fn sample_gamma<R: Rng + ?Sized>(dist: &GammaDist, rng: &mut R) -> f64 {
    dist.sampler().sample(rng)
}

/// Nakagami-m envelope: the square root of a `G(m, ω/m)` draw.
pub fn sample_nakagami_envelope<R: Rng + ?Sized>(m: f64, omega: f64, rng: &mut R) -> Result<f64> {
    if !(m >= 0.5 && m.is_finite()) {
        return Err(domain(format!("Nakagami m must be at least 0.5, got {m}")));
    }
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(domain(format!("Nakagami omega must be positive, got {omega}")));
    }
    Ok(sample_gamma(&GammaDist::new(m, omega / m)?, rng).sqrt())
}

/// Additive white generalized Gaussian noise with exponent `a`.
///
/// The unit-variance density is `a·Λ₀ / (2Γ(1/a)) · exp(−(Λ₀|u|)^a)` with
/// `Λ₀ = sqrt(Γ(3/a)/Γ(1/a))`. Special cases: `a = 1` Laplacian,
/// `a = 2` Gaussian; `a → 0` tends to impulsive noise and `a → ∞` to uniform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    shape_a: f64,
    lambda0: f64,
}

impl NoiseModel {
    pub fn new(shape_a: f64) -> Result<Self> {
        if !(shape_a > 0.0 && shape_a.is_finite()) {
            return Err(domain(format!("noise exponent must be positive and finite, got {shape_a}")));
        }
        let lambda0 = (0.5 * (ln_gamma(3.0 / shape_a) - ln_gamma(1.0 / shape_a))).exp();
        Ok(Self { shape_a, lambda0 })
    }

    pub fn gaussian() -> Self {
        Self::new(2.0).expect("a = 2 is valid")
    }

    pub fn laplacian() -> Self {
        Self::new(1.0).expect("a = 1 is valid")
    }

    pub fn shape(&self) -> f64 {
        self.shape_a
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    /// Unit-variance density at `u`.
    pub fn density(&self, u: f64) -> f64 {
        let a = self.shape_a;
        let ln_norm = a.ln() + self.lambda0.ln() - std::f64::consts::LN_2 - ln_gamma(1.0 / a);
        (ln_norm - (self.lambda0 * u.abs()).powf(a)).exp()
    }
}

/// Prepared generalized Gaussian sampler with standard deviation `sigma`.
#[derive(Debug, Clone, Copy)]
pub struct GgnSampler {
    kind: GgnKind,
}

#[derive(Debug, Clone, Copy)]
enum GgnKind {
    Gaussian(Normal<f64>),
    // |X| = sigma · G^{1/a} / Λ₀ with G ~ G(1/a, 1), random sign.
    PowerGamma { gamma: Gamma<f64>, inv_a: f64, scale: f64 },
}

impl GgnSampler {
    pub fn new(noise: &NoiseModel, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(domain(format!("noise sigma must be positive, got {sigma}")));
        }
        let kind = if noise.shape_a == 2.0 {
            GgnKind::Gaussian(Normal::new(0.0, sigma).expect("sigma validated"))
        } else {
            GgnKind::PowerGamma {
                gamma: Gamma::new(1.0 / noise.shape_a, 1.0).expect("shape validated"),
                inv_a: 1.0 / noise.shape_a,
                scale: sigma / noise.lambda0,
            }
        };
        Ok(Self { kind })
    }
}

impl Distribution<f64> for GgnSampler {
    #[inline]
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.kind {
            GgnKind::Gaussian(normal) => normal.sample(rng),
            GgnKind::PowerGamma { gamma, inv_a, scale } => {
                let g: f64 = gamma.sample(rng);
                let magnitude = scale * g.powf(inv_a);
                if rng.random::<bool>() {
                    magnitude
                } else {
                    -magnitude
                }
            }
        }
    }
}

/// Zero-mean generalized Gaussian draw with standard deviation `sigma > 0`.
///
/// Panics if `sigma` is not positive; use [`GgnSampler::new`] for a checked path.
pub fn sample_ggn<R: Rng + ?Sized>(noise: &NoiseModel, sigma: f64, rng: &mut R) -> f64 {
    GgnSampler::new(noise, sigma)
        .expect("sigma must be positive")
        .sample(rng)
}

/// Relay protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Protocol {
    /// Error-free relay: the destination combines the S-D and R-D links.
    ErrorFree,
    /// Decode-and-forward relay.
    DecodeForward,
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::ErrorFree => "EF",
            Protocol::DecodeForward => "DF",
        })
    }
}

impl FromStr for Protocol {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "EF" | "ef" => Ok(Protocol::ErrorFree),
            "DF" | "df" => Ok(Protocol::DecodeForward),
            other => Err(config(format!("unknown protocol {other:?} (expected EF or DF)"))),
        }
    }
}

/// Full system description shared by the analytic and simulated curves.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Half spreading factor `M` (the frame has `2M` chips).
    pub spreading_half_m: u32,
    pub relay_antennas: u32,
    pub dest_antennas: u32,
    pub users: u32,
    pub paths: u32,
    /// Nakagami severity; 1 is Rayleigh.
    pub fading_m: f64,
    pub d_sr: f64,
    pub d_sd: f64,
    pub d_rd: f64,
    pub noise: NoiseModel,
    pub protocol: Protocol,
    /// Mean SNR points in dB, strictly ascending.
    pub snr_grid_db: Vec<f64>,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            spreading_half_m: 32,
            relay_antennas: 1,
            dest_antennas: 1,
            users: 1,
            paths: 1,
            fading_m: 1.0,
            d_sr: 1.0,
            d_sd: 1.0,
            d_rd: 1.0,
            noise: NoiseModel::gaussian(),
            protocol: Protocol::ErrorFree,
            snr_grid_db: Vec::new(),
        }
    }
}

impl Scenario {
    pub fn builder() -> ScenarioBuilder {
        ScenarioBuilder(Self::default())
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("spreading_half_M", self.spreading_half_m),
            ("relay_antennas", self.relay_antennas),
            ("dest_antennas", self.dest_antennas),
            ("users_n", self.users),
            ("paths_L", self.paths),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(config(format!("{name} must be at least 1")));
            }
        }
        if !(self.fading_m >= 0.5 && self.fading_m.is_finite()) {
            return Err(config(format!("fading_m must be at least 0.5, got {}", self.fading_m)));
        }
        for (name, d) in [("d_sr", self.d_sr), ("d_sd", self.d_sd), ("d_rd", self.d_rd)] {
            if !(d > 0.0 && d.is_finite()) {
                return Err(config(format!("{name} must be positive, got {d}")));
            }
        }
        if self.snr_grid_db.iter().any(|x| !x.is_finite()) {
            return Err(config("snr_grid_db contains a non-finite value"));
        }
        if self.snr_grid_db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(config("snr_grid_db must be strictly ascending"));
        }
        Ok(())
    }
}

pub struct ScenarioBuilder(Scenario);

impl ScenarioBuilder {
    pub fn spreading_half_m(mut self, m: u32) -> Self {
        self.0.spreading_half_m = m;
        self
    }

    pub fn relay_antennas(mut self, n: u32) -> Self {
        self.0.relay_antennas = n;
        self
    }

    pub fn dest_antennas(mut self, n: u32) -> Self {
        self.0.dest_antennas = n;
        self
    }

    pub fn users(mut self, n: u32) -> Self {
        self.0.users = n;
        self
    }

    pub fn paths(mut self, n: u32) -> Self {
        self.0.paths = n;
        self
    }

    pub fn fading_m(mut self, m: f64) -> Self {
        self.0.fading_m = m;
        self
    }

    pub fn distances(mut self, d_sr: f64, d_sd: f64, d_rd: f64) -> Self {
        self.0.d_sr = d_sr;
        self.0.d_sd = d_sd;
        self.0.d_rd = d_rd;
        self
    }

    pub fn noise(mut self, noise: NoiseModel) -> Self {
        self.0.noise = noise;
        self
    }

    pub fn protocol(mut self, protocol: Protocol) -> Self {
        self.0.protocol = protocol;
        self
    }

    pub fn snr_grid_db(mut self, grid: Vec<f64>) -> Self {
        self.0.snr_grid_db = grid;
        self
    }

    pub fn build(self) -> Result<Scenario> {
        self.0.validate()?;
        Ok(self.0)
    }
}

/// The three per-link SNR distributions at one mean SNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSet {
    pub sr: GammaDist,
    pub sd: GammaDist,
    pub rd: GammaDist,
}

/// Gamma link laws for mean SNR `mean_snr_linear` (not dB).
pub fn build_links(sc: &Scenario, mean_snr_linear: f64) -> Result<LinkSet> {
    sc.validate()?;
    if !(mean_snr_linear > 0.0 && mean_snr_linear.is_finite()) {
        return Err(config(format!("mean SNR must be positive, got {mean_snr_linear}")));
    }
    let m = sc.fading_m;
    let mr = sc.relay_antennas as f64;
    let md = sc.dest_antennas as f64;
    let n = sc.users as f64;
    let l = sc.paths as f64;
    let g = mean_snr_linear;
    Ok(LinkSet {
        sr: GammaDist::new(mr * m * l, g / (2.0 * mr * sc.d_sr.powi(2) * m * n * l))?,
        sd: GammaDist::new(md * m * l, g / (2.0 * md * sc.d_sd.powi(2) * m * n * l))?,
        rd: GammaDist::new(mr * md * m * l, g / (2.0 * mr * md * sc.d_rd.powi(2) * m * n * l))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_user_scenario() -> Scenario {
        Scenario::builder().dest_antennas(3).users(2).paths(2).build().unwrap()
    }

    #[test]
    fn source_destination_link_of_two_user_scenario() {
        let links = build_links(&two_user_scenario(), 10.0).unwrap();
        assert_eq!(links.sd.shape(), 6.0);
        assert!((links.sd.scale() - 5.0 / 12.0).abs() < 1e-15);
        // M_R = 1: R-D has the same law as S-D.
        assert_eq!(links.rd, links.sd);
        assert_eq!(links.sr.shape(), 2.0);
        assert!((links.sr.scale() - 10.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn all_unit_parameters() {
        let sc = Scenario::builder().build().unwrap();
        let links = build_links(&sc, 1.0).unwrap();
        for d in [links.sr, links.sd, links.rd] {
            assert_eq!((d.shape(), d.scale()), (1.0, 0.5));
        }
    }

    #[test]
    fn scales_linear_in_mean_snr_and_inverse_square_in_distance() {
        let sc = Scenario::builder()
            .relay_antennas(2)
            .dest_antennas(3)
            .users(2)
            .paths(3)
            .fading_m(2.5)
            .distances(0.7, 1.3, 2.0)
            .build()
            .unwrap();
        let a = build_links(&sc, 7.0).unwrap();
        let b = build_links(&sc, 14.0).unwrap();
        for (x, y) in [(a.sr, b.sr), (a.sd, b.sd), (a.rd, b.rd)] {
            assert_eq!(x.shape(), y.shape());
            assert!((y.scale() / x.scale() - 2.0).abs() < 1e-14);
        }
        let mut far = sc.clone();
        far.d_sd *= 2.0;
        let c = build_links(&far, 7.0).unwrap();
        assert_eq!(c.sd.shape(), a.sd.shape());
        assert!((a.sd.scale() / c.sd.scale() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn scenario_validation() {
        assert!(Scenario::builder().users(0).build().is_err());
        assert!(Scenario::builder().fading_m(0.4).build().is_err());
        assert!(Scenario::builder().distances(1.0, 0.0, 1.0).build().is_err());
        assert!(Scenario::builder().snr_grid_db(vec![0.0, 0.0]).build().is_err());
        assert!(Scenario::builder().snr_grid_db(vec![3.0, 1.0]).build().is_err());
        assert!(Scenario::builder().snr_grid_db(vec![]).build().is_ok());
        assert!(build_links(&two_user_scenario(), 0.0).is_err());
    }

    #[test]
    fn gamma_dist_rejects_bad_parameters() {
        assert!(GammaDist::new(1.0, 0.0).is_err());
        assert!(GammaDist::new(0.0, 1.0).is_err());
        assert!(GammaDist::new(-1.0, 1.0).is_err());
        assert!(GammaDist::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn gamma_pdf_points() {
        let g = GammaDist::new(2.0, 1.0).unwrap();
        assert!((g.pdf(1.0) - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(g.pdf(0.0), 0.0);
        assert_eq!(GammaDist::new(1.0, 0.5).unwrap().pdf(0.0), 2.0);
    }

    #[test]
    fn nakagami_rejects_small_m() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_nakagami_envelope(0.4, 1.0, &mut rng).is_err());
        assert!(sample_nakagami_envelope(1.0, 0.0, &mut rng).is_err());
        assert!(sample_nakagami_envelope(0.5, 1.0, &mut rng).unwrap() >= 0.0);
    }

    #[test]
    fn noise_lambda0_definition() {
        for a in [0.5, 1.0, 1.5, 2.0, 2.5, 20.0] {
            let nm = NoiseModel::new(a).unwrap();
            let direct = (statrs::function::gamma::gamma(3.0 / a) / statrs::function::gamma::gamma(1.0 / a)).sqrt();
            assert!((nm.lambda0() - direct).abs() < 1e-12 * direct, "a={a}");
        }
        assert!((NoiseModel::gaussian().lambda0() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((NoiseModel::laplacian().lambda0() - std::f64::consts::SQRT_2).abs() < 1e-14);
        assert!(NoiseModel::new(0.0).is_err());
        assert!(NoiseModel::new(f64::INFINITY).is_err());
    }

    #[test]
    fn protocol_text_round_trip() {
        for p in [Protocol::ErrorFree, Protocol::DecodeForward] {
            assert_eq!(p.to_string().parse::<Protocol>().unwrap(), p);
        }
        assert!("AF".parse::<Protocol>().is_err());
    }
}
