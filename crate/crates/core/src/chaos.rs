//! DCSK transmit/receive chain.
//!
//! A DCSK symbol occupies `2M` chips: `M` chips of a chaotic reference
//! followed by the same `M` chips multiplied by the data bit. The receiver
//! correlates the two halves and decides on the sign of the sum.
//!
//! References come from the map `x ← 1 − 2x²` on `[−1, 1]`, power-normalized
//! so each reference has unit mean square.

use std::sync::OnceLock;

use crate::error::{config, domain, Error, Result};

/// One step of the chaotic map `x ← 1 − 2x²`.
#[inline]
pub fn chebyshev_map(x: f64) -> f64 {
    1.0 - 2.0 * x * x
}

/// Antipodal data bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bit {
    Plus,
    Minus,
}

impl Bit {
    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Bit::Plus => 1.0,
            Bit::Minus => -1.0,
        }
    }

    /// Threshold decision at zero; zero itself decides `Plus`.
    #[inline]
    pub fn decide(statistic: f64) -> Bit {
        if statistic >= 0.0 {
            Bit::Plus
        } else {
            Bit::Minus
        }
    }
}

// Backward orbits of the two fixed points (0.5 and −1), a few levels deep.
const DEGENERATE_DEPTH: usize = 6;
const DEGENERATE_TOL: f64 = 1e-12;

fn degenerate_points() -> &'static [f64] {
    static POINTS: OnceLock<Vec<f64>> = OnceLock::new();
    POINTS.get_or_init(|| {
        let mut level: Vec<f64> = vec![0.5, -1.0];
        let mut all = level.clone();
        for _ in 0..DEGENERATE_DEPTH {
            let mut next = Vec::with_capacity(level.len() * 2);
            for &t in &level {
                // Pre-images of t under 1 − 2x²: x = ±sqrt((1 − t)/2).
                let r = ((1.0 - t) / 2.0).sqrt();
                for x in [r, -r] {
                    if !all.iter().any(|&p: &f64| (p - x).abs() <= DEGENERATE_TOL) {
                        next.push(x);
                        all.push(x);
                    }
                }
            }
            level = next;
        }
        all
    })
}

/// True when `x` is a fixed point of the map or lands on one within a few steps.
pub fn is_degenerate_state(x: f64) -> bool {
    degenerate_points()
        .iter()
        .any(|&p| (x - p).abs() <= DEGENERATE_TOL)
}

/// Iterates the map from `state`, writing raw iterates into `out`.
/// Returns the last iterate.
pub(crate) fn fill_orbit(state: f64, out: &mut [f64]) -> f64 {
    let mut x = state;
    for slot in out.iter_mut() {
        x = chebyshev_map(x);
        *slot = x;
    }
    x
}

/// Scales `samples` to unit mean square. Returns `false` for a zero-power block.
pub(crate) fn normalize_power(samples: &mut [f64]) -> bool {
    let power = samples.iter().map(|x| x * x).sum::<f64>() / samples.len() as f64;
    if !(power.is_finite() && power > 0.0) {
        return false;
    }
    let gain = power.sqrt().recip();
    samples.iter_mut().for_each(|x| *x *= gain);
    true
}

/// A power-normalized chaotic reference of length `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChaoticSequence {
    samples: Vec<f64>,
    generator_state: f64,
}

impl ChaoticSequence {
    fn from_state(state: f64, length: usize) -> Result<Self> {
        if length == 0 {
            return Err(config("chaotic sequence length must be positive"));
        }
        let mut samples = vec![0.0; length];
        let last = fill_orbit(state, &mut samples);
        if !normalize_power(&mut samples) {
            return Err(Error::DegenerateSeed(state));
        }
        Ok(Self {
            samples,
            generator_state: last,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Last raw map iterate; feeding it back continues the orbit.
    pub fn generator_state(&self) -> f64 {
        self.generator_state
    }

    pub fn mean_power(&self) -> f64 {
        self.samples.iter().map(|x| x * x).sum::<f64>() / self.samples.len() as f64
    }

    /// Next reference of `length` samples along the same orbit.
    pub fn continue_orbit(&self, length: usize) -> Result<Self> {
        if is_degenerate_state(self.generator_state) {
            return Err(Error::DegenerateSeed(self.generator_state));
        }
        Self::from_state(self.generator_state, length)
    }
}

/// Generates a power-normalized reference of `length` samples.
///
/// The emitted samples are the iterates `f(s), f(f(s)), …` of the seed `s`;
/// the seed itself is generator state, not a sample.
///
/// ```
/// use chaoslink::chaos::generate_chaotic;
///
/// let a = generate_chaotic(0.7, 32).unwrap();
/// let b = generate_chaotic(0.7, 32).unwrap();
/// assert_eq!(a, b);
/// assert!((a.mean_power() - 1.0).abs() < 1e-12);
/// assert!(generate_chaotic(0.5, 8).is_err());
/// ```
pub fn generate_chaotic(seed_state: f64, length: usize) -> Result<ChaoticSequence> {
    if !(seed_state > 0.0 && seed_state < 1.0) {
        return Err(domain(format!("chaotic seed {seed_state} outside (0, 1)")));
    }
    if is_degenerate_state(seed_state) {
        return Err(Error::DegenerateSeed(seed_state));
    }
    ChaoticSequence::from_state(seed_state, length)
}

/// Successive references cut from one continuing orbit.
#[derive(Debug, Clone)]
pub struct ChaoticStream {
    state: f64,
    half_len: usize,
}

impl ChaoticStream {
    pub fn new(seed_state: f64, half_len: usize) -> Result<Self> {
        // Validates the seed and the length.
        generate_chaotic(seed_state, half_len.max(1))?;
        if half_len == 0 {
            return Err(config("reference length must be positive"));
        }
        Ok(Self {
            state: seed_state,
            half_len,
        })
    }

    pub fn next_reference(&mut self) -> Result<ChaoticSequence> {
        if is_degenerate_state(self.state) {
            return Err(Error::DegenerateSeed(self.state));
        }
        let seq = ChaoticSequence::from_state(self.state, self.half_len)?;
        self.state = seq.generator_state;
        Ok(seq)
    }
}

/// One transmitted DCSK symbol: reference half then data half.
#[derive(Debug, Clone, PartialEq)]
pub struct ChaoticFrame {
    reference: ChaoticSequence,
    data_bit: Bit,
    chips: Vec<f64>,
}

impl ChaoticFrame {
    pub fn reference(&self) -> &ChaoticSequence {
        &self.reference
    }

    pub fn data_bit(&self) -> Bit {
        self.data_bit
    }

    pub fn chips(&self) -> &[f64] {
        &self.chips
    }

    /// Channel output `φ·s_k + N` with noise drawn per chip from `noise`.
    pub fn through_channel<N: FnMut() -> f64>(&self, gain: f64, mut noise: N) -> ReceivedFrame {
        ReceivedFrame {
            chips: self.chips.iter().map(|&s| gain * s + noise()).collect(),
        }
    }
}

pub fn modulate(bit: Bit, reference: &ChaoticSequence) -> ChaoticFrame {
    let sign = bit.sign();
    let mut chips = Vec::with_capacity(2 * reference.len());
    chips.extend_from_slice(reference.samples());
    chips.extend(reference.samples().iter().map(|&x| sign * x));
    ChaoticFrame {
        reference: reference.clone(),
        data_bit: bit,
        chips,
    }
}

/// Correlator input: `2M` chips after fading and noise.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedFrame {
    chips: Vec<f64>,
}

impl ReceivedFrame {
    pub fn new(chips: Vec<f64>) -> Result<Self> {
        if chips.len() < 2 || chips.len() % 2 != 0 {
            return Err(config(format!(
                "received frame needs an even, nonzero chip count (got {})",
                chips.len()
            )));
        }
        Ok(Self { chips })
    }

    pub fn chips(&self) -> &[f64] {
        &self.chips
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub decision: Bit,
    pub statistic: f64,
}

/// Sum over `k < M` of `chips[k]·chips[k+M]`.
#[inline]
pub fn correlate(chips: &[f64]) -> f64 {
    let (reference, data) = chips.split_at(chips.len() / 2);
    reference.iter().zip(data).map(|(r, d)| r * d).sum()
}

pub fn correlate_detect(rx: &ReceivedFrame) -> Detection {
    let statistic = correlate(&rx.chips);
    Detection {
        decision: Bit::decide(statistic),
        statistic,
    }
}
