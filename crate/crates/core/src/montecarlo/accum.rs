/// Running mean and variance with compensated sums.
///
/// Samples are shifted by the first value seen so the sum of squares stays
/// well conditioned; partial accumulators merge exactly (Chan et al.).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MeanAccumulator {
    n: u64,
    shift: f64,
    sum: Neumaier,
    sum_sq: Neumaier,
    // Merged state, once accumulators have been combined.
    merged: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    #[inline]
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl MeanAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        debug_assert!(self.merged.is_none(), "push after merge");
        if self.n == 0 {
            self.shift = x;
        }
        let d = x - self.shift;
        self.sum.add(d);
        self.sum_sq.add(d * d);
        self.n += 1;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    // (mean, sum of squared deviations)
    fn moments(&self) -> (f64, f64) {
        if let Some(m) = self.merged {
            return m;
        }
        if self.n == 0 {
            return (0.0, 0.0);
        }
        let n = self.n as f64;
        let s = self.sum.value();
        ((self.shift + s / n), (self.sum_sq.value() - s * s / n).max(0.0))
    }

    pub fn mean(&self) -> f64 {
        self.moments().0
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        self.moments().1 / (self.n - 1) as f64
    }

    pub fn std_err(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        (self.variance() / self.n as f64).sqrt()
    }

    /// Combines two disjoint sample sets. Order matters only at rounding level;
    /// callers merge in a fixed order for reproducibility.
    pub fn merge(&self, other: &Self) -> Self {
        if other.n == 0 {
            return *self;
        }
        if self.n == 0 {
            return *other;
        }
        let (ma, qa) = self.moments();
        let (mb, qb) = other.moments();
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        let delta = mb - ma;
        let mean = ma + delta * nb / n;
        let q = qa + qb + delta * delta * na * nb / n;
        Self { n: self.n + other.n, merged: Some((mean, q)), ..Self::default() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_two_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| 1e-6 + (i as f64 * 0.37).sin().abs() * 1e-7).collect();
        let mut acc = MeanAccumulator::new();
        xs.iter().for_each(|&x| acc.push(x));
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        assert!((acc.mean() - mean).abs() < 1e-15 * mean);
        assert!((acc.variance() - var).abs() < 1e-9 * var);
    }

    #[test]
    fn merge_equals_single_pass() {
        let xs: Vec<f64> = (0..777).map(|i| (i as f64 * 1.3).cos() * 0.2 + 0.25).collect();
        let mut whole = MeanAccumulator::new();
        xs.iter().for_each(|&x| whole.push(x));
        let (a, b) = xs.split_at(300);
        let (mut pa, mut pb) = (MeanAccumulator::new(), MeanAccumulator::new());
        a.iter().for_each(|&x| pa.push(x));
        b.iter().for_each(|&x| pb.push(x));
        let m = pa.merge(&pb);
        assert_eq!(m.count(), 777);
        assert!((m.mean() - whole.mean()).abs() < 1e-15);
        assert!((m.variance() - whole.variance()).abs() < 1e-14 * whole.variance());
        assert_eq!(MeanAccumulator::new().merge(&pa), pa);
    }
}
