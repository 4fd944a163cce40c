//! Globally adaptive 21-point Gauss-Kronrod quadrature (QUADPACK QK21 nodes).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_067_831_770,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// 10-point Gauss weights, paired with XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

const MAX_INTERVALS: usize = 4000;

struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Segment {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = WGK[10] * fc;
    let mut gauss = 0.0;
    for (j, (&x, &w)) in XGK[..10].iter().zip(&WGK[..10]).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment {
        lo,
        hi,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Integrates `f` over `[lo, hi]` to `max(abs_tol, rel_tol·|I|)`.
///
/// Panics if the error target is not met within the subdivision budget; an
/// oracle that silently returns a poor value is worse than none.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, abs_tol: f64, rel_tol: f64) -> f64 {
    if lo == hi {
        return 0.0;
    }
    let mut heap = BinaryHeap::new();
    let first = kronrod(&f, lo, hi);
    let mut total = first.value;
    let mut error = first.error;
    heap.push(first);
    while error > abs_tol.max(rel_tol * total.abs()) {
        assert!(heap.len() < MAX_INTERVALS, "quadrature did not converge on [{lo}, {hi}]");
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            // Interval cannot be split further in floating point.
            heap.push(Segment { error: 0.0, ..worst });
            error = heap.iter().map(|s| s.error).sum();
            continue;
        }
        let left = kronrod(&f, worst.lo, mid);
        let right = kronrod(&f, mid, worst.hi);
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        if error < 0.0 {
            error = heap.iter().map(|s| s.error).sum();
        }
    }
    // Re-sum to shed the drift of the running updates.
    heap.iter().map(|s| s.value).sum()
}

/// Integrates a decaying `f` over `[from, ∞)` with doubling segments.
///
/// Stops once a segment contributes less than `abs_tol` (after at least
/// four segments).
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, from: f64, abs_tol: f64) -> f64 {
    let mut lo = from;
    let mut width = 1.0;
    let mut total = 0.0;
    for segment in 0.. {
        let piece = integrate(&f, lo, lo + width, abs_tol * 1e-2, 1e-14);
        total += piece;
        if segment >= 3 && piece.abs() < abs_tol {
            break;
        }
        assert!(segment < 200, "integrand does not decay");
        lo += width;
        width *= 2.0;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x| x.powi(5) - 3.0 * x * x, -1.0, 2.0, 1e-14, 1e-14);
        assert!((v - (63.0 / 6.0 - 9.0)).abs() < 1e-13);
    }

    #[test]
    fn exponential_tail() {
        let v = integrate_to_infinity(|x| (-x).exp(), 2.0, 1e-16);
        assert!((v - (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn sqrt_cusp() {
        let v = integrate(|x: f64| x.sqrt(), 0.0, 1.0, 1e-13, 1e-13);
        assert!((v - 2.0 / 3.0).abs() < 1e-12);
    }
}
