//! Globally adaptive 21-point Gauss-Kronrod quadrature, plus a multiscale
//! driver for heavy-tailed integrands on (semi-)infinite ranges.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
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

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Convergence target: stop once the error estimate is below
/// `max(abs, rel·|value|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub fn abs(abs: f64) -> Self {
        Self { abs, rel: 0.0 }
    }

    pub fn rel(rel: f64) -> Self {
        Self { abs: 0.0, rel }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

const MAX_INTERVALS: usize = 4000;

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    floor: f64,
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

/// Returns `(value, error, floor)`, where `floor` is the roundoff level below
/// which further bisection cannot reduce the error.
fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    let mut abs_sum = fc.abs() * WGK[10];
    let mut fv = [(0.0, 0.0); 10];
    for (j, &x) in XGK[..10].iter().enumerate() {
        let dx = half * x;
        let (f1, f2) = (f(center - dx), f(center + dx));
        fv[j] = (f1, f2);
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = kronrod * 0.5;
    let mut asc = WGK[10] * (fc - mean).abs();
    for (j, &(f1, f2)) in fv.iter().enumerate() {
        asc += WGK[j] * ((f1 - mean).abs() + (f2 - mean).abs());
    }
    let result = kronrod * half;
    let res_abs = abs_sum * half.abs();
    let res_asc = asc * half.abs();
    let mut err = ((kronrod - gauss) * half).abs();
    // QUADPACK error rescaling
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * res_abs;
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(floor);
    }
    (result, err, floor)
}

/// Adaptive quadrature over a finite interval, bisecting the segment with
/// the largest error estimate until the total error meets `tol`.
pub fn integrate_finite<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: Tolerance) -> Result<Integral> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Quadrature(format!("non-finite interval [{a}, {b}]")));
    }
    if a == b {
        return Ok(Integral {
            value: 0.0,
            abs_error: 0.0,
            evaluations: 0,
        });
    }
    let (value, error, floor) = gk21(f, a, b);
    let mut evaluations = 21;
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error, floor });
    let mut total = value;
    let mut total_err = error;
    // segments too narrow to split further
    let mut frozen_value = 0.0;
    let mut frozen_err = 0.0;
    while total_err + frozen_err > tol.target(total + frozen_value) {
        if !total.is_finite() || !total_err.is_finite() {
            return Err(Error::Quadrature(format!(
                "non-finite integrand on [{a}, {b}]"
            )));
        }
        let Some(seg) = heap.pop() else { break };
        if heap.len() >= MAX_INTERVALS {
            return Err(Error::Quadrature(format!(
                "no convergence on [{a}, {b}]: estimate {total}, error {total_err}"
            )));
        }
        let mid = 0.5 * (seg.a + seg.b);
        if !(mid > seg.a.min(seg.b) && mid < seg.a.max(seg.b))
            || (seg.b - seg.a).abs() <= 1e3 * f64::EPSILON * mid.abs().max(f64::MIN_POSITIVE)
            || seg.error <= seg.floor
        {
            total -= seg.value;
            total_err -= seg.error;
            frozen_value += seg.value;
            frozen_err += seg.error;
            continue;
        }
        let (v1, e1, r1) = gk21(f, seg.a, mid);
        let (v2, e2, r2) = gk21(f, mid, seg.b);
        evaluations += 42;
        total += v1 + v2 - seg.value;
        total_err += e1 + e2 - seg.error;
        heap.push(Segment { a: seg.a, b: mid, value: v1, error: e1, floor: r1 });
        heap.push(Segment { a: mid, b: seg.b, value: v2, error: e2, floor: r2 });
    }
    if !total.is_finite() {
        return Err(Error::Quadrature(format!("non-finite integrand on [{a}, {b}]")));
    }
    // resum to shed the drift of the running totals
    let mut value = frozen_value;
    let mut abs_error = frozen_err;
    for s in heap.iter() {
        value += s.value;
        abs_error += s.error;
    }
    if abs_error > tol.target(value) * 1.5 + frozen_err {
        return Err(Error::Quadrature(format!(
            "no convergence on [{a}, {b}]: estimate {value}, error {abs_error}"
        )));
    }
    Ok(Integral {
        value,
        abs_error,
        evaluations,
    })
}

/// `∫_a^∞ f` with `x = a + s/t²`, `t ∈ (0, 1]`; polynomial tails `x^{-α}`
/// become `t^{2α−3}`, smooth for `α ≥ 1.5`. Requires `s > 0`.
fn integrate_upper_tail<F: Fn(f64) -> f64>(f: &F, a: f64, scale: f64, tol: Tolerance) -> Result<Integral> {
    let g = |t: f64| {
        if t <= 0.0 {
            return 0.0;
        }
        let x = a - scale + scale / (t * t);
        let jacobian = 2.0 * scale / (t * t * t);
        if !x.is_finite() || !jacobian.is_finite() {
            return 0.0;
        }
        f(x) * jacobian
    };
    integrate_finite(&g, 0.0, 1.0, tol)
}

/// Integrates `f` over `[lo, hi]` (either end may be infinite).
///
/// The range is cut at `p ± 10^k` around every feature point `p` (density
/// modes, kinks, ends of inner ranges) for `k` from `-2` up to a few decades
/// beyond the largest feature magnitude, so that every piece sees at most a
/// tenfold change of scale; unbounded ends are mapped to `(0, 1]`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: &F,
    lo: f64,
    hi: f64,
    features: &[f64],
    tol: Tolerance,
) -> Result<Integral> {
    if lo.is_nan() || hi.is_nan() || lo > hi {
        return Err(Error::Quadrature(format!("invalid range [{lo}, {hi}]")));
    }
    if lo == hi {
        return Ok(Integral {
            value: 0.0,
            abs_error: 0.0,
            evaluations: 0,
        });
    }
    let mut cuts: Vec<f64> = Vec::new();
    let reach = features
        .iter()
        .chain([lo, hi].iter())
        .filter(|x| x.is_finite())
        .fold(1.0f64, |m, x| m.max(x.abs()));
    let top = reach.log10().ceil() as i32 + 3;
    for &p in features.iter().filter(|p| p.is_finite()) {
        cuts.push(p);
        for k in -2..=top {
            let d = 10f64.powi(k);
            cuts.push(p - d);
            cuts.push(p + d);
        }
    }
    cuts.retain(|&x| x > lo && x < hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    if cuts.is_empty() && lo.is_infinite() && hi.is_infinite() {
        cuts.push(0.0);
    }
    let pieces = cuts.len() + 1;
    // each piece gets its share of the absolute budget, and must meet the
    // relative target on its own
    let piece_tol = Tolerance {
        abs: tol.abs / pieces as f64,
        rel: tol.rel,
    };
    let mut value = 0.0;
    let mut abs_error = 0.0;
    let mut evaluations = 0;
    let mut acc = |r: Integral| {
        value += r.value;
        abs_error += r.abs_error;
        evaluations += r.evaluations;
    };
    let mirrored = |x: f64| f(-x);
    // left end up to the first cut (or to `hi` when there are none)
    let first = cuts.first().copied().unwrap_or(hi);
    if lo.is_infinite() {
        acc(integrate_upper_tail(&mirrored, -first, 1.0f64.max(first.abs()), piece_tol)?);
    } else if first.is_finite() {
        acc(integrate_finite(f, lo, first, piece_tol)?);
    }
    for w in cuts.windows(2) {
        acc(integrate_finite(f, w[0], w[1], piece_tol)?);
    }
    // right end from the last cut (or from `lo`)
    let last = cuts.last().copied().unwrap_or(lo);
    if hi.is_infinite() {
        acc(integrate_upper_tail(f, last, 1.0f64.max(last.abs()), piece_tol)?);
    } else if !cuts.is_empty() {
        acc(integrate_finite(f, last, hi, piece_tol)?);
    }
    Ok(Integral {
        value,
        abs_error,
        evaluations,
    })
}
