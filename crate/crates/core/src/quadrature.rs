//! Adaptive Gauss–Kronrod (10/21 point) quadrature.
//!
//! Integrals over the whole `t`-line are split at caller-supplied breakpoints
//! (kinks, atoms, smoothing scales).  The two unbounded end pieces are mapped
//! onto `[0, 1)` with `u = tanh((t - a) / 2)`, so exponentially decaying tails
//! become bounded integrands on a finite interval.  All pieces share one global
//! error budget and one priority queue, so refinement goes wherever the error is.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

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

// Weights of the embedded 10-point Gauss rule, at XGK[1], XGK[3], ..., XGK[9].
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Stopping rule for the adaptive integrator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_subdivisions: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs: 1e-10,
            rel: 1e-12,
            max_subdivisions: 4000,
        }
    }
}

impl Tolerance {
    pub fn with_abs(abs: f64) -> Self {
        Tolerance {
            abs,
            ..Tolerance::default()
        }
    }
}

/// A value together with an absolute error estimate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub fn new(value: f64, error: f64) -> Self {
        Estimate { value, error }
    }

    pub fn exact(value: f64) -> Self {
        Estimate { value, error: 0.0 }
    }
}

impl Add for Estimate {
    type Output = Estimate;
    fn add(self, rhs: Estimate) -> Estimate {
        Estimate::new(self.value + rhs.value, self.error + rhs.error)
    }
}

impl Sub for Estimate {
    type Output = Estimate;
    fn sub(self, rhs: Estimate) -> Estimate {
        Estimate::new(self.value - rhs.value, self.error + rhs.error)
    }
}

impl Neg for Estimate {
    type Output = Estimate;
    fn neg(self) -> Estimate {
        Estimate::new(-self.value, self.error)
    }
}

impl Mul<f64> for Estimate {
    type Output = Estimate;
    fn mul(self, k: f64) -> Estimate {
        Estimate::new(self.value * k, self.error * k.abs())
    }
}

impl std::iter::Sum for Estimate {
    fn sum<I: Iterator<Item = Estimate>>(iter: I) -> Estimate {
        iter.fold(Estimate::default(), |acc, e| acc + e)
    }
}

#[derive(Clone, Copy, Debug)]
enum Chart {
    Finite,
    Upper(f64),
    Lower(f64),
}

impl Chart {
    #[inline]
    fn map(self, u: f64) -> (f64, f64) {
        match self {
            Chart::Finite => (u, 1.0),
            Chart::Upper(a) => (a + 2.0 * u.atanh(), 2.0 / (1.0 - u * u)),
            Chart::Lower(b) => (b - 2.0 * u.atanh(), 2.0 / (1.0 - u * u)),
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Segment {
    chart: Chart,
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
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

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        let min_err = 50.0 * f64::EPSILON * res_abs;
        if min_err > scaled {
            scaled = min_err;
        }
    }
    scaled
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, chart: Chart, lo: f64, hi: f64) -> Segment {
    let eval = |u: f64| -> f64 {
        let (t, jac) = chart.map(u);
        if !t.is_finite() {
            return 0.0;
        }
        let y = f(t);
        if y == 0.0 {
            0.0
        } else {
            y * jac
        }
    };
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = eval(center);
    let mut res_k = WGK[10] * fc;
    let mut res_abs = res_k.abs();
    let mut res_g = 0.0;
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = eval(center - dx);
        let f2 = eval(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    let error = rescale_error((res_k - res_g) * half, res_abs * half.abs(), res_asc * half.abs());
    Segment {
        chart,
        lo,
        hi,
        value,
        error,
    }
}

fn adapt<F: Fn(f64) -> f64>(f: &F, pieces: Vec<(Chart, f64, f64)>, tol: &Tolerance) -> Result<Estimate> {
    let mut heap: BinaryHeap<Segment> = pieces
        .into_iter()
        .filter(|&(_, lo, hi)| hi > lo)
        .map(|(chart, lo, hi)| kronrod(f, chart, lo, hi))
        .collect();
    let mut subdivisions = heap.len();
    loop {
        let (value, error) = heap.iter().fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
        if !value.is_finite() || !error.is_finite() {
            return Err(Error::numerical(
                "quadrature",
                format!("non-finite integrand contribution (value {value}, error {error})"),
            ));
        }
        let target = tol.abs.max(tol.rel * value.abs());
        if error <= target {
            return Ok(Estimate::new(value, error));
        }
        let worst = match heap.pop() {
            Some(s) => s,
            None => return Ok(Estimate::default()),
        };
        let mid = 0.5 * (worst.lo + worst.hi);
        // Interval can no longer be split in floating point.
        if mid <= worst.lo || mid >= worst.hi || subdivisions >= tol.max_subdivisions {
            heap.push(worst);
            let (value, error) = heap.iter().fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
            // Accept round-off limited results that are still close to the target.
            if error <= 100.0 * target {
                return Ok(Estimate::new(value, error));
            }
            return Err(Error::numerical(
                "quadrature",
                format!(
                    "error estimate {error:.3e} above target {target:.3e} after {subdivisions} subdivisions (value {value:.15e})"
                ),
            ));
        }
        heap.push(kronrod(f, worst.chart, worst.lo, mid));
        heap.push(kronrod(f, worst.chart, mid, worst.hi));
        subdivisions += 1;
    }
}

/// Integrates `f` over the finite interval `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: &Tolerance) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate::default());
    }
    if b < a {
        return integrate(f, b, a, tol).map(|e| -e);
    }
    adapt(&f, vec![(Chart::Finite, a, b)], tol)
}

/// Integrates `f` over the whole real line, splitting at `breakpoints`.
///
/// The integrand must decay at both ends fast enough for the tanh-mapped tails
/// to be integrable; otherwise the error estimate never settles and a numerical
/// error is returned.
pub fn integrate_line<F: Fn(f64) -> f64>(f: F, breakpoints: &[f64], tol: &Tolerance) -> Result<Estimate> {
    let mut pts: Vec<f64> = breakpoints.iter().copied().filter(|x| x.is_finite()).collect();
    if pts.is_empty() {
        pts.push(0.0);
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * a.abs().max(1.0));
    let mut pieces = Vec::with_capacity(pts.len() + 1);
    pieces.push((Chart::Lower(pts[0]), 0.0, 1.0));
    for w in pts.windows(2) {
        pieces.push((Chart::Finite, w[0], w[1]));
    }
    pieces.push((Chart::Upper(pts[pts.len() - 1]), 0.0, 1.0));
    adapt(&f, pieces, tol)
}

/// Integrates `f` over `[a, ∞)`.
pub fn integrate_upper_tail<F: Fn(f64) -> f64>(f: F, a: f64, tol: &Tolerance) -> Result<Estimate> {
    adapt(&f, vec![(Chart::Upper(a), 0.0, 1.0)], tol)
}
