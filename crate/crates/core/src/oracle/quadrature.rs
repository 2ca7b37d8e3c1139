//! Adaptive Gauss-Kronrod (10/21) quadrature for vector-valued complex integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_22,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_725,
    0.054_755_896_574_351_995,
    0.075_039_674_810_919_96,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_84,
    0.134_709_217_311_473_34,
    0.142_775_938_577_060_09,
    0.147_739_104_901_338_49,
    0.149_445_554_002_916_9,
];

/// Gauss weights for the odd-indexed Kronrod nodes `XGK[1], XGK[3], ..., XGK[9]`.
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadTolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for QuadTolerance {
    fn default() -> Self {
        Self { abs: 1e-14, rel: 1e-12, max_intervals: 20_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadResult {
    pub value: Vec<Complex64>,
    pub error_estimate: f64,
    pub evaluations: usize,
}

fn max_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

struct Segment {
    a: f64,
    b: f64,
    value: Vec<Complex64>,
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

fn gk21<F>(f: &F, a: f64, b: f64) -> Result<(Vec<Complex64>, f64)>
where
    F: Fn(f64) -> Result<Vec<Complex64>>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let dim = fc.len();
    let mut kron: Vec<Complex64> = fc.iter().map(|v| v * WGK[10]).collect();
    let mut gauss = vec![Complex64::new(0.0, 0.0); dim];
    for j in 0..10 {
        let x = h * XGK[j];
        let f1 = f(c - x)?;
        let f2 = f(c + x)?;
        for k in 0..dim {
            let s = f1[k] + f2[k];
            kron[k] += s * WGK[j];
            if j % 2 == 1 {
                gauss[k] += s * WG[j / 2];
            }
        }
    }
    let err = kron.iter().zip(&gauss).map(|(k, g)| (k - g).norm()).fold(0.0, f64::max) * h.abs();
    Ok((kron.into_iter().map(|v| v * h).collect(), err))
}

/// `int_a^b f`, with `b = +inf` allowed through `w = a + (1 - x)/x`.
pub fn integrate<F>(f: F, a: f64, b: f64, tol: QuadTolerance) -> Result<QuadResult>
where
    F: Fn(f64) -> Result<Vec<Complex64>>,
{
    if b.is_infinite() {
        if b < 0.0 || !a.is_finite() {
            return Err(Error::InvalidInput("only [a, +inf) ranges are supported".into()));
        }
        let g = |x: f64| -> Result<Vec<Complex64>> {
            let w = a + (1.0 - x) / x;
            let jac = 1.0 / (x * x);
            Ok(f(w)?.into_iter().map(|v| v * jac).collect())
        };
        return adaptive(&g, 0.0, 1.0, tol);
    }
    adaptive(&f, a, b, tol)
}

fn adaptive<F>(f: &F, a: f64, b: f64, tol: QuadTolerance) -> Result<QuadResult>
where
    F: Fn(f64) -> Result<Vec<Complex64>>,
{
    let (v, e) = gk21(f, a, b)?;
    let mut total = v.clone();
    let mut err = e;
    let mut evaluations = 21;
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value: v, error: e });
    while err > tol.abs.max(tol.rel * max_norm(&total)) {
        if heap.len() >= tol.max_intervals {
            return Err(Error::BudgetExceeded { achieved: err });
        }
        let s = heap.pop().unwrap();
        let m = 0.5 * (s.a + s.b);
        if m <= s.a || m >= s.b {
            heap.push(s);
            break;
        }
        let (v1, e1) = gk21(f, s.a, m)?;
        let (v2, e2) = gk21(f, m, s.b)?;
        evaluations += 42;
        for k in 0..total.len() {
            total[k] += v1[k] + v2[k] - s.value[k];
        }
        err += e1 + e2 - s.error;
        heap.push(Segment { a: s.a, b: m, value: v1, error: e1 });
        heap.push(Segment { a: m, b: s.b, value: v2, error: e2 });
    }
    // Re-sum to remove drift from the running updates.
    let mut value = vec![Complex64::new(0.0, 0.0); total.len()];
    let mut error = 0.0;
    for s in heap.iter() {
        for (v, x) in value.iter_mut().zip(&s.value) {
            *v += x;
        }
        error += s.error;
    }
    Ok(QuadResult { value, error_estimate: error, evaluations })
}

pub fn integrate_scalar<F>(f: F, a: f64, b: f64, tol: QuadTolerance) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    Ok(integrate(|w| Ok(vec![f(w)]), a, b, tol)?.value[0])
}

/// Principal value of `int_a^b f(w)/(w - p) dw` for `a < p < b` (`b` may be infinite).
/// On the symmetric window `[p - d, p + d]` the constant `f(p)` integrates to
/// zero, so only `(f(w) - f(p))/(w - p)` is integrated there.
pub fn principal_value<F>(f: F, p: f64, a: f64, b: f64, tol: QuadTolerance) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    if !(a < p && p < b) {
        return Err(Error::Domain("principal value needs a < p < b".into()));
    }
    let d = 0.5 * (p - a).min(if b.is_finite() { b - p } else { p - a }).min(1.0f64.max(p.abs()));
    let fp = f(p);
    let g = |w: f64| f(w) / (w - p);
    let h = |w: f64| (f(w) - fp) / (w - p);
    let mut total = integrate_scalar(g, a, p - d, tol)?;
    total += integrate_scalar(h, p - d, p, tol)?;
    total += integrate_scalar(h, p, p + d, tol)?;
    total += integrate_scalar(g, p + d, b, tol)?;
    Ok(total)
}
