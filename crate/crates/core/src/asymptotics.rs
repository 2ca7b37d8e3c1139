//! Long-time asymptotes of the reduced evolution and order probes for the
//! small-energy expansions.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::classify::{ZeroEnergyClassification, ZeroEnergyKind};
use crate::linalg::restricted_inverse;
use crate::polyrat::binomial;
use crate::resolvent::ResolventEvaluator;
use crate::{CMat, Error, Result};

/// Euler's constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const ZETA3: f64 = 1.202_056_903_159_594_2;
const ZETA5: f64 = 1.036_927_755_143_37;

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoteModel {
    pub kind: ZeroEnergyKind,
    pub lambda: f64,
    pub n_a: usize,
    pub n_b: usize,
    /// Regular: `K(0)^-1 Gamma_k K(0)^-1` for `k = n_b, n_b+1, n_b+2`.
    /// First kind: the single matrix `(Q_1 Gamma_1 Q_1)^-1` within `M_1`.
    pub coefficients: Vec<CMat>,
}

impl AsymptoteModel {
    pub fn new(ev: &ResolventEvaluator, cls: &ZeroEnergyClassification) -> Result<Self> {
        let lambda = ev.lambda();
        let n_b = ev.selfenergy().gamma_expansion().n_b;
        match cls.kind {
            ZeroEnergyKind::Regular => {
                let n_a = if lambda == 0.0 { 1 } else { ev.selfenergy().a_series(lambda, 8)?.n_a };
                let k_inv =
                    ev.k_zero().clone().try_inverse().ok_or_else(|| Error::Numerical("K(0) is singular".into()))?;
                let g = ev.selfenergy().gamma_expansion();
                let coefficients = (0..3).map(|i| &k_inv * g.get(n_b + i) * &k_inv).collect();
                Ok(Self { kind: cls.kind, lambda, n_a, n_b, coefficients })
            }
            ZeroEnergyKind::First => {
                if n_b != 1 {
                    return Err(Error::RestrictionViolated { n_a: 0, n_b });
                }
                let n_a = ev.selfenergy().a_series(lambda, 8)?.n_a;
                let g_inv = restricted_inverse(&cls.m1, &cls.gamma1)?;
                Ok(Self { kind: cls.kind, lambda, n_a, n_b, coefficients: vec![g_inv] })
            }
            other => Err(Error::ClassificationMismatch {
                expected: "regular or first kind".into(),
                found: other.to_string(),
            }),
        }
    }

    /// `lambda^2 sum_k Gamma(1+k)/(it)^(k+1) K^-1 Gamma_k K^-1` over the first
    /// `terms` orders starting at `n_b`.
    pub fn theorem1_terms(&self, t: f64, terms: usize) -> Result<CMat> {
        if self.kind != ZeroEnergyKind::Regular {
            return Err(Error::ClassificationMismatch { expected: "regular".into(), found: self.kind.to_string() });
        }
        if !(t > 0.0) {
            return Err(Error::Domain("asymptote needs t > 0".into()));
        }
        let it = Complex64::new(0.0, t);
        let mut acc = CMat::zeros(self.coefficients[0].nrows(), self.coefficients[0].ncols());
        for (i, c) in self.coefficients.iter().take(terms.min(3)).enumerate() {
            let k = self.n_b + i;
            let factor = factorial(k) / it.powi(k as i32 + 1);
            acc += c * factor;
        }
        Ok(acc.scale(self.lambda * self.lambda))
    }

    pub fn theorem1(&self, t: f64) -> Result<CMat> {
        self.theorem1_terms(t, 3)
    }

    pub fn theorem2(&self, t: f64) -> Result<CMat> {
        if self.kind != ZeroEnergyKind::First {
            return Err(Error::ClassificationMismatch { expected: "first kind".into(), found: self.kind.to_string() });
        }
        if !(t > std::f64::consts::E) {
            return Err(Error::Domain("logarithmic asymptote needs t > e".into()));
        }
        Ok(self.coefficients[0].unscale(self.lambda * self.lambda * t.ln()))
    }

    /// The asymptote appropriate to the model's threshold kind.
    pub fn leading(&self, t: f64) -> Result<CMat> {
        match self.kind {
            ZeroEnergyKind::First => self.theorem2(t),
            _ => self.theorem1(t),
        }
    }
}

pub fn theorem1_asymptote(model: &AsymptoteModel, t: f64) -> Result<CMat> {
    model.theorem1(t)
}

pub fn theorem2_asymptote(model: &AsymptoteModel, t: f64) -> Result<CMat> {
    model.theorem2(t)
}

fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}

fn zeta(k: usize) -> f64 {
    match k {
        2 => PI.powi(2) / 6.0,
        3 => ZETA3,
        4 => PI.powi(4) / 90.0,
        5 => ZETA5,
        6 => PI.powi(6) / 945.0,
        _ => unreachable!("zeta values are tabulated for 2..=6"),
    }
}

/// `Gamma^(k)(1)` for `k = 0..=kmax` (`kmax <= 6`), from
/// `log Gamma(1+x) = -gamma x + sum_{k>=2} (-1)^k zeta(k) x^k / k`.
pub fn gamma_derivatives_at_one(kmax: usize) -> Result<Vec<f64>> {
    if kmax > 6 {
        return Err(Error::Domain("derivatives of Gamma at 1 are tabulated through order 6".into()));
    }
    let g: Vec<f64> = (0..=kmax)
        .map(|k| match k {
            0 => 0.0,
            1 => -EULER_GAMMA,
            _ => {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * zeta(k) / k as f64
            }
        })
        .collect();
    let mut e = vec![0.0; kmax + 1];
    e[0] = 1.0;
    for n in 1..=kmax {
        e[n] = (1..=n).map(|k| k as f64 * g[k] * e[n - k]).sum::<f64>() / n as f64;
    }
    Ok(e.iter().enumerate().map(|(k, &c)| c * factorial(k)).collect())
}

/// Individual terms `j = 0..terms` of the expansion of
/// `int_0^inf w^-1 (log w)^-q phi(w) e^(-itw) dw` in powers of `1/log t`.
pub fn log_fourier_terms(t: f64, q: usize, terms: usize) -> Result<Vec<Complex64>> {
    if q < 2 {
        return Err(Error::Domain("log-Fourier series needs q >= 2".into()));
    }
    if !(t > std::f64::consts::E) {
        return Err(Error::Domain("log-Fourier series needs t > e".into()));
    }
    if terms == 0 || terms > 6 {
        return Err(Error::Domain("log-Fourier series supports 1..=6 terms".into()));
    }
    let d = gamma_derivatives_at_one(terms - 1)?;
    let shift = Complex64::new(0.0, -PI / 2.0);
    let log_t = t.ln();
    let sign = if q.is_multiple_of(2) { 1.0 } else { -1.0 };
    let prefactor = sign / (q - 1) as f64;
    Ok((0..terms)
        .map(|j| {
            let operator: Complex64 = (0..=j).map(|k| shift.powi((j - k) as i32) * binomial(j, k) * d[k]).sum();
            operator * prefactor * binomial(q + j - 2, j) * log_t.powi(1 - (q + j) as i32)
        })
        .collect())
}

pub fn log_fourier_series(t: f64, q: usize, terms: usize) -> Result<Complex64> {
    Ok(log_fourier_terms(t, q, terms)?.into_iter().sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub slope: f64,
    pub expected: f64,
    pub pass: bool,
    pub exact_match: bool,
    /// `(w, |difference| / |log w|^log_power)` at each probe point.
    pub points: Vec<(f64, f64)>,
}

/// Least-squares slope of `log |quantity - expansion|` against `log w`, after
/// dividing out `|log w|^log_power`. Passes within 0.15 of `expected`.
pub fn remainder_order_probe<Q, E>(
    quantity: Q,
    expansion: E,
    grid: &[f64],
    expected: f64,
    log_power: f64,
) -> Result<ProbeReport>
where
    Q: Fn(f64) -> Result<CMat>,
    E: Fn(f64) -> Result<CMat>,
{
    if grid.len() < 3 {
        return Err(Error::InvalidInput("probe grid needs at least three points".into()));
    }
    let mut points = Vec::with_capacity(grid.len());
    for &w in grid {
        let d = (quantity(w)? - expansion(w)?).norm();
        points.push((w, d / w.ln().abs().powf(log_power)));
    }
    let usable: Vec<(f64, f64)> = points.iter().filter(|p| p.1 > 0.0).map(|&(w, d)| (w.ln(), d.ln())).collect();
    if usable.len() < 2 {
        return Ok(ProbeReport { slope: expected, expected, pass: true, exact_match: true, points });
    }
    let slope = least_squares_slope(&usable);
    Ok(ProbeReport { slope, expected, pass: (slope - expected).abs() <= 0.15, exact_match: false, points })
}

pub fn least_squares_slope(xy: &[(f64, f64)]) -> f64 {
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
