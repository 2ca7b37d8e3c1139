//! Closed-form self-energy `S(z) = int_0^inf Gamma(w) / (w - z) dw`.
//!
//! For a proper rational `eta` with partial fractions
//! `sum_k sum_j c_kj (w - a_k)^-j` the Cauchy transform is
//! `Rat(z) - L(z) eta(z)`, where `L(z) = log|z| + i(arg z - pi)` with
//! `arg z` in `(0, 2 pi)` and `Rat` is an explicit rational function whose
//! poles cancel those of `L eta`. Close to a pole the transform is evaluated
//! from its Taylor series instead, which avoids the cancellation.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::model::{gamma_small_expansion, GammaExpansion, GammaMatrix};
use crate::polyrat::{binomial, partial_fractions, RationalFunction, Tolerances};
use crate::{CMat, Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Relative distance to a pole below which the Taylor form is used.
const NEAR_POLE: f64 = 1e-4;
/// Terms kept in the near-pole Taylor form.
const NEAR_POLE_TERMS: usize = 6;
/// Terms kept in the threshold series of `A(z)`.
const THRESHOLD_TERMS: usize = 24;

/// `log|z| + i(arg z - pi)` with `arg z` in `(0, 2 pi)`. Undefined on `[0, inf)`.
pub fn log_minus(z: Complex64) -> Result<Complex64> {
    if z.im == 0.0 && z.re >= 0.0 {
        return Err(Error::BranchCut(z));
    }
    Ok(log_minus_raw(z))
}

#[inline]
pub(crate) fn log_minus_raw(z: Complex64) -> Complex64 {
    (-z).ln()
}

/// `log z` with `arg z` in `(0, 2 pi)`.
pub fn log_cut_positive(z: Complex64) -> Result<Complex64> {
    Ok(log_minus(z)? + I * PI)
}

/// Side of the cut for boundary values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `w + i0`.
    Above,
    /// `w - i0`.
    Below,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Above => 1.0,
            Side::Below => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct ClosedPole {
    a: Complex64,
    /// Partial-fraction coefficients of `eta`.
    c: Vec<Complex64>,
    /// Coefficients of the rational part at this pole.
    e: Vec<Complex64>,
}

impl ClosedPole {
    fn taylor(&self, delta: Complex64) -> Complex64 {
        let inv = -1.0 / self.a;
        let mut acc = ZERO;
        for (idx, &c) in self.c.iter().enumerate() {
            let j = idx + 1;
            let mut term = ZERO;
            let mut dn = Complex64::new(1.0, 0.0);
            for n in 0..NEAR_POLE_TERMS {
                term += dn * inv.powi((j + n) as i32) / (j + n) as f64;
                dn *= delta;
            }
            acc += c * term;
        }
        acc
    }

    fn taylor_derivative(&self, delta: Complex64) -> Complex64 {
        let inv = -1.0 / self.a;
        let mut acc = ZERO;
        for (idx, &c) in self.c.iter().enumerate() {
            let j = idx + 1;
            let mut term = ZERO;
            let mut dn = Complex64::new(1.0, 0.0);
            for n in 1..NEAR_POLE_TERMS {
                term += dn * n as f64 * inv.powi((j + n) as i32) / (j + n) as f64;
                dn *= delta;
            }
            acc += c * term;
        }
        acc
    }

    fn is_near(&self, z: Complex64) -> bool {
        (z - self.a).norm() < NEAR_POLE * self.a.norm()
    }
}

/// Closed form of `int_0^inf eta(w) / (w - z) dw` for one proper rational `eta`.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchyClosedForm {
    source: RationalFunction,
    poles: Vec<ClosedPole>,
}

impl CauchyClosedForm {
    pub fn new(source: &RationalFunction, tol: &Tolerances) -> Result<Self> {
        if !source.is_proper() {
            return Err(Error::NonIntegrable("Cauchy transform needs a proper rational function".into()));
        }
        source.validate_no_poles_on_halfline(tol)?;
        let pf = partial_fractions(source, tol)?;
        let poles = pf
            .terms
            .iter()
            .map(|t| {
                let a = t.pole;
                let m = t.coeffs.len();
                let ell: Vec<Complex64> = (0..m)
                    .map(|k| {
                        if k == 0 {
                            log_minus_raw(a)
                        } else {
                            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                            sign / (k as f64 * a.powi(k as i32))
                        }
                    })
                    .collect();
                let e = (1..=m).map(|p| (p..=m).map(|j| t.coeffs[j - 1] * ell[j - p]).sum()).collect();
                ClosedPole { a, c: t.coeffs.clone(), e }
            })
            .collect();
        Ok(Self { source: source.clone(), poles })
    }

    pub fn source(&self) -> &RationalFunction {
        &self.source
    }

    pub fn poles(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.poles.iter().map(|p| p.a)
    }

    /// The rational part `Rat(z)`. Equals the transform at `z = 0`.
    pub fn rational_part(&self, z: Complex64) -> Complex64 {
        let mut acc = ZERO;
        for p in &self.poles {
            let inv = 1.0 / (z - p.a);
            let mut pw = inv;
            for &e in &p.e {
                acc += e * pw;
                pw *= inv;
            }
        }
        acc
    }

    pub fn rational_part_derivative(&self, z: Complex64) -> Complex64 {
        let mut acc = ZERO;
        for p in &self.poles {
            let inv = 1.0 / (z - p.a);
            let mut pw = inv * inv;
            for (idx, &e) in p.e.iter().enumerate() {
                acc -= e * (idx + 1) as f64 * pw;
                pw *= inv;
            }
        }
        acc
    }

    /// Taylor coefficients of `Rat` at the origin, from the binomial series of
    /// each `(z - a)^-p`.
    pub fn rational_taylor(&self, order: usize) -> Vec<Complex64> {
        (0..=order)
            .map(|n| {
                let mut acc = ZERO;
                for p in &self.poles {
                    for (idx, &e) in p.e.iter().enumerate() {
                        let k = idx + 1;
                        acc += e * (-p.a).powi(-(k as i32)) * binomial(n + k - 1, n) * p.a.powi(-(n as i32));
                    }
                }
                acc
            })
            .collect()
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        if z.im == 0.0 && z.re >= 0.0 {
            return Err(Error::BranchCut(z));
        }
        if self.poles.iter().any(|p| (z - p.a).norm() <= 1e-14 * p.a.norm()) {
            return Err(Error::PoleCollision(z));
        }
        Ok(self.eval_with_log(z, log_minus_raw(z)))
    }

    /// Transform with a caller-supplied value of `L(z)`; boundary values use
    /// `log w -/+ i pi`.
    pub(crate) fn eval_with_log(&self, z: Complex64, l: Complex64) -> Complex64 {
        let mut acc = ZERO;
        for p in &self.poles {
            if p.is_near(z) {
                acc += p.taylor(z - p.a);
                continue;
            }
            let inv = 1.0 / (z - p.a);
            let mut pw = inv;
            for (&e, &c) in p.e.iter().zip(&p.c) {
                acc += (e - l * c) * pw;
                pw *= inv;
            }
        }
        acc
    }

    /// `d/dz` of the transform.
    pub(crate) fn derivative_with_log(&self, z: Complex64, l: Complex64) -> Complex64 {
        let mut acc = ZERO;
        for p in &self.poles {
            if p.is_near(z) {
                acc += p.taylor_derivative(z - p.a);
                continue;
            }
            let inv = 1.0 / (z - p.a);
            let mut pw = inv;
            for (idx, (&e, &c)) in p.e.iter().zip(&p.c).enumerate() {
                let j = (idx + 1) as f64;
                acc -= c * pw / z;
                acc -= (e - l * c) * j * pw * inv;
                pw *= inv;
            }
        }
        acc
    }

    /// Boundary value from above or below at `w > 0`.
    pub fn boundary(&self, omega: f64, side: Side) -> Complex64 {
        let l = Complex64::new(omega.ln(), -side.sign() * PI);
        self.eval_with_log(Complex64::new(omega, 0.0), l)
    }
}

pub fn cauchy_transform(eta: &RationalFunction, z: Complex64, tol: &Tolerances) -> Result<Complex64> {
    CauchyClosedForm::new(eta, tol)?.eval(z)
}

/// `int_0^inf r(w) dw` by residues.
pub fn halfline_integral(r: &RationalFunction, tol: &Tolerances) -> Result<Complex64> {
    if !r.has_integrable_tail() {
        return Err(Error::NonIntegrable("numerator degree + 2 exceeds denominator degree".into()));
    }
    r.validate_no_poles_on_halfline(tol)?;
    let pf = partial_fractions(r, tol)?;
    let mut acc = ZERO;
    for t in &pf.terms {
        let a = t.pole;
        for (idx, &c) in t.coeffs.iter().enumerate() {
            let j = idx + 1;
            if j == 1 {
                acc -= c * log_minus_raw(a);
            } else {
                acc += c * (-a).powi(1 - j as i32) / (j - 1) as f64;
            }
        }
    }
    Ok(acc)
}

/// `int_0^inf r(w) / w^p dw`; `r` must vanish to order `p` at the origin.
pub fn moment_integral(r: &RationalFunction, p: usize, tol: &Tolerances) -> Result<Complex64> {
    halfline_integral(&r.div_monomial(p, 1e-9)?, tol)
}

/// `S(0) = int_0^inf Gamma(w) / w dw`.
pub fn self_energy_zero(gamma: &GammaMatrix, tol: &Tolerances) -> Result<CMat> {
    let n = gamma.n();
    let mut out = CMat::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            out[(a, b)] = moment_integral(gamma.entry(a, b), 1, tol)?;
        }
    }
    Ok(out)
}

/// Threshold data of `A(z) = S(z) - S(0) + L(z) Gamma(z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ASeries {
    /// First order with a nonvanishing coefficient of `1/lambda^2 + A`.
    pub n_a: usize,
    /// That coefficient, `A~_{n_a}`.
    pub a_tilde: CMat,
    /// `coefficients[k - 1]` is `A_k`.
    pub coefficients: Vec<CMat>,
}

impl ASeries {
    pub fn get(&self, k: usize) -> CMat {
        self.coefficients[k - 1].clone()
    }
}

/// Self-energy matrix of one model, with every entry in closed form.
#[derive(Debug, Clone)]
pub struct SelfEnergyEvaluator {
    gamma: GammaMatrix,
    gamma_prime: GammaMatrix,
    forms: Vec<CauchyClosedForm>,
    s0: CMat,
    rat0: CMat,
    /// `A_k` for `k = 0..=THRESHOLD_TERMS` (`A_0 = 0`).
    a_taylor: Vec<CMat>,
    radius: f64,
    expansion: GammaExpansion,
}

impl SelfEnergyEvaluator {
    pub fn new(gamma: &GammaMatrix, tol: &Tolerances) -> Result<Self> {
        let n = gamma.n();
        let forms = gamma.entries().iter().map(|e| CauchyClosedForm::new(e, tol)).collect::<Result<Vec<_>>>()?;
        let s0 = self_energy_zero(gamma, tol)?;
        let taylors: Vec<Vec<Complex64>> = forms.iter().map(|f| f.rational_taylor(THRESHOLD_TERMS)).collect();
        let rat0 = CMat::from_fn(n, n, |a, b| taylors[a * n + b][0]);
        let a_taylor = (0..=THRESHOLD_TERMS)
            .map(|k| if k == 0 { CMat::zeros(n, n) } else { CMat::from_fn(n, n, |a, b| taylors[a * n + b][k]) })
            .collect();
        let radius =
            forms.iter().flat_map(|f| f.poles().collect::<Vec<_>>()).map(|a| a.norm()).fold(f64::INFINITY, f64::min);
        let max_order = gamma.entries().iter().map(|e| e.numerator().degree().unwrap_or(0)).max().unwrap_or(0);
        let expansion = gamma_small_expansion(gamma, max_order + 6, tol)?;
        Ok(Self { gamma: gamma.clone(), gamma_prime: gamma.derivative(), forms, s0, rat0, a_taylor, radius, expansion })
    }

    pub fn n(&self) -> usize {
        self.gamma.n()
    }

    pub fn gamma(&self) -> &GammaMatrix {
        &self.gamma
    }

    pub fn gamma_at(&self, z: Complex64) -> CMat {
        self.gamma.eval(z)
    }

    pub fn gamma_expansion(&self) -> &GammaExpansion {
        &self.expansion
    }

    pub fn closed_form(&self, m: usize, n: usize) -> &CauchyClosedForm {
        &self.forms[m * self.n() + n]
    }

    /// `S(0)` from the half-line integrals of `Gamma(w)/w`.
    pub fn self_energy_zero(&self) -> &CMat {
        &self.s0
    }

    /// `Rat(0)`, the same quantity through the closed form.
    pub fn rational_part_zero(&self) -> &CMat {
        &self.rat0
    }

    /// Distance from the origin to the nearest pole of `Gamma`.
    pub fn convergence_radius(&self) -> f64 {
        self.radius
    }

    fn map(&self, f: impl Fn(&CauchyClosedForm) -> Complex64) -> CMat {
        let n = self.n();
        CMat::from_fn(n, n, |a, b| f(&self.forms[a * n + b]))
    }

    pub fn self_energy(&self, z: Complex64) -> Result<CMat> {
        if z.im == 0.0 && z.re >= 0.0 {
            return Err(Error::BranchCut(z));
        }
        let l = log_minus_raw(z);
        for f in &self.forms {
            if f.poles().any(|a| (z - a).norm() <= 1e-14 * a.norm()) {
                return Err(Error::PoleCollision(z));
            }
        }
        Ok(self.map(|f| f.eval_with_log(z, l)))
    }

    pub fn self_energy_derivative(&self, z: Complex64) -> Result<CMat> {
        if z.im == 0.0 && z.re >= 0.0 {
            return Err(Error::BranchCut(z));
        }
        let l = log_minus_raw(z);
        Ok(self.map(|f| f.derivative_with_log(z, l)))
    }

    pub fn rational_part(&self, z: Complex64) -> CMat {
        self.map(|f| f.rational_part(z))
    }

    /// `A(z) = Rat(z) - Rat(0)`. Summed from its Taylor series near the origin
    /// so that small arguments keep full relative accuracy.
    pub fn a_matrix(&self, z: Complex64) -> CMat {
        if z.norm() < 0.1 * self.radius {
            let mut acc = CMat::zeros(self.n(), self.n());
            let mut pw = z;
            for coeff in &self.a_taylor[1..] {
                acc += coeff * pw;
                pw *= z;
            }
            acc
        } else {
            self.rational_part(z) - &self.rat0
        }
    }

    /// Boundary values `(D(w), Gamma(w))` with `S(w +/- i0) = D(w) +/- i pi Gamma(w)`.
    pub fn boundary_values(&self, omega: f64) -> Result<(CMat, CMat)> {
        if !(omega > 0.0) {
            return Err(Error::Domain(format!("boundary values need w > 0, got {omega}")));
        }
        let g = self.gamma.eval_real(omega);
        let d = &self.s0 + self.a_matrix(Complex64::new(omega, 0.0)) - g.scale(omega.ln());
        Ok((d, g))
    }

    /// Analytic continuation of `S` from above the cut into the lower half-plane.
    pub fn second_sheet_self_energy(&self, z: Complex64) -> Result<CMat> {
        if z.im > 0.0 {
            return Err(Error::Domain("second sheet is reached through the cut into Im z < 0".into()));
        }
        if z.im == 0.0 {
            if z.re > 0.0 {
                let (d, g) = self.boundary_values(z.re)?;
                return Ok(d + g * (I * PI));
            }
            if z.re == 0.0 {
                return Err(Error::BranchCut(z));
            }
        }
        let s = self.self_energy(z)?;
        Ok(s + self.gamma.eval(z) * (2.0 * PI * I))
    }

    pub fn second_sheet_derivative(&self, z: Complex64) -> Result<CMat> {
        Ok(self.self_energy_derivative(z)? + self.gamma_prime.eval(z) * (2.0 * PI * I))
    }

    /// `A_k` for `k >= 1`.
    pub fn a_coefficient(&self, k: usize) -> CMat {
        self.a_taylor.get(k).cloned().unwrap_or_else(|| CMat::zeros(self.n(), self.n()))
    }

    /// Threshold orders of `A~ = 1/lambda^2 + A` at coupling `lambda`.
    pub fn a_series(&self, lambda: f64, depth: usize) -> Result<ASeries> {
        if lambda == 0.0 {
            return Err(Error::Domain("A-series needs nonzero coupling".into()));
        }
        let depth = depth.clamp(1, THRESHOLD_TERMS);
        let n = self.n();
        let coefficients: Vec<CMat> = (1..=depth).map(|k| self.a_coefficient(k)).collect();
        let tilde = |k: usize| {
            let mut m = coefficients[k - 1].clone();
            if k == 1 {
                m += CMat::identity(n, n).unscale(lambda * lambda);
            }
            m
        };
        let scale = (1..=depth).map(|k| tilde(k).norm()).fold(1.0, f64::max);
        let n_a = (1..=depth).find(|&k| tilde(k).norm() > 1e-12 * scale).ok_or(Error::InconclusiveOrder(depth))?;
        let n_b = self.expansion.n_b;
        if n_b >= 2 && n_a != 1 {
            return Err(Error::RestrictionViolated { n_a, n_b });
        }
        Ok(ASeries { n_a, a_tilde: tilde(n_a), coefficients })
    }
}
