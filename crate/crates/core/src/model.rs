//! Model specification, scenario files and the coupling matrix `Gamma`.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::polyrat::{Polynomial, RationalFunction, Tolerances};
use crate::{CMat, Error, Result};

/// On-disk scenario. Coefficients are `[re, im]` pairs in ascending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub levels: Vec<f64>,
    pub coupling: f64,
    pub form_factors: Vec<ScenarioFormFactor>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFormFactor {
    pub half_power: u32,
    pub numerator: Vec<[f64; 2]>,
    pub denominator: Vec<[f64; 2]>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("scenario: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}

fn to_complex(pairs: &[[f64; 2]]) -> Vec<Complex64> {
    pairs.iter().map(|p| Complex64::new(p[0], p[1])).collect()
}

fn to_pairs(values: &[Complex64]) -> Vec<[f64; 2]> {
    values.iter().map(|z| [z.re, z.im]).collect()
}

/// `v(w) = w^(h/2) q(w)` with `q` rational and `q(0) != 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct FormFactor {
    half_power: u32,
    numerator: Vec<Complex64>,
    denominator: Vec<Complex64>,
    tail: RationalFunction,
}

impl FormFactor {
    pub fn new(half_power: u32, numerator: Vec<Complex64>, denominator: Vec<Complex64>) -> Result<Self> {
        if half_power == 0 {
            return Err(Error::Validation("half_power must be at least 1".into()));
        }
        let tail = RationalFunction::new(Polynomial::new(numerator.clone()), Polynomial::new(denominator.clone()))?;
        Ok(Self { half_power, numerator, denominator, tail })
    }

    pub fn real(half_power: u32, numerator: &[f64], denominator: &[f64]) -> Result<Self> {
        let lift = |c: &[f64]| c.iter().map(|&x| Complex64::new(x, 0.0)).collect::<Vec<_>>();
        Self::new(half_power, lift(numerator), lift(denominator))
    }

    pub fn half_power(&self) -> u32 {
        self.half_power
    }

    pub fn tail(&self) -> &RationalFunction {
        &self.tail
    }

    /// `v(w)` for `w >= 0`.
    pub fn eval(&self, omega: f64) -> Complex64 {
        let prefactor = if self.half_power.is_multiple_of(2) {
            omega.powi(self.half_power as i32 / 2)
        } else {
            omega.sqrt().powi(self.half_power as i32)
        };
        self.tail.eval_real(omega) * prefactor
    }

    fn issues(&self, tol: &Tolerances) -> Vec<String> {
        let mut out = Vec::new();
        if self.tail.eval_real(0.0).norm() <= tol.root * self.tail.numerator().max_abs_coeff().max(1.0) {
            out.push("q(0) vanishes; absorb the zero into half_power".into());
        }
        let dn = self.tail.numerator().degree().unwrap_or(0);
        let dd = self.tail.denominator().degree().unwrap_or(0);
        if self.half_power as usize + 2 * dn + 2 > 2 * dd {
            out.push(format!(
                "|v|^2 is not integrable at infinity: h + 2 deg(num) + 2 = {} > 2 deg(den) = {}",
                self.half_power as usize + 2 * dn + 2,
                2 * dd
            ));
        }
        match self.tail.validate_no_poles_on_halfline(tol) {
            Ok(()) => {}
            Err(Error::Validation(m)) => out.push(m),
            Err(e) => out.push(e.to_string()),
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    levels: Vec<f64>,
    coupling: f64,
    form_factors: Vec<FormFactor>,
}

impl ModelSpec {
    pub fn new(levels: Vec<f64>, coupling: f64, form_factors: Vec<FormFactor>) -> Result<Self> {
        let spec = Self { levels, coupling, form_factors };
        let report = validate_spec(&spec, &Tolerances::default());
        if !report.is_ok() {
            return Err(Error::Validation(report.issues.join("; ")));
        }
        Ok(spec)
    }

    /// Single level with `q(w) = num(w) / den(w)` given by real coefficients.
    pub fn single_level(
        level: f64,
        coupling: f64,
        half_power: u32,
        numerator: &[f64],
        denominator: &[f64],
    ) -> Result<Self> {
        Self::new(vec![level], coupling, vec![FormFactor::real(half_power, numerator, denominator)?])
    }

    pub fn from_scenario(s: &Scenario) -> Result<Self> {
        let report = validate_model(s);
        if !report.is_ok() {
            return Err(Error::Validation(report.issues.join("; ")));
        }
        let form_factors = s
            .form_factors
            .iter()
            .map(|f| FormFactor::new(f.half_power, to_complex(&f.numerator), to_complex(&f.denominator)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { levels: s.levels.clone(), coupling: s.coupling, form_factors })
    }

    pub fn to_scenario(&self) -> Scenario {
        Scenario {
            levels: self.levels.clone(),
            coupling: self.coupling,
            form_factors: self
                .form_factors
                .iter()
                .map(|f| ScenarioFormFactor {
                    half_power: f.half_power,
                    numerator: to_pairs(&f.numerator),
                    denominator: to_pairs(&f.denominator),
                })
                .collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn form_factors(&self) -> &[FormFactor] {
        &self.form_factors
    }

    pub fn with_coupling(&self, coupling: f64) -> Self {
        Self { coupling, ..self.clone() }
    }

    pub fn with_levels(&self, levels: Vec<f64>) -> Result<Self> {
        Self::new(levels, self.coupling, self.form_factors.clone())
    }

    /// Largest modulus among all form-factor poles, at least 1.
    pub fn pole_scale(&self) -> f64 {
        let tol = Tolerances::default();
        self.form_factors
            .iter()
            .filter_map(|f| f.tail.poles(&tol).ok())
            .flatten()
            .map(|r| r.value.norm())
            .fold(1.0, f64::max)
    }

    /// Smallest modulus among all form-factor poles.
    pub fn nearest_pole(&self) -> f64 {
        let tol = Tolerances::default();
        self.form_factors
            .iter()
            .filter_map(|f| f.tail.poles(&tol).ok())
            .flatten()
            .map(|r| r.value.norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// `v_n(w)` for all levels.
    pub fn couplings_at(&self, omega: f64) -> Vec<Complex64> {
        self.form_factors.iter().map(|f| f.eval(omega)).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub issues: Vec<String>,
    /// Per `(m, n)` entry of `Gamma`: numerator and denominator degrees.
    pub entries: Vec<EntryDiagnostic>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntryDiagnostic {
    pub m: usize,
    pub n: usize,
    pub numerator_degree: usize,
    pub denominator_degree: usize,
    pub integrable: bool,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.issues.is_empty()
    }
}

/// Structural checks on a scenario before any numerics run.
pub fn validate_model(s: &Scenario) -> ValidationReport {
    let mut report = ValidationReport::default();
    if s.levels.is_empty() {
        report.issues.push("at least one level is required".into());
        return report;
    }
    if s.levels.len() != s.form_factors.len() {
        report.issues.push(format!("{} levels but {} form factors", s.levels.len(), s.form_factors.len()));
        return report;
    }
    if !s.coupling.is_finite() {
        report.issues.push("coupling must be finite".into());
    }
    let mut form_factors = Vec::new();
    for (i, f) in s.form_factors.iter().enumerate() {
        let ok_coeffs = f.numerator.iter().chain(&f.denominator).all(|p| p[0].is_finite() && p[1].is_finite());
        if !ok_coeffs {
            report.issues.push(format!("form factor {i}: non-finite coefficient"));
            continue;
        }
        match FormFactor::new(f.half_power, to_complex(&f.numerator), to_complex(&f.denominator)) {
            Ok(ff) => form_factors.push(ff),
            Err(e) => report.issues.push(format!("form factor {i}: {e}")),
        }
    }
    if !report.issues.is_empty() {
        return report;
    }
    let spec = ModelSpec { levels: s.levels.clone(), coupling: s.coupling, form_factors };
    validate_spec(&spec, &Tolerances::default())
}

fn validate_spec(spec: &ModelSpec, tol: &Tolerances) -> ValidationReport {
    let mut report = ValidationReport::default();
    if spec.levels.is_empty() || spec.levels.len() != spec.form_factors.len() {
        report.issues.push("levels and form factors must be nonempty and of equal length".into());
        return report;
    }
    if spec.levels.iter().any(|x| !x.is_finite()) || !spec.coupling.is_finite() {
        report.issues.push("levels and coupling must be finite".into());
    }
    if spec.levels.windows(2).any(|w| w[0] > w[1]) {
        report.issues.push("levels must be sorted ascending".into());
    }
    let parity = spec.form_factors[0].half_power % 2;
    if spec.form_factors.iter().any(|f| f.half_power % 2 != parity) {
        report.issues.push("all half powers must share one parity".into());
    }
    for (i, f) in spec.form_factors.iter().enumerate() {
        for msg in f.issues(tol) {
            report.issues.push(format!("form factor {i}: {msg}"));
        }
    }
    if report.issues.is_empty() {
        match build_gamma(spec, tol) {
            Ok(g) => {
                for m in 0..g.n {
                    for n in 0..g.n {
                        let e = g.entry(m, n);
                        let integrable = e.has_integrable_tail();
                        if !integrable {
                            report.issues.push(format!("Gamma[{m}][{n}] is not integrable at infinity"));
                        }
                        report.entries.push(EntryDiagnostic {
                            m,
                            n,
                            numerator_degree: e.numerator().degree().unwrap_or(0),
                            denominator_degree: e.denominator().degree().unwrap_or(0),
                            integrable,
                        });
                    }
                }
            }
            Err(e) => report.issues.push(e.to_string()),
        }
    }
    report
}

/// `Gamma_mn(w) = conj(v_m(w)) v_n(w)` as rational functions.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaMatrix {
    n: usize,
    entries: Vec<RationalFunction>,
}

pub fn build_gamma(spec: &ModelSpec, tol: &Tolerances) -> Result<GammaMatrix> {
    let n = spec.n();
    let mut entries = Vec::with_capacity(n * n);
    for m in 0..n {
        for k in 0..n {
            let fm = &spec.form_factors[m];
            let fk = &spec.form_factors[k];
            let power = (fm.half_power + fk.half_power) / 2;
            let e = fm.tail.conj().mul(&fk.tail).mul_monomial(power as usize).reduce(tol)?;
            entries.push(e);
        }
    }
    Ok(GammaMatrix { n, entries })
}

impl GammaMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entry(&self, m: usize, n: usize) -> &RationalFunction {
        &self.entries[m * self.n + n]
    }

    pub fn entries(&self) -> &[RationalFunction] {
        &self.entries
    }

    pub fn eval(&self, z: Complex64) -> CMat {
        CMat::from_fn(self.n, self.n, |m, n| self.entry(m, n).eval(z))
    }

    pub fn eval_real(&self, omega: f64) -> CMat {
        self.eval(Complex64::new(omega, 0.0))
    }

    pub fn derivative(&self) -> GammaMatrix {
        GammaMatrix { n: self.n, entries: self.entries.iter().map(RationalFunction::derivative).collect() }
    }
}

/// Threshold expansion `Gamma(w) = sum_k Gamma_k w^k` starting at `n_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaExpansion {
    pub n_b: usize,
    /// `coefficients[i]` is `Gamma_{n_b + i}`.
    pub coefficients: Vec<CMat>,
}

impl GammaExpansion {
    /// `Gamma_k`; zero below `n_b` and beyond the computed depth.
    pub fn get(&self, k: usize) -> CMat {
        let n = self.coefficients.first().map_or(0, |c| c.nrows());
        k.checked_sub(self.n_b).and_then(|i| self.coefficients.get(i).cloned()).unwrap_or_else(|| CMat::zeros(n, n))
    }
}

const SERIES_THRESHOLD: f64 = 1e-12;

pub fn gamma_small_expansion(gamma: &GammaMatrix, depth: usize, tol: &Tolerances) -> Result<GammaExpansion> {
    let n = gamma.n;
    let series_matrix = |order: usize| -> Result<Vec<CMat>> {
        let per_entry = gamma.entries.iter().map(|e| e.series_at_zero(order, tol)).collect::<Result<Vec<_>>>()?;
        Ok((0..=order).map(|k| CMat::from_fn(n, n, |a, b| per_entry[a * n + b][k])).collect())
    };
    let probe = series_matrix(depth)?;
    let scale = probe.iter().map(|c| c.norm()).fold(1.0, f64::max);
    let n_b = probe.iter().position(|c| c.norm() > SERIES_THRESHOLD * scale).ok_or(Error::InconclusiveOrder(depth))?;
    let full = series_matrix(n_b + depth)?;
    Ok(GammaExpansion { n_b, coefficients: full[n_b..].to_vec() })
}
