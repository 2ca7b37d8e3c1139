//! Reduced time evolution `U(t) = (1/pi) int_0^inf Im R~(w + i0) e^(-itw) dw`,
//! survival probabilities and spectral weights.

pub mod filon;

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

pub use filon::{gauss_legendre, phase, MeshOptions, SpectralMesh};

use crate::classify::{classify_zero_energy, ZeroEnergyKind};
use crate::linalg::{self, restricted_inverse};
use crate::resolvent::ResolventEvaluator;
use crate::{CMat, CVec, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionOptions {
    /// Target absolute accuracy of the matrix entries of `U(t)`.
    pub tolerance: f64,
    pub degree: usize,
    pub max_panels: usize,
    /// Scan the positive axis for embedded eigenvalues before integrating.
    pub scan: bool,
    pub omega_min: Option<f64>,
    pub omega_max: Option<f64>,
}

impl Default for EvolutionOptions {
    fn default() -> Self {
        Self { tolerance: 1e-10, degree: 12, max_panels: 200_000, scan: true, omega_min: None, omega_max: None }
    }
}

impl EvolutionOptions {
    fn mesh_options(&self) -> MeshOptions {
        MeshOptions {
            degree: self.degree,
            rel_tol: (self.tolerance * 1e-2).clamp(1e-13, 1e-6),
            abs_tol: 0.0,
            max_panels: self.max_panels,
            min_width_ratio: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionDiagnostics {
    pub panels: usize,
    pub unresolved_panels: usize,
    pub omega_min: f64,
    pub omega_max: f64,
    /// Fitted decay exponent `p` of `|Im R~+(w)| ~ C w^-p`; zero without a tail.
    pub tail_power: f64,
    /// Estimated weight beyond `omega_max`.
    pub tail_bound: f64,
    /// Estimated error of the analytic contribution from `[0, omega_min]`.
    pub head_bound: f64,
    pub mesh_error: f64,
}

/// Precomputed spectral mesh for repeated evaluations of `U(t)`.
#[derive(Debug, Clone)]
pub struct SpectralEvolver {
    n: usize,
    kind: ZeroEnergyKind,
    mesh: Option<SpectralMesh>,
    head: CMat,
    tail_value: CMat,
    tail_power: f64,
    opts: EvolutionOptions,
    diagnostics: EvolutionDiagnostics,
}

fn density_vec(ev: &ResolventEvaluator, w: f64) -> Result<Vec<Complex64>> {
    Ok(ev.spectral_density_fast(w)?.unscale(PI).as_slice().to_vec())
}

fn to_matrix(n: usize, v: &[Complex64]) -> CMat {
    CMat::from_column_slice(n, n, v)
}

impl SpectralEvolver {
    /// Builds the mesh for times up to `|t| <= t_max`.
    pub fn new(ev: &ResolventEvaluator, t_max: f64, opts: EvolutionOptions) -> Result<Self> {
        if !(opts.tolerance > 0.0) {
            return Err(Error::InvalidInput("tolerance must be positive".into()));
        }
        let n = ev.n();
        let cls = classify_zero_energy(ev)?;
        if !matches!(cls.kind, ZeroEnergyKind::Regular | ZeroEnergyKind::First) {
            return Err(Error::ClassificationMismatch {
                expected: "regular or first kind".into(),
                found: cls.kind.to_string(),
            });
        }
        let omega_min = opts.omega_min.unwrap_or_else(|| 1e-12f64.min(1.0 / (t_max * t_max).max(1.0)));
        if ev.lambda() == 0.0 {
            let diagnostics = EvolutionDiagnostics {
                panels: 0,
                unresolved_panels: 0,
                omega_min,
                omega_max: omega_min,
                tail_power: 0.0,
                tail_bound: 0.0,
                head_bound: 0.0,
                mesh_error: 0.0,
            };
            return Ok(Self {
                n,
                kind: cls.kind,
                mesh: None,
                head: CMat::zeros(n, n),
                tail_value: CMat::zeros(n, n),
                tail_power: 0.0,
                opts,
                diagnostics,
            });
        }
        if opts.scan {
            let report = ev.scan_positive_spectrum(&ev.default_scan_grid())?;
            if let Some(p) = report
                .points
                .iter()
                .filter(|p| report.flagged.contains(&p.omega))
                .min_by(|a, b| a.min_sv_above.min(a.min_sv_below).total_cmp(&b.min_sv_above.min(b.min_sv_below)))
            {
                return Err(Error::EmbeddedEigenvalue { omega: p.omega, min_sv: p.min_sv_above.min(p.min_sv_below) });
            }
        }

        let scale = ev.spec().levels().iter().fold(ev.spec().pole_scale(), |a, &b| a.max(b.abs())).max(1.0);
        let (omega_max, tail_power, tail_bound) = match opts.omega_max {
            Some(w) => {
                let (p, c) = fit_tail(ev, w * 0.5, w)?;
                (w, p, if p > 1.0 { c * w.powf(1.0 - p) / (p - 1.0) } else { f64::INFINITY })
            }
            None => {
                let (w1, w2) = (100.0 * scale, 200.0 * scale);
                let (p, c) = fit_tail(ev, w1, w2)?;
                if p == 0.0 {
                    (w2, 0.0, 0.0)
                } else {
                    if p <= 1.0 {
                        return Err(Error::NonIntegrable(format!("spectral density decays like w^-{p:.3}")));
                    }
                    let budget = 1e-2 * opts.tolerance;
                    let w = (c / ((p - 1.0) * budget)).powf(1.0 / (p - 1.0)).clamp(w2, 1e6 * scale);
                    (w, p, c * w.powf(1.0 - p) / (p - 1.0))
                }
            }
        };

        let edges = initial_edges(ev, omega_min, omega_max)?;
        let f = |w: f64| density_vec(ev, w);
        let mesh = SpectralMesh::build(&f, &edges, n * n, opts.mesh_options())?;
        let tail_value = to_matrix(n, &f(omega_max)?);

        let (head, head_bound) = match cls.kind {
            ZeroEnergyKind::First => {
                let g = restricted_inverse(&cls.m1, &cls.gamma1)?;
                let l = omega_min.ln().abs();
                let head = g.unscale(ev.lambda_sq() * l);
                let bound = linalg::spectral_norm(&head) / l;
                (head, bound)
            }
            _ => {
                let nb = ev.selfenergy().gamma_expansion().n_b as f64;
                let head = to_matrix(n, &f(omega_min)?).scale(omega_min / (nb + 1.0));
                let bound = linalg::spectral_norm(&head);
                (head, bound)
            }
        };
        let diagnostics = EvolutionDiagnostics {
            panels: mesh.panel_count(),
            unresolved_panels: mesh.unresolved_panels(),
            omega_min,
            omega_max,
            tail_power,
            tail_bound,
            head_bound,
            mesh_error: mesh.error_estimate(),
        };
        Ok(Self { n, kind: cls.kind, mesh: Some(mesh), head, tail_value, tail_power, opts, diagnostics })
    }

    pub fn kind(&self) -> ZeroEnergyKind {
        self.kind
    }

    pub fn diagnostics(&self) -> &EvolutionDiagnostics {
        &self.diagnostics
    }

    pub fn mesh(&self) -> Option<&SpectralMesh> {
        self.mesh.as_ref()
    }

    fn tail(&self, t: f64) -> CMat {
        if self.tail_power == 0.0 {
            return CMat::zeros(self.n, self.n);
        }
        let w = self.diagnostics.omega_max;
        let p = self.tail_power;
        if (t * w).abs() <= 1.0 {
            return self.tail_value.scale(w / (p - 1.0)) * phase(t, w);
        }
        let it = Complex64::new(0.0, t);
        let factor = phase(t, w) * (1.0 / it - p / (w * it * it));
        &self.tail_value * factor
    }

    /// `U(t)`.
    pub fn evaluate(&self, t: f64) -> CMat {
        let Some(mesh) = &self.mesh else {
            return CMat::zeros(self.n, self.n);
        };
        let body = to_matrix(self.n, &mesh.fourier(t));
        let head = &self.head * phase(t, 0.5 * self.diagnostics.omega_min);
        body + head + self.tail(t)
    }

    /// `int_0^Omega w^k (1/pi) Im R~+(w) dw` over the mesh.
    pub fn moment(&self, k: i32) -> CMat {
        match &self.mesh {
            Some(m) => to_matrix(self.n, &m.moment(k)),
            None => CMat::zeros(self.n, self.n),
        }
    }

    /// The same mesh with every panel halved, for self-consistency checks.
    pub fn halved(&self, ev: &ResolventEvaluator) -> Result<Self> {
        let Some(mesh) = &self.mesh else {
            return Ok(self.clone());
        };
        let f = |w: f64| density_vec(ev, w);
        let finer = mesh.halved(&f, self.opts.mesh_options())?;
        let mut out = self.clone();
        out.diagnostics.panels = finer.panel_count();
        out.diagnostics.mesh_error = finer.error_estimate();
        out.mesh = Some(finer);
        Ok(out)
    }
}

/// Exponent and prefactor of `|Im R~+(w)| / pi ~ C w^-p` from two sample points.
fn fit_tail(ev: &ResolventEvaluator, w1: f64, w2: f64) -> Result<(f64, f64)> {
    let n = ev.n();
    let f1 = linalg::spectral_norm(&to_matrix(n, &density_vec(ev, w1)?));
    let f2 = linalg::spectral_norm(&to_matrix(n, &density_vec(ev, w2)?));
    if f1 == 0.0 || f2 == 0.0 {
        return Ok((0.0, 0.0));
    }
    let p = (f1 / f2).ln() / (w2 / w1).ln();
    Ok((p, f2 * w2.powf(p)))
}

fn initial_edges(ev: &ResolventEvaluator, omega_min: f64, omega_max: f64) -> Result<Vec<f64>> {
    let mut e = Vec::new();
    let mut w = omega_min;
    while w < omega_max {
        e.push(w);
        w *= 2.0;
    }
    let l2 = ev.lambda_sq();
    for (i, &level) in ev.spec().levels().iter().enumerate() {
        if level <= 0.0 || level >= omega_max {
            continue;
        }
        e.push(level);
        let (d, g) = ev.selfenergy().boundary_values(level)?;
        let center = level - l2 * d[(i, i)].re;
        let width = PI * l2 * g[(i, i)].re;
        if width > 0.0 && center > 0.0 {
            for k in -2..=6 {
                let s = width * 2f64.powi(k);
                e.push(center - s);
                e.push(center + s);
            }
            e.push(center);
        }
    }
    e.push(omega_max);
    let mut e: Vec<f64> = e.into_iter().filter(|&x| x >= omega_min && x <= omega_max).collect();
    e.sort_by(f64::total_cmp);
    e.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * b.abs());
    Ok(e)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeEvolutionResult {
    pub times: Vec<f64>,
    pub values: Vec<CMat>,
    /// `U(0)`, the weight of the continuous spectrum in each level.
    pub weight: CMat,
    pub kind: ZeroEnergyKind,
    pub diagnostics: EvolutionDiagnostics,
}

impl TimeEvolutionResult {
    pub fn entry(&self, m: usize, n: usize) -> Vec<Complex64> {
        self.values.iter().map(|u| u[(m, n)]).collect()
    }
}

/// `U(t)` on a grid of times, in parallel over `t`.
pub fn reduced_evolution(
    ev: &ResolventEvaluator,
    times: &[f64],
    opts: EvolutionOptions,
) -> Result<TimeEvolutionResult> {
    if times.is_empty() {
        return Err(Error::InvalidInput("time grid is empty".into()));
    }
    let t_max = times.iter().fold(1.0f64, |a, &t| a.max(t.abs()));
    let evolver = SpectralEvolver::new(ev, t_max, opts)?;
    let values: Vec<CMat> = times.par_iter().map(|&t| evolver.evaluate(t)).collect();
    Ok(TimeEvolutionResult {
        times: times.to_vec(),
        values,
        weight: evolver.evaluate(0.0),
        kind: evolver.kind(),
        diagnostics: evolver.diagnostics().clone(),
    })
}

/// `|<psi|U(t)|psi>|^2 / <psi|U(0)|psi>^2`.
pub fn survival_probability(result: &TimeEvolutionResult, psi: &CVec) -> Result<Vec<f64>> {
    let norm2 = (psi.adjoint() * &result.weight * psi)[(0, 0)].re;
    if !(norm2 > 1e-14 * psi.norm_squared().max(f64::MIN_POSITIVE)) {
        return Err(Error::Domain("survival probability is undefined: the projected norm vanishes".into()));
    }
    Ok(result.values.iter().map(|u| (psi.adjoint() * u * psi)[(0, 0)].norm_sqr() / (norm2 * norm2)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralWeight {
    pub matrix: CMat,
    pub omega_max: f64,
    pub tail_estimate: f64,
}

/// `(1/pi) int_0^Omega Im R~+ dw` plus the analytic head and tail corrections.
pub fn spectral_weight(ev: &ResolventEvaluator, omega_max: Option<f64>, tolerance: f64) -> Result<SpectralWeight> {
    let opts = EvolutionOptions { tolerance, omega_max, ..EvolutionOptions::default() };
    let evolver = SpectralEvolver::new(ev, 1.0, opts)?;
    Ok(SpectralWeight {
        matrix: linalg::hermitize(&evolver.evaluate(0.0)),
        omega_max: evolver.diagnostics().omega_max,
        tail_estimate: evolver.diagnostics().tail_bound,
    })
}

/// Mean and variance of the energy in the continuum part of `psi`.
pub fn energy_moments(evolver: &SpectralEvolver, psi: &CVec) -> (f64, f64) {
    let m = |k: i32| (psi.adjoint() * evolver.moment(k) * psi)[(0, 0)].re;
    let (m0, m1, m2) = (m(0), m(1), m(2));
    let mean = m1 / m0;
    (mean, m2 / m0 - mean * mean)
}

/// Smooth cutoff equal to one on `[0, d - a]`, zero beyond `d + a`, built from
/// the integral of the standard bump `exp(-1/(1-s^2))`.
#[derive(Debug, Clone, PartialEq)]
pub struct CutoffFunction {
    pub center: f64,
    pub half_width: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    norm: f64,
}

fn bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

impl CutoffFunction {
    pub fn new(center: f64, half_width: f64) -> Result<Self> {
        if !(half_width > 0.0 && center - half_width > 0.0) {
            return Err(Error::InvalidInput("cutoff needs 0 < d - a".into()));
        }
        let (nodes, weights) = gauss_legendre(24);
        let mut c = Self { center, half_width, nodes, weights, norm: 1.0 };
        c.norm = c.bump_integral(1.0);
        Ok(c)
    }

    /// `int_{-1}^{s} bump`.
    fn bump_integral(&self, s: f64) -> f64 {
        if s <= -1.0 {
            return 0.0;
        }
        let s = s.min(1.0);
        // composite rule: the bump is flat to all orders at the ends
        let panels = 16;
        let h = 0.5 * (s + 1.0) / panels as f64;
        (0..panels)
            .map(|k| {
                let c = -1.0 + (2 * k + 1) as f64 * h;
                self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * h * bump(c + h * x)).sum::<f64>()
            })
            .sum()
    }

    pub fn eval(&self, w: f64) -> f64 {
        let s = (w - self.center) / self.half_width;
        if s <= -1.0 {
            1.0
        } else if s >= 1.0 {
            0.0
        } else {
            (1.0 - self.bump_integral(s) / self.norm).clamp(0.0, 1.0)
        }
    }

    pub fn support_end(&self) -> f64 {
        self.center + self.half_width
    }
}

/// `int_0^inf w^-1 (log w)^-q phi(w) e^(-itw) dw` for a cutoff supported in `(0, 1)`.
/// `[0, w_min]` contributes `(log w_min)^(1-q) / (1-q)`.
pub fn inverse_log_fourier_integral(q: usize, cutoff: &CutoffFunction, t: f64, tolerance: f64) -> Result<Complex64> {
    if q < 2 {
        return Err(Error::Domain("the integral needs q >= 2".into()));
    }
    let top = cutoff.support_end();
    if top >= 1.0 {
        return Err(Error::Domain("cutoff support must end below w = 1".into()));
    }
    let omega_min = 1e-12f64.min(1.0 / (t * t).max(1.0));
    let mut edges = Vec::new();
    let mut w = omega_min;
    while w < top {
        edges.push(w);
        w *= 2.0;
    }
    edges.push(cutoff.center - cutoff.half_width);
    edges.push(cutoff.center);
    edges.push(top);
    edges.sort_by(f64::total_cmp);
    edges.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    edges.retain(|&x| x >= omega_min && x <= top);
    let f = |w: f64| Ok(vec![Complex64::new(cutoff.eval(w) / (w * w.ln().powi(q as i32)), 0.0)]);
    let opts = MeshOptions {
        rel_tol: (tolerance * 1e-2).clamp(1e-13, 1e-6),
        abs_tol: 1e-3 * tolerance,
        ..MeshOptions::default()
    };
    let mesh = SpectralMesh::build(&f, &edges, 1, opts)?;
    let l = omega_min.ln();
    let head = l.powi(1 - q as i32) / (1.0 - q as f64);
    Ok(mesh.fourier(t)[0] + head * phase(t, 0.5 * omega_min))
}
