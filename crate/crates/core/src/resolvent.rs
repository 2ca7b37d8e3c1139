//! Reduced resolvent `R~(z) = [K(z) - z]^-1` with `K(z) = K0 - lambda^2 S(z)`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::linalg::{self, from_real_diagonal, hermitian_eigen, hermitize, min_singular_value};
use crate::model::{build_gamma, ModelSpec};
use crate::polyrat::Tolerances;
use crate::selfenergy::{log_minus_raw, SelfEnergyEvaluator, Side};
use crate::{CMat, CVec, Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Condition number beyond which `K(z) - z` is reported as singular.
const MAX_CONDITION: f64 = 1e12;
/// Smallest singular value of `K(w +/- i0) - w` treated as an embedded eigenvalue.
pub const EMBEDDED_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct ResolventEvaluator {
    spec: ModelSpec,
    selfenergy: Arc<SelfEnergyEvaluator>,
    k0: CMat,
    k_zero: CMat,
    lambda: f64,
    tol: Tolerances,
}

impl ResolventEvaluator {
    pub fn new(spec: &ModelSpec) -> Result<Self> {
        Self::with_tolerances(spec, Tolerances::default())
    }

    pub fn with_tolerances(spec: &ModelSpec, tol: Tolerances) -> Result<Self> {
        let gamma = build_gamma(spec, &tol)?;
        let se = Arc::new(SelfEnergyEvaluator::new(&gamma, &tol)?);
        Ok(Self::assemble(spec.clone(), se, tol))
    }

    fn assemble(spec: ModelSpec, selfenergy: Arc<SelfEnergyEvaluator>, tol: Tolerances) -> Self {
        let lambda = spec.coupling();
        let k0 = from_real_diagonal(spec.levels());
        let k_zero = hermitize(&(&k0 - selfenergy.self_energy_zero().scale(lambda * lambda)));
        Self { spec, selfenergy, k0, k_zero, lambda, tol }
    }

    /// Same form factors and levels at another coupling; the self-energy is shared.
    pub fn with_coupling(&self, lambda: f64) -> Self {
        Self::assemble(self.spec.with_coupling(lambda), Arc::clone(&self.selfenergy), self.tol)
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn n(&self) -> usize {
        self.spec.n()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn lambda_sq(&self) -> f64 {
        self.lambda * self.lambda
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    pub fn selfenergy(&self) -> &SelfEnergyEvaluator {
        &self.selfenergy
    }

    pub fn k0(&self) -> &CMat {
        &self.k0
    }

    /// `K(0) = K0 - lambda^2 S(0)`, Hermitian.
    pub fn k_zero(&self) -> &CMat {
        &self.k_zero
    }

    /// Scale for rank decisions on `K(0)`: the larger of `|K0|` and `lambda^2 |S(0)|`.
    pub fn k_scale(&self) -> f64 {
        let s = linalg::spectral_norm(self.selfenergy.self_energy_zero()) * self.lambda_sq();
        linalg::spectral_norm(&self.k0).max(s).max(f64::MIN_POSITIVE)
    }

    fn near_form_pole(&self, z: Complex64) -> bool {
        let n = self.n();
        (0..n).any(|a| {
            (0..n).any(|b| self.selfenergy.closed_form(a, b).poles().any(|p| (z - p).norm() < 1e-3 * p.norm()))
        })
    }

    /// `K(z) - z` off the cut. Near the origin it is assembled as
    /// `K(0) - lambda^2 A(z) + lambda^2 L(z) Gamma(z) - z`, which keeps full
    /// relative accuracy as `z -> 0`.
    pub fn k_minus_z(&self, z: Complex64) -> Result<CMat> {
        if z.im == 0.0 && z.re >= 0.0 {
            return Err(Error::BranchCut(z));
        }
        let n = self.n();
        let l2 = self.lambda_sq();
        let id = CMat::identity(n, n);
        if self.near_form_pole(z) {
            let s = self.selfenergy.self_energy(z)?;
            return Ok(&self.k0 - s.scale(l2) - id * z);
        }
        let l = log_minus_raw(z);
        let g = self.selfenergy.gamma_at(z);
        Ok(&self.k_zero - self.selfenergy.a_matrix(z).scale(l2) + g * (l * l2) - id * z)
    }

    pub fn k_matrix(&self, z: Complex64) -> Result<CMat> {
        let n = self.n();
        Ok(self.k_minus_z(z)? + CMat::identity(n, n) * z)
    }

    pub fn reduced_resolvent(&self, z: Complex64) -> Result<CMat> {
        let m = self.k_minus_z(z)?;
        invert_checked(&m, z)
    }

    /// `K(w +/- i0) - w` for `w > 0`.
    pub fn boundary_k_minus_w(&self, omega: f64, side: Side) -> Result<CMat> {
        if !(omega > 0.0) {
            return Err(Error::Domain(format!("boundary values need w > 0, got {omega}")));
        }
        let n = self.n();
        let l2 = self.lambda_sq();
        let z = Complex64::new(omega, 0.0);
        let g = self.selfenergy.gamma_at(z);
        let a = self.selfenergy.a_matrix(z);
        let log_term = Complex64::new(omega.ln(), -side.sign() * PI) * l2;
        Ok(&self.k_zero - a.scale(l2) + g * log_term - CMat::identity(n, n).scale(omega))
    }

    /// `K(w +/- i0)`.
    pub fn boundary_k(&self, omega: f64, side: Side) -> Result<CMat> {
        let n = self.n();
        Ok(self.boundary_k_minus_w(omega, side)? + CMat::identity(n, n) * Complex64::new(omega, 0.0))
    }

    /// `R~(w +/- i0)`; fails when `K(w +/- i0) - w` is nearly singular.
    pub fn boundary_resolvent(&self, omega: f64, side: Side) -> Result<CMat> {
        let m = self.boundary_k_minus_w(omega, side)?;
        let sv = min_singular_value(&m);
        if sv < EMBEDDED_THRESHOLD {
            return Err(Error::EmbeddedEigenvalue { omega, min_sv: sv });
        }
        m.try_inverse().ok_or(Error::EmbeddedEigenvalue { omega, min_sv: sv })
    }

    /// Boundary resolvent without the singular-value guard; for hot loops that
    /// have already scanned the spectrum.
    pub(crate) fn boundary_resolvent_fast(&self, omega: f64, side: Side) -> Result<CMat> {
        let m = self.boundary_k_minus_w(omega, side)?;
        m.try_inverse().ok_or(Error::EmbeddedEigenvalue { omega, min_sv: 0.0 })
    }

    /// `Im R~(w + i0) = lambda^2 pi R~+ Gamma R~-`, Hermitian and positive semidefinite.
    pub fn spectral_density(&self, omega: f64) -> Result<CMat> {
        let r = self.boundary_resolvent(omega, Side::Above)?;
        Ok(self.density_from(&r, omega))
    }

    pub(crate) fn spectral_density_fast(&self, omega: f64) -> Result<CMat> {
        let r = self.boundary_resolvent_fast(omega, Side::Above)?;
        Ok(self.density_from(&r, omega))
    }

    fn density_from(&self, r_plus: &CMat, omega: f64) -> CMat {
        let g = self.selfenergy.gamma_at(Complex64::new(omega, 0.0));
        let m = (r_plus * g * r_plus.adjoint()).scale(self.lambda_sq() * PI);
        hermitize(&m)
    }

    /// `(R~+ - R~-) / 2i`, the same density through the difference of the two
    /// boundary values.
    pub fn spectral_density_difference(&self, omega: f64) -> Result<CMat> {
        let rp = self.boundary_resolvent(omega, Side::Above)?;
        let rm = self.boundary_resolvent(omega, Side::Below)?;
        Ok((rp - rm) / (2.0 * I))
    }

    /// Smallest singular values of `K(w +/- i0) - w` over a grid, flagging
    /// points below the embedded-eigenvalue threshold.
    pub fn scan_positive_spectrum(&self, grid: &[f64]) -> Result<ScanReport> {
        let points = grid
            .par_iter()
            .map(|&w| {
                let plus = min_singular_value(&self.boundary_k_minus_w(w, Side::Above)?);
                let minus = min_singular_value(&self.boundary_k_minus_w(w, Side::Below)?);
                Ok(ScanPoint { omega: w, min_sv_above: plus, min_sv_below: minus })
            })
            .collect::<Result<Vec<_>>>()?;
        let flagged = points
            .iter()
            .filter(|p| p.min_sv_above.min(p.min_sv_below) < EMBEDDED_THRESHOLD)
            .map(|p| p.omega)
            .collect();
        Ok(ScanReport { points, flagged })
    }

    /// Default scan grid: logarithmic from `1e-8` to well beyond the levels and
    /// the form-factor poles, refined around each level.
    pub fn default_scan_grid(&self) -> Vec<f64> {
        let top = 100.0 * self.spec.pole_scale().max(self.spec.levels().iter().fold(1.0, |a, &b| a.max(b.abs())));
        let mut grid: Vec<f64> = (0..=1600).map(|k| 1e-8 * (top / 1e-8).powf(k as f64 / 1600.0)).collect();
        for &w in self.spec.levels() {
            if w > 0.0 {
                grid.extend((-50..=50).map(|k| w * (1.0 + 0.01 * k as f64 / 5.0)).filter(|&x| x > 0.0));
            }
        }
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        grid
    }

    /// Eigenvalues of `H` below the threshold, with the level components of
    /// their eigenvectors. Each eigenvalue branch of the Hermitian matrix
    /// `K(x) - x` decreases strictly in `x < 0`, so every branch that is
    /// negative at `0-` crosses zero exactly once.
    pub fn find_negative_eigenvalues(&self) -> Result<Vec<BoundState>> {
        let l2 = self.lambda_sq();
        let s0_norm = linalg::spectral_norm(self.selfenergy.self_energy_zero());
        let reach = self.spec.levels().iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
        let x_max = reach + 2.0 * l2 * s0_norm + 1.0;
        let branches = |x: f64| -> Result<(Vec<f64>, CMat)> {
            let m = self.k_minus_z(Complex64::new(x, 0.0))?;
            Ok(hermitian_eigen(&hermitize(&m)))
        };
        let (at_zero, _) = hermitian_eigen(&self.k_zero);
        let mut out = Vec::new();
        for (i, &k) in at_zero.iter().enumerate() {
            if k >= 0.0 {
                continue;
            }
            let (mut a, mut b) = (-x_max, -1e-14 * x_max);
            if branches(b)?.0[i] >= 0.0 {
                // The crossing sits closer to the threshold than we can resolve.
                continue;
            }
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if branches(mid)?.0[i] > 0.0 {
                    a = mid;
                } else {
                    b = mid;
                }
                if b - a <= 1e-15 * b.abs() {
                    break;
                }
            }
            let x = 0.5 * (a + b);
            let (vals, vecs) = branches(x)?;
            let vector: CVec = vecs.column(i).into_owned();
            let residual = linalg::vector_norm(&(self.k_minus_z(Complex64::new(x, 0.0))? * &vector));
            out.push(BoundState { energy: x, vector, residual, branch_value: vals[i] });
        }
        out.sort_by(|a, b| a.energy.total_cmp(&b.energy));
        Ok(out)
    }

    /// Zeros of `det(K_II(z) - z)` in a rectangle of the lower half-plane,
    /// found by Newton iteration from a grid of seeds. The logarithmic
    /// derivative of the determinant is `tr(M^-1 M')`.
    pub fn find_resonance_poles(&self, rect: SearchRect, seeds: (usize, usize)) -> Result<ResonanceSearch> {
        if rect.im_max > -1e-3 || rect.im_min >= rect.im_max || rect.re_min >= rect.re_max {
            return Err(Error::InvalidInput("search rectangle must lie in Im z <= -1e-3 with positive extent".into()));
        }
        let (nr, ni) = (seeds.0.max(1), seeds.1.max(1));
        let seed_points: Vec<Complex64> = (0..nr)
            .flat_map(|a| {
                (0..ni).map(move |b| {
                    let re = rect.re_min + (a as f64 + 0.5) / nr as f64 * (rect.re_max - rect.re_min);
                    let im = rect.im_min + (b as f64 + 0.5) / ni as f64 * (rect.im_max - rect.im_min);
                    Complex64::new(re, im)
                })
            })
            .collect();
        let outcomes: Vec<std::result::Result<ResonancePole, SeedFailure>> =
            seed_points.par_iter().map(|&z0| self.newton_resonance(z0, &rect)).collect();
        let mut poles: Vec<ResonancePole> = Vec::new();
        let mut failures = Vec::new();
        for o in outcomes {
            match o {
                Ok(p) => {
                    if !poles.iter().any(|q| (q.z - p.z).norm() < 1e-8 * (1.0 + p.z.norm())) {
                        poles.push(p);
                    }
                }
                Err(f) => failures.push(f),
            }
        }
        poles.sort_by(|a, b| a.z.re.total_cmp(&b.z.re).then(a.z.im.total_cmp(&b.z.im)));
        Ok(ResonanceSearch { poles, failures })
    }

    fn second_sheet_matrix(&self, z: Complex64) -> Result<(CMat, CMat)> {
        let n = self.n();
        let l2 = self.lambda_sq();
        let id = CMat::identity(n, n);
        let s = self.selfenergy.second_sheet_self_energy(z)?;
        let ds = self.selfenergy.second_sheet_derivative(z)?;
        Ok((&self.k0 - s.scale(l2) - &id * z, -ds.scale(l2) - id))
    }

    fn newton_resonance(&self, z0: Complex64, rect: &SearchRect) -> std::result::Result<ResonancePole, SeedFailure> {
        let fail = |reason: &str| SeedFailure { seed: z0, reason: reason.to_string() };
        let mut z = z0;
        for _ in 0..80 {
            let (m, dm) = self.second_sheet_matrix(z).map_err(|e| fail(&e.to_string()))?;
            let inv = match m.clone().try_inverse() {
                Some(inv) => inv,
                None => return Ok(ResonancePole { z, abs_det: 0.0 }),
            };
            let trace = (inv * dm).trace();
            if trace.norm() == 0.0 {
                return Err(fail("vanishing logarithmic derivative"));
            }
            let step = -1.0 / trace;
            let step = if step.norm() > 0.25 * (1.0 + z.norm()) {
                step * (0.25 * (1.0 + z.norm()) / step.norm())
            } else {
                step
            };
            z += step;
            if !(z.im < 0.0) {
                return Err(fail("iterate left the lower half-plane"));
            }
            if step.norm() < 1e-14 * (1.0 + z.norm()) {
                break;
            }
        }
        if !rect.contains(z) {
            return Err(fail("converged outside the search rectangle"));
        }
        let (m, _) = self.second_sheet_matrix(z).map_err(|e| fail(&e.to_string()))?;
        let abs_det = m.determinant().norm();
        if abs_det > 1e-10 {
            return Err(fail("Newton iteration did not converge"));
        }
        Ok(ResonancePole { z, abs_det })
    }
}

fn invert_checked(m: &CMat, z: Complex64) -> Result<CMat> {
    let det_abs = m.determinant().norm();
    let inv = m.clone().try_inverse().ok_or(Error::EigenvalueProximity { z, det_abs })?;
    if linalg::condition_1(m, &inv) > MAX_CONDITION {
        return Err(Error::EigenvalueProximity { z, det_abs });
    }
    Ok(inv)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint {
    pub omega: f64,
    pub min_sv_above: f64,
    pub min_sv_below: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanReport {
    pub points: Vec<ScanPoint>,
    pub flagged: Vec<f64>,
}

impl ScanReport {
    pub fn is_clean(&self) -> bool {
        self.flagged.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundState {
    pub energy: f64,
    /// Normalized null vector of `K(E) - E`.
    pub vector: CVec,
    pub residual: f64,
    pub branch_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchRect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl SearchRect {
    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonancePole {
    pub z: Complex64,
    pub abs_det: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedFailure {
    pub seed: Complex64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceSearch {
    pub poles: Vec<ResonancePole>,
    pub failures: Vec<SeedFailure>,
}
