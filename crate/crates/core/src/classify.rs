//! Zero-energy classification, critical couplings, zero modes and the
//! small-`z` behaviour of the reduced resolvent.
//!
//! With `M = ker K(0)` split into `M_2 = {psi in M : Gamma_1 psi = 0}` and its
//! orthogonal complement `M_1` inside `M`, the threshold is regular
//! (`M = 0`), of the first kind (`M = M_1`), of the second kind (`M = M_2`)
//! or of the third kind (both nonzero).

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::linalg::{self, hermitian_eigen, projector, restricted_inverse, select_columns};
use crate::model::FormFactor;
use crate::polyrat::{Polynomial, RationalFunction};
use crate::resolvent::ResolventEvaluator;
use crate::selfenergy::{log_cut_positive, moment_integral, Side};
use crate::{CMat, CVec, Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Relative threshold for rank decisions on `K(0)` and on `Gamma_1` restricted to the kernel.
pub const KERNEL_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroEnergyKind {
    Regular,
    First,
    Second,
    Third,
}

impl fmt::Display for ZeroEnergyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ZeroEnergyKind::Regular => "regular",
            ZeroEnergyKind::First => "first kind",
            ZeroEnergyKind::Second => "second kind",
            ZeroEnergyKind::Third => "third kind",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroEnergyClassification {
    pub kind: ZeroEnergyKind,
    pub k_zero: CMat,
    /// Eigenvalues of `K(0)`, ascending.
    pub k_zero_eigenvalues: Vec<f64>,
    pub gamma1: CMat,
    pub tau_kernel: f64,
    pub tau_gamma: f64,
    /// Orthonormal bases (as columns) of `M_0 = M^perp`, `M_1` and `M_2`.
    pub m0: CMat,
    pub m1: CMat,
    pub m2: CMat,
    pub q0: CMat,
    pub q1: CMat,
    pub q2: CMat,
}

impl ZeroEnergyClassification {
    pub fn kernel_dim(&self) -> usize {
        self.m1.ncols() + self.m2.ncols()
    }

    /// Orthonormal basis of `M = M_1 + M_2`.
    pub fn kernel(&self) -> CMat {
        concat_columns(&self.m1, &self.m2)
    }
}

fn concat_columns(a: &CMat, b: &CMat) -> CMat {
    let mut out = CMat::zeros(a.nrows().max(b.nrows()), a.ncols() + b.ncols());
    for j in 0..a.ncols() {
        out.set_column(j, &a.column(j));
    }
    for j in 0..b.ncols() {
        out.set_column(a.ncols() + j, &b.column(j));
    }
    out
}

fn check_borderline(values: &[f64], tau: f64) -> Result<()> {
    for &v in values {
        let a = v.abs();
        if a >= 0.1 * tau && a <= 10.0 * tau {
            return Err(Error::BorderlineClassification { value: a, threshold: tau });
        }
    }
    Ok(())
}

pub fn classify_zero_energy(ev: &ResolventEvaluator) -> Result<ZeroEnergyClassification> {
    let n = ev.n();
    let k_zero = ev.k_zero().clone();
    let tau_kernel = KERNEL_THRESHOLD * ev.k_scale();
    let (kappa, vecs) = hermitian_eigen(&k_zero);
    check_borderline(&kappa, tau_kernel)?;
    let kernel_idx: Vec<usize> = (0..n).filter(|&i| kappa[i].abs() < tau_kernel).collect();
    let rest_idx: Vec<usize> = (0..n).filter(|&i| kappa[i].abs() >= tau_kernel).collect();
    let kernel = select_columns(&vecs, &kernel_idx);
    let m0 = select_columns(&vecs, &rest_idx);

    let gamma1 = ev.selfenergy().gamma_expansion().get(1);
    let g_norm = linalg::spectral_norm(&gamma1);
    let tau_gamma = KERNEL_THRESHOLD * g_norm;

    let (m1, m2) = if kernel.ncols() == 0 {
        (CMat::zeros(n, 0), CMat::zeros(n, 0))
    } else if g_norm == 0.0 {
        (CMat::zeros(n, 0), kernel.clone())
    } else {
        let restricted = kernel.adjoint() * &gamma1 * &kernel;
        let (g, u) = hermitian_eigen(&restricted);
        check_borderline(&g, tau_gamma)?;
        let small: Vec<usize> = (0..g.len()).filter(|&i| g[i].abs() < tau_gamma).collect();
        let large: Vec<usize> = (0..g.len()).filter(|&i| g[i].abs() >= tau_gamma).collect();
        (&kernel * select_columns(&u, &large), &kernel * select_columns(&u, &small))
    };

    let kind = match (m1.ncols() > 0, m2.ncols() > 0) {
        (false, false) => ZeroEnergyKind::Regular,
        (true, false) => ZeroEnergyKind::First,
        (false, true) => ZeroEnergyKind::Second,
        (true, true) => ZeroEnergyKind::Third,
    };
    Ok(ZeroEnergyClassification {
        kind,
        k_zero,
        k_zero_eigenvalues: kappa,
        gamma1,
        tau_kernel,
        tau_gamma,
        q0: projector(&m0),
        q1: projector(&m1),
        q2: projector(&m2),
        m0,
        m1,
        m2,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalCoupling {
    pub lambda_sq: f64,
    pub lambda: f64,
    /// The eigenvalue branch of `K(0)` at the returned coupling.
    pub kappa: f64,
    pub kind: ZeroEnergyKind,
}

/// Interval in `lambda^2` that must contain the zero of the `level`-th
/// eigenvalue branch of `K(0)`, widened by five percent on each side.
pub fn critical_bracket(ev: &ResolventEvaluator, level: usize) -> Result<(f64, f64)> {
    let w = *ev
        .spec()
        .levels()
        .get(level)
        .ok_or_else(|| Error::InvalidInput(format!("level index {level} out of range")))?;
    if w <= 0.0 {
        return Err(Error::Domain(format!("level {level} is not above the threshold")));
    }
    let (sigma, _) = hermitian_eigen(ev.selfenergy().self_energy_zero());
    let smax = *sigma.last().unwrap();
    let smin = sigma[0];
    let lo = w / smax * 0.95;
    let hi = if smin > 1e-12 * smax { w / smin * 1.05 } else { lo * 1e6 };
    Ok((lo, hi))
}

/// Couplings at which the `level`-th eigenvalue of `K(0)` (ascending,
/// zero-based) vanishes. Each branch decreases in `lambda^2`, so a sign change
/// on a 200-cell scan is refined by bisection.
pub fn critical_couplings(
    ev: &ResolventEvaluator,
    level: usize,
    interval: Option<(f64, f64)>,
) -> Result<Vec<CriticalCoupling>> {
    if level >= ev.n() {
        return Err(Error::InvalidInput(format!("level index {level} out of range")));
    }
    let (lo, hi) = match interval {
        Some(i) => i,
        None => critical_bracket(ev, level)?,
    };
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidInput("coupling interval must satisfy 0 < lo < hi".into()));
    }
    let k0 = ev.k0().clone();
    let s0 = ev.selfenergy().self_energy_zero().clone();
    let branch = |l2: f64| hermitian_eigen(&(&k0 - s0.scale(l2))).0[level];

    let cells = 200;
    let mut out = Vec::new();
    let mut a = lo;
    let mut fa = branch(a);
    for k in 1..=cells {
        let b = lo + (hi - lo) * k as f64 / cells as f64;
        let fb = branch(b);
        if fa == 0.0 || fa.signum() != fb.signum() {
            let (mut x0, mut x1, mut f0) = (a, b, fa);
            let mut root = if fa == 0.0 { a } else { 0.5 * (a + b) };
            if fa != 0.0 {
                for _ in 0..200 {
                    let mid = 0.5 * (x0 + x1);
                    let fm = branch(mid);
                    root = mid;
                    if fm == 0.0 || x1 - x0 <= 2.0 * f64::EPSILON * mid {
                        break;
                    }
                    if fm.signum() == f0.signum() {
                        x0 = mid;
                        f0 = fm;
                    } else {
                        x1 = mid;
                    }
                }
            }
            let at = ev.with_coupling(root.sqrt());
            let kind = classify_zero_energy(&at)?.kind;
            out.push(CriticalCoupling { lambda_sq: root, lambda: root.sqrt(), kappa: branch(root), kind });
        }
        a = b;
        fa = fb;
    }
    Ok(out)
}

/// Zero-energy eigenvector `(psi, f)` with tail `f(w) = -lambda sum_n psi_n v_n(w) / w`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroMode {
    pub psi: CVec,
    pub lambda: f64,
    /// `||f||^2 = lambda^2 int_0^inf <psi|Gamma(w)|psi> / w^2 dw`.
    pub squared_tail_norm: f64,
    form_factors: Vec<FormFactor>,
}

impl ZeroMode {
    pub fn tail(&self, omega: f64) -> Complex64 {
        let s: Complex64 = self.psi.iter().zip(&self.form_factors).map(|(p, f)| p * f.eval(omega)).sum();
        -s * self.lambda / omega
    }
}

pub fn build_zero_mode(ev: &ResolventEvaluator, cls: &ZeroEnergyClassification, psi: &CVec) -> Result<ZeroMode> {
    let norm = linalg::vector_norm(psi);
    if norm == 0.0 {
        return Err(Error::TrivialVector);
    }
    if !matches!(cls.kind, ZeroEnergyKind::Second | ZeroEnergyKind::Third) {
        return Err(Error::ClassificationMismatch {
            expected: "second or third kind".into(),
            found: cls.kind.to_string(),
        });
    }
    let g1 = (psi.adjoint() * &cls.gamma1 * psi)[(0, 0)].re;
    if g1.abs() > cls.tau_gamma * norm * norm {
        return Err(Error::NonNormalizable(g1));
    }
    let off = linalg::vector_norm(&(psi - &cls.q2 * psi));
    if off > 1e-8 * norm {
        return Err(Error::Domain("vector does not lie in M_2".into()));
    }

    let tol = ev.tolerances();
    let ffs = ev.spec().form_factors();
    let h_min = ffs.iter().map(FormFactor::half_power).min().unwrap();
    let mut w = RationalFunction::polynomial(Polynomial::zero());
    for (p, f) in psi.iter().zip(ffs) {
        let shift = ((f.half_power() - h_min) / 2) as usize;
        w = w.add(&f.tail().mul_monomial(shift).scale(*p), tol)?;
    }
    let density = w.conj().mul(&w).mul_monomial(h_min as usize);
    let integral = moment_integral(&density, 2, tol)?;
    Ok(ZeroMode {
        psi: psi.clone(),
        lambda: ev.lambda(),
        squared_tail_norm: ev.lambda_sq() * integral.re,
        form_factors: ffs.to_vec(),
    })
}

fn first_kind_parts(ev: &ResolventEvaluator, cls: &ZeroEnergyClassification) -> Result<(CMat, CMat)> {
    if cls.m1.ncols() == 0 {
        return Err(Error::ClassificationMismatch { expected: "a nonzero M_1".into(), found: cls.kind.to_string() });
    }
    let g_inv = restricted_inverse(&cls.m1, &cls.gamma1)?;
    let l2 = ev.lambda_sq();
    let a1 = ev.selfenergy().a_coefficient(1);
    let inner = &cls.q1 + (&cls.q1 * a1 * &cls.q1).scale(l2) + &cls.q1 * &cls.gamma1 * &cls.q1 * (I * PI * l2);
    let second = &g_inv * inner * &g_inv;
    Ok((g_inv, second))
}

/// Two-term approximant of `R~(z)` at a threshold of the first kind.
pub fn small_z_expansion_first_kind(
    ev: &ResolventEvaluator,
    cls: &ZeroEnergyClassification,
    z: Complex64,
) -> Result<CMat> {
    let log_z = log_cut_positive(z)?;
    first_kind_with_log(ev, cls, z, log_z)
}

/// The same approximant on either side of the cut, `log z -> log w` above and
/// `log w + 2 pi i` below.
pub fn first_kind_boundary_approximant(
    ev: &ResolventEvaluator,
    cls: &ZeroEnergyClassification,
    omega: f64,
    side: Side,
) -> Result<CMat> {
    if !(omega > 0.0) {
        return Err(Error::Domain("boundary approximant needs w > 0".into()));
    }
    let log_z = match side {
        Side::Above => Complex64::new(omega.ln(), 0.0),
        Side::Below => Complex64::new(omega.ln(), 2.0 * PI),
    };
    first_kind_with_log(ev, cls, Complex64::new(omega, 0.0), log_z)
}

fn first_kind_with_log(
    ev: &ResolventEvaluator,
    cls: &ZeroEnergyClassification,
    z: Complex64,
    log_z: Complex64,
) -> Result<CMat> {
    if cls.kind != ZeroEnergyKind::First {
        return Err(Error::ClassificationMismatch { expected: "first kind".into(), found: cls.kind.to_string() });
    }
    let (g_inv, second) = first_kind_parts(ev, cls)?;
    let l2 = ev.lambda_sq();
    Ok(g_inv / (z * log_z * l2) + second / (z * log_z * log_z * l2 * l2))
}

/// Leading term `-(1/z) [Q_2 (1 + lambda^2 A_1) Q_2]^-1` of `Q_2 R~(z) Q_2`.
pub fn small_z_expansion_second_kind(
    ev: &ResolventEvaluator,
    cls: &ZeroEnergyClassification,
    z: Complex64,
) -> Result<CMat> {
    if cls.m2.ncols() == 0 {
        return Err(Error::ClassificationMismatch { expected: "a nonzero M_2".into(), found: cls.kind.to_string() });
    }
    let n = ev.n();
    let x = CMat::identity(n, n) + ev.selfenergy().a_coefficient(1).scale(ev.lambda_sq());
    Ok(-restricted_inverse(&cls.m2, &x)? / z)
}

/// `|z Q_2 R~(z) Q_2 + [Q_2 (1 + lambda^2 A_1) Q_2]^-1|`, which vanishes like `|z log z|`.
pub fn second_kind_diagnostic(ev: &ResolventEvaluator, cls: &ZeroEnergyClassification, z: Complex64) -> Result<f64> {
    let r = ev.reduced_resolvent(z)?;
    let exact = &cls.q2 * r * &cls.q2 * z;
    let lead = small_z_expansion_second_kind(ev, cls, z)? * z;
    Ok(linalg::spectral_norm(&(exact - lead)))
}

/// Blocks `E_kl = Q_k [K(w +/- i0) - w] Q_l` and the partitioned inverse of
/// `K(w +/- i0) - w` with respect to `(M_0 + M_1) + M_2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThirdKindBlocks {
    /// `e[k][l]` is `E_kl` as an operator on the full space.
    pub e: [[CMat; 3]; 3],
    /// Inverse of `A = E` restricted to `M_0 + M_1`.
    pub a_inv: CMat,
    /// Inverse of `D = E` restricted to `M_2`.
    pub d_inv: CMat,
    pub top_left: CMat,
    pub top_right: CMat,
    pub bottom_left: CMat,
    pub bottom_right: CMat,
}

impl ThirdKindBlocks {
    /// Sum of the four partitioned blocks, equal to `R~(w +/- i0)`.
    pub fn resolvent(&self) -> CMat {
        &self.top_left + &self.top_right + &self.bottom_left + &self.bottom_right
    }
}

pub fn third_kind_blocks(
    ev: &ResolventEvaluator,
    cls: &ZeroEnergyClassification,
    omega: f64,
    side: Side,
) -> Result<ThirdKindBlocks> {
    if cls.m1.ncols() == 0 || cls.m2.ncols() == 0 {
        return Err(Error::ClassificationMismatch { expected: "third kind".into(), found: cls.kind.to_string() });
    }
    let x = ev.boundary_k_minus_w(omega, side)?;
    let q = [&cls.q0, &cls.q1, &cls.q2];
    let e = std::array::from_fn(|k| std::array::from_fn(|l| q[k] * &x * q[l]));

    let vp = concat_columns(&cls.m0, &cls.m1);
    let v2 = &cls.m2;
    let inv = |m: CMat| m.try_inverse().ok_or_else(|| Error::Numerical("singular partition block".into()));
    let a = vp.adjoint() * &x * &vp;
    let b = vp.adjoint() * &x * v2;
    let c = v2.adjoint() * &x * &vp;
    let d = v2.adjoint() * &x * v2;
    let a_i = inv(a.clone())?;
    let d_i = inv(d.clone())?;
    let s_a = inv(&a - &b * &d_i * &c)?;
    let s_d = inv(&d - &c * &a_i * &b)?;
    let tr = -(&a_i * &b * &s_d);
    let bl = -(&d_i * &c * &s_a);
    Ok(ThirdKindBlocks {
        e,
        a_inv: &vp * &a_i * vp.adjoint(),
        d_inv: v2 * &d_i * v2.adjoint(),
        top_left: &vp * s_a * vp.adjoint(),
        top_right: &vp * tr * v2.adjoint(),
        bottom_left: v2 * bl * vp.adjoint(),
        bottom_right: v2 * s_d * v2.adjoint(),
    })
}
