mod common;

use std::f64::consts::PI;

use common::*;
use friedrichs::evolve::*;
use friedrichs::linalg::{hermitian_eigen, spectral_norm};
use friedrichs::oracle::{integrate_scalar, DiscretizedHamiltonian, QuadTolerance};
use friedrichs::{CMat, CVec, Complex64, Error};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn one() -> CVec {
    CVec::from_element(1, c(1.0, 0.0))
}

#[test]
fn gauss_legendre_is_exact_for_polynomials() {
    let (x, w) = gauss_legendre(10);
    for k in 0..20 {
        let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum();
        let exact = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
        assert!((q - exact).abs() < 1e-14);
    }
}

#[test]
fn phase_is_accurate_at_large_arguments() {
    let (t, w) = (1e4, 1_234.567_890_123);
    let p = phase(t, w);
    // the product t w is not exactly representable; the phase must still use it exactly
    let exact_arg = 12_345_678.901_23_f64;
    assert!((p.norm() - 1.0).abs() < 1e-15);
    assert!((p - Complex64::from_polar(1.0, -exact_arg)).norm() < 1e-8);
}

#[test]
fn filon_mesh_matches_quadrature() {
    let f = |w: f64| Ok(vec![c(1.0 / (1.0 + w * w), 0.0), c(w * (-w).exp(), w.sin() / (1.0 + w))]);
    let edges: Vec<f64> = (0..=10).map(|k| 5.0 * k as f64).collect();
    let mesh = SpectralMesh::build(&f, &edges, 2, MeshOptions::default()).unwrap();
    assert_eq!(mesh.unresolved_panels(), 0);
    let tol = QuadTolerance { abs: 1e-14, rel: 1e-13, max_intervals: 10_000 };
    for &t in &[0.0, 0.7, 13.0, 400.0, 5e3] {
        let got = mesh.fourier(t);
        for (k, &got) in got.iter().enumerate() {
            let g = |w: f64| f(w).unwrap()[k] * Complex64::from_polar(1.0, -t * w);
            let oracle: Complex64 =
                (0..500).map(|j| integrate_scalar(g, 0.1 * j as f64, 0.1 * (j + 1) as f64, tol).unwrap()).sum();
            assert!((got - oracle).norm() < 1e-10, "t={t} k={k} {got} {oracle}");
        }
    }
    let m1 = mesh.moment(1)[0];
    assert!((m1 - c(0.5 * (1.0 + 2500.0f64).ln(), 0.0)).norm() < 1e-11);
    assert!(mesh.interpolate(100.0).is_none());
    let v = mesh.interpolate(3.3).unwrap();
    assert!((v[0] - 1.0 / (1.0 + 3.3 * 3.3)).norm() < 1e-12);
}

#[test]
fn filon_budget_is_reported() {
    let f = |w: f64| Ok(vec![c((1.0 / w).sin(), 0.0)]);
    let opts = MeshOptions { max_panels: 20, ..MeshOptions::default() };
    let r = SpectralMesh::build(&f, &[1e-6, 1.0], 1, opts);
    assert!(matches!(r, Err(Error::BudgetExceeded { .. })));
}

#[test]
fn free_model_evolves_to_zero() {
    let r = reduced_evolution(&ev(&model_b(0.0)), &[0.0, 1.0, 10.0], EvolutionOptions::default()).unwrap();
    assert!(r.values.iter().all(|u| u.norm() == 0.0));
    assert!(matches!(survival_probability(&r, &one()), Err(Error::Domain(_))));
}

#[test]
fn time_zero_is_the_spectral_weight() {
    let e = ev(&model_a(0.3));
    let r = reduced_evolution(&e, &[0.0], EvolutionOptions::default()).unwrap();
    let w = spectral_weight(&e, None, 1e-10).unwrap();
    assert!((&r.values[0] - &w.matrix).norm() < 1e-9);
    // no bound state, so the continuum carries all the weight
    assert!((w.matrix[(0, 0)] - 1.0).norm() < 1e-6);
    let (vals, _) = hermitian_eigen(&(CMat::identity(1, 1) - &w.matrix));
    assert!(vals[0] > -1e-6);
}

#[test]
fn bound_state_reduces_the_weight() {
    let e = ev(&model_a(1.5));
    let bound = e.find_negative_eigenvalues().unwrap();
    assert_eq!(bound.len(), 1);
    // <1|E_b> for the normalized bound state is 1 / sqrt(1 + lambda^2 int Gamma/(w - E)^2)
    let eb = bound[0].energy;
    let norm = 1.0 + 2.25 * quad(|w| w / ((1.0 + w * w).powi(2) * (w - eb).powi(2)));
    let w = spectral_weight(&e, None, 1e-10).unwrap();
    assert!((w.matrix[(0, 0)].re - (1.0 - 1.0 / norm)).abs() < 1e-6);
}

#[test]
fn time_reversal_and_contraction() {
    let e = ev(&random_model(9));
    let ev_ = SpectralEvolver::new(&e, 100.0, EvolutionOptions::default()).unwrap();
    let u0 = spectral_norm(&ev_.evaluate(0.0));
    for &t in &[0.3, 4.0, 77.0] {
        let up = ev_.evaluate(t);
        let down = ev_.evaluate(-t);
        assert!((up.adjoint() - down).norm() < 1e-9);
        assert!(spectral_norm(&up) <= u0 + 1e-9);
    }
}

#[test]
fn halving_panels_changes_nothing() {
    let e = ev(&model_b(0.3));
    let coarse = SpectralEvolver::new(&e, 1e3, EvolutionOptions::default()).unwrap();
    let fine = coarse.halved(&e).unwrap();
    assert!(fine.diagnostics().panels == 2 * coarse.diagnostics().panels);
    for &t in &[0.0, 1.0, 30.0, 1e3] {
        assert!((coarse.evaluate(t) - fine.evaluate(t)).norm() < 1e-10);
    }
}

#[test]
fn survival_and_zeno_onset() {
    let lambda = 0.2;
    let e = ev(&model_b(lambda));
    let evolver = SpectralEvolver::new(&e, 1.0, EvolutionOptions::default()).unwrap();
    let (mean, var) = energy_moments(&evolver, &one());
    // energy variance of the level from the discretized Hamiltonian
    let dh = DiscretizedHamiltonian::new(&model_b(lambda), 4000).unwrap();
    let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for p in dh.eigenpairs().iter().filter(|p| p.energy > 0.0) {
        let wgt = p.levels[0].norm_sqr();
        m0 += wgt;
        m1 += wgt * p.energy;
        m2 += wgt * p.energy * p.energy;
    }
    let oracle_mean = m1 / m0;
    let oracle_var = m2 / m0 - oracle_mean * oracle_mean;
    assert!((mean - oracle_mean).abs() < 1e-3 * oracle_mean, "{mean} {oracle_mean}");
    assert!((var - oracle_var).abs() < 2e-2 * oracle_var, "{var} {oracle_var}");
    // second moment of w^2 Im R ~ w^-2 converges slowly on the finite mesh; compare the quadratic onset instead
    let times: Vec<f64> = (0..8).map(|k| 1e-3 * (1.0 + k as f64)).collect();
    let r = reduced_evolution(&e, &[&[0.0][..], &times].concat(), EvolutionOptions::default()).unwrap();
    let p = survival_probability(&r, &one()).unwrap();
    assert!((p[0] - 1.0).abs() < 1e-12);
    assert!(p.iter().all(|&x| (0.0..=1.0 + 1e-9).contains(&x)));
    let fit: f64 = times.iter().zip(&p[1..]).map(|(t, p)| (1.0 - p) / (t * t)).sum::<f64>() / times.len() as f64;
    assert!((fit - var).abs() < 0.02 * var, "{fit} {var}");
}

#[test]
fn non_regular_kinds_are_rejected() {
    let e = ev(&model_b(2f64.sqrt()));
    let r = reduced_evolution(&e, &[1.0], EvolutionOptions::default());
    assert!(matches!(r, Err(Error::ClassificationMismatch { .. })));
    assert!(reduced_evolution(&ev(&model_b(0.3)), &[], EvolutionOptions::default()).is_err());
    let bad = EvolutionOptions { tolerance: 0.0, ..EvolutionOptions::default() };
    assert!(reduced_evolution(&ev(&model_b(0.3)), &[1.0], bad).is_err());
}

#[test]
fn cutoff_properties() {
    let phi = CutoffFunction::new(0.5, 0.2).unwrap();
    assert_eq!(phi.eval(0.1), 1.0);
    assert_eq!(phi.eval(0.3), 1.0);
    assert_eq!(phi.eval(0.7), 0.0);
    assert!((phi.eval(0.5) - 0.5).abs() < 1e-14);
    // symmetric about the center and monotone
    for k in 1..20 {
        let s = 0.2 * k as f64 / 20.0;
        assert!((phi.eval(0.5 - s) + phi.eval(0.5 + s) - 1.0).abs() < 1e-13);
        assert!(phi.eval(0.5 + s) <= phi.eval(0.5 + s - 0.01));
    }
    assert!(CutoffFunction::new(0.1, 0.2).is_err());
    assert!(inverse_log_fourier_integral(2, &CutoffFunction::new(0.9, 0.2).unwrap(), 1e3, 1e-8).is_err());
    assert!(inverse_log_fourier_integral(1, &phi, 1e3, 1e-8).is_err());
}

#[test]
fn inverse_log_integral_at_time_zero() {
    // with t = 0 the integrand integrates in closed form where phi = 1
    let phi = CutoffFunction::new(0.5, 0.2).unwrap();
    let tol = QuadTolerance { abs: 1e-14, rel: 1e-12, max_intervals: 10_000 };
    let rest = integrate_scalar(|w| c(phi.eval(w) / (w * w.ln().powi(2)), 0.0), 0.3, 0.7, tol).unwrap().re;
    let expected = -1.0 / 0.3f64.ln() + rest;
    let got = inverse_log_fourier_integral(2, &phi, 0.0, 1e-10).unwrap();
    assert!((got - c(expected, 0.0)).norm() < 1e-9, "{got} {expected}");
    let _ = PI;
}
