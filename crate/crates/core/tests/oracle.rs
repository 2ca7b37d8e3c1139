mod common;

use std::f64::consts::PI;

use common::*;
use friedrichs::evolve::{EvolutionOptions, SpectralEvolver};
use friedrichs::oracle::{
    convergence_study, integrate, integrate_scalar, oracle_evolution, principal_value, DiscretizedHamiltonian,
    QuadTolerance,
};
use friedrichs::selfenergy::Side;
use friedrichs::{CMat, CVec, Complex64};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn tight() -> QuadTolerance {
    QuadTolerance { abs: 1e-16, rel: 1e-14, max_intervals: 50_000 }
}

#[test]
fn quadrature_reference_integrals() {
    let a = integrate_scalar(|w| c(1.0 / (1.0 + w * w), 0.0), 0.0, f64::INFINITY, tight()).unwrap();
    assert!((a - c(PI / 2.0, 0.0)).norm() < 1e-13);
    let b = integrate_scalar(|w| c(1.0 / (1.0 + w * w).powi(2), 0.0), 0.0, f64::INFINITY, tight()).unwrap();
    assert!((b - c(PI / 4.0, 0.0)).norm() < 1e-13);
    // vector integrands share one adaptive mesh
    let r = integrate(|w| Ok(vec![c(w.cos(), 0.0), c(0.0, w * w)]), 0.0, 3.0, tight()).unwrap();
    assert!((r.value[0].re - 3f64.sin()).abs() < 1e-14);
    assert!((r.value[1].im - 9.0).abs() < 1e-13);
    assert!(r.error_estimate < 1e-13);
}

#[test]
fn principal_value_matches_closed_form() {
    // PV int_0^inf dw / ((1+w^2)(w-p)) = -(pi p/2 + ln p)/(1+p^2)
    for &p in &[0.3, 1.0, 4.0] {
        let pv = principal_value(|w| c(1.0 / (1.0 + w * w), 0.0), p, 0.0, f64::INFINITY, tight()).unwrap();
        let exact = -(PI * p / 2.0 + p.ln()) / (1.0 + p * p);
        assert!((pv.re - exact).abs() < 1e-11, "{p} {} {exact}", pv.re);
    }
}

#[test]
fn principal_value_matches_boundary_real_part() {
    let e = ev(&model_a(0.5));
    let omega = 1.0;
    let pv = principal_value(|w| c(w / (1.0 + w * w).powi(2), 0.0), omega, 0.0, f64::INFINITY, tight()).unwrap();
    let (d, gamma) = e.selfenergy().boundary_values(omega).unwrap();
    assert!((d[(0, 0)].re - pv.re).abs() < 1e-7, "{} {}", d[(0, 0)].re, pv.re);
    assert!((gamma[(0, 0)].re - 0.25).abs() < 1e-15);
}

#[test]
fn discretized_hamiltonian_is_a_valid_spectral_decomposition() {
    let spec = model_b(0.3);
    let dh = DiscretizedHamiltonian::new(&spec, 2000).unwrap();
    assert_eq!(dh.eigenpairs().len(), dh.grid().len() + 1);
    assert!(dh.ambiguous_energies().is_empty());
    let comp = dh.completeness();
    assert!((comp[(0, 0)] - c(1.0, 0.0)).norm() < 1e-10);
    // eigenvalues sorted and interlacing the grid
    let energies: Vec<f64> = dh.eigenpairs().iter().map(|e| e.energy).collect();
    assert!(energies.windows(2).all(|w| w[0] < w[1]));
    // the eigenpairs resum to the level block of the resolvent
    for z in [c(0.7, 0.3), c(-2.0, 0.5), c(20.0, 1.0)] {
        let sum = dh
            .eigenpairs()
            .iter()
            .fold(CMat::zeros(1, 1), |acc, ep| acc + &ep.levels * ep.levels.adjoint() / (ep.energy - z));
        let direct = dh.resolvent(z).unwrap();
        assert!((&sum - &direct).norm() < 1e-10 * direct.norm(), "{z} {sum} {direct}");
    }
}

#[test]
fn evolution_is_contractive_and_starts_at_the_positive_weight() {
    let dh = DiscretizedHamiltonian::new(&model_b(0.3), 1000).unwrap();
    let psi = CVec::from_vec(vec![c(1.0, 0.0)]);
    let w0 = oracle_evolution(&dh, &psi, 0.0);
    let positive: f64 = dh.eigenpairs().iter().filter(|e| e.energy > 0.0).map(|e| e.levels.norm_squared()).sum();
    assert!((w0.re - positive).abs() < 1e-12 && w0.im.abs() < 1e-14);
    for &t in &[0.5, 3.0, 40.0] {
        assert!(oracle_evolution(&dh, &psi, t).norm() <= w0.re + 1e-12);
    }
}

#[test]
fn free_levels_evolve_by_a_phase() {
    let dh = DiscretizedHamiltonian::new(&model_b(0.0), 500).unwrap();
    let psi = CVec::from_vec(vec![c(1.0, 0.0)]);
    for &t in &[0.0, 1.0, 7.5] {
        let u = oracle_evolution(&dh, &psi, t);
        assert!((u - Complex64::from_polar(1.0, -t)).norm() < 1e-12, "{t} {u}");
    }
}

#[test]
fn discretized_resolvent_converges_to_reduced_resolvent() {
    for spec in [model_a(0.5), model_b(0.3)] {
        let e = ev(&spec);
        let dh = DiscretizedHamiltonian::new(&spec, 8000).unwrap();
        for z in [c(-1.0, 0.0), c(1.0, 1.0)] {
            let exact = e.reduced_resolvent(z).unwrap();
            let disc = dh.resolvent(z).unwrap();
            let rel = (&disc - &exact).norm() / exact.norm();
            assert!(rel < 1e-3, "{z} {rel}");
        }
    }
}

#[test]
fn discretized_density_matches_boundary_resolvent_on_average() {
    // cell-averaged level weights approximate (1/pi) Im R+(w) dw
    let spec = model_b(0.3);
    let e = ev(&spec);
    let dh = DiscretizedHamiltonian::new(&spec, 4000).unwrap();
    let (a, b) = (0.3, 2.5);
    let disc: f64 =
        dh.eigenpairs().iter().filter(|p| p.energy > a && p.energy <= b).map(|p| p.levels.norm_squared()).sum();
    let exact =
        integrate_scalar(|w| c(e.boundary_resolvent(w, Side::Above).unwrap()[(0, 0)].im / PI, 0.0), a, b, tight())
            .unwrap()
            .re;
    assert!((disc - exact).abs() < 2e-3 * exact, "{disc} {exact}");
}

#[test]
fn evolution_amplitude_converges_at_first_order_or_better() {
    let spec = model_b(0.3);
    let e = ev(&spec);
    let evo = SpectralEvolver::new(&e, 10.0, EvolutionOptions::default()).unwrap();
    let psi = CVec::from_vec(vec![c(1.0, 0.0)]);
    let times = [1.0, 5.0, 10.0];
    let reference: Vec<Complex64> = times.iter().map(|&t| evo.evaluate(t)[(0, 0)]).collect();
    let q = |dh: &DiscretizedHamiltonian| times.iter().map(|&t| oracle_evolution(dh, &psi, t)).collect::<Vec<_>>();
    let report = convergence_study(&spec, &[1000, 2000, 4000], q, Some(&reference)).unwrap();
    assert!(report.errors.windows(2).all(|w| w[1] < w[0]), "{:?}", report.errors);
    assert!(report.observed_order >= 1.0, "{report:?}");
    assert!(report.errors[2] < 1e-4);
}

#[test]
fn successive_differences_shrink() {
    let q = |dh: &DiscretizedHamiltonian| vec![dh.evolution(2.0)[(0, 0)]];
    let report = convergence_study(&model_a(0.5), &[1000, 2000, 4000, 8000], q, None).unwrap();
    assert_eq!(report.errors.len(), 3);
    assert!(report.errors.windows(2).all(|w| w[1] < w[0]), "{:?}", report.errors);
}

#[test]
fn convergence_study_needs_three_grids() {
    let q = |_: &DiscretizedHamiltonian| vec![c(0.0, 0.0)];
    assert!(convergence_study(&model_a(0.5), &[500, 1000], q, None).is_err());
}
