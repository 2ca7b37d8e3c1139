mod common;

use std::f64::consts::PI;

use common::*;
use friedrichs::asymptotics::*;
use friedrichs::classify::classify_zero_energy;
use friedrichs::evolve::{inverse_log_fourier_integral, reduced_evolution, CutoffFunction, EvolutionOptions};
use friedrichs::linalg::hermitian_eigen;
use friedrichs::{CMat, Complex64, Error};

const ZETA3: f64 = 1.202_056_903_159_594_2;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn gamma_derivatives_closed_forms() {
    let g = EULER_GAMMA;
    let d = gamma_derivatives_at_one(4).unwrap();
    let p2 = PI * PI;
    assert_eq!(d[0], 1.0);
    assert!((d[1] + g).abs() < 1e-15);
    assert!((d[2] - (g * g + p2 / 6.0)).abs() < 1e-14);
    assert!((d[3] + (g.powi(3) + g * p2 / 2.0 + 2.0 * ZETA3)).abs() < 1e-13);
    let d4 = g.powi(4) + g * g * p2 + 8.0 * g * ZETA3 + 3.0 * p2 * p2 / 20.0;
    assert!((d[4] - d4).abs() < 1e-12);
    assert!(gamma_derivatives_at_one(7).is_err());
}

#[test]
fn gamma_derivatives_match_finite_differences() {
    // Stirling series for log Gamma at large argument, shifted back by the recurrence
    fn ln_gamma(x: f64) -> f64 {
        let shift = 20.0;
        let y = x + shift;
        let stirling = (y - 0.5) * y.ln() - y + 0.5 * (2.0 * PI).ln() + 1.0 / (12.0 * y) - 1.0 / (360.0 * y.powi(3))
            + 1.0 / (1260.0 * y.powi(5));
        stirling - (0..20).map(|k| (x + k as f64).ln()).sum::<f64>()
    }
    let h = 1e-3;
    let f = |x: f64| ln_gamma(x).exp();
    let d = gamma_derivatives_at_one(2).unwrap();
    let d1 = (f(1.0 + h) - f(1.0 - h)) / (2.0 * h);
    let d2 = (f(1.0 + h) - 2.0 * f(1.0) + f(1.0 - h)) / (h * h);
    assert!((d1 - d[1]).abs() < 1e-6);
    assert!((d2 - d[2]).abs() < 1e-5);
}

#[test]
fn log_fourier_leading_terms() {
    let t: f64 = 1e6;
    let l = t.ln();
    let terms = log_fourier_terms(t, 2, 2).unwrap();
    assert!((terms[0] - c(1.0 / l, 0.0)).norm() < 1e-15);
    assert!((terms[1] - c(-EULER_GAMMA, -PI / 2.0) / (l * l)).norm() < 1e-15);
    let q3 = log_fourier_terms(t, 3, 1).unwrap();
    assert!((q3[0] - c(-0.5 / (l * l), 0.0)).norm() < 1e-16);
    let q4 = log_fourier_terms(t, 4, 1).unwrap();
    assert!((q4[0] - c(1.0 / (3.0 * l.powi(3)), 0.0)).norm() < 1e-17);
    assert!(matches!(log_fourier_series(t, 1, 2), Err(Error::Domain(_))));
    assert!(log_fourier_series(2.0, 2, 2).is_err());
    assert!(log_fourier_series(t, 2, 0).is_err());
    assert!(log_fourier_series(t, 2, 7).is_err());
}

#[test]
fn log_fourier_series_tracks_quadrature() {
    let cutoff = CutoffFunction::new(0.5, 0.2).unwrap();
    for q in [2usize, 3] {
        let t = 1e8;
        let num = inverse_log_fourier_integral(q, &cutoff, t, 1e-10).unwrap();
        let terms = log_fourier_terms(t, q, 3).unwrap();
        let two = terms[0] + terms[1];
        assert!((num - two).norm() <= 2.0 * terms[2].norm(), "q={q} {num} {two} {}", terms[2]);
    }
    for t in [1e6, 1e8, 1e10] {
        let num = inverse_log_fourier_integral(2, &cutoff, t, 1e-10).unwrap();
        let errs: Vec<f64> = (1..=3).map(|n| (log_fourier_series(t, 2, n).unwrap() - num).norm()).collect();
        assert!(errs[1] < errs[0] && errs[2] < errs[1], "t={t} {errs:?}");
    }
}

#[test]
fn theorem1_structure() {
    let lambda = 0.3;
    let e = ev(&model_b(lambda));
    let cls = classify_zero_energy(&e).unwrap();
    let m = AsymptoteModel::new(&e, &cls).unwrap();
    assert_eq!(m.n_b, 2);
    let k0 = 1.0 - lambda * lambda * 0.5;
    let t = 50.0;
    let it = c(0.0, t);
    let lead = m.theorem1_terms(t, 1).unwrap()[(0, 0)];
    assert!((lead - lambda * lambda * 2.0 / it.powi(3) / (k0 * k0)).norm() < 1e-14 * lead.norm());
    // Gamma_3 = 0, Gamma_4 = -2 for w^2/(1+w^2)^2
    let full = theorem1_asymptote(&m, t).unwrap()[(0, 0)];
    let expected = lambda * lambda / (k0 * k0) * (2.0 / it.powi(3) - 2.0 * 24.0 / it.powi(5));
    assert!((full - expected).norm() < 1e-14 * full.norm());
    let ratio = m.theorem1_terms(2e3, 1).unwrap()[(0, 0)] / m.theorem1_terms(1e3, 1).unwrap()[(0, 0)];
    assert!((ratio - 0.125).norm() < 1e-14);
    assert!(theorem2_asymptote(&m, t).is_err());
    assert!(m.theorem1(0.0).is_err());

    let free = ev(&model_b(0.0));
    let m0 = AsymptoteModel::new(&free, &classify_zero_energy(&free).unwrap()).unwrap();
    assert_eq!(m0.theorem1(10.0).unwrap(), CMat::zeros(1, 1));
}

#[test]
fn theorem1_coefficients_are_psd() {
    for seed in 0..10 {
        let e = ev(&random_model(seed));
        let cls = classify_zero_energy(&e).unwrap();
        let m = AsymptoteModel::new(&e, &cls).unwrap();
        let lead = &m.coefficients[0];
        // K(0) is Hermitian, so the leading coefficient is too
        assert!((lead - lead.adjoint()).norm() < 1e-10 * lead.norm());
        let (vals, _) = hermitian_eigen(lead);
        assert!(vals[0] > -1e-10 * lead.norm());
    }
}

#[test]
fn theorem2_structure() {
    let lc = lambda_a_critical();
    let e = ev(&model_a(lc));
    let cls = classify_zero_energy(&e).unwrap();
    let m = AsymptoteModel::new(&e, &cls).unwrap();
    let v = theorem2_asymptote(&m, 1e6).unwrap()[(0, 0)];
    assert!((v - PI / (4.0 * 1e6f64.ln())).norm() < 1e-14);
    let r = m.theorem2(1e8).unwrap()[(0, 0)] / m.theorem2(1e4).unwrap()[(0, 0)];
    assert!((r - 0.5).norm() < 1e-14);
    assert!(matches!(m.theorem2(2.0), Err(Error::Domain(_))));
    assert!(m.theorem1(10.0).is_err());
    let second = ev(&model_b(2f64.sqrt()));
    assert!(AsymptoteModel::new(&second, &classify_zero_energy(&second).unwrap()).is_err());
}

#[test]
fn theorem1_residual_has_the_next_order() {
    // The three Gamma_k terms leave a relative correction 6 (1 + lambda^2 A_1) / (K(0) i t)
    // coming from the w^3 term of |R~+|^2.
    let lambda = 0.3;
    let e = ev(&model_b(lambda));
    let cls = classify_zero_energy(&e).unwrap();
    let m = AsymptoteModel::new(&e, &cls).unwrap();
    let a1 = e.selfenergy().a_coefficient(1)[(0, 0)].re;
    let k0 = e.k_zero()[(0, 0)].re;
    let predicted = 6.0 * (1.0 + lambda * lambda * a1) / k0;
    let t = 1e4;
    let opts = EvolutionOptions { tolerance: 1e-12, ..EvolutionOptions::default() };
    let u = reduced_evolution(&e, &[t], opts).unwrap().values[0][(0, 0)];
    let ratio = u / m.theorem1(t).unwrap()[(0, 0)];
    let observed = (ratio - 1.0) * c(0.0, t);
    assert!((observed - predicted).norm() < 0.05 * predicted, "{observed} {predicted}");
}

#[test]
fn order_probe_reports() {
    let grid: Vec<f64> = (0..10).map(|k| 1e-6 * 10f64.powf(k as f64 / 3.0)).collect();
    let exact =
        remainder_order_probe(|_| Ok(CMat::identity(1, 1)), |_| Ok(CMat::identity(1, 1)), &grid, 2.0, 0.0).unwrap();
    assert!(exact.exact_match && exact.pass);
    let cubic = remainder_order_probe(
        |w| Ok(CMat::from_element(1, 1, c(w.powi(3) * w.ln().powi(2), 0.0))),
        |_| Ok(CMat::zeros(1, 1)),
        &grid,
        3.0,
        2.0,
    )
    .unwrap();
    assert!((cubic.slope - 3.0).abs() < 1e-12);
    assert!(remainder_order_probe(|_| Ok(CMat::zeros(1, 1)), |_| Ok(CMat::zeros(1, 1)), &grid[..2], 1.0, 0.0).is_err());
}
