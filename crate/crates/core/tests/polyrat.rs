use friedrichs::polyrat::*;
use friedrichs::{Complex64, Error};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn tol() -> Tolerances {
    Tolerances::default()
}

#[test]
fn roots_of_quadratic_without_real_roots() {
    let p = Polynomial::from_real(&[1.0, 0.0, 1.0]);
    let roots = poly_roots(&p, &tol()).unwrap();
    assert_eq!(roots.len(), 2);
    assert!((roots[0].value - c(0.0, -1.0)).norm() < 1e-14);
    assert!((roots[1].value - c(0.0, 1.0)).norm() < 1e-14);
}

#[test]
fn repeated_roots_are_clustered() {
    let a = c(-1.0, 0.5);
    let p = Polynomial::from_roots(&[Root { value: a, multiplicity: 3 }, Root::simple(c(2.0, -1.0))]);
    let roots = poly_roots(&p, &tol()).unwrap();
    let triple = roots.iter().find(|r| r.multiplicity == 3).expect("triple root");
    assert!((triple.value - a).norm() < 1e-6);
    assert_eq!(roots.iter().map(|r| r.multiplicity).sum::<usize>(), 4);
}

#[test]
fn partial_fractions_of_lorentzian() {
    // 1/(1+z^2) = (i/2)/(z+i) - (i/2)/(z-i)
    let r = RationalFunction::new(Polynomial::one(), Polynomial::from_real(&[1.0, 0.0, 1.0])).unwrap();
    let pf = partial_fractions(&r, &tol()).unwrap();
    assert_eq!(pf.terms.len(), 2);
    for t in &pf.terms {
        let expected = if t.pole.im < 0.0 { c(0.0, 0.5) } else { c(0.0, -0.5) };
        assert!((t.coeffs[0] - expected).norm() < 1e-14);
    }
    assert!(pf.residue_sum().norm() < 1e-14);
}

#[test]
fn fifth_order_pole_is_rejected() {
    let den = Polynomial::from_roots(&[Root { value: c(-1.0, 0.0), multiplicity: 5 }]);
    let r = RationalFunction::new(Polynomial::one(), den).unwrap();
    assert!(matches!(partial_fractions(&r, &tol()), Err(Error::UnsupportedPoleOrder(5))));
}

#[test]
fn fourth_order_pole_resums() {
    let den = Polynomial::from_roots(&[Root { value: c(-1.0, 1.0), multiplicity: 4 }, Root::simple(c(-2.0, 0.0))]);
    let r = RationalFunction::new(Polynomial::from_real(&[1.0, -2.0, 0.5]), den).unwrap();
    let pf = partial_fractions(&r, &tol()).unwrap();
    assert_eq!(pf.max_order(), 4);
    let pts: Vec<f64> = (0..20).map(|k| 0.1 + 0.37 * k as f64).collect();
    assert!(pf.resummation_error(&r, &pts) < 1e-8);
}

#[test]
fn series_at_zero_of_geometric() {
    let r = RationalFunction::new(Polynomial::one(), Polynomial::from_real(&[1.0, -0.5])).unwrap();
    let s = r.series_at_zero(6, &tol()).unwrap();
    for (k, v) in s.iter().enumerate() {
        assert!((v - c(0.5f64.powi(k as i32), 0.0)).norm() < 1e-14);
    }
}

#[test]
fn singular_origin_and_halfline_poles() {
    let r = RationalFunction::new(Polynomial::one(), Polynomial::from_real(&[0.0, 1.0, 1.0])).unwrap();
    assert!(r.series_at_zero(3, &tol()).is_err());
    let on_axis = RationalFunction::new(Polynomial::one(), Polynomial::from_real(&[-2.0, 1.0])).unwrap();
    assert!(on_axis.validate_no_poles_on_halfline(&tol()).is_err());
    let off_axis = RationalFunction::new(Polynomial::one(), Polynomial::from_real(&[2.0, 1.0])).unwrap();
    assert!(off_axis.validate_no_poles_on_halfline(&tol()).is_ok());
}

#[test]
fn distance_to_halfline_cases() {
    assert_eq!(distance_to_halfline(c(-3.0, 4.0)), 5.0);
    assert_eq!(distance_to_halfline(c(2.0, -0.5)), 0.5);
    assert_eq!(distance_to_halfline(c(0.0, 0.0)), 0.0);
}

fn complex_coeff() -> impl Strategy<Value = Complex64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b)| c(a, b))
}

fn stable_root() -> impl Strategy<Value = Complex64> {
    (0.3..3.0f64, 0.4..5.9f64).prop_map(|(r, t)| Complex64::from_polar(r, t))
}

proptest! {
    #[test]
    fn roots_reconstruct_polynomial(roots in prop::collection::vec(stable_root(), 1..6), lead in complex_coeff()) {
        prop_assume!(lead.norm() > 0.1);
        let rs: Vec<Root> = roots.iter().map(|&r| Root::simple(r)).collect();
        let p = Polynomial::from_roots(&rs).scale(lead);
        let found = poly_roots(&p, &tol()).unwrap();
        let total: usize = found.iter().map(|r| r.multiplicity).sum();
        prop_assert_eq!(total, roots.len());
        for r in &found {
            let scale = p.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
            prop_assert!(p.eval(r.value).norm() <= 1e-7 * scale * (1.0 + r.value.norm()).powi(roots.len() as i32));
        }
    }

    #[test]
    fn partial_fraction_resummation(roots in prop::collection::vec(stable_root(), 1..5),
                                    num in prop::collection::vec(complex_coeff(), 1..4)) {
        let rs: Vec<Root> = roots.iter().map(|&r| Root::simple(r)).collect();
        let den = Polynomial::from_roots(&rs);
        let mut num = num;
        num.truncate(roots.len());
        prop_assume!(num[0].norm() > 0.05);
        let r = RationalFunction::new(Polynomial::new(num), den).unwrap();
        let min_sep = roots.iter().enumerate()
            .flat_map(|(i, a)| roots.iter().skip(i + 1).map(move |b| (a - b).norm()))
            .fold(f64::INFINITY, f64::min);
        prop_assume!(min_sep > 0.05);
        let pf = partial_fractions(&r, &tol()).unwrap();
        let pts: Vec<f64> = (0..12).map(|k| 0.05 + 0.5 * k as f64).collect();
        prop_assert!(pf.resummation_error(&r, &pts) < 1e-7);
    }

    #[test]
    fn multiply_and_conjugate_pointwise(a in prop::collection::vec(complex_coeff(), 1..4),
                                        b in prop::collection::vec(complex_coeff(), 1..4),
                                        x in 0.0..5.0f64) {
        let den = Polynomial::from_real(&[1.0, 0.0, 1.0]);
        let ra = RationalFunction::new(Polynomial::new(a), den.clone()).unwrap();
        let rb = RationalFunction::new(Polynomial::new(b), den).unwrap();
        let prod = rat_multiply(&ra, &rb).eval_real(x);
        let direct = ra.eval_real(x) * rb.eval_real(x);
        prop_assert!((prod - direct).norm() <= 1e-12 * (1.0 + direct.norm()));
        let cj = rat_conjugate(&ra).eval_real(x);
        prop_assert!((cj - ra.eval_real(x).conj()).norm() <= 1e-12 * (1.0 + cj.norm()));
    }

    #[test]
    fn derivative_matches_finite_difference(a in prop::collection::vec(complex_coeff(), 1..4), x in 0.1..4.0f64) {
        let r = RationalFunction::new(Polynomial::new(a), Polynomial::from_real(&[2.0, 1.0, 1.0])).unwrap();
        let h = 1e-5;
        let fd = (r.eval_real(x + h) - r.eval_real(x - h)) / (2.0 * h);
        let d = r.derivative().eval_real(x);
        prop_assert!((fd - d).norm() <= 1e-7 * (1.0 + d.norm()));
    }
}
