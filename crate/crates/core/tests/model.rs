mod common;

use common::*;
use friedrichs::linalg::hermitian_eigen;
use friedrichs::model::*;
use friedrichs::polyrat::Tolerances;
use friedrichs::Error;
use proptest::prelude::*;

#[test]
fn scenario_round_trip_is_bit_exact() {
    for seed in 0..10 {
        let spec = random_model(seed);
        let json = spec.to_scenario().to_json();
        let back = ModelSpec::from_scenario(&Scenario::from_json(&json).unwrap()).unwrap();
        assert_eq!(back, spec);
        assert_eq!(back.to_scenario().to_json(), json);
    }
}

#[test]
fn validation_rejects_bad_models() {
    let lor = [1.0, 0.0, 1.0];
    let ff = |h| FormFactor::real(h, &[1.0], &lor).unwrap();
    // parity mismatch
    assert!(matches!(ModelSpec::new(vec![1.0, 2.0], 0.5, vec![ff(1), ff(2)]), Err(Error::Validation(_))));
    // unsorted levels
    assert!(ModelSpec::new(vec![2.0, 1.0], 0.5, vec![ff(1), ff(1)]).is_err());
    // not integrable: h = 3 with a Lorentzian tail, 3 + 2 > 4
    assert!(ModelSpec::single_level(1.0, 0.5, 3, &[1.0], &lor).is_err());
    // pole on the positive axis
    assert!(ModelSpec::single_level(1.0, 0.5, 1, &[1.0], &[2.0, -3.0, 1.0]).is_err());
    // q(0) = 0
    assert!(ModelSpec::single_level(1.0, 0.5, 1, &[0.0, 1.0], &[1.0, 0.0, 0.0, 1.0]).is_err());
    assert!(FormFactor::real(0, &[1.0], &lor).is_err());
}

#[test]
fn validation_report_lists_entries() {
    let r = validate_model(&third_kind_model().to_scenario());
    assert!(r.is_ok());
    assert_eq!(r.entries.len(), 4);
    assert!(r.entries.iter().all(|e| e.integrable));
    let bad = Scenario { levels: vec![1.0], coupling: 1.0, form_factors: vec![] };
    assert!(!validate_model(&bad).is_ok());
    assert!(Scenario::from_json("{\"levels\": [1.0]}").is_err());
}

#[test]
fn gamma_expansion_orders() {
    let tol = Tolerances::default();
    let g = build_gamma(&model_a(0.5), &tol).unwrap();
    let e = gamma_small_expansion(&g, 4, &tol).unwrap();
    assert_eq!(e.n_b, 1);
    // w/(1+w^2)^2 = w - 2 w^3 + 3 w^5 ...
    assert!((e.get(1)[(0, 0)] - 1.0).norm() < 1e-14);
    assert!(e.get(2)[(0, 0)].norm() < 1e-14);
    assert!((e.get(3)[(0, 0)] + 2.0).norm() < 1e-14);
    let g = build_gamma(&model_b(0.5), &tol).unwrap();
    let e = gamma_small_expansion(&g, 4, &tol).unwrap();
    assert_eq!(e.n_b, 2);
    assert!(e.get(3)[(0, 0)].norm() < 1e-14);
}

#[test]
fn gamma_matches_couplings() {
    let spec = random_model(7);
    let g = build_gamma(&spec, &Tolerances::default()).unwrap();
    for &w in &[0.01, 0.3, 2.0, 17.0] {
        let v = spec.couplings_at(w);
        let m = g.eval_real(w);
        for a in 0..spec.n() {
            for b in 0..spec.n() {
                let direct = v[a].conj() * v[b];
                assert!((m[(a, b)] - direct).norm() <= 1e-12 * (1.0 + direct.norm()));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]
    #[test]
    fn gamma_is_hermitian_psd_rank_one(seed in 0u64..10_000, w in 1e-4..50.0f64) {
        let spec = random_model(seed);
        let g = build_gamma(&spec, &Tolerances::default()).unwrap().eval_real(w);
        let scale = g.norm().max(1e-300);
        prop_assert!((&g - g.adjoint()).norm() <= 1e-12 * scale);
        let (vals, _) = hermitian_eigen(&g);
        prop_assert!(vals[0] >= -1e-12 * scale);
        if vals.len() > 1 {
            prop_assert!(vals[vals.len() - 2].abs() <= 1e-12 * scale);
        }
    }
}
