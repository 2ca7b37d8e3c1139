#![allow(dead_code)]

use std::f64::consts::PI;

use friedrichs::model::{FormFactor, ModelSpec};
use friedrichs::oracle::{integrate_scalar, QuadTolerance};
use friedrichs::resolvent::ResolventEvaluator;
use friedrichs::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const LORENTZ: [f64; 3] = [1.0, 0.0, 1.0];

/// `h = 1`, `q = 1/(1+w^2)`, level at 1.
pub fn model_a(lambda: f64) -> ModelSpec {
    ModelSpec::single_level(1.0, lambda, 1, &[1.0], &LORENTZ).unwrap()
}

/// `h = 2`, `q = 1/(1+w^2)`, level at 1.
pub fn model_b(lambda: f64) -> ModelSpec {
    ModelSpec::single_level(1.0, lambda, 2, &[1.0], &LORENTZ).unwrap()
}

pub fn ev(spec: &ModelSpec) -> ResolventEvaluator {
    ResolventEvaluator::new(spec).unwrap()
}

pub fn lambda_a_critical() -> f64 {
    (4.0 / PI).sqrt()
}

/// Two levels with `h = (3, 1)`, `q = ((pi/4 - w)/(w^2+1)^2, 1/(w^2+1))`, so
/// that `S_12(0) = 0`; with each level at `S_nn(0)` the kernel of `K(0)` is
/// everything and the threshold is of the third kind.
pub fn third_kind_model() -> ModelSpec {
    let q_slow = FormFactor::real(3, &[PI / 4.0, -1.0], &[1.0, 0.0, 2.0, 0.0, 1.0]).unwrap();
    let q_fast = FormFactor::real(1, &[1.0], &LORENTZ).unwrap();
    let s22 = quad(|w| w * w * (PI / 4.0 - w).powi(2) / (1.0 + w * w).powi(4));
    ModelSpec::new(vec![s22, PI / 4.0], 1.0, vec![q_slow, q_fast]).unwrap()
}

/// Reference half-line integral of a real integrand.
pub fn quad<F: Fn(f64) -> f64>(f: F) -> f64 {
    let tol = QuadTolerance { abs: 1e-16, rel: 1e-14, max_intervals: 50_000 };
    integrate_scalar(|w| Complex64::new(f(w), 0.0), 0.0, f64::INFINITY, tol).unwrap().re
}

/// Random admissible model: one or two levels, odd or even half powers, and
/// denominators with roots away from the positive axis.
pub fn random_model(seed: u64) -> ModelSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=2usize);
    let parity = rng.random_range(0..2u32);
    let mut levels: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..3.0)).collect();
    levels.sort_by(f64::total_cmp);
    let ffs = (0..n)
        .map(|_| {
            let h = 1 + parity + 2 * rng.random_range(0..2u32);
            let den = random_denominator(&mut rng, if h > 2 { 2 } else { 1 });
            let dd = den.len() - 1;
            // integrability: h + 2 deg(num) + 2 <= 2 deg(den)
            let max_num = (2 * dd).saturating_sub(h as usize + 2) / 2;
            let dn = rng.random_range(0..=max_num.min(1));
            let mut num: Vec<Complex64> =
                (0..=dn).map(|_| Complex64::new(rng.random_range(0.3..1.5), rng.random_range(-0.5..0.5))).collect();
            num[0] = Complex64::new(rng.random_range(0.5..1.5), rng.random_range(-0.3..0.3));
            FormFactor::new(h, num, den).unwrap()
        })
        .collect();
    ModelSpec::new(levels, rng.random_range(0.1..0.8), ffs).unwrap()
}

fn random_denominator(rng: &mut ChaCha8Rng, min_pairs: usize) -> Vec<Complex64> {
    let n_pairs = rng.random_range(min_pairs..=2usize);
    let mut poly = vec![Complex64::new(1.0, 0.0)];
    for _ in 0..2 * n_pairs {
        // a root at angle in (pi/6, 11pi/6) and modulus in [0.5, 3]
        let r = rng.random_range(0.5..3.0);
        let theta = rng.random_range(PI / 6.0..11.0 * PI / 6.0);
        let root = Complex64::from_polar(r, theta);
        let mut next = vec![Complex64::new(0.0, 0.0); poly.len() + 1];
        for (i, &c) in poly.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= c * root;
        }
        poly = next;
    }
    poly
}
