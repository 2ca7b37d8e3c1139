//! Piecewise Chebyshev interpolation of a vector-valued function on the
//! positive axis and exact oscillatory integrals of the interpolant.
//!
//! Each panel carries the Chebyshev coefficients of the interpolant through
//! the Lobatto points. `int p(w) e^(-itw) dw` over a panel is taken by
//! Gauss-Legendre when `t h` is moderate and by the terminating
//! integration-by-parts sum otherwise. Phases `e^(-itw)` use an error-free
//! product so that large `t w` keep full relative accuracy.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::{Error, Result};

const GL_POINTS: usize = 48;
/// Relative coefficient level below which a non-decaying Chebyshev tail is treated as evaluation noise.
const NOISE_CEILING: f64 = 1e-9;
const GL_SWITCH: f64 = 30.0;
/// Two interior probes that are never Lobatto points for the supported degrees.
const PROBES: [f64; 2] = [-0.613_287_1, 0.371_904_3];

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// `e^(-i t w)` with `t w` split exactly into `p + e` before reduction.
pub fn phase(t: f64, w: f64) -> Complex64 {
    let p = t * w;
    let e = t.mul_add(w, -p);
    let (s, c) = p.sin_cos();
    let (se, ce) = e.sin_cos();
    Complex64::new(c, -s) * Complex64::new(ce, -se)
}

fn clenshaw(coeffs: &[Complex64], x: f64) -> Complex64 {
    let mut b1 = Complex64::new(0.0, 0.0);
    let mut b2 = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().skip(1).rev() {
        let b0 = c + b1 * (2.0 * x) - b2;
        b2 = b1;
        b1 = b0;
    }
    coeffs[0] + b1 * x - b2
}

/// `T_j^(m)(1)` for all `j <= degree`, `m <= degree`.
fn endpoint_derivatives(degree: usize) -> Vec<Vec<f64>> {
    (0..=degree)
        .map(|m| {
            (0..=degree)
                .map(|j| {
                    let jj = (j * j) as f64;
                    (0..m).fold(1.0, |acc, i| acc * (jj - (i * i) as f64) / (2 * i + 1) as f64)
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshOptions {
    pub degree: usize,
    /// Panel acceptance tolerance relative to the largest sampled value on the panel.
    pub rel_tol: f64,
    /// Absolute acceptance floor.
    pub abs_tol: f64,
    pub max_panels: usize,
    /// Panels narrower than this fraction of their midpoint are accepted as they are.
    pub min_width_ratio: f64,
}

impl Default for MeshOptions {
    fn default() -> Self {
        Self { degree: 12, rel_tol: 1e-12, abs_tol: 0.0, max_panels: 200_000, min_width_ratio: 1e-9 }
    }
}

#[derive(Debug, Clone)]
struct Panel {
    a: f64,
    b: f64,
    /// `cheb[k]` holds the coefficients of component `k`.
    cheb: Vec<Vec<Complex64>>,
    gl: Vec<Vec<Complex64>>,
    left: Vec<Vec<Complex64>>,
    right: Vec<Vec<Complex64>>,
    error: f64,
}

enum Trial {
    Accepted(Panel),
    Forced(Panel),
    Split(f64, f64, f64, f64),
}

#[derive(Debug, Clone)]
pub struct SpectralMesh {
    dim: usize,
    degree: usize,
    panels: Vec<Panel>,
    gl_nodes: Vec<f64>,
    gl_weights: Vec<f64>,
    unresolved: usize,
}

struct Builder<'a, F> {
    f: &'a F,
    dim: usize,
    opts: MeshOptions,
    nodes: Vec<f64>,
    gl_nodes: Vec<f64>,
    tderiv: Vec<Vec<f64>>,
}

impl<F> Builder<'_, F>
where
    F: Fn(f64) -> Result<Vec<Complex64>> + Sync,
{
    fn eval(&self, w: f64) -> Result<Vec<Complex64>> {
        let v = (self.f)(w)?;
        if v.len() != self.dim {
            return Err(Error::Numerical("integrand changed dimension".into()));
        }
        Ok(v)
    }

    fn trial(&self, a: f64, b: f64) -> Result<Trial> {
        let d = self.opts.degree;
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let samples: Vec<Vec<Complex64>> = self.nodes.iter().map(|&x| self.eval(c + h * x)).collect::<Result<_>>()?;
        let mut cheb = vec![vec![Complex64::new(0.0, 0.0); d + 1]; self.dim];
        for (k, coeffs) in cheb.iter_mut().enumerate() {
            for (j, cj) in coeffs.iter_mut().enumerate() {
                let mut s = Complex64::new(0.0, 0.0);
                for (i, row) in samples.iter().enumerate() {
                    let wgt = if i == 0 || i == d { 0.5 } else { 1.0 };
                    s += row[k] * (wgt * (PI * (j * i) as f64 / d as f64).cos());
                }
                let edge = if j == 0 || j == d { 0.5 } else { 1.0 };
                *cj = s * (2.0 * edge / d as f64);
            }
        }
        let scale = samples.iter().flat_map(|r| r.iter().map(|v| v.norm())).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let tail = cheb.iter().map(|c| c[d].norm() + c[d - 1].norm()).fold(0.0, f64::max);
        let mut probe_err: f64 = 0.0;
        for &x in &PROBES {
            let v = self.eval(c + h * x)?;
            for (k, coeffs) in cheb.iter().enumerate() {
                probe_err = probe_err.max((clenshaw(coeffs, x) - v[k]).norm());
            }
        }
        let error = probe_err.max(tail);
        let target = (self.opts.rel_tol * scale).max(self.opts.abs_tol);
        if error <= target {
            return Ok(Trial::Accepted(self.finish(a, b, cheb, error)));
        }
        // Coefficients that have stopped decaying at round-off level mean the
        // integrand is known no better than this; splitting cannot help.
        let band = |lo: usize, hi: usize| {
            cheb.iter().map(|c| c[lo..hi].iter().map(|x| x.norm()).fold(0.0, f64::max)).fold(0.0, f64::max)
        };
        let (early, late) = (band(d / 2, 3 * d / 4), band(3 * d / 4, d + 1));
        if early.max(late) <= NOISE_CEILING * scale && late >= 0.5 * early {
            return Ok(Trial::Accepted(self.finish(a, b, cheb, error.max(5.0 * early.max(late)))));
        }
        if h <= self.opts.min_width_ratio * c.abs() {
            return Ok(Trial::Forced(self.finish(a, b, cheb, error)));
        }
        Ok(Trial::Split(a, c, b, error * (b - a)))
    }

    fn finish(&self, a: f64, b: f64, cheb: Vec<Vec<Complex64>>, error: f64) -> Panel {
        let d = self.opts.degree;
        let gl = cheb.iter().map(|c| self.gl_nodes.iter().map(|&x| clenshaw(c, x)).collect()).collect();
        let deriv = |c: &[Complex64], sign: f64| -> Vec<Complex64> {
            (0..=d)
                .map(|m| {
                    (0..=d)
                        .map(|j| {
                            let s = if sign < 0.0 && (j + m) % 2 == 1 { -1.0 } else { 1.0 };
                            c[j] * (s * self.tderiv[m][j])
                        })
                        .sum()
                })
                .collect()
        };
        let left = cheb.iter().map(|c| deriv(c, -1.0)).collect();
        let right = cheb.iter().map(|c| deriv(c, 1.0)).collect();
        Panel { a, b, cheb, gl, left, right, error: error * (b - a) }
    }
}

impl SpectralMesh {
    /// Adaptive mesh over `[edges[0], edges.last()]` refining the given edges.
    pub fn build<F>(f: &F, edges: &[f64], dim: usize, opts: MeshOptions) -> Result<Self>
    where
        F: Fn(f64) -> Result<Vec<Complex64>> + Sync,
    {
        if edges.len() < 2 || edges.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("mesh edges must be strictly increasing".into()));
        }
        if !(2..=24).contains(&opts.degree) {
            return Err(Error::InvalidInput("mesh degree must lie in 2..=24".into()));
        }
        let d = opts.degree;
        let (gl_nodes, gl_weights) = gauss_legendre(GL_POINTS);
        let builder = Builder {
            f,
            dim,
            opts,
            nodes: (0..=d).map(|k| (PI * k as f64 / d as f64).cos()).collect(),
            gl_nodes: gl_nodes.clone(),
            tderiv: endpoint_derivatives(d),
        };
        let mut pending: Vec<(f64, f64)> = edges.windows(2).map(|w| (w[0], w[1])).collect();
        let mut done = Vec::new();
        let mut unresolved = 0;
        while !pending.is_empty() {
            let trials: Vec<Trial> = pending.par_iter().map(|&(a, b)| builder.trial(a, b)).collect::<Result<_>>()?;
            pending.clear();
            let mut outstanding = 0.0;
            for t in trials {
                match t {
                    Trial::Accepted(p) => done.push(p),
                    Trial::Forced(p) => {
                        unresolved += 1;
                        done.push(p);
                    }
                    Trial::Split(a, m, b, err) => {
                        outstanding += err;
                        pending.push((a, m));
                        pending.push((m, b));
                    }
                }
            }
            if done.len() + pending.len() > opts.max_panels {
                return Err(Error::BudgetExceeded { achieved: outstanding });
            }
        }
        done.sort_by(|p, q| p.a.total_cmp(&q.a));
        Ok(Self { dim, degree: d, panels: done, gl_nodes, gl_weights, unresolved })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn panel_count(&self) -> usize {
        self.panels.len()
    }

    /// Panels accepted only because they reached the minimum width.
    pub fn unresolved_panels(&self) -> usize {
        self.unresolved
    }

    /// Sum over panels of the interpolation-error estimate times the panel length.
    pub fn error_estimate(&self) -> f64 {
        self.panels.iter().map(|p| p.error).sum()
    }

    pub fn lower(&self) -> f64 {
        self.panels[0].a
    }

    pub fn upper(&self) -> f64 {
        self.panels.last().unwrap().b
    }

    pub fn edges(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self.panels.iter().map(|p| p.a).collect();
        e.push(self.upper());
        e
    }

    /// Value of the interpolant at `w`.
    pub fn interpolate(&self, w: f64) -> Option<Vec<Complex64>> {
        let i = self.panels.partition_point(|p| p.b < w);
        let p = self.panels.get(i)?;
        if w < p.a {
            return None;
        }
        let x = (w - 0.5 * (p.a + p.b)) / (0.5 * (p.b - p.a));
        Some(p.cheb.iter().map(|c| clenshaw(c, x)).collect())
    }

    /// `int w^k p(w) dw` over the mesh.
    pub fn moment(&self, k: i32) -> Vec<Complex64> {
        let mut acc = vec![Complex64::new(0.0, 0.0); self.dim];
        for p in &self.panels {
            let c = 0.5 * (p.a + p.b);
            let h = 0.5 * (p.b - p.a);
            for (i, (&x, &wt)) in self.gl_nodes.iter().zip(&self.gl_weights).enumerate() {
                let f = wt * h * (c + h * x).powi(k);
                for (k2, slot) in acc.iter_mut().enumerate() {
                    *slot += p.gl[k2][i] * f;
                }
            }
        }
        acc
    }

    /// `int p(w) e^(-itw) dw` over the mesh.
    pub fn fourier(&self, t: f64) -> Vec<Complex64> {
        let mut acc = vec![Complex64::new(0.0, 0.0); self.dim];
        if t == 0.0 {
            return self.moment(0);
        }
        let it = Complex64::new(0.0, t);
        let mut edge_phase = phase(t, self.panels[0].a);
        let mut edge_at = self.panels[0].a;
        let mut scratch = vec![Complex64::new(0.0, 0.0); GL_POINTS];
        for p in &self.panels {
            let h = 0.5 * (p.b - p.a);
            let theta = t * h;
            let pa = if p.a == edge_at { edge_phase } else { phase(t, p.a) };
            let pb = phase(t, p.b);
            if theta.abs() <= GL_SWITCH {
                let c = 0.5 * (p.a + p.b);
                let pc = phase(t, c) * h;
                for (s, (&x, &wt)) in scratch.iter_mut().zip(self.gl_nodes.iter().zip(&self.gl_weights)) {
                    let (sn, cs) = (theta * x).sin_cos();
                    *s = Complex64::new(cs, -sn) * wt;
                }
                for (k, slot) in acc.iter_mut().enumerate() {
                    let s: Complex64 = p.gl[k].iter().zip(&scratch).map(|(v, e)| v * e).sum();
                    *slot += s * pc;
                }
            } else {
                let u = Complex64::new(1.0, 0.0) / (it * h);
                for (k, slot) in acc.iter_mut().enumerate() {
                    let horner = |d: &[Complex64]| d.iter().rev().fold(Complex64::new(0.0, 0.0), |s, &v| s * u + v);
                    *slot += (pa * horner(&p.left[k]) - pb * horner(&p.right[k])) / it;
                }
            }
            edge_phase = pb;
            edge_at = p.b;
        }
        acc
    }

    /// The same mesh with every panel halved and the integrand resampled.
    pub fn halved<F>(&self, f: &F, opts: MeshOptions) -> Result<Self>
    where
        F: Fn(f64) -> Result<Vec<Complex64>> + Sync,
    {
        let mut edges = Vec::with_capacity(2 * self.panels.len() + 1);
        for p in &self.panels {
            edges.push(p.a);
            edges.push(0.5 * (p.a + p.b));
        }
        edges.push(self.upper());
        let relaxed = MeshOptions { rel_tol: f64::INFINITY, ..opts };
        Self::build(f, &edges, self.dim, relaxed)
    }
}
