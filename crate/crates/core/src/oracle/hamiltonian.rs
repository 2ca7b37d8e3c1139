//! Discretized Hamiltonian `diag(w_n) + diag(w_j)` with couplings
//! `lambda v_n(w_j) sqrt(D_j)`, diagonalized through its secular matrix
//! `F(E) = K0 - E - sum_j P_j / (w_j - E)`, `P_j = conj(g_j) g_j^T`.
//!
//! By inertia additivity the number of eigenvalues below `E` equals the number
//! of grid points below `E` plus the number of negative eigenvalues of `F(E)`,
//! which isolates every eigenvalue without forming the full matrix.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::linalg::hermitian_eigen;
use crate::model::ModelSpec;
use crate::{CMat, CVec, Error, Result};

/// Eigenvalues closer than this to zero make the positive-energy projection ambiguous.
pub const AMBIGUOUS_ENERGY: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub energy: f64,
    /// Level components of the normalized eigenvector.
    pub levels: CVec,
}

#[derive(Debug, Clone)]
pub struct DiscretizedHamiltonian {
    k0: CMat,
    omega: Vec<f64>,
    weights: Vec<f64>,
    /// `g[j][n] = lambda v_n(w_j) sqrt(D_j)`.
    g: Vec<Vec<Complex64>>,
    eigen: Vec<Eigenpair>,
    ambiguous: Vec<f64>,
}

/// Graded grid with `m` cells: geometric (ratio 1.05) from `1e-6 scale`,
/// uniform up to `50 scale`, and a geometric tail with a tenth of the cells
/// out to `1e6 scale`. Returns cell midpoints and widths.
pub fn graded_grid(m: usize, scale: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if m < 50 {
        return Err(Error::InvalidInput("oracle grid needs at least 50 cells".into()));
    }
    let ratio = 1.05f64;
    let lo = 1e-6 * scale;
    let top = 50.0 * scale;
    let n_tail = m / 10;
    // Solve for the uniform spacing such that the geometric cells meet it.
    let mut edges = vec![0.0, lo];
    let mut n_uniform = m - n_tail;
    let mut du = top / n_uniform as f64;
    for _ in 0..50 {
        let switch = (du / (ratio - 1.0)).max(lo);
        let n_geo = ((switch / lo).ln() / ratio.ln()).floor() as usize;
        let remaining = (m - n_tail).saturating_sub(n_geo + 1);
        if remaining < 10 {
            return Err(Error::InvalidInput("oracle grid too small for the graded layout".into()));
        }
        let start = lo * ratio.powi(n_geo as i32);
        let new_du = (top - start) / remaining as f64;
        if (new_du - du).abs() <= 1e-14 * du && remaining == n_uniform {
            break;
        }
        du = new_du;
        n_uniform = remaining;
    }
    let switch = (du / (ratio - 1.0)).max(lo);
    let n_geo = ((switch / lo).ln() / ratio.ln()).floor() as usize;
    for k in 1..=n_geo {
        edges.push(lo * ratio.powi(k as i32));
    }
    let start = *edges.last().unwrap();
    let du = (top - start) / n_uniform as f64;
    for k in 1..=n_uniform {
        edges.push(start + du * k as f64);
    }
    let tail_ratio = (1e6 * scale / top).powf(1.0 / n_tail.max(1) as f64);
    for k in 1..=n_tail {
        edges.push(top * tail_ratio.powi(k as i32));
    }
    let mids = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let widths = edges.windows(2).map(|w| w[1] - w[0]).collect();
    Ok((mids, widths))
}

enum Gap {
    Below { q: usize },
    Between { j: usize },
    Above { p: usize },
}

impl DiscretizedHamiltonian {
    pub fn new(spec: &ModelSpec, m: usize) -> Result<Self> {
        let (omega, weights) = graded_grid(m, spec.pole_scale())?;
        Self::from_grid(spec, omega, weights)
    }

    pub fn from_grid(spec: &ModelSpec, omega: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if omega.len() != weights.len() || omega.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("grid must be strictly increasing with one weight per point".into()));
        }
        let lambda = spec.coupling();
        let g: Vec<Vec<Complex64>> = omega
            .iter()
            .zip(&weights)
            .map(|(&w, &d)| spec.couplings_at(w).into_iter().map(|v| v * (lambda * d.sqrt())).collect())
            .collect();
        let n = spec.n();
        let k0 =
            CMat::from_fn(
                n,
                n,
                |i, j| if i == j { Complex64::new(spec.levels()[i], 0.0) } else { Complex64::new(0.0, 0.0) },
            );
        // grid points where every form factor vanishes are eigenvectors on their own
        let coupled: Vec<usize> = (0..g.len()).filter(|&j| g[j].iter().any(|c| c.norm() > 0.0)).collect();
        let mut dh = Self { k0, omega, weights, g, eigen: Vec::new(), ambiguous: Vec::new() };
        if coupled.len() == dh.omega.len() {
            dh.diagonalize()?;
            return Ok(dh);
        }
        let mut eigen = if coupled.is_empty() {
            (0..n)
                .map(|i| Eigenpair {
                    energy: spec.levels()[i],
                    levels: CVec::from_fn(n, |k, _| Complex64::new(if k == i { 1.0 } else { 0.0 }, 0.0)),
                })
                .collect()
        } else {
            let pick = |v: &[f64]| coupled.iter().map(|&j| v[j]).collect::<Vec<_>>();
            Self::from_grid(spec, pick(&dh.omega), pick(&dh.weights))?.eigen
        };
        eigen.extend(
            (0..dh.omega.len())
                .filter(|j| coupled.binary_search(j).is_err())
                .map(|j| Eigenpair { energy: dh.omega[j], levels: CVec::zeros(n) }),
        );
        eigen.sort_by(|a, b| a.energy.total_cmp(&b.energy));
        dh.ambiguous = eigen.iter().map(|e| e.energy).filter(|e| e.abs() < AMBIGUOUS_ENERGY).collect();
        dh.eigen = eigen;
        Ok(dh)
    }

    pub fn n(&self) -> usize {
        self.k0.nrows()
    }

    pub fn grid(&self) -> &[f64] {
        &self.omega
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn eigenpairs(&self) -> &[Eigenpair] {
        &self.eigen
    }

    /// Eigenvalues within `AMBIGUOUS_ENERGY` of zero.
    pub fn ambiguous_energies(&self) -> &[f64] {
        &self.ambiguous
    }

    fn projector(&self, j: usize) -> CMat {
        let n = self.n();
        let g = &self.g[j];
        CMat::from_fn(n, n, |a, b| g[a].conj() * g[b])
    }

    /// `w_k - E` for `E = w_anchor + x`, exact when `k == anchor`.
    fn diff(&self, anchor: usize, x: f64, k: usize) -> f64 {
        (self.omega[k] - self.omega[anchor]) - x
    }

    /// `F_rest(E)` and its derivative at `E = w_anchor + x`, skipping the grid
    /// indices in `skip`.
    fn secular_rest(&self, anchor: usize, x: f64, skip: &[usize]) -> (CMat, CMat) {
        let n = self.n();
        let mut f = self.k0.clone();
        let mut df = CMat::zeros(n, n);
        for i in 0..n {
            f[(i, i)] = Complex64::new((self.k0[(i, i)].re - self.omega[anchor]) - x, 0.0);
            df[(i, i)] -= 1.0;
        }
        for (j, g) in self.g.iter().enumerate() {
            if skip.contains(&j) {
                continue;
            }
            let d = 1.0 / self.diff(anchor, x, j);
            for a in 0..n {
                let ga = g[a].conj();
                for b in 0..n {
                    let p = ga * g[b];
                    f[(a, b)] -= p * d;
                    df[(a, b)] -= p * (d * d);
                }
            }
        }
        (f, df)
    }

    /// Secular matrix `F(E)` for complex `E` off the grid.
    pub fn secular(&self, z: Complex64) -> CMat {
        let n = self.n();
        let mut f = self.k0.clone();
        for i in 0..n {
            f[(i, i)] -= z;
        }
        for (j, g) in self.g.iter().enumerate() {
            let d = Complex64::new(1.0, 0.0) / (self.omega[j] - z);
            for a in 0..n {
                for b in 0..n {
                    f[(a, b)] -= g[a].conj() * g[b] * d;
                }
            }
        }
        f
    }

    /// Level block of `(H - z)^-1`, equal to `F(z)^-1`.
    pub fn resolvent(&self, z: Complex64) -> Result<CMat> {
        self.secular(z).try_inverse().ok_or(Error::EigenvalueProximity { z, det_abs: 0.0 })
    }

    /// A positive multiple of `F(E)` that stays bounded on the gap, with its derivative.
    fn gap_matrix(&self, gap: &Gap, anchor: usize, x: f64) -> (CMat, CMat) {
        match *gap {
            Gap::Below { q } => {
                let (f, df) = self.secular_rest(anchor, x, &[q]);
                let c = self.diff(anchor, x, q);
                let pq = self.projector(q);
                (f.scale(c) - &pq, -f + df.scale(c))
            }
            Gap::Above { p } => {
                let (f, df) = self.secular_rest(anchor, x, &[p]);
                let c = -self.diff(anchor, x, p);
                let pp = self.projector(p);
                (f.scale(c) + &pp, f + df.scale(c))
            }
            Gap::Between { j } => {
                let (f, df) = self.secular_rest(anchor, x, &[j, j + 1]);
                let below = -self.diff(anchor, x, j);
                let above = self.diff(anchor, x, j + 1);
                let c = below * above;
                let dc = above - below;
                let pj = self.projector(j);
                let pk = self.projector(j + 1);
                let g = f.scale(c) + pj.scale(above) - pk.scale(below);
                let dg = f.scale(dc) + df.scale(c) - pj - pk;
                (g, dg)
            }
        }
    }

    fn negatives(m: &CMat) -> usize {
        hermitian_eigen(m).0.iter().filter(|&&x| x < 0.0).count()
    }

    /// Negative count of `F` just inside the gap next to a singular grid point:
    /// the compression of the regular part onto the complement of `g_j`.
    fn neg_regular(&self, j: usize) -> usize {
        let n = self.n();
        if n == 1 {
            return 0;
        }
        let (f, _) = self.secular_rest(j, 0.0, &[j]);
        let g = CVec::from_iterator(n, self.g[j].iter().map(|c| c.conj()));
        let norm = g.norm();
        if norm == 0.0 {
            return Self::negatives(&f);
        }
        let u = g / Complex64::new(norm, 0.0);
        let proj = CMat::identity(n, n) - &u * u.adjoint();
        let (vals, vecs) = hermitian_eigen(&proj);
        let basis: Vec<usize> = (0..n).filter(|&i| vals[i] > 0.5).collect();
        let b = crate::linalg::select_columns(&vecs, &basis);
        Self::negatives(&(b.adjoint() * f * b))
    }

    fn diagonalize(&mut self) -> Result<()> {
        let m = self.omega.len();
        let n = self.n();
        let neg_reg: Vec<usize> = (0..m).into_par_iter().map(|j| self.neg_regular(j)).collect();
        let b_norm: f64 = self.g.iter().map(|g| g.iter().map(|c| c.norm_sqr()).sum::<f64>()).sum::<f64>().sqrt();
        let lmin = (0..n).map(|i| self.k0[(i, i)].re).fold(f64::INFINITY, f64::min);
        let lmax = (0..n).map(|i| self.k0[(i, i)].re).fold(f64::NEG_INFINITY, f64::max);
        let e_lo = lmin.min(self.omega[0]) - b_norm - 1.0;
        let e_hi = lmax.max(self.omega[m - 1]) + b_norm + 1.0;

        // (gap, lower end, upper end, negative count at the lower end, roots inside)
        let mut jobs: Vec<(Gap, f64, f64, usize, usize)> = Vec::with_capacity(m + 1);
        jobs.push((Gap::Below { q: 0 }, e_lo, self.omega[0], 0, neg_reg[0] + 1));
        for j in 0..m - 1 {
            let k = 1 + neg_reg[j + 1] as isize - neg_reg[j] as isize;
            if k > 0 {
                jobs.push((Gap::Between { j }, self.omega[j], self.omega[j + 1], neg_reg[j], k as usize));
            }
        }
        jobs.push((Gap::Above { p: m - 1 }, self.omega[m - 1], e_hi, neg_reg[m - 1], n - neg_reg[m - 1]));

        let found: Vec<Vec<Eigenpair>> = jobs
            .par_iter()
            .map(|(gap, lo, hi, base, k)| self.roots_in_gap(gap, *lo, *hi, *base, *k))
            .collect::<Result<_>>()?;
        self.eigen = found.into_iter().flatten().collect();
        if self.eigen.len() != m + n {
            return Err(Error::Numerical(format!(
                "secular solver found {} eigenvalues, expected {}",
                self.eigen.len(),
                m + n
            )));
        }
        self.ambiguous = self.eigen.iter().map(|e| e.energy).filter(|e| e.abs() < AMBIGUOUS_ENERGY).collect();
        Ok(())
    }

    fn roots_in_gap(&self, gap: &Gap, lo: f64, hi: f64, base: usize, k: usize) -> Result<Vec<Eigenpair>> {
        if k == 0 {
            return Ok(Vec::new());
        }
        let mut out = Vec::with_capacity(k);
        match *gap {
            Gap::Below { q } => self.isolate(gap, q, lo - self.omega[q], 0.0, base, base + k, &mut out)?,
            Gap::Above { p } => self.isolate(gap, p, 0.0, hi - self.omega[p], base, base + k, &mut out)?,
            Gap::Between { j } => {
                // each half is measured from its nearer grid point
                let half = 0.5 * (self.omega[j + 1] - self.omega[j]);
                let n_mid = self.count(gap, j, half).clamp(base, base + k);
                self.isolate(gap, j, 0.0, half, base, n_mid, &mut out)?;
                self.isolate(gap, j + 1, -half, 0.0, n_mid, base + k, &mut out)?;
            }
        }
        Ok(out)
    }

    fn count(&self, gap: &Gap, anchor: usize, x: f64) -> usize {
        Self::negatives(&self.gap_matrix(gap, anchor, x).0)
    }

    #[allow(clippy::too_many_arguments)]
    fn isolate(
        &self,
        gap: &Gap,
        anchor: usize,
        lo: f64,
        hi: f64,
        n_lo: usize,
        n_hi: usize,
        out: &mut Vec<Eigenpair>,
    ) -> Result<()> {
        let k = n_hi.saturating_sub(n_lo);
        if k == 0 {
            return Ok(());
        }
        if k == 1 {
            out.push(self.refine(gap, anchor, lo, hi, n_lo)?);
            return Ok(());
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(lo.abs()) {
            for r in n_lo..n_hi {
                out.push(self.eigenvector(gap, anchor, mid, r));
            }
            return Ok(());
        }
        let n_mid = self.count(gap, anchor, mid).clamp(n_lo, n_hi);
        self.isolate(gap, anchor, lo, mid, n_lo, n_mid, out)?;
        self.isolate(gap, anchor, mid, hi, n_mid, n_hi, out)
    }

    /// Zero of the `r`-th (ascending) eigenvalue branch of the gap matrix,
    /// by Newton steps safeguarded with bisection.
    fn refine(&self, gap: &Gap, anchor: usize, lo: f64, hi: f64, r: usize) -> Result<Eigenpair> {
        let branch = |x: f64| {
            let (g, dg) = self.gap_matrix(gap, anchor, x);
            let (vals, vecs) = hermitian_eigen(&g);
            let u = vecs.column(r).into_owned();
            let slope = (u.adjoint() * dg * &u)[(0, 0)].re;
            (vals[r], slope)
        };
        let (mut a, mut b) = (lo, hi);
        let mut x = 0.5 * (a + b);
        for _ in 0..400 {
            let (f, df) = branch(x);
            if f == 0.0 {
                break;
            }
            if f > 0.0 {
                a = x;
            } else {
                b = x;
            }
            let newton = x - f / df;
            let next = if df < 0.0 && newton > a && newton < b { newton } else { 0.5 * (a + b) };
            let tol = 2.0 * f64::EPSILON * next.abs().max(f64::MIN_POSITIVE);
            if (next - x).abs() <= tol || b - a <= tol {
                x = next;
                break;
            }
            x = next;
        }
        Ok(self.eigenvector(gap, anchor, x, r))
    }

    fn eigenvector(&self, gap: &Gap, anchor: usize, x: f64, r: usize) -> Eigenpair {
        let energy = self.omega[anchor] + x;
        let (g, _) = self.gap_matrix(gap, anchor, x);
        let (_, vecs) = hermitian_eigen(&g);
        let a = vecs.column(r).into_owned();
        let mut norm = a.norm_squared();
        for (j, gj) in self.g.iter().enumerate() {
            let s: Complex64 = gj.iter().zip(a.iter()).map(|(x, y)| x * y).sum();
            norm += s.norm_sqr() / self.diff(anchor, x, j).powi(2);
        }
        Eigenpair { energy, levels: a.unscale(norm.sqrt()) }
    }

    /// `<m| P e^(-itH) P |n>` with `P` the projection onto positive energies.
    pub fn evolution(&self, t: f64) -> CMat {
        let n = self.n();
        let mut u = CMat::zeros(n, n);
        for ep in self.eigen.iter().filter(|e| e.energy > 0.0) {
            let phase = Complex64::from_polar(1.0, -ep.energy * t);
            u += &ep.levels * ep.levels.adjoint() * phase;
        }
        u
    }

    /// Sum of `|<m|E>|^2` over all eigenvalues, which is one per level.
    pub fn completeness(&self) -> CMat {
        let n = self.n();
        self.eigen.iter().fold(CMat::zeros(n, n), |acc, ep| acc + &ep.levels * ep.levels.adjoint())
    }

    /// Relative residual `|H Psi| / |Psi|` of the discretized zero mode
    /// `Psi = (psi, f(w_j) sqrt(D_j))` with `f(w) = -lambda sum_n psi_n v_n(w) / w`.
    pub fn zero_mode_residual(&self, psi: &CVec) -> f64 {
        let n = self.n();
        let mut level = &self.k0 * psi;
        let mut norm = psi.norm_squared();
        for (j, gj) in self.g.iter().enumerate() {
            let s: Complex64 = gj.iter().zip(psi.iter()).map(|(x, y)| x * y).sum();
            let fj = -s / self.omega[j];
            norm += fj.norm_sqr();
            for a in 0..n {
                level[a] += gj[a].conj() * fj;
            }
        }
        level.norm() / norm.sqrt()
    }
}

/// `<psi| P e^(-itH) P |psi>`.
pub fn oracle_evolution(dh: &DiscretizedHamiltonian, psi: &CVec, t: f64) -> Complex64 {
    (psi.adjoint() * dh.evolution(t) * psi)[(0, 0)]
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub sizes: Vec<usize>,
    /// Max-norm error against the reference, or successive differences without one.
    pub errors: Vec<f64>,
    pub observed_order: f64,
}

/// Observed order in the grid spacing (proportional to `1/M`) of a
/// vector-valued quantity computed on grids of increasing size.
pub fn convergence_study<Q>(
    spec: &ModelSpec,
    sizes: &[usize],
    quantity: Q,
    reference: Option<&[Complex64]>,
) -> Result<ConvergenceReport>
where
    Q: Fn(&DiscretizedHamiltonian) -> Vec<Complex64> + Sync,
{
    if sizes.len() < 3 {
        return Err(Error::InvalidInput("convergence study needs at least three grids".into()));
    }
    let values: Vec<Vec<Complex64>> = sizes
        .par_iter()
        .map(|&m| DiscretizedHamiltonian::new(spec, m).map(|dh| quantity(&dh)))
        .collect::<Result<_>>()?;
    let diff = |a: &[Complex64], b: &[Complex64]| a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    let (xs, errors): (Vec<f64>, Vec<f64>) = match reference {
        Some(r) => sizes.iter().zip(&values).map(|(&m, v)| (m as f64, diff(v, r))).unzip(),
        None => sizes.windows(2).zip(values.windows(2)).map(|(m, v)| (m[0] as f64, diff(&v[0], &v[1]))).unzip(),
    };
    let pts: Vec<(f64, f64)> = xs.iter().zip(&errors).filter(|p| *p.1 > 0.0).map(|(x, e)| (x.ln(), e.ln())).collect();
    let observed_order = if pts.len() >= 2 { -crate::asymptotics::least_squares_slope(&pts) } else { f64::INFINITY };
    Ok(ConvergenceReport { sizes: sizes.to_vec(), errors, observed_order })
}
