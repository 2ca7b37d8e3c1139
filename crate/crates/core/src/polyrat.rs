//! Complex polynomials and rational functions.
//!
//! Coefficients are stored in ascending order. Rational functions keep a
//! monic denominator. Roots come from the eigenvalues of the companion matrix,
//! are polished by one Newton step, and roots that cannot be told apart at
//! working precision are merged into a single root with a multiplicity.

use nalgebra::linalg::Schur;
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Highest pole order accepted by the partial-fraction machinery.
pub const MAX_POLE_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Trailing coefficients below `trim * max|c|` are dropped.
    pub trim: f64,
    /// Roots closer than this to a point are treated as sitting on it.
    pub root: f64,
    /// Roots closer than this to each other are merged.
    pub cluster: f64,
    /// Relative re-summation error allowed for a partial-fraction expansion.
    pub partial_fraction: f64,
    /// Minimum distance between a pole and the half-line `[0, inf)`.
    pub axis: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { trim: 1e-12, root: 1e-9, cluster: 1e-7, partial_fraction: 1e-8, axis: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<Complex64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        Self::trimmed(coeffs, Tolerances::default().trim)
    }

    pub fn trimmed(mut coeffs: Vec<Complex64>, rel: f64) -> Self {
        let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let cut = rel * scale;
        while let Some(last) = coeffs.last() {
            if last.norm() <= cut {
                coeffs.pop();
            } else {
                break;
            }
        }
        Self { coeffs }
    }

    /// Keeps every coefficient as given, including trailing zeros.
    fn raw(coeffs: Vec<Complex64>) -> Self {
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(vec![c])
    }

    pub fn one() -> Self {
        Self::constant(ONE)
    }

    /// `w^k`.
    pub fn monomial(k: usize) -> Self {
        let mut coeffs = vec![ZERO; k + 1];
        coeffs[k] = ONE;
        Self { coeffs }
    }

    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: &[Root]) -> Self {
        let mut coeffs = vec![ONE];
        for r in roots {
            for _ in 0..r.multiplicity {
                let mut next = vec![ZERO; coeffs.len() + 1];
                for (i, &c) in coeffs.iter().enumerate() {
                    next[i + 1] += c;
                    next[i] -= c * r.value;
                }
                coeffs = next;
            }
        }
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Complex64 {
        self.coeffs.last().copied().unwrap_or(ZERO)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
    }

    /// Value and first derivative by a single Horner sweep.
    pub fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut p = ZERO;
        let mut dp = ZERO;
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zero();
        }
        Self::raw(self.coeffs.iter().enumerate().skip(1).map(|(k, &c)| c * k as f64).collect())
    }

    pub fn conj(&self) -> Self {
        Self::raw(self.coeffs.iter().map(|c| c.conj()).collect())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        if s == ZERO {
            return Self::zero();
        }
        Self::raw(self.coeffs.iter().map(|&c| c * s).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![ZERO; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::raw(out)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let out = (0..n)
            .map(|k| self.coeffs.get(k).copied().unwrap_or(ZERO) + other.coeffs.get(k).copied().unwrap_or(ZERO))
            .collect();
        Self::new(out)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-ONE))
    }

    /// Multiplication by `w^k`.
    pub fn shift_up(&self, k: usize) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut out = vec![ZERO; k];
        out.extend_from_slice(&self.coeffs);
        Self::raw(out)
    }

    /// Number of leading low-order coefficients that vanish relative to the
    /// largest coefficient.
    pub fn vanishing_order(&self, rel: f64) -> usize {
        let cut = rel * self.max_abs_coeff();
        self.coeffs.iter().take_while(|c| c.norm() <= cut).count()
    }

    /// Division by `w^k`; the dropped coefficients must vanish relative to the
    /// largest coefficient.
    pub fn divide_by_monomial(&self, k: usize, rel: f64) -> Result<Self> {
        if self.is_zero() || k == 0 {
            return Ok(self.clone());
        }
        if self.vanishing_order(rel) < k {
            return Err(Error::NonIntegrable(format!("numerator does not vanish to order {k} at the origin")));
        }
        Ok(Self::raw(self.coeffs[k..].to_vec()))
    }

    /// Taylor coefficients of `p(c + x)` in `x`.
    pub fn taylor_at(&self, c: Complex64) -> Vec<Complex64> {
        let mut work = self.coeffs.clone();
        let n = work.len();
        for k in 0..n {
            for j in (k..n - 1).rev() {
                let next = work[j + 1];
                work[j] += c * next;
            }
        }
        work
    }

    /// Monic copy.
    pub fn monic(&self) -> Self {
        let lead = self.leading();
        if lead == ZERO {
            return self.clone();
        }
        self.scale(ONE / lead)
    }
}

/// A root together with its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub value: Complex64,
    pub multiplicity: usize,
}

impl Root {
    pub fn simple(value: Complex64) -> Self {
        Self { value, multiplicity: 1 }
    }
}

/// Roots of a nonconstant polynomial with multiplicities, sorted by real then
/// imaginary part.
pub fn poly_roots(p: &Polynomial, tol: &Tolerances) -> Result<Vec<Root>> {
    let degree =
        p.degree().filter(|&d| d >= 1).ok_or_else(|| Error::InvalidInput("root finding needs degree >= 1".into()))?;

    let zeros_at_origin = p.coeffs.iter().take_while(|c| **c == ZERO).count();
    let reduced = Polynomial::raw(p.coeffs[zeros_at_origin..].to_vec());
    let n = degree - zeros_at_origin;

    let mut raw = Vec::with_capacity(degree);
    if n == 1 {
        raw.push(-reduced.coeffs[0] / reduced.coeffs[1]);
    } else if n > 1 {
        let lead = reduced.leading();
        let mut companion = DMatrix::<Complex64>::zeros(n, n);
        for i in 0..n - 1 {
            companion[(i + 1, i)] = ONE;
        }
        for i in 0..n {
            companion[(i, n - 1)] = -reduced.coeffs[i] / lead;
        }
        match Schur::try_new(companion, 1e-15, 10_000) {
            Some(schur) => {
                let (_, t) = schur.unpack();
                raw.extend((0..n).map(|i| t[(i, i)]));
            }
            None => raw.extend(aberth(&reduced)?),
        }
    }

    let dp = reduced.derivative();
    for z in raw.iter_mut() {
        let fz = reduced.eval(*z);
        let dfz = dp.eval(*z);
        if dfz.norm() > 0.0 {
            let candidate = *z - fz / dfz;
            if reduced.eval(candidate).norm() < fz.norm() {
                *z = candidate;
            }
        }
    }

    let mut roots = cluster_roots(&reduced, raw, tol);
    if zeros_at_origin > 0 {
        roots.push(Root { value: ZERO, multiplicity: zeros_at_origin });
    }
    roots.sort_by(|a, b| a.value.re.total_cmp(&b.value.re).then(a.value.im.total_cmp(&b.value.im)));
    Ok(roots)
}

/// Simultaneous Aberth-Ehrlich iteration; used when the companion Schur
/// iteration stalls (it can on exactly symmetric root configurations).
fn aberth(p: &Polynomial) -> Result<Vec<Complex64>> {
    let n = p.degree().unwrap_or(0);
    let lead = p.leading();
    let radius = 1.0 + p.coeffs[..n].iter().map(|c| (c / lead).norm()).fold(0.0, f64::max);
    let dp = p.derivative();
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(0.5 * radius, 0.4 + 2.0 * std::f64::consts::PI * k as f64 / n as f64))
        .collect();
    for _ in 0..2000 {
        let mut moved: f64 = 0.0;
        for i in 0..n {
            let ratio = p.eval(z[i]) / dp.eval(z[i]);
            let repulsion: Complex64 = (0..n).filter(|&j| j != i).map(|j| ONE / (z[i] - z[j])).sum();
            let step = ratio / (ONE - ratio * repulsion);
            if step.is_finite() {
                z[i] -= step;
                moved = moved.max(step.norm() / z[i].norm().max(1e-300));
            }
        }
        if moved < 1e-15 {
            return Ok(z);
        }
    }
    if z.iter().all(|v| v.is_finite()) {
        Ok(z)
    } else {
        Err(Error::Numerical("polynomial root iteration failed".into()))
    }
}

fn components(points: &[Complex64], linked: impl Fn(Complex64, Complex64) -> bool) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn find(label: &mut [usize], mut i: usize) -> usize {
        while label[i] != i {
            label[i] = label[label[i]];
            i = label[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if linked(points[i], points[j]) {
                let (a, b) = (find(&mut label, i), find(&mut label, j));
                if a != b {
                    label[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut index_of = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut label, i);
        if index_of[r] == usize::MAX {
            index_of[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[index_of[r]].push(i);
    }
    groups
}

fn cluster_roots(p: &Polynomial, raw: Vec<Complex64>, tol: &Tolerances) -> Vec<Root> {
    let mut out = Vec::new();
    let loose = |a: Complex64, b: Complex64| (a - b).norm() <= tol.cluster.max(1e-3 * (1.0 + a.norm().max(b.norm())));
    for group in components(&raw, loose) {
        if group.len() == 1 {
            out.push(Root::simple(raw[group[0]]));
            continue;
        }
        let members: Vec<Complex64> = group.iter().map(|&i| raw[i]).collect();
        if let Some(root) = merge_if_multiple(p, &members) {
            out.push(root);
            continue;
        }
        let strict = |a: Complex64, b: Complex64| (a - b).norm() < tol.cluster;
        for sub in components(&members, strict) {
            let sum: Complex64 = sub.iter().map(|&i| members[i]).sum();
            out.push(Root { value: sum / sub.len() as f64, multiplicity: sub.len() });
        }
    }
    out
}

/// Accepts a group of nearby roots as one multiple root when their spread is
/// consistent with rounding perturbations of an exact multiple root.
fn merge_if_multiple(p: &Polynomial, members: &[Complex64]) -> Option<Root> {
    let m = members.len();
    let centroid: Complex64 = members.iter().sum::<Complex64>() / m as f64;
    let spread = members.iter().map(|z| (z - centroid).norm()).fold(0.0, f64::max);

    let mut d = p.clone();
    for _ in 0..m - 1 {
        d = d.derivative();
    }
    let dd = d.derivative();
    let mut c = centroid;
    for _ in 0..4 {
        let (v, dv) = (d.eval(c), dd.eval(c));
        if dv.norm() == 0.0 {
            break;
        }
        let next = c - v / dv;
        if (next - c).norm() > spread.max(1e-300) || d.eval(next).norm() >= v.norm() {
            break;
        }
        c = next;
    }

    let b = p.taylor_at(c);
    let bm = b.get(m).copied().unwrap_or(ZERO).norm();
    if bm == 0.0 {
        return None;
    }
    let size: f64 = p.coeffs.iter().enumerate().map(|(k, a)| a.norm() * c.norm().powi(k as i32)).sum();
    let predicted = (1e-13 * size / bm).powf(1.0 / m as f64);
    (spread <= predicted).then_some(Root { value: c, multiplicity: m })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RationalFunction {
    num: Polynomial,
    den: Polynomial,
}

impl RationalFunction {
    /// Normalizes the denominator to be monic.
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::InvalidInput("zero denominator".into()));
        }
        let lead = den.leading();
        Ok(Self { num: num.scale(ONE / lead), den: den.monic() })
    }

    pub fn polynomial(p: Polynomial) -> Self {
        Self { num: p, den: Polynomial::one() }
    }

    pub fn numerator(&self) -> &Polynomial {
        &self.num
    }

    pub fn denominator(&self) -> &Polynomial {
        &self.den
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.num.eval(z) / self.den.eval(z)
    }

    pub fn eval_real(&self, x: f64) -> Complex64 {
        self.eval(Complex64::new(x, 0.0))
    }

    pub fn derivative(&self) -> Self {
        let n = self.num.derivative().mul(&self.den).sub(&self.num.mul(&self.den.derivative()));
        Self { num: n, den: self.den.mul(&self.den) }
    }

    /// Conjugates every coefficient; on the real axis this is the pointwise
    /// complex conjugate.
    pub fn conj(&self) -> Self {
        Self { num: self.num.conj(), den: self.den.conj() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self { num: self.num.mul(&other.num), den: self.den.mul(&other.den) }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { num: self.num.scale(s), den: self.den.clone() }
    }

    pub fn mul_monomial(&self, k: usize) -> Self {
        Self { num: self.num.shift_up(k), den: self.den.clone() }
    }

    pub fn div_monomial(&self, k: usize, rel: f64) -> Result<Self> {
        Ok(Self { num: self.num.divide_by_monomial(k, rel)?, den: self.den.clone() })
    }

    /// Sum over the least common denominator, with shared roots matched within
    /// the cluster tolerance.
    pub fn add(&self, other: &Self, tol: &Tolerances) -> Result<Self> {
        if self.num.is_zero() {
            return Ok(other.clone());
        }
        if other.num.is_zero() {
            return Ok(self.clone());
        }
        if self.den == other.den {
            return Ok(Self { num: self.num.add(&other.num), den: self.den.clone() });
        }
        let ra = if self.den.degree() == Some(0) { Vec::new() } else { poly_roots(&self.den, tol)? };
        let rb = if other.den.degree() == Some(0) { Vec::new() } else { poly_roots(&other.den, tol)? };
        let mut lcm: Vec<Root> = ra.clone();
        let mut cof_a: Vec<Root> = Vec::new();
        let mut cof_b: Vec<Root> = Vec::new();
        let mut used = vec![false; ra.len()];
        for b in &rb {
            let hit = ra
                .iter()
                .enumerate()
                .find(|(i, a)| !used[*i] && (a.value - b.value).norm() < tol.cluster * (1.0 + a.value.norm()));
            match hit {
                Some((i, a)) => {
                    used[i] = true;
                    if b.multiplicity > a.multiplicity {
                        let extra = Root { value: a.value, multiplicity: b.multiplicity - a.multiplicity };
                        lcm[i].multiplicity = b.multiplicity;
                        cof_a.push(extra);
                    } else if a.multiplicity > b.multiplicity {
                        cof_b.push(Root { value: a.value, multiplicity: a.multiplicity - b.multiplicity });
                    }
                }
                None => {
                    lcm.push(*b);
                    cof_a.push(*b);
                }
            }
        }
        for (i, a) in ra.iter().enumerate() {
            if !used[i] {
                cof_b.push(*a);
            }
        }
        let num = self.num.mul(&Polynomial::from_roots(&cof_a)).add(&other.num.mul(&Polynomial::from_roots(&cof_b)));
        Ok(Self { num, den: Polynomial::from_roots(&lcm) })
    }

    /// Cancels numerator and denominator roots that coincide within the
    /// cluster tolerance.
    pub fn reduce(&self, tol: &Tolerances) -> Result<Self> {
        let (Some(dn), Some(dd)) = (self.num.degree(), self.den.degree()) else {
            return Ok(self.clone());
        };
        if dn == 0 || dd == 0 {
            return Ok(self.clone());
        }
        let mut rn = poly_roots(&self.num, tol)?;
        let mut rd = poly_roots(&self.den, tol)?;
        let mut changed = false;
        for a in rn.iter_mut() {
            for b in rd.iter_mut() {
                if a.multiplicity > 0
                    && b.multiplicity > 0
                    && (a.value - b.value).norm() < tol.cluster * (1.0 + b.value.norm())
                {
                    let k = a.multiplicity.min(b.multiplicity);
                    a.multiplicity -= k;
                    b.multiplicity -= k;
                    changed = true;
                }
            }
        }
        if !changed {
            return Ok(self.clone());
        }
        Ok(Self { num: Polynomial::from_roots(&rn).scale(self.num.leading()), den: Polynomial::from_roots(&rd) })
    }

    pub fn is_proper(&self) -> bool {
        match (self.num.degree(), self.den.degree()) {
            (None, _) => true,
            (Some(a), Some(b)) => a < b,
            _ => false,
        }
    }

    /// Numerator degree plus two does not exceed the denominator degree.
    pub fn has_integrable_tail(&self) -> bool {
        match (self.num.degree(), self.den.degree()) {
            (None, _) => true,
            (Some(a), Some(b)) => a + 2 <= b,
            _ => false,
        }
    }

    pub fn poles(&self, tol: &Tolerances) -> Result<Vec<Root>> {
        if self.den.degree() == Some(0) {
            return Ok(Vec::new());
        }
        poly_roots(&self.den, tol)
    }

    pub fn validate_no_poles_on_halfline(&self, tol: &Tolerances) -> Result<()> {
        for pole in self.poles(tol)? {
            let d = distance_to_halfline(pole.value);
            if d <= tol.axis {
                return Err(Error::Validation(format!("pole {} lies within {:e} of [0, inf)", pole.value, tol.axis)));
            }
        }
        Ok(())
    }

    /// Taylor coefficients at the origin through `order`.
    pub fn series_at_zero(&self, order: usize, tol: &Tolerances) -> Result<Vec<Complex64>> {
        if self.poles(tol)?.iter().any(|r| r.value.norm() < tol.root) {
            return Err(Error::SingularOrigin);
        }
        let d0 = self.den.coeffs[0];
        let n = |k: usize| self.num.coeffs.get(k).copied().unwrap_or(ZERO);
        let d = |k: usize| self.den.coeffs.get(k).copied().unwrap_or(ZERO);
        let mut out: Vec<Complex64> = Vec::with_capacity(order + 1);
        for k in 0..=order {
            let mut acc = n(k);
            for j in 1..=k {
                acc -= d(j) * out[k - j];
            }
            out.push(acc / d0);
        }
        Ok(out)
    }
}

pub fn distance_to_halfline(z: Complex64) -> f64 {
    if z.re >= 0.0 {
        z.im.abs()
    } else {
        z.norm()
    }
}

/// One pole of a partial-fraction expansion. `coeffs[j - 1]` multiplies
/// `(z - pole)^(-j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleTerm {
    pub pole: Complex64,
    pub coeffs: Vec<Complex64>,
}

impl PoleTerm {
    pub fn order(&self) -> usize {
        self.coeffs.len()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PoleDecomposition {
    pub terms: Vec<PoleTerm>,
}

impl PoleDecomposition {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = ZERO;
        for t in &self.terms {
            let inv = ONE / (z - t.pole);
            let mut p = inv;
            for &c in &t.coeffs {
                acc += c * p;
                p *= inv;
            }
        }
        acc
    }

    /// Sum of the simple-pole coefficients.
    pub fn residue_sum(&self) -> Complex64 {
        self.terms.iter().filter_map(|t| t.coeffs.first()).sum()
    }

    pub fn max_order(&self) -> usize {
        self.terms.iter().map(PoleTerm::order).max().unwrap_or(0)
    }

    /// Largest relative deviation between the expansion and `r` at `points`.
    pub fn resummation_error(&self, r: &RationalFunction, points: &[f64]) -> f64 {
        points
            .iter()
            .map(|&x| {
                let z = Complex64::new(x, 0.0);
                let exact = r.eval(z);
                (self.eval(z) - exact).norm() / exact.norm().max(1e-300)
            })
            .fold(0.0, f64::max)
    }
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Partial fractions of a proper rational function. Coefficients come from
/// the Taylor expansion of `(z - a)^m r(z)` about each pole `a`.
pub fn partial_fractions(r: &RationalFunction, tol: &Tolerances) -> Result<PoleDecomposition> {
    if r.num.is_zero() {
        return Ok(PoleDecomposition::default());
    }
    if !r.is_proper() {
        return Err(Error::InvalidInput("partial fractions need numerator degree below denominator degree".into()));
    }
    let roots = r.poles(tol)?;
    if let Some(bad) = roots.iter().find(|p| p.multiplicity > MAX_POLE_ORDER) {
        return Err(Error::UnsupportedPoleOrder(bad.multiplicity));
    }

    let mut terms = Vec::with_capacity(roots.len());
    for (k, rk) in roots.iter().enumerate() {
        let m = rk.multiplicity;
        let a = rk.value;
        let mut g: Vec<Complex64> = r.num.taylor_at(a);
        g.resize(m, ZERO);
        for (l, rl) in roots.iter().enumerate() {
            if l == k {
                continue;
            }
            let d = a - rl.value;
            let base = d.powi(-(rl.multiplicity as i32));
            let ratio = -ONE / d;
            let series: Vec<Complex64> =
                (0..m).map(|i| base * binomial(rl.multiplicity + i - 1, i) * ratio.powi(i as i32)).collect();
            g = truncated_product(&g, &series, m);
        }
        let coeffs = (1..=m).map(|j| g[m - j]).collect();
        terms.push(PoleTerm { pole: a, coeffs });
    }
    Ok(PoleDecomposition { terms })
}

fn truncated_product(a: &[Complex64], b: &[Complex64], len: usize) -> Vec<Complex64> {
    let mut out = vec![ZERO; len];
    for (i, &x) in a.iter().enumerate().take(len) {
        for (j, &y) in b.iter().enumerate().take(len - i) {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn rat_series_at_zero(r: &RationalFunction, order: usize, tol: &Tolerances) -> Result<Vec<Complex64>> {
    r.series_at_zero(order, tol)
}

pub fn rat_conjugate(r: &RationalFunction) -> RationalFunction {
    r.conj()
}

pub fn rat_multiply(a: &RationalFunction, b: &RationalFunction) -> RationalFunction {
    a.mul(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn taylor_shift_matches_direct_expansion() {
        let p = Polynomial::from_real(&[1.0, -2.0, 0.5, 3.0]);
        let t = p.taylor_at(c(0.7, -0.2));
        let x = c(0.13, 0.4);
        let direct = p.eval(c(0.7, -0.2) + x);
        let shifted: Complex64 = t.iter().enumerate().map(|(k, &b)| b * x.powi(k as i32)).sum();
        assert!((direct - shifted).norm() < 1e-13);
    }

    #[test]
    fn double_and_triple_roots_are_merged() {
        let roots = [
            Root { value: c(0.0, 1.0), multiplicity: 2 },
            Root { value: c(0.0, -1.0), multiplicity: 3 },
            Root::simple(c(-2.0, 0.5)),
        ];
        let p = Polynomial::from_roots(&roots);
        let found = poly_roots(&p, &Tolerances::default()).unwrap();
        assert_eq!(found.len(), 3);
        for r in &roots {
            let hit = found.iter().find(|f| (f.value - r.value).norm() < 1e-7).unwrap();
            assert_eq!(hit.multiplicity, r.multiplicity);
        }
    }

    #[test]
    fn close_but_distinct_roots_stay_separate() {
        let p = Polynomial::from_roots(&[Root::simple(c(1.0, 1.0)), Root::simple(c(1.0 + 1e-5, 1.0))]);
        let found = poly_roots(&p, &Tolerances::default()).unwrap();
        assert_eq!(found.len(), 2);
    }

    #[test]
    fn lcm_addition_keeps_shared_factor_once() {
        let tol = Tolerances::default();
        let den = Polynomial::from_real(&[1.0, 0.0, 1.0]);
        let a = RationalFunction::new(Polynomial::from_real(&[1.0]), den.clone()).unwrap();
        let b = RationalFunction::new(Polynomial::from_real(&[0.0, 2.0]), den.mul(&den)).unwrap();
        let s = a.add(&b, &tol).unwrap();
        assert_eq!(s.denominator().degree(), Some(4));
        let z = c(0.3, 0.2);
        assert!((s.eval(z) - a.eval(z) - b.eval(z)).norm() < 1e-13);
    }
}
