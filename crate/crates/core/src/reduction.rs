//! Order-by-order reduction of the oscillator to its normal form on the
//! center manifold.
//!
//! The center manifold is parametrized as
//! `W(u)(theta) = Phi(theta) (u + U1(u)) + U2(u)(theta)` with reduced flow
//! `u' = B u + g(u)`. At each degree `j` the `u`-part of the invariance
//! equation is split with [`crate::homological::split`]; the `v`-part is a
//! linear problem for `U2_j`, solved over polynomials in `theta`.

use crate::error::{Error, Result};
use crate::homological::{split, w_basis, WLabel};
use crate::linear::{bilinear, psi_basis, BasisPair, OscillatorParams};
use crate::poly::{enumerate_monomials, monomial_count, HomoPoly, Series, ThetaPoly, VecPoly3};
use nalgebra::{DMatrix, DVector};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

pub const CM_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_THETA_SOLVE_CAP: usize = 40;

/// Nonlinearities `F(x, y) = sum_j F_j`, `G(x, y) = sum_j G_j` with
/// homogeneous parts of degree `2..=max_degree` in two variables.
#[derive(Debug, Clone, PartialEq)]
pub struct FGSeries {
    f: Vec<HomoPoly>,
    g: Vec<HomoPoly>,
}

impl FGSeries {
    pub fn zero(max_degree: usize) -> Self {
        assert!(max_degree >= 2, "nonlinearities start at degree 2");
        Self {
            f: (2..=max_degree).map(|j| HomoPoly::zero(2, j)).collect(),
            g: (2..=max_degree).map(|j| HomoPoly::zero(2, j)).collect(),
        }
    }

    pub fn max_degree(&self) -> usize {
        self.f.len() + 1
    }

    pub fn f(&self, j: usize) -> &HomoPoly {
        &self.f[j - 2]
    }

    pub fn g(&self, j: usize) -> &HomoPoly {
        &self.g[j - 2]
    }

    fn check(p: &HomoPoly, j: usize) -> Result<()> {
        if p.nvars() != 2 || p.degree() != j {
            return Err(Error::Validation(format!(
                "expected a degree {j} polynomial in two variables, got degree {} in {}",
                p.degree(),
                p.nvars()
            )));
        }
        Ok(())
    }

    /// Replaces `F_j`; grows the series if `j` is above the current maximum.
    pub fn set_f(&mut self, j: usize, p: HomoPoly) -> Result<()> {
        Self::check(&p, j)?;
        self.grow(j);
        self.f[j - 2] = p;
        Ok(())
    }

    pub fn set_g(&mut self, j: usize, p: HomoPoly) -> Result<()> {
        Self::check(&p, j)?;
        self.grow(j);
        self.g[j - 2] = p;
        Ok(())
    }

    fn grow(&mut self, j: usize) {
        while self.max_degree() < j {
            let d = self.max_degree() + 1;
            self.f.push(HomoPoly::zero(2, d));
            self.g.push(HomoPoly::zero(2, d));
        }
    }

    /// Copy truncated (or zero-padded) to `max_degree`.
    pub fn truncated(&self, max_degree: usize) -> Self {
        let mut out = Self::zero(max_degree);
        for j in 2..=max_degree.min(self.max_degree()) {
            out.f[j - 2] = self.f(j).clone();
            out.g[j - 2] = self.g(j).clone();
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.f.iter().chain(&self.g).all(HomoPoly::is_zero)
    }

    /// `F(x, y)` and `G(x, y)` evaluated numerically.
    pub fn eval(&self, x: f64, y: f64) -> (f64, f64) {
        let f = self.f.iter().map(|p| p.eval(&[x, y])).sum();
        let g = self.g.iter().map(|p| p.eval(&[x, y])).sum();
        (f, g)
    }
}

/// Normal form coefficients on the `W_j` bases, `j = 2..=max_degree`.
#[derive(Debug, Clone, PartialEq)]
pub struct NFSeries {
    orders: Vec<Vec<f64>>,
}

impl NFSeries {
    pub fn zero(max_degree: usize) -> Self {
        assert!(max_degree >= 2, "normal forms start at degree 2");
        Self {
            orders: (2..=max_degree).map(|j| vec![0.0; w_basis(j).len()]).collect(),
        }
    }

    pub fn max_degree(&self) -> usize {
        self.orders.len() + 1
    }

    /// Coefficients at degree `j`, aligned with `w_basis(j).labels`.
    pub fn coeffs(&self, j: usize) -> &[f64] {
        &self.orders[j - 2]
    }

    pub fn set_coeffs(&mut self, j: usize, coeffs: Vec<f64>) -> Result<()> {
        if j < 2 || j > self.max_degree() || coeffs.len() != w_basis(j).len() {
            return Err(Error::Validation(format!(
                "degree {j} needs {} coefficients",
                if j >= 2 { w_basis(j).len() } else { 0 }
            )));
        }
        self.orders[j - 2] = coeffs;
        Ok(())
    }

    pub fn get(&self, label: &WLabel) -> f64 {
        if label.degree < 2 || label.degree > self.max_degree() {
            return 0.0;
        }
        w_basis(label.degree)
            .position(label)
            .map(|k| self.orders[label.degree - 2][k])
            .unwrap_or(0.0)
    }

    pub fn set(&mut self, label: WLabel, value: f64) -> Result<()> {
        label.validate()?;
        if label.degree > self.max_degree() {
            return Err(Error::Validation(format!(
                "{label} exceeds the series order {}",
                self.max_degree()
            )));
        }
        let k = w_basis(label.degree).position(&label).expect("validated label");
        self.orders[label.degree - 2][k] = value;
        Ok(())
    }

    /// All `(label, coefficient)` pairs in degree and basis order.
    pub fn entries(&self) -> Vec<(WLabel, f64)> {
        (2..=self.max_degree())
            .flat_map(|j| w_basis(j).labels.into_iter().zip(self.coeffs(j).to_vec()))
            .collect()
    }

    /// The vector field term `g_j` in `H^j`.
    pub fn vector(&self, j: usize) -> VecPoly3 {
        w_basis(j).combine(self.coeffs(j))
    }

    /// Largest coefficient difference over the common degrees; missing
    /// degrees count as zero.
    pub fn max_abs_diff(&self, other: &NFSeries) -> f64 {
        let top = self.max_degree().max(other.max_degree());
        let mut d = 0.0f64;
        for j in 2..=top {
            let n = w_basis(j).len();
            for k in 0..n {
                let a = if j <= self.max_degree() { self.coeffs(j)[k] } else { 0.0 };
                let b = if j <= other.max_degree() {
                    other.coeffs(j)[k]
                } else {
                    0.0
                };
                d = d.max((a - b).abs());
            }
        }
        d
    }

    /// `B u + sum_j g_j(u)`.
    pub fn rhs(&self, u: &[f64; 3]) -> [f64; 3] {
        let mut out = [u[1], u[2], 0.0];
        for j in 2..=self.max_degree() {
            let basis = w_basis(j);
            for (l, c) in basis.labels.iter().zip(self.coeffs(j)) {
                if *c == 0.0 {
                    continue;
                }
                let e = l.exponents();
                out[2] += c * u[0].powi(e[0] as i32) * u[1].powi(e[1] as i32) * u[2].powi(e[2] as i32);
            }
        }
        out
    }
}

/// An `R^2`-valued polynomial in `(theta, u)`, homogeneous of degree `degree`
/// in `u`: `sum_k theta^k (p_k0(u), p_k1(u))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaField {
    degree: usize,
    terms: Vec<[HomoPoly; 2]>,
}

impl ThetaField {
    pub fn zero(degree: usize) -> Self {
        Self {
            degree,
            terms: Vec::new(),
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn theta_degree(&self) -> usize {
        self.terms.len().saturating_sub(1)
    }

    /// Coefficient of `theta^k`.
    pub fn term(&self, k: usize) -> [HomoPoly; 2] {
        self.terms
            .get(k)
            .cloned()
            .unwrap_or_else(|| [HomoPoly::zero(3, self.degree), HomoPoly::zero(3, self.degree)])
    }

    fn ensure(&mut self, len: usize) {
        while self.terms.len() < len {
            self.terms
                .push([HomoPoly::zero(3, self.degree), HomoPoly::zero(3, self.degree)]);
        }
    }

    pub fn add_term(&mut self, k: usize, c: usize, p: &HomoPoly) {
        self.ensure(k + 1);
        self.terms[k][c] += p;
    }

    fn trim(&mut self) {
        while self.terms.last().is_some_and(|t| t[0].is_zero() && t[1].is_zero()) {
            self.terms.pop();
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.terms
            .iter()
            .fold(0.0, |m, t| m.max(t[0].max_abs()).max(t[1].max_abs()))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, t) in other.terms.iter().enumerate() {
            out.add_term(k, 0, &t[0]);
            out.add_term(k, 1, &t[1]);
        }
        out.trim();
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = Self {
            degree: self.degree,
            terms: self.terms.iter().map(|t| [t[0].scale(s), t[1].scale(s)]).collect(),
        };
        out.trim();
        out
    }

    pub fn eval(&self, theta: f64) -> [HomoPoly; 2] {
        let mut acc = [HomoPoly::zero(3, self.degree), HomoPoly::zero(3, self.degree)];
        for t in self.terms.iter().rev() {
            for c in 0..2 {
                acc[c] = &acc[c].scale(theta) + &t[c];
            }
        }
        acc
    }

    pub fn d_theta(&self) -> Self {
        let mut out = Self {
            degree: self.degree,
            terms: self
                .terms
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, t)| [t[0].scale(k as f64), t[1].scale(k as f64)])
                .collect(),
        };
        out.trim();
        out
    }

    /// `D_u p (u) B u`, applied coefficientwise.
    pub fn bu_derivative(&self) -> Self {
        let mut out = Self {
            degree: self.degree,
            terms: self
                .terms
                .iter()
                .map(|t| [t[0].bu_derivative(), t[1].bu_derivative()])
                .collect(),
        };
        out.trim();
        out
    }

    /// `D_u p (u) g(u)` for a vector field `g` of degree `m`.
    pub fn jacobian_times(&self, g: &VecPoly3) -> Self {
        let degree = self.degree + g.degree() - 1;
        let mut out = Self::zero(degree);
        for (k, t) in self.terms.iter().enumerate() {
            for c in 0..2 {
                out.add_term(k, c, &grad_dot(&t[c], g));
            }
        }
        out.trim();
        out
    }

    /// Largest `k + 2 a + b` over nonzero coefficients of `theta^k u1^a u2^b u3^c`
    /// with magnitude above `tol`.
    pub fn total_weight(&self, tol: f64) -> usize {
        let mut w = 0;
        for (k, t) in self.terms.iter().enumerate() {
            for p in t {
                for (e, c) in p.terms() {
                    if c.abs() > tol {
                        w = w.max(k + 2 * e[0] + e[1]);
                    }
                }
            }
        }
        w
    }

    /// The `theta`-polynomial multiplying monomial `exps`.
    pub fn entry(&self, exps: &[usize; 3], lo: f64, hi: f64) -> ThetaPoly {
        ThetaPoly::new(
            self.terms
                .iter()
                .map(|t| [t[0].coeff(exps), t[1].coeff(exps)])
                .collect(),
            lo,
            hi,
        )
    }
}

fn grad_dot(p: &HomoPoly, g: &VecPoly3) -> HomoPoly {
    let degree = p.degree() + g.degree() - 1;
    let mut acc = HomoPoly::zero(3, degree);
    if p.degree() == 0 {
        return acc;
    }
    for i in 0..3 {
        if g.comp(i).is_zero() {
            continue;
        }
        acc += &p.partial(i).mul(g.comp(i));
    }
    acc
}

/// Residuals of the three conditions defining `U2_j`. Stored values are
/// relative to `max(1, |N_j|, |right-hand side|)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CmResiduals {
    /// `D_u h B u - d_theta h + Phi Psi(0) F + D_u U2 g` on `[-tau0, 0]`.
    pub ode: f64,
    /// `d_theta h(0) - L h - F`.
    pub jump: f64,
    /// `max |(Psi, h_m)|`.
    pub orthogonality: f64,
}

impl CmResiduals {
    pub fn max(&self) -> f64 {
        self.ode.max(self.jump).max(self.orthogonality)
    }

    pub fn relative_to(&self, scale: f64) -> Self {
        Self {
            ode: self.ode / scale,
            jump: self.jump / scale,
            orthogonality: self.orthogonality / scale,
        }
    }
}

/// The history component `U2_j(u)(theta)` of the center manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct CMTable {
    pub degree: usize,
    pub tau0: f64,
    pub field: ThetaField,
    pub residuals: CmResiduals,
}

impl CMTable {
    pub fn zero(degree: usize, tau0: f64) -> Self {
        Self {
            degree,
            tau0,
            field: ThetaField::zero(degree),
            residuals: CmResiduals::default(),
        }
    }

    pub fn theta_degree(&self) -> usize {
        self.field.theta_degree()
    }

    pub fn entry(&self, exps: &[usize; 3]) -> ThetaPoly {
        self.field.entry(exps, -self.tau0, 0.0)
    }

    /// Per-monomial `theta`-polynomials in graded-lex order.
    pub fn entries(&self) -> Vec<([usize; 3], ThetaPoly)> {
        enumerate_monomials(3, self.degree)
            .into_iter()
            .map(|e| (e, self.entry(&e)))
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.field.max_abs() == 0.0
    }
}

/// Lower-order parts of the center manifold used when re-expanding the
/// nonlinearity: `U1_k` and `U2_k` for `k = 2..`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Embedding {
    pub u1: Vec<VecPoly3>,
    pub u2: Vec<CMTable>,
}

impl Embedding {
    /// `(x(0), y(0), x(-tau0), y(-tau0))` of `W(u)` as series truncated at `max_degree`.
    pub fn boundary_series(&self, tau0: f64, max_degree: usize) -> [Series; 4] {
        let mut v: [Series; 3] = std::array::from_fn(|_| Series::zero(3, max_degree));
        for (i, s) in v.iter_mut().enumerate() {
            let mut lin = [0.0; 3];
            lin[i] = 1.0;
            s.add_homo(&HomoPoly::linear(&lin));
        }
        for u1 in &self.u1 {
            for (i, s) in v.iter_mut().enumerate() {
                s.add_homo(u1.comp(i));
            }
        }
        let h = 0.5 * tau0 * tau0;
        let mut out = [
            v[0].clone(),
            v[1].clone(),
            v[0].add(&v[1].scale(-tau0)).add(&v[2].scale(h)),
            v[1].add(&v[2].scale(-tau0)),
        ];
        for u2 in &self.u2 {
            let at0 = u2.field.eval(0.0);
            let at_tau = u2.field.eval(-tau0);
            out[0].add_homo(&at0[0]);
            out[1].add_homo(&at0[1]);
            out[2].add_homo(&at_tau[0]);
            out[3].add_homo(&at_tau[1]);
        }
        out
    }
}

/// Degree-`j` part of `F(x(0), y(0)) + G(x(-tau0), y(-tau0))` evaluated on
/// the embedding.
pub fn nonlinearity_value(fg: &FGSeries, p: &OscillatorParams, j: usize, emb: Option<&Embedding>) -> HomoPoly {
    let empty = Embedding::default();
    let args = emb.unwrap_or(&empty).boundary_series(p.tau0, j);
    let mut acc = Series::zero(3, j);
    for d in 2..=j.min(fg.max_degree()) {
        if !fg.f(d).is_zero() {
            acc = acc.add(&fg.f(d).eval_series(&args[0..2]));
        }
        if !fg.g(d).is_zero() {
            acc = acc.add(&fg.g(d).eval_series(&args[2..4]));
        }
    }
    acc.part(j).clone()
}

/// The `u`-forcing `Psi(0) (0, N_j)`, where `N_j` is [`nonlinearity_value`].
/// Without an embedding `N_j = F_j(u1, u2) + G_j(u1 - tau0 u2 + tau0^2/2 u3, u2 - tau0 u3)`.
pub fn project_nonlinearity(
    fg: &FGSeries,
    p: &OscillatorParams,
    basis: &BasisPair,
    j: usize,
    emb: Option<&Embedding>,
) -> VecPoly3 {
    let n = nonlinearity_value(fg, p, j, emb);
    let col = basis.psi0_column(1);
    VecPoly3::new([n.scale(col[0]), n.scale(col[1]), n.scale(col[2])]).expect("shapes agree")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReductionOptions {
    /// Largest `theta`-degree the `U2_j` solve may use.
    pub theta_degree_cap: usize,
    pub cm_tolerance: f64,
}

impl Default for ReductionOptions {
    fn default() -> Self {
        Self {
            theta_degree_cap: DEFAULT_THETA_SOLVE_CAP,
            cm_tolerance: CM_TOLERANCE,
        }
    }
}

type SolveKey = ([u64; 4], usize, usize);

struct VSolver {
    matrix: DMatrix<f64>,
    pinv: DMatrix<f64>,
}

impl VSolver {
    /// Least-squares solve with two steps of iterative refinement.
    fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut x = &self.pinv * b;
        for _ in 0..2 {
            let r = b - &self.matrix * &x;
            x += &self.pinv * r;
        }
        x
    }
}

fn solve_cache() -> &'static Mutex<HashMap<SolveKey, Arc<VSolver>>> {
    static CACHE: OnceLock<Mutex<HashMap<SolveKey, Arc<VSolver>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn delta_matrix(j: usize) -> DMatrix<f64> {
    let m = monomial_count(3, j);
    let mut d = DMatrix::zeros(m, m);
    let monos = enumerate_monomials(3, j);
    for (col, e) in monos.iter().enumerate() {
        let img = HomoPoly::monomial(3, *e, 1.0).bu_derivative();
        for (row, v) in img.coeffs().iter().enumerate() {
            d[(row, col)] = *v;
        }
    }
    d
}

struct VSystem {
    m: usize,
    dmax: usize,
}

impl VSystem {
    fn unknowns(&self) -> usize {
        self.m * 2 * (self.dmax + 1)
    }

    fn var(&self, mono: usize, c: usize, k: usize) -> usize {
        (mono * 2 + c) * (self.dmax + 1) + k
    }

    fn ode_row(&self, k: usize, mono: usize, c: usize) -> usize {
        (k * self.m + mono) * 2 + c
    }

    fn jump_row(&self, mono: usize, c: usize) -> usize {
        (self.dmax + 1) * self.m * 2 + mono * 2 + c
    }

    fn orth_row(&self, mono: usize, i: usize) -> usize {
        (self.dmax + 1) * self.m * 2 + self.m * 2 + mono * 3 + i
    }

    fn rows(&self) -> usize {
        (self.dmax + 1) * self.m * 2 + self.m * 5
    }
}

/// Column-scaled pseudo-inverse of the `U2_j` system, cached per parameter
/// point, degree and `theta`-degree.
fn v_solver(p: &OscillatorParams, basis: &BasisPair, j: usize, dmax: usize) -> Arc<VSolver> {
    let key = (
        [p.a.to_bits(), p.beta.to_bits(), p.alpha.to_bits(), p.tau0.to_bits()],
        j,
        dmax,
    );
    if let Some(s) = solve_cache().lock().expect("solver cache").get(&key) {
        return Arc::clone(s);
    }
    let sys = VSystem {
        m: monomial_count(3, j),
        dmax,
    };
    let delta = delta_matrix(j);
    let mut a = DMatrix::<f64>::zeros(sys.rows(), sys.unknowns());
    let (m0, m1) = (p.m0(), p.m1());
    let tau = p.tau0;
    // (Psi_i, e_c theta^k)
    let pair: Vec<[[f64; 2]; 3]> = (0..=dmax)
        .map(|k| {
            let mut coeffs = vec![[0.0; 2]; k + 1];
            std::array::from_fn(|i| {
                std::array::from_fn(|c| {
                    coeffs[k] = [0.0; 2];
                    coeffs[k][c] = 1.0;
                    bilinear(&basis.psi[i], &ThetaPoly::new(coeffs.clone(), -tau, 0.0), p)
                })
            })
        })
        .collect();
    for k in 0..=dmax {
        for n in 0..sys.m {
            for c in 0..2 {
                let row = sys.ode_row(k, n, c);
                for mono in 0..sys.m {
                    let d = delta[(n, mono)];
                    if d != 0.0 {
                        a[(row, sys.var(mono, c, k))] += d;
                    }
                }
                if k < dmax {
                    a[(row, sys.var(n, c, k + 1))] -= (k + 1) as f64;
                }
            }
        }
    }
    for n in 0..sys.m {
        for c in 0..2 {
            let row = sys.jump_row(n, c);
            if dmax >= 1 {
                a[(row, sys.var(n, c, 1))] += 1.0;
            }
            for cc in 0..2 {
                a[(row, sys.var(n, cc, 0))] -= m0[c][cc];
                let mut pw = 1.0;
                for k in 0..=dmax {
                    a[(row, sys.var(n, cc, k))] -= m1[c][cc] * pw;
                    pw *= -tau;
                }
            }
        }
        for i in 0..3 {
            let row = sys.orth_row(n, i);
            for c in 0..2 {
                for (k, pk) in pair.iter().enumerate() {
                    a[(row, sys.var(n, c, k))] += pk[i][c];
                }
            }
        }
    }
    let matrix = a.clone();
    let scales: Vec<f64> = (0..sys.unknowns())
        .map(|v| {
            let k = v % (dmax + 1);
            (1..=k).fold(1.0, |acc, i| acc * tau / i as f64)
        })
        .collect();
    for (col, s) in scales.iter().enumerate() {
        a.column_mut(col).scale_mut(*s);
    }
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let mut pinv = svd
        .pseudo_inverse(1e-13 * smax)
        .expect("singular vectors were computed");
    for (row, s) in scales.iter().enumerate() {
        pinv.row_mut(row).scale_mut(*s);
    }
    let solver = Arc::new(VSolver { matrix, pinv });
    let mut guard = solve_cache().lock().expect("solver cache");
    Arc::clone(guard.entry(key).or_insert(solver))
}

/// Independent residuals of a candidate `U2_j`.
pub fn cm_residuals(
    h: &ThetaField,
    ode_rhs: &ThetaField,
    n: &HomoPoly,
    p: &OscillatorParams,
    basis: &BasisPair,
) -> CmResiduals {
    let ode = h.bu_derivative().sub(&h.d_theta()).sub(ode_rhs).max_abs();
    let dh0 = h.d_theta().eval(0.0);
    let h0 = h.eval(0.0);
    let ht = h.eval(-p.tau0);
    let (m0, m1) = (p.m0(), p.m1());
    let mut jump = 0.0f64;
    for c in 0..2 {
        let mut r = dh0[c].clone();
        for cc in 0..2 {
            r -= &h0[cc].scale(m0[c][cc]);
            r -= &ht[cc].scale(m1[c][cc]);
        }
        if c == 1 {
            r -= n;
        }
        jump = jump.max(r.max_abs());
    }
    let mut orthogonality = 0.0f64;
    for e in enumerate_monomials(3, h.degree()) {
        let entry = h.entry(&e, -p.tau0, 0.0);
        if entry.is_zero() {
            continue;
        }
        for row in &basis.psi {
            orthogonality = orthogonality.max(bilinear(row, &entry, p).abs());
        }
    }
    CmResiduals {
        ode,
        jump,
        orthogonality,
    }
}

/// Solves for `U2_j` given the nonlinearity value `N_j` and the correction
/// `sum D_u U2_k g_m` from lower orders:
///
/// * `D_u h B u - d_theta h = -Phi(theta) Psi(0) (0, N_j) - sum D_u U2_k g_m`,
/// * `d_theta h(0) - L h = (0, N_j)`,
/// * `(Psi, h_m) = 0` for every monomial.
pub fn solve_v_homological(
    j: usize,
    n: &HomoPoly,
    feedback: &ThetaField,
    p: &OscillatorParams,
    basis: &BasisPair,
    opts: &ReductionOptions,
) -> Result<CMTable> {
    let col = basis.psi0_column(1);
    let mut rhs = feedback.scale(-1.0);
    // Phi(theta) col = (col0 + theta col1 + theta^2/2 col2, col1 + theta col2)
    rhs.add_term(0, 0, &n.scale(-col[0]));
    rhs.add_term(1, 0, &n.scale(-col[1]));
    rhs.add_term(2, 0, &n.scale(-0.5 * col[2]));
    rhs.add_term(0, 1, &n.scale(-col[1]));
    rhs.add_term(1, 1, &n.scale(-col[2]));
    rhs.trim();

    let scale = n.max_abs().max(rhs.max_abs()).max(1.0);
    if rhs.max_abs() == 0.0 && n.max_abs() == 0.0 {
        return Ok(CMTable::zero(j, p.tau0));
    }
    let bound = (2 * j + 3).max(rhs.total_weight(1e-14 * scale) + 1);
    let attempts = [j + 3, bound];
    let mut last = None;
    for (attempt, &dmax) in attempts.iter().enumerate() {
        if attempt > 0 && dmax <= attempts[0] {
            break;
        }
        if dmax > opts.theta_degree_cap {
            return Err(Error::ThetaDegreeOverflow {
                degree: dmax,
                cap: opts.theta_degree_cap,
            });
        }
        let sys = VSystem {
            m: monomial_count(3, j),
            dmax,
        };
        let mut b = DVector::<f64>::zeros(sys.rows());
        for k in 0..=dmax.min(rhs.theta_degree()) {
            let t = rhs.term(k);
            for c in 0..2 {
                for (mono, v) in t[c].coeffs().iter().enumerate() {
                    b[sys.ode_row(k, mono, c)] = *v;
                }
            }
        }
        for (mono, v) in n.coeffs().iter().enumerate() {
            b[sys.jump_row(mono, 1)] = *v;
        }
        let x = v_solver(p, basis, j, dmax).solve(&b);
        let mut field = ThetaField::zero(j);
        for k in 0..=dmax {
            for c in 0..2 {
                let coeffs: Vec<f64> = (0..sys.m).map(|mono| x[sys.var(mono, c, k)]).collect();
                field.add_term(k, c, &HomoPoly::from_coeffs(3, j, coeffs)?);
            }
        }
        field.trim();
        let res = cm_residuals(&field, &rhs, n, p, basis).relative_to(scale);
        let worst = res.max();
        if worst < opts.cm_tolerance {
            return Ok(CMTable {
                degree: j,
                tau0: p.tau0,
                field,
                residuals: res,
            });
        }
        last = Some((dmax, worst));
    }
    let (theta_degree, residual) = last.expect("at least one attempt");
    Err(Error::CmResidual {
        degree: j,
        theta_degree,
        residual,
    })
}

/// Everything computed at one order.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderTrace {
    pub degree: usize,
    /// `N_j`, the degree-`j` nonlinearity value on the embedding.
    pub nonlinearity: HomoPoly,
    /// `f~1_j = Psi(0) (0, N_j) - sum D U1_k g_m`.
    pub forcing: VecPoly3,
    /// Coefficients of `g_j` on `w_basis(j)`.
    pub g: Vec<f64>,
    pub u1: VecPoly3,
    pub u2: CMTable,
    pub split_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReductionTrace {
    pub orders: Vec<OrderTrace>,
}

impl ReductionTrace {
    pub fn order(&self, j: usize) -> Option<&OrderTrace> {
        self.orders.iter().find(|o| o.degree == j)
    }

    pub fn embedding(&self) -> Embedding {
        Embedding {
            u1: self.orders.iter().map(|o| o.u1.clone()).collect(),
            u2: self.orders.iter().map(|o| o.u2.clone()).collect(),
        }
    }

    pub fn max_cm_residual(&self) -> f64 {
        self.orders.iter().fold(0.0, |m, o| m.max(o.u2.residuals.max()))
    }

    pub fn max_split_residual(&self) -> f64 {
        self.orders.iter().fold(0.0, |m, o| m.max(o.split_residual))
    }
}

pub fn reduce(fg: &FGSeries, p: &OscillatorParams, order: usize) -> Result<(NFSeries, ReductionTrace)> {
    let basis = psi_basis(p)?;
    reduce_with(fg, p, &basis, order, &ReductionOptions::default())
}

pub fn reduce_with(
    fg: &FGSeries,
    p: &OscillatorParams,
    basis: &BasisPair,
    order: usize,
    opts: &ReductionOptions,
) -> Result<(NFSeries, ReductionTrace)> {
    if order < 2 {
        return Err(Error::Validation(format!("order must be at least 2, got {order}")));
    }
    let mut nf = NFSeries::zero(order);
    let mut trace = ReductionTrace::default();
    for j in 2..=order {
        let emb = trace.embedding();
        let n = nonlinearity_value(fg, p, j, Some(&emb));
        let col = basis.psi0_column(1);
        let mut forcing = VecPoly3::new([n.scale(col[0]), n.scale(col[1]), n.scale(col[2])])?;
        let mut feedback = ThetaField::zero(j);
        for k in 2..j {
            let m = j + 1 - k;
            if m < 2 {
                continue;
            }
            let g_m = nf.vector(m);
            let ok = trace.order(k).expect("lower order present");
            forcing -= &ok.u1.jacobian_times(&g_m);
            feedback = feedback.add(&ok.u2.field.jacobian_times(&g_m));
        }
        let s = split(&forcing)?;
        nf.set_coeffs(j, s.w_part.clone())?;
        let u2 = solve_v_homological(j, &n, &feedback, p, basis, opts)?;
        trace.orders.push(OrderTrace {
            degree: j,
            nonlinearity: n,
            forcing,
            g: s.w_part,
            u1: s.preimage,
            u2,
            split_residual: s.residual,
        });
    }
    Ok((nf, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homological::Family;
    use crate::linear::locus;

    fn z(e: [usize; 2], c: f64) -> HomoPoly {
        HomoPoly::monomial(2, [e[0], e[1], 0], c)
    }

    #[test]
    fn order_two_examples() {
        let p = locus(1.0, 0.0).unwrap();
        let basis = psi_basis(&p).unwrap();
        let mut fg = FGSeries::zero(2);
        fg.set_f(2, z([2, 0], 1.0)).unwrap();
        let v = project_nonlinearity(&fg, &p, &basis, 2, None);
        assert!((v.comp(1).coeff(&[2, 0, 0]) - 0.75).abs() < 1e-12);
        assert!((v.comp(2).coeff(&[2, 0, 0]) - 2.1213203436).abs() < 1e-9);

        let mut fg = FGSeries::zero(2);
        fg.set_g(2, z([0, 2], 1.0)).unwrap();
        let v = project_nonlinearity(&fg, &p, &basis, 2, None);
        let k2 = p.kappa2;
        let s2 = std::f64::consts::SQRT_2;
        assert!((v.comp(2).coeff(&[0, 2, 0]) - k2).abs() < 1e-12);
        assert!((v.comp(2).coeff(&[0, 1, 1]) + 2.0 * s2 * k2).abs() < 1e-12);
        assert!((v.comp(2).coeff(&[0, 0, 2]) - 2.0 * k2).abs() < 1e-12);

        let v = project_nonlinearity(&FGSeries::zero(3), &p, &basis, 3, None);
        assert_eq!(v.max_abs(), 0.0);
    }

    #[test]
    fn zero_forcing_gives_zero() {
        let p = locus(2.0, 1.0).unwrap();
        let (nf, trace) = reduce(&FGSeries::zero(4), &p, 4).unwrap();
        assert_eq!(nf.max_abs_diff(&NFSeries::zero(4)), 0.0);
        assert!(trace.orders.iter().all(|o| o.u2.is_zero()));
    }

    #[test]
    fn quadratic_cm_residuals() {
        let p = locus(1.0, 0.0).unwrap();
        let mut fg = FGSeries::zero(2);
        fg.set_f(2, z([2, 0], 1.0)).unwrap();
        let (_, trace) = reduce(&fg, &p, 2).unwrap();
        let r = trace.orders[0].u2.residuals;
        assert!(r.ode < 1e-10 && r.jump < 1e-10 && r.orthogonality < 1e-10, "{r:?}");
        assert!(!trace.orders[0].u2.is_zero());
    }

    #[test]
    fn order_two_is_direct_projection() {
        let p = locus(2.0, 1.0).unwrap();
        let basis = psi_basis(&p).unwrap();
        let mut fg = FGSeries::zero(2);
        fg.set_f(2, &z([2, 0], 0.3) + &z([1, 1], -1.1)).unwrap();
        fg.set_g(2, &z([0, 2], 0.7) + &z([1, 1], 0.2)).unwrap();
        let (nf, _) = reduce(&fg, &p, 2).unwrap();
        let direct = split(&project_nonlinearity(&fg, &p, &basis, 2, None)).unwrap();
        for (a, b) in nf.coeffs(2).iter().zip(&direct.w_part) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn higher_orders_satisfy_all_conditions() {
        for (a, beta) in [(1.0, 0.0), (2.0, 1.0)] {
            let p = locus(a, beta).unwrap();
            let mut fg = FGSeries::zero(4);
            fg.set_f(2, &z([2, 0], 1.0) + &z([0, 2], -0.5)).unwrap();
            fg.set_g(2, z([1, 1], 0.4)).unwrap();
            fg.set_f(3, z([3, 0], -0.2)).unwrap();
            let (nf, trace) = reduce(&fg, &p, 4).unwrap();
            assert!(trace.max_cm_residual() < 1e-10);
            for j in 2..=4 {
                let g = nf.vector(j);
                let s = split(&g).unwrap();
                assert!(s.range_part.max_abs() < 1e-10 * g.max_abs().max(1.0));
            }
        }
    }

    #[test]
    fn deterministic() {
        let p = locus(1.0, 0.0).unwrap();
        let mut fg = FGSeries::zero(3);
        fg.set_g(2, z([2, 0], 1.0)).unwrap();
        let a = reduce(&fg, &p, 3).unwrap().0;
        let b = reduce(&fg, &p, 3).unwrap().0;
        assert_eq!(a, b);
    }

    #[test]
    fn nf_labels() {
        let mut nf = NFSeries::zero(3);
        let l = WLabel::new(Family::B, 3, 1).unwrap();
        nf.set(l, 2.5).unwrap();
        assert_eq!(nf.get(&l), 2.5);
        assert!(nf
            .set(
                WLabel {
                    family: Family::B,
                    degree: 2,
                    index: 3
                },
                1.0
            )
            .is_err());
        assert!(nf.set(WLabel::new(Family::A, 4, 0).unwrap(), 1.0).is_err());
        assert_eq!(nf.entries().len(), 4 + 6);
    }
}
