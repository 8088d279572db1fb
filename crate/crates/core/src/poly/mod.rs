//! Homogeneous polynomials in up to three variables, truncated power series
//! built from them, and vector-valued polynomials in the history variable.
//!
//! Monomials of a fixed degree are stored densely in graded-lexicographic
//! order with `u1 > u2 > u3`: for degree 2 in three variables the order is
//! `u1^2, u1*u2, u1*u3, u2^2, u2*u3, u3^2`.

mod series;
mod text;
mod theta;

pub use series::Series;
pub use text::{format_poly, parse_terms, ParsedTerm};
pub use theta::{ThetaPoly, DEFAULT_THETA_DEGREE_CAP};

use crate::error::{Error, Result};
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

/// Exponents of a monomial. Entries beyond the polynomial's variable count are zero.
pub type Exponents = [usize; 3];

pub(crate) fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc = 1usize;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Number of monomials of `degree` in `nvars` variables.
pub fn monomial_count(nvars: usize, degree: usize) -> usize {
    assert!((1..=3).contains(&nvars), "nvars must be 1, 2 or 3");
    binomial(degree + nvars - 1, nvars - 1)
}

/// All monomials of `degree` in `nvars` variables, in graded-lex order.
pub fn enumerate_monomials(nvars: usize, degree: usize) -> Vec<Exponents> {
    let mut out = Vec::with_capacity(monomial_count(nvars, degree));
    match nvars {
        1 => out.push([degree, 0, 0]),
        2 => {
            for a in (0..=degree).rev() {
                out.push([a, degree - a, 0]);
            }
        }
        3 => {
            for a in (0..=degree).rev() {
                for b in (0..=degree - a).rev() {
                    out.push([a, b, degree - a - b]);
                }
            }
        }
        _ => panic!("nvars must be 1, 2 or 3"),
    }
    out
}

/// Position of a monomial in the graded-lex enumeration of its degree.
pub fn mono_index(nvars: usize, degree: usize, exps: &Exponents) -> Result<usize> {
    if !(1..=3).contains(&nvars) {
        return Err(Error::Index(format!("unsupported variable count {nvars}")));
    }
    if exps[nvars..].iter().any(|&e| e != 0) {
        return Err(Error::Index(format!(
            "exponents {exps:?} use more than {nvars} variables"
        )));
    }
    let total: usize = exps.iter().sum();
    if total != degree {
        return Err(Error::Index(format!(
            "exponent sum {total} does not match degree {degree}"
        )));
    }
    Ok(index_unchecked(nvars, degree, exps))
}

#[inline]
fn index_unchecked(nvars: usize, degree: usize, exps: &Exponents) -> usize {
    let mut idx = 0;
    let mut rem = degree;
    for (i, &e) in exps.iter().enumerate().take(nvars - 1) {
        for larger in e + 1..=rem {
            idx += monomial_count(nvars - i - 1, rem - larger);
        }
        rem -= e;
    }
    idx
}

/// A homogeneous polynomial with real coefficients.
///
/// The degree is part of the shape: the zero polynomial of degree 3 and the
/// zero polynomial of degree 2 are different values.
#[derive(Debug, Clone, PartialEq)]
pub struct HomoPoly {
    nvars: usize,
    degree: usize,
    coeffs: Vec<f64>,
}

impl HomoPoly {
    pub fn zero(nvars: usize, degree: usize) -> Self {
        Self {
            nvars,
            degree,
            coeffs: vec![0.0; monomial_count(nvars, degree)],
        }
    }

    pub fn from_coeffs(nvars: usize, degree: usize, coeffs: Vec<f64>) -> Result<Self> {
        if !(1..=3).contains(&nvars) {
            return Err(Error::Arity {
                expected: 3,
                got: nvars,
            });
        }
        let expected = monomial_count(nvars, degree);
        if coeffs.len() != expected {
            return Err(Error::Index(format!(
                "expected {expected} coefficients for degree {degree} in {nvars} variables, got {}",
                coeffs.len()
            )));
        }
        Ok(Self { nvars, degree, coeffs })
    }

    pub fn from_terms(nvars: usize, degree: usize, terms: &[(Exponents, f64)]) -> Result<Self> {
        let mut p = Self::zero(nvars, degree);
        for (exps, c) in terms {
            let idx = mono_index(nvars, degree, exps)?;
            p.coeffs[idx] += c;
        }
        Ok(p)
    }

    /// `coef * u^exps` in `nvars` variables.
    pub fn monomial(nvars: usize, exps: Exponents, coef: f64) -> Self {
        let degree = exps.iter().sum();
        let mut p = Self::zero(nvars, degree);
        let idx = mono_index(nvars, degree, &exps).expect("monomial exponents out of range");
        p.coeffs[idx] = coef;
        p
    }

    /// The linear form `sum_i c_i u_i`.
    pub fn linear(coefs: &[f64]) -> Self {
        let nvars = coefs.len();
        let mut p = Self::zero(nvars, 1);
        p.coeffs.copy_from_slice(coefs);
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, exps: &Exponents) -> f64 {
        mono_index(self.nvars, self.degree, exps)
            .map(|i| self.coeffs[i])
            .unwrap_or(0.0)
    }

    pub fn add_term(&mut self, exps: &Exponents, c: f64) -> Result<()> {
        let idx = mono_index(self.nvars, self.degree, exps)?;
        self.coeffs[idx] += c;
        Ok(())
    }

    /// Monomials paired with their coefficients, zeros included.
    pub fn terms(&self) -> impl Iterator<Item = (Exponents, f64)> + '_ {
        enumerate_monomials(self.nvars, self.degree)
            .into_iter()
            .zip(self.coeffs.iter().copied())
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            nvars: self.nvars,
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    fn assert_same_shape(&self, other: &Self) {
        assert!(
            self.nvars == other.nvars && self.degree == other.degree,
            "shape mismatch: ({}, {}) vs ({}, {})",
            self.nvars,
            self.degree,
            other.nvars,
            other.degree
        );
    }

    /// Product of two polynomials in the same variables.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars, "variable count mismatch");
        let degree = self.degree + other.degree;
        let mut out = Self::zero(self.nvars, degree);
        let rhs: Vec<(Exponents, f64)> = other.terms().filter(|(_, c)| *c != 0.0).collect();
        for (ea, ca) in self.terms().filter(|(_, c)| *c != 0.0) {
            for (eb, cb) in &rhs {
                let e = [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]];
                out.coeffs[index_unchecked(self.nvars, degree, &e)] += ca * cb;
            }
        }
        out
    }

    pub fn pow(&self, k: usize) -> Self {
        let mut acc = Self::monomial(self.nvars, [0, 0, 0], 1.0);
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        assert!(x.len() >= self.nvars);
        self.terms()
            .filter(|(_, c)| *c != 0.0)
            .map(|(e, c)| {
                let mut v = c;
                for i in 0..self.nvars {
                    v *= x[i].powi(e[i] as i32);
                }
                v
            })
            .sum()
    }

    /// Partial derivative with respect to variable `var` (0-based). The
    /// derivative of a degree-0 polynomial is the degree-0 zero.
    pub fn partial(&self, var: usize) -> Self {
        assert!(var < self.nvars);
        if self.degree == 0 {
            return Self::zero(self.nvars, 0);
        }
        let mut out = Self::zero(self.nvars, self.degree - 1);
        for (mut e, c) in self.terms() {
            if c == 0.0 || e[var] == 0 {
                continue;
            }
            let k = e[var] as f64;
            e[var] -= 1;
            out.coeffs[index_unchecked(self.nvars, self.degree - 1, &e)] += k * c;
        }
        out
    }

    /// `u2 * dp/du1 + u3 * dp/du2`, the derivative of `p` along `u -> B u`
    /// for the nilpotent Jordan block `B`.
    pub fn bu_derivative(&self) -> Self {
        assert_eq!(self.nvars, 3, "bu_derivative requires three variables");
        let mut out = Self::zero(3, self.degree);
        for (e, c) in self.terms() {
            if c == 0.0 {
                continue;
            }
            if e[0] > 0 {
                let t = [e[0] - 1, e[1] + 1, e[2]];
                out.coeffs[index_unchecked(3, self.degree, &t)] += e[0] as f64 * c;
            }
            if e[1] > 0 {
                let t = [e[0], e[1] - 1, e[2] + 1];
                out.coeffs[index_unchecked(3, self.degree, &t)] += e[1] as f64 * c;
            }
        }
        out
    }

    /// Substitutes a linear form for each variable. All forms must share the
    /// same target variable count.
    pub fn compose_linear(&self, subst: &[HomoPoly]) -> Result<HomoPoly> {
        if subst.len() != self.nvars {
            return Err(Error::Arity {
                expected: self.nvars,
                got: subst.len(),
            });
        }
        let target = subst[0].nvars;
        for s in subst {
            if s.degree != 1 {
                return Err(Error::Validation(format!(
                    "substitution must be linear, got degree {}",
                    s.degree
                )));
            }
            if s.nvars != target {
                return Err(Error::Arity {
                    expected: target,
                    got: s.nvars,
                });
            }
        }
        let powers: Vec<Vec<HomoPoly>> = subst
            .iter()
            .map(|s| {
                let mut v = vec![Self::monomial(target, [0, 0, 0], 1.0)];
                for k in 1..=self.degree {
                    let next = v[k - 1].mul(s);
                    v.push(next);
                }
                v
            })
            .collect();
        let mut out = Self::zero(target, self.degree);
        for (e, c) in self.terms() {
            if c == 0.0 {
                continue;
            }
            let mut term = powers[0][e[0]].scale(c);
            for (i, pw) in powers.iter().enumerate().skip(1) {
                term = term.mul(&pw[e[i]]);
            }
            out += &term;
        }
        Ok(out)
    }

    /// Evaluates the polynomial on truncated series arguments.
    pub fn eval_series(&self, args: &[Series]) -> Series {
        assert_eq!(args.len(), self.nvars, "argument count mismatch");
        let nv = args[0].nvars();
        let max = args[0].max_degree();
        let powers: Vec<Vec<Series>> = args
            .iter()
            .map(|a| {
                let mut v = vec![Series::one(nv, max)];
                for k in 1..=self.degree {
                    let next = v[k - 1].mul(a);
                    v.push(next);
                }
                v
            })
            .collect();
        let mut out = Series::zero(nv, max);
        for (e, c) in self.terms() {
            if c == 0.0 {
                continue;
            }
            let mut term = powers[0][e[0]].scale(c);
            for (i, pw) in powers.iter().enumerate().skip(1) {
                term = term.mul(&pw[e[i]]);
            }
            out = out.add(&term);
        }
        out
    }

    /// Re-expresses the polynomial in `target_nvars` variables, sending
    /// variable `i` to variable `var_map[i]`.
    pub fn embed(&self, target_nvars: usize, var_map: &[usize]) -> HomoPoly {
        assert_eq!(var_map.len(), self.nvars);
        let mut out = Self::zero(target_nvars, self.degree);
        for (e, c) in self.terms() {
            let mut t = [0usize; 3];
            for (i, &v) in var_map.iter().enumerate() {
                t[v] += e[i];
            }
            out.coeffs[index_unchecked(target_nvars, self.degree, &t)] += c;
        }
        out
    }

    /// Exact division by a monomial. Returns the quotient and the largest
    /// coefficient magnitude among terms not divisible by it.
    pub fn divide_monomial(&self, divisor: &Exponents) -> (HomoPoly, f64) {
        let dd: usize = divisor.iter().sum();
        assert!(dd <= self.degree);
        let mut q = Self::zero(self.nvars, self.degree - dd);
        let mut rem = 0.0f64;
        for (e, c) in self.terms() {
            if (0..3).all(|i| e[i] >= divisor[i]) {
                let t = [e[0] - divisor[0], e[1] - divisor[1], e[2] - divisor[2]];
                q.coeffs[index_unchecked(self.nvars, q.degree, &t)] += c;
            } else {
                rem = rem.max(c.abs());
            }
        }
        (q, rem)
    }
}

impl AddAssign<&HomoPoly> for HomoPoly {
    fn add_assign(&mut self, rhs: &HomoPoly) {
        self.assert_same_shape(rhs);
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
    }
}

impl SubAssign<&HomoPoly> for HomoPoly {
    fn sub_assign(&mut self, rhs: &HomoPoly) {
        self.assert_same_shape(rhs);
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a -= b;
        }
    }
}

impl Add for &HomoPoly {
    type Output = HomoPoly;
    fn add(self, rhs: &HomoPoly) -> HomoPoly {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub for &HomoPoly {
    type Output = HomoPoly;
    fn sub(self, rhs: &HomoPoly) -> HomoPoly {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Mul<f64> for &HomoPoly {
    type Output = HomoPoly;
    fn mul(self, rhs: f64) -> HomoPoly {
        self.scale(rhs)
    }
}

impl Neg for &HomoPoly {
    type Output = HomoPoly;
    fn neg(self) -> HomoPoly {
        self.scale(-1.0)
    }
}

/// A homogeneous polynomial map `R^3 -> R^3`: an element of `H^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct VecPoly3 {
    comps: [HomoPoly; 3],
}

impl VecPoly3 {
    pub fn new(comps: [HomoPoly; 3]) -> Result<Self> {
        let d = comps[0].degree();
        if comps.iter().any(|c| c.nvars() != 3) {
            return Err(Error::Arity {
                expected: 3,
                got: comps.iter().map(|c| c.nvars()).min().unwrap_or(0),
            });
        }
        if comps.iter().any(|c| c.degree() != d) {
            return Err(Error::Validation(
                "vector polynomial components must share a degree".into(),
            ));
        }
        Ok(Self { comps })
    }

    pub fn zero(degree: usize) -> Self {
        Self {
            comps: std::array::from_fn(|_| HomoPoly::zero(3, degree)),
        }
    }

    /// `(0, 0, p)`.
    pub fn third(p: HomoPoly) -> Self {
        let d = p.degree();
        Self {
            comps: [HomoPoly::zero(3, d), HomoPoly::zero(3, d), p],
        }
    }

    pub fn degree(&self) -> usize {
        self.comps[0].degree()
    }

    pub fn comp(&self, i: usize) -> &HomoPoly {
        &self.comps[i]
    }

    pub fn comps(&self) -> &[HomoPoly; 3] {
        &self.comps
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            comps: std::array::from_fn(|i| self.comps[i].scale(s)),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().map(HomoPoly::max_abs).fold(0.0, f64::max)
    }

    pub fn eval(&self, u: &[f64; 3]) -> [f64; 3] {
        std::array::from_fn(|i| self.comps[i].eval(u))
    }

    /// Flattened coefficients, component-major: index `c * M + mono_index`.
    pub fn to_flat(&self) -> Vec<f64> {
        self.comps.iter().flat_map(|c| c.coeffs().iter().copied()).collect()
    }

    pub fn from_flat(degree: usize, flat: &[f64]) -> Result<Self> {
        let m = monomial_count(3, degree);
        if flat.len() != 3 * m {
            return Err(Error::Index(format!(
                "expected {} coefficients, got {}",
                3 * m,
                flat.len()
            )));
        }
        let comps = [
            HomoPoly::from_coeffs(3, degree, flat[..m].to_vec())?,
            HomoPoly::from_coeffs(3, degree, flat[m..2 * m].to_vec())?,
            HomoPoly::from_coeffs(3, degree, flat[2 * m..].to_vec())?,
        ];
        Ok(Self { comps })
    }

    /// Jacobian-vector product `D(self)(u) * v(u)`, of degree `deg self - 1 + deg v`.
    pub fn jacobian_times(&self, v: &VecPoly3) -> VecPoly3 {
        let degree = self.degree() + v.degree() - 1;
        let comps = std::array::from_fn(|i| {
            let mut acc = HomoPoly::zero(3, degree);
            if self.degree() == 0 {
                return acc;
            }
            for k in 0..3 {
                if v.comps[k].is_zero() {
                    continue;
                }
                acc += &self.comps[i].partial(k).mul(&v.comps[k]);
            }
            acc
        });
        VecPoly3 { comps }
    }
}

impl AddAssign<&VecPoly3> for VecPoly3 {
    fn add_assign(&mut self, rhs: &VecPoly3) {
        for (a, b) in self.comps.iter_mut().zip(&rhs.comps) {
            *a += b;
        }
    }
}

impl SubAssign<&VecPoly3> for VecPoly3 {
    fn sub_assign(&mut self, rhs: &VecPoly3) {
        for (a, b) in self.comps.iter_mut().zip(&rhs.comps) {
            *a -= b;
        }
    }
}

impl Add for &VecPoly3 {
    type Output = VecPoly3;
    fn add(self, rhs: &VecPoly3) -> VecPoly3 {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub for &VecPoly3 {
    type Output = VecPoly3;
    fn sub(self, rhs: &VecPoly3) -> VecPoly3 {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}
