use crate::error::{Error, Result};

/// Largest theta-degree a [`ThetaPoly`] may reach through integration.
pub const DEFAULT_THETA_DEGREE_CAP: usize = 16;

/// An `R^2`-valued polynomial `p(t) = sum_k c_k t^k` on a closed interval.
///
/// Used both for history functions on `[-tau0, 0]` and for adjoint rows on
/// `[0, tau0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaPoly {
    coeffs: Vec<[f64; 2]>,
    domain: [f64; 2],
}

impl ThetaPoly {
    /// Builds a polynomial; trailing exact-zero coefficients are dropped.
    pub fn new(coeffs: Vec<[f64; 2]>, lo: f64, hi: f64) -> Self {
        let mut p = Self {
            coeffs,
            domain: [lo, hi],
        };
        p.trim(0.0);
        p
    }

    pub fn zero(lo: f64, hi: f64) -> Self {
        Self::new(Vec::new(), lo, hi)
    }

    pub fn constant(v: [f64; 2], lo: f64, hi: f64) -> Self {
        Self::new(vec![v], lo, hi)
    }

    fn trim(&mut self, tol: f64) {
        while let Some(last) = self.coeffs.last() {
            if last[0].abs() <= tol && last[1].abs() <= tol {
                self.coeffs.pop();
            } else {
                break;
            }
        }
    }

    /// Copy with trailing coefficients of magnitude `<= tol` removed.
    pub fn trimmed(&self, tol: f64) -> Self {
        let mut p = self.clone();
        p.trim(tol);
        p
    }

    pub fn domain(&self) -> [f64; 2] {
        self.domain
    }

    pub fn coeffs(&self) -> &[[f64; 2]] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> [f64; 2] {
        self.coeffs.get(k).copied().unwrap_or([0.0, 0.0])
    }

    /// Degree of the stored representation; the zero polynomial has degree 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c[0].abs()).max(c[1].abs()))
    }

    /// Evaluates at `t`, which must lie in the domain.
    pub fn eval(&self, t: f64) -> Result<[f64; 2]> {
        let [lo, hi] = self.domain;
        let slack = 1e-12 * lo.abs().max(hi.abs()).max(1.0);
        if t < lo - slack || t > hi + slack {
            return Err(Error::Domain(format!("theta = {t} outside [{lo}, {hi}]")));
        }
        Ok(self.eval_unchecked(t))
    }

    pub(crate) fn eval_unchecked(&self, t: f64) -> [f64; 2] {
        let mut acc = [0.0, 0.0];
        for c in self.coeffs.iter().rev() {
            acc[0] = acc[0] * t + c[0];
            acc[1] = acc[1] * t + c[1];
        }
        acc
    }

    pub fn derivative(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| [k as f64 * c[0], k as f64 * c[1]])
            .collect();
        Self::new(coeffs, self.domain[0], self.domain[1])
    }

    /// Antiderivative with zero constant term, limited to [`DEFAULT_THETA_DEGREE_CAP`].
    pub fn integrate(&self) -> Result<Self> {
        self.integrate_with_cap(DEFAULT_THETA_DEGREE_CAP)
    }

    pub fn integrate_with_cap(&self, cap: usize) -> Result<Self> {
        if self.is_zero() {
            return Ok(self.clone());
        }
        let degree = self.coeffs.len();
        if degree > cap {
            return Err(Error::ThetaDegreeOverflow { degree, cap });
        }
        let mut coeffs = vec![[0.0, 0.0]];
        coeffs.extend(self.coeffs.iter().enumerate().map(|(k, c)| {
            let s = 1.0 / (k as f64 + 1.0);
            [c[0] * s, c[1] * s]
        }));
        Ok(Self::new(coeffs, self.domain[0], self.domain[1]))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(
            self.coeffs.iter().map(|c| [c[0] * s, c[1] * s]).collect(),
            self.domain[0],
            self.domain[1],
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n)
            .map(|k| {
                let a = self.coeff(k);
                let b = other.coeff(k);
                [a[0] + b[0], a[1] + b[1]]
            })
            .collect();
        Self::new(coeffs, self.domain[0], self.domain[1])
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// Component `c` as a scalar coefficient vector.
    pub fn component(&self, c: usize) -> Vec<f64> {
        self.coeffs.iter().map(|v| v[c]).collect()
    }

    /// `q(t) = p(t + shift)` on the translated domain.
    pub fn shifted(&self, shift: f64) -> Self {
        let x = crate::upoly::shift(&self.component(0), shift);
        let y = crate::upoly::shift(&self.component(1), shift);
        let coeffs = x.iter().zip(&y).map(|(a, b)| [*a, *b]).collect();
        Self::new(coeffs, self.domain[0] - shift, self.domain[1] - shift)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const T: f64 = std::f64::consts::SQRT_2;

    #[test]
    fn eval_at_zero_is_constant_term() {
        let p = ThetaPoly::new(vec![[1.0, 0.0], [0.0, 1.0]], -T, 0.0);
        assert_eq!(p.eval(0.0).unwrap(), [1.0, 0.0]);
    }

    #[test]
    fn power_rule() {
        let p = ThetaPoly::new(vec![[0.0, 0.0], [0.0, 1.0], [0.5, 0.0]], -T, 0.0);
        let d = p.derivative();
        assert_eq!(d.coeffs(), &[[0.0, 1.0], [1.0, 0.0]]);
    }

    #[test]
    fn integrate_then_evaluate() {
        let p = ThetaPoly::constant([0.0, 1.0], -T, 0.0);
        let v = p.integrate().unwrap().eval(-T).unwrap();
        assert_eq!(v[0], 0.0);
        assert!((v[1] + T).abs() < 1e-15);
    }

    #[test]
    fn outside_domain_is_rejected() {
        let p = ThetaPoly::constant([1.0, 1.0], -T, 0.0);
        assert!(matches!(p.eval(0.5), Err(Error::Domain(_))));
        assert!(matches!(p.eval(-2.0), Err(Error::Domain(_))));
    }

    #[test]
    fn degree_cap_overflow() {
        let coeffs = vec![[1.0, 0.0]; 5];
        let p = ThetaPoly::new(coeffs, -T, 0.0);
        assert!(matches!(
            p.integrate_with_cap(4),
            Err(Error::ThetaDegreeOverflow { degree: 5, cap: 4 })
        ));
        assert_eq!(p.integrate_with_cap(5).unwrap().degree(), 5);
    }

    #[test]
    fn trailing_zeros_trimmed() {
        let p = ThetaPoly::new(vec![[1.0, 2.0], [0.0, 0.0]], -T, 0.0);
        assert_eq!(p.degree(), 0);
        assert_eq!(p.coeffs().len(), 1);
    }

    #[test]
    fn shift_moves_domain() {
        // psi(s) = (0, s) on [0, tau]; q(z) = psi(z + tau) on [-tau, 0]
        let p = ThetaPoly::new(vec![[0.0, 0.0], [0.0, 1.0]], 0.0, T);
        let q = p.shifted(T);
        assert_eq!(q.domain(), [-T, 0.0]);
        assert!((q.eval(-T).unwrap()[1]).abs() < 1e-15);
        assert!((q.eval(0.0).unwrap()[1] - T).abs() < 1e-15);
    }
}
