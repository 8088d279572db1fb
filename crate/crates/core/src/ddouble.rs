//! Double-double arithmetic (about 32 significant digits), used where a
//! defective eigenvalue has to be resolved below the `f64` perturbation floor.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub(crate) struct DD {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DD {
    pub const ZERO: DD = DD { hi: 0.0, lo: 0.0 };
    pub const ONE: DD = DD { hi: 1.0, lo: 0.0 };

    pub fn new(x: f64) -> Self {
        DD { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return DD::ZERO;
        }
        let x = DD::new(self.hi.sqrt());
        // one Newton step doubles the digits
        x + (self - x * x) / (x * DD::new(2.0))
    }
}

impl From<f64> for DD {
    fn from(x: f64) -> Self {
        DD::new(x)
    }
}

impl Add for DD {
    type Output = DD;
    fn add(self, o: DD) -> DD {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        DD { hi, lo }
    }
}

impl Neg for DD {
    type Output = DD;
    fn neg(self) -> DD {
        DD {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for DD {
    type Output = DD;
    fn sub(self, o: DD) -> DD {
        self + (-o)
    }
}

impl Mul for DD {
    type Output = DD;
    fn mul(self, o: DD) -> DD {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        DD { hi, lo }
    }
}

impl Div for DD {
    type Output = DD;
    fn div(self, o: DD) -> DD {
        let q1 = self.hi / o.hi;
        let r = self - o * DD::new(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * DD::new(q2);
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        DD { hi, lo } + DD::new(q3)
    }
}

/// Dense row-major square matrix in double-double.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct DDMatrix {
    pub n: usize,
    pub data: Vec<DD>,
}

impl DDMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![DD::ZERO; n * n],
        }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> DD {
        self.data[r * self.n + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: DD) {
        self.data[r * self.n + c] = v;
    }

    pub fn mul_vec(&self, v: &[DD]) -> Vec<DD> {
        (0..self.n)
            .map(|r| (0..self.n).fold(DD::ZERO, |acc, c| acc + self.at(r, c) * v[c]))
            .collect()
    }
}

/// LU factorization with partial pivoting.
pub(crate) struct DDLu {
    lu: DDMatrix,
    perm: Vec<usize>,
}

impl DDLu {
    pub fn new(mut a: DDMatrix) -> Option<Self> {
        let n = a.n;
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let piv = (k..n).max_by(|&i, &j| a.at(i, k).to_f64().abs().total_cmp(&a.at(j, k).to_f64().abs()))?;
            if a.at(piv, k).hi == 0.0 {
                return None;
            }
            if piv != k {
                for c in 0..n {
                    let t = a.at(k, c);
                    a.set(k, c, a.at(piv, c));
                    a.set(piv, c, t);
                }
                perm.swap(k, piv);
            }
            let d = a.at(k, k);
            for r in k + 1..n {
                let f = a.at(r, k) / d;
                a.set(r, k, f);
                for c in k + 1..n {
                    let v = a.at(r, c) - f * a.at(k, c);
                    a.set(r, c, v);
                }
            }
        }
        Some(Self { lu: a, perm })
    }

    pub fn solve(&self, b: &[DD]) -> Vec<DD> {
        let n = self.lu.n;
        let mut x: Vec<DD> = self.perm.iter().map(|&p| b[p]).collect();
        for r in 0..n {
            for c in 0..r {
                x[r] = x[r] - self.lu.at(r, c) * x[c];
            }
        }
        for r in (0..n).rev() {
            for c in r + 1..n {
                x[r] = x[r] - self.lu.at(r, c) * x[c];
            }
            x[r] = x[r] / self.lu.at(r, r);
        }
        x
    }
}

pub(crate) fn dot(a: &[DD], b: &[DD]) -> DD {
    a.iter().zip(b).fold(DD::ZERO, |acc, (x, y)| acc + *x * *y)
}

/// Modified Gram-Schmidt (applied twice) on the columns.
pub(crate) fn orthonormalize(cols: &mut [Vec<DD>]) {
    for _ in 0..2 {
        for i in 0..cols.len() {
            for k in 0..i {
                let (head, tail) = cols.split_at_mut(i);
                let r = dot(&head[k], &tail[0]);
                for (x, q) in tail[0].iter_mut().zip(&head[k]) {
                    *x = *x - r * *q;
                }
            }
            let nrm = dot(&cols[i], &cols[i]).sqrt();
            for x in cols[i].iter_mut() {
                *x = *x / nrm;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn carries_extra_digits() {
        let third = DD::ONE / DD::new(3.0);
        let back = third * DD::new(3.0) - DD::ONE;
        assert!(back.to_f64().abs() < 1e-30);
        let tiny = DD::new(1.0) + DD::new(1e-20);
        assert_eq!((tiny - DD::ONE).to_f64(), 1e-20);
        let r = DD::new(2.0).sqrt();
        assert!((r * r - DD::new(2.0)).to_f64().abs() < 1e-30);
    }

    #[test]
    fn lu_solves() {
        let mut a = DDMatrix::zeros(3);
        let vals = [[2.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 4.0]];
        for r in 0..3 {
            for c in 0..3 {
                a.set(r, c, DD::new(vals[r][c]));
            }
        }
        let b = vec![DD::ONE, DD::new(2.0), DD::new(3.0)];
        let lu = DDLu::new(a.clone()).unwrap();
        let x = lu.solve(&b);
        let ax = a.mul_vec(&x);
        for (u, v) in ax.iter().zip(&b) {
            assert!((*u - *v).to_f64().abs() < 1e-30);
        }
    }
}
