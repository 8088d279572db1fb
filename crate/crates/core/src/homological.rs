//! The homological operator `L_B h = Dh(u) B u - B h(u)` on `H^j`, the
//! complement `W_j` of its range, and the splitting `H^j = L_B(H^j) + W_j`.

use crate::error::{Error, Result};
use crate::poly::{monomial_count, HomoPoly, VecPoly3};
use nalgebra::{DMatrix, DVector};
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

pub const RANK_TOLERANCE: f64 = 1e-9;
pub const SPLIT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    /// `(0, 0, u1^(j-i) u2^i)`
    A,
    /// `(0, 0, u1^(j-1-i) u3^(i+1))`
    B,
}

/// Label of a `W_j` basis vector, written `A[j,i]` or `B[j,i]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WLabel {
    pub family: Family,
    pub degree: usize,
    pub index: usize,
}

impl WLabel {
    /// A label that names an actual member of `W_j`.
    pub fn new(family: Family, degree: usize, index: usize) -> Result<Self> {
        let label = Self { family, degree, index };
        label.validate()?;
        Ok(label)
    }

    pub fn validate(&self) -> Result<()> {
        let j = self.degree;
        if j < 2 {
            return Err(Error::Validation(format!("{self}: degree must be at least 2")));
        }
        let count = match self.family {
            Family::A => j + 1,
            Family::B => b_family_len(j),
        };
        if self.index >= count {
            return Err(Error::Validation(format!(
                "{self} is not a W_{j} label ({} has indices 0..{})",
                match self.family {
                    Family::A => "A",
                    Family::B => "B",
                },
                count - 1
            )));
        }
        Ok(())
    }

    /// Exponents of the third-component monomial.
    pub fn exponents(&self) -> [usize; 3] {
        let (j, i) = (self.degree, self.index);
        match self.family {
            Family::A => [j - i, i, 0],
            Family::B => [j - 1 - i, 0, i + 1],
        }
    }
}

impl fmt::Display for WLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fam = match self.family {
            Family::A => 'A',
            Family::B => 'B',
        };
        write!(f, "{fam}[{},{}]", self.degree, self.index)
    }
}

impl FromStr for WLabel {
    type Err = String;

    /// Parses the syntax only; use [`WLabel::validate`] for membership.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim();
        let family = match s.chars().next() {
            Some('A') => Family::A,
            Some('B') => Family::B,
            _ => return Err(format!("label '{s}' must start with A or B")),
        };
        let inner = s[1..]
            .trim()
            .strip_prefix('[')
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(|| format!("label '{s}' must look like A[j,i]"))?;
        let (j, i) = inner
            .split_once(',')
            .ok_or_else(|| format!("label '{s}' must look like A[j,i]"))?;
        let degree = j.trim().parse().map_err(|_| format!("bad degree in '{s}'"))?;
        let index = i.trim().parse().map_err(|_| format!("bad index in '{s}'"))?;
        Ok(Self { family, degree, index })
    }
}

/// Number of B-family vectors in `W_j`.
pub fn b_family_len(j: usize) -> usize {
    if j % 2 == 0 {
        (j - 2) / 2 + 1
    } else {
        (j - 1) / 2 + 1
    }
}

/// `(3j+2)/2` for even `j`, `(3j+3)/2` for odd `j`.
pub fn w_dimension(j: usize) -> usize {
    if j % 2 == 0 {
        (3 * j + 2) / 2
    } else {
        (3 * j + 3) / 2
    }
}

/// `dim H^j = 3 (j+1)(j+2)/2`.
pub fn h_dimension(j: usize) -> usize {
    3 * monomial_count(3, j)
}

/// Index triple `(N, J, I)` of the classical normal form at degree `j`: the
/// `u3`-dependent terms are `u1^I u3 sum_{i=0}^J b_{N(J-i),i} u1^(J-i) u3^i`.
pub fn classical_indices(j: usize) -> (usize, usize, usize) {
    if j % 2 == 1 {
        let jj = (j - 1) / 2;
        (1, jj, jj)
    } else {
        let jj = j / 2 - 1;
        (2, jj, jj + 1)
    }
}

/// Third-component monomials of the classical `b`-terms at degree `j`, in
/// the order `i = 0..=J`.
pub fn classical_b_monomials(j: usize) -> Vec<[usize; 3]> {
    let (_, jj, ii) = classical_indices(j);
    (0..=jj).map(|i| [ii + jj - i, 0, i + 1]).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct WBasis {
    pub degree: usize,
    pub labels: Vec<WLabel>,
    pub vectors: Vec<VecPoly3>,
}

impl WBasis {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn position(&self, label: &WLabel) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// `sum_k coeffs[k] * vectors[k]`.
    pub fn combine(&self, coeffs: &[f64]) -> VecPoly3 {
        assert_eq!(coeffs.len(), self.len());
        let mut third = HomoPoly::zero(3, self.degree);
        for (l, c) in self.labels.iter().zip(coeffs) {
            third
                .add_term(&l.exponents(), *c)
                .expect("label exponents match degree");
        }
        VecPoly3::third(third)
    }
}

pub fn w_basis(j: usize) -> WBasis {
    assert!(j >= 2, "W_j is defined for j >= 2");
    let mut labels = Vec::with_capacity(w_dimension(j));
    for i in 0..=j {
        labels.push(WLabel {
            family: Family::A,
            degree: j,
            index: i,
        });
    }
    for i in 0..b_family_len(j) {
        labels.push(WLabel {
            family: Family::B,
            degree: j,
            index: i,
        });
    }
    let vectors = labels
        .iter()
        .map(|l| VecPoly3::third(HomoPoly::monomial(3, l.exponents(), 1.0)))
        .collect();
    WBasis {
        degree: j,
        labels,
        vectors,
    }
}

/// `L_B h = (delta h1 - h2, delta h2 - h3, delta h3)` with `delta = u2 d1 + u3 d2`.
pub fn lb_apply(h: &VecPoly3) -> VecPoly3 {
    let c = h.comps();
    let d: [HomoPoly; 3] = std::array::from_fn(|i| c[i].bu_derivative());
    VecPoly3::new([&d[0] - &c[1], &d[1] - &c[2], d[2].clone()]).expect("shapes agree")
}

/// Matrix of `L_B` on `H^j` in the flat component-major basis.
pub fn lb_matrix(j: usize) -> DMatrix<f64> {
    let n = h_dimension(j);
    let mut m = DMatrix::zeros(n, n);
    let mut unit = vec![0.0; n];
    for col in 0..n {
        unit[col] = 1.0;
        let img = lb_apply(&VecPoly3::from_flat(j, &unit).expect("flat length")).to_flat();
        m.set_column(col, &DVector::from_vec(img));
        unit[col] = 0.0;
    }
    m
}

/// Numerical rank at relative threshold [`RANK_TOLERANCE`].
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    let sv = m.singular_values();
    let smax = sv.max();
    sv.iter().filter(|&&s| s > RANK_TOLERANCE * smax).count()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitResult {
    pub degree: usize,
    /// Coefficients aligned with `w_basis(degree).labels`.
    pub w_part: Vec<f64>,
    pub range_part: VecPoly3,
    pub preimage: VecPoly3,
    pub residual: f64,
}

impl SplitResult {
    pub fn w_vector(&self) -> VecPoly3 {
        w_basis(self.degree).combine(&self.w_part)
    }

    pub fn w_map(&self) -> Vec<(WLabel, f64)> {
        w_basis(self.degree)
            .labels
            .into_iter()
            .zip(self.w_part.iter().copied())
            .collect()
    }
}

/// Precomputed factorization for one degree.
#[derive(Debug)]
pub struct Splitter {
    degree: usize,
    basis: WBasis,
    lb: DMatrix<f64>,
    w_mat: DMatrix<f64>,
    /// `G^{-1} U_perp^T`: maps `p` to its `W` coordinates.
    w_projector: DMatrix<f64>,
    /// Minimum-norm pseudo-inverse of `L_B`.
    pinv: DMatrix<f64>,
    rank: usize,
}

impl Splitter {
    pub fn new(j: usize) -> Result<Self> {
        let lb = lb_matrix(j);
        let basis = w_basis(j);
        let n = lb.nrows();
        let k = basis.len();
        let mut w_mat = DMatrix::zeros(n, k);
        for (c, v) in basis.vectors.iter().enumerate() {
            w_mat.set_column(c, &DVector::from_vec(v.to_flat()));
        }
        let svd = lb.clone().svd(true, true);
        let u = svd.u.as_ref().expect("u requested");
        let vt = svd.v_t.as_ref().expect("v_t requested");
        let smax = svd.singular_values.max();
        let keep: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&i| svd.singular_values[i] > RANK_TOLERANCE * smax)
            .collect();
        let rank = keep.len();
        let perp: Vec<usize> = (0..n).filter(|i| !keep.contains(i)).collect();
        if perp.len() != k {
            return Err(Error::Split {
                degree: j,
                residual: (perp.len() as f64 - k as f64).abs(),
            });
        }
        let u_perp = DMatrix::from_fn(n, k, |r, c| u[(r, perp[c])]);
        let g = u_perp.transpose() * &w_mat;
        let g_inv = g.try_inverse().ok_or(Error::Split {
            degree: j,
            residual: f64::INFINITY,
        })?;
        let w_projector = g_inv * u_perp.transpose();
        let mut pinv = DMatrix::zeros(n, n);
        for &i in &keep {
            let s = svd.singular_values[i];
            let vcol = vt.row(i).transpose();
            let ucol = u.column(i);
            pinv += (vcol / s) * ucol.transpose();
        }
        Ok(Self {
            degree: j,
            basis,
            lb,
            w_mat,
            w_projector,
            pinv,
            rank,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn basis(&self) -> &WBasis {
        &self.basis
    }

    pub fn lb(&self) -> &DMatrix<f64> {
        &self.lb
    }

    pub fn split(&self, p: &VecPoly3) -> Result<SplitResult> {
        if p.degree() != self.degree {
            return Err(Error::Validation(format!(
                "split of degree {} input with a degree {} splitter",
                p.degree(),
                self.degree
            )));
        }
        let flat = DVector::from_vec(p.to_flat());
        let w = &self.w_projector * &flat;
        let range = &flat - &self.w_mat * &w;
        let pre = &self.pinv * &range;
        let image = &self.lb * &pre;
        let scale = flat.amax().max(1.0);
        let residual = (&image - &range).amax() / scale;
        if !(residual < SPLIT_TOLERANCE) {
            return Err(Error::Split {
                degree: self.degree,
                residual,
            });
        }
        Ok(SplitResult {
            degree: self.degree,
            w_part: w.iter().copied().collect(),
            range_part: VecPoly3::from_flat(self.degree, range.as_slice())?,
            preimage: VecPoly3::from_flat(self.degree, pre.as_slice())?,
            residual,
        })
    }
}

fn cache() -> &'static Mutex<HashMap<usize, Arc<Splitter>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Splitter>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Shared splitter for degree `j`, built on first use.
pub fn splitter(j: usize) -> Result<Arc<Splitter>> {
    if let Some(s) = cache().lock().expect("splitter cache").get(&j) {
        return Ok(Arc::clone(s));
    }
    let built = Arc::new(Splitter::new(j)?);
    let mut guard = cache().lock().expect("splitter cache");
    Ok(Arc::clone(guard.entry(j).or_insert(built)))
}

/// Splits `p` into its `W_j` coordinates and a range part with a
/// minimum-norm preimage under `L_B`.
pub fn split(p: &VecPoly3) -> Result<SplitResult> {
    if p.degree() < 2 {
        return Err(Error::Validation(format!(
            "split needs degree >= 2, got {}",
            p.degree()
        )));
    }
    splitter(p.degree())?.split(p)
}
