use super::HomoPoly;

/// A polynomial truncated at a fixed total degree, stored by homogeneous parts.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    nvars: usize,
    parts: Vec<HomoPoly>,
}

impl Series {
    pub fn zero(nvars: usize, max_degree: usize) -> Self {
        Self {
            nvars,
            parts: (0..=max_degree).map(|d| HomoPoly::zero(nvars, d)).collect(),
        }
    }

    pub fn one(nvars: usize, max_degree: usize) -> Self {
        let mut s = Self::zero(nvars, max_degree);
        s.parts[0] = HomoPoly::monomial(nvars, [0, 0, 0], 1.0);
        s
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn max_degree(&self) -> usize {
        self.parts.len() - 1
    }

    pub fn part(&self, degree: usize) -> &HomoPoly {
        &self.parts[degree]
    }

    /// Adds a homogeneous term; terms above the truncation degree are dropped.
    pub fn add_homo(&mut self, p: &HomoPoly) {
        assert_eq!(p.nvars(), self.nvars);
        if p.degree() <= self.max_degree() {
            self.parts[p.degree()] += p;
        }
    }

    pub fn add(&self, other: &Series) -> Series {
        assert_eq!(self.parts.len(), other.parts.len());
        Series {
            nvars: self.nvars,
            parts: self.parts.iter().zip(&other.parts).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Series {
        Series {
            nvars: self.nvars,
            parts: self.parts.iter().map(|p| p.scale(s)).collect(),
        }
    }

    /// Truncated product.
    pub fn mul(&self, other: &Series) -> Series {
        assert_eq!(self.parts.len(), other.parts.len());
        let max = self.max_degree();
        let mut out = Series::zero(self.nvars, max);
        for (da, a) in self.parts.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (db, b) in other.parts.iter().enumerate().take(max - da + 1) {
                if b.is_zero() {
                    continue;
                }
                out.parts[da + db] += &a.mul(b);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncated_square() {
        // (u1 + u2^2)^2 truncated at degree 3 is u1^2 + 2 u1 u2^2
        let mut s = Series::zero(3, 3);
        s.add_homo(&HomoPoly::monomial(3, [1, 0, 0], 1.0));
        s.add_homo(&HomoPoly::monomial(3, [0, 2, 0], 1.0));
        let sq = s.mul(&s);
        assert_eq!(sq.part(2).coeff(&[2, 0, 0]), 1.0);
        assert_eq!(sq.part(3).coeff(&[1, 2, 0]), 2.0);
        assert_eq!(sq.max_degree(), 3);
    }
}
