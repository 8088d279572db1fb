//! Scalar univariate polynomial helpers on coefficient slices (ascending powers).

pub(crate) fn eval(p: &[f64], t: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

pub(crate) fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if *x == 0.0 {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Coefficients of `p(t + s)`.
pub(crate) fn shift(p: &[f64], s: f64) -> Vec<f64> {
    let n = p.len();
    let mut out = vec![0.0; n];
    // Horner in polynomial form: ((c_n)(t+s) + c_{n-1})(t+s) + ...
    for c in p.iter().rev() {
        for k in (1..n).rev() {
            out[k] = out[k] * s + out[k - 1];
        }
        out[0] = out[0] * s + c;
    }
    out
}

/// `int_lo^hi p(t) dt`.
pub(crate) fn integrate(p: &[f64], lo: f64, hi: f64) -> f64 {
    let mut anti = Vec::with_capacity(p.len() + 1);
    anti.push(0.0);
    anti.extend(p.iter().enumerate().map(|(k, c)| c / (k as f64 + 1.0)));
    eval(&anti, hi) - eval(&anti, lo)
}
