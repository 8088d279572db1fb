//! Linearization at the origin: the triple-zero parameter locus, the
//! characteristic quasi-polynomial, the center basis `Phi`, the adjoint basis
//! `Psi` and the bilinear pairing between them.
//!
//! The linear part is `z' = M0 z(t) + M1 z(t - tau0)` with `z = (x, y)`,
//! `M0 = [[0, 1], [-a, -b]]` and `M1 = [[0, 0], [alpha, beta]]`.

use crate::error::{Error, Result};
use crate::poly::ThetaPoly;
use crate::upoly;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Parameters of the oscillator at a point of the triple-zero locus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorParams {
    pub a: f64,
    pub beta: f64,
    pub tau0: f64,
    pub b: f64,
    pub alpha: f64,
    pub kappa1: f64,
    pub kappa2: f64,
}

impl OscillatorParams {
    pub fn m0(&self) -> [[f64; 2]; 2] {
        [[0.0, 1.0], [-self.a, -self.b]]
    }

    pub fn m1(&self) -> [[f64; 2]; 2] {
        [[0.0, 0.0], [self.alpha, self.beta]]
    }

    /// Same point with the delayed position gain replaced. Leaves the locus;
    /// only meant for probing spectral diagnostics.
    pub fn with_alpha(&self, alpha: f64) -> Self {
        Self { alpha, ..*self }
    }

    /// `a * tau0 - 3 * beta`, the factor that must not vanish.
    pub fn cubic_factor(&self) -> f64 {
        self.a * self.tau0 - 3.0 * self.beta
    }
}

/// Computes the locus point for `(a, beta)`: `alpha = a`,
/// `tau0 = beta/a + sqrt(beta^2 + 2a)/a`, `b = beta - a tau0`.
pub fn locus(a: f64, beta: f64) -> Result<OscillatorParams> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::Domain(format!("a must be positive, got {a}")));
    }
    if !beta.is_finite() {
        return Err(Error::Domain(format!("beta must be finite, got {beta}")));
    }
    let tau0 = beta / a + (beta * beta + 2.0 * a).sqrt() / a;
    let b = beta - a * tau0;
    let factor = a * tau0 - 3.0 * beta;
    if factor.abs() <= 1e-12 * (a * tau0).abs().max(1.0) {
        return Err(Error::DegenerateCubicTerm { a, beta });
    }
    let kappa1 = 3.0 * (a * tau0 - 4.0 * beta) / (2.0 * tau0 * factor * factor);
    let kappa2 = 6.0 / (tau0 * tau0 * factor);
    Ok(OscillatorParams {
        a,
        beta,
        tau0,
        b,
        alpha: a,
        kappa1,
        kappa2,
    })
}

/// `P(l) = l^2 + b l + a - (alpha + beta l) exp(-l tau0)`.
pub fn char_eval(p: &OscillatorParams, lambda: Complex64) -> Complex64 {
    lambda * lambda + p.b * lambda + p.a - (p.alpha + p.beta * lambda) * (-lambda * p.tau0).exp()
}

/// Closed forms of `P(0), P'(0), P''(0), P'''(0), P''''(0)`.
pub fn taylor_at_zero(p: &OscillatorParams) -> [f64; 5] {
    let t = p.tau0;
    [
        p.a - p.alpha,
        p.b - p.beta + t * p.alpha,
        2.0 + 2.0 * p.beta * t - t * t * p.alpha,
        t * t * t * p.alpha - 3.0 * p.beta * t * t,
        4.0 * p.beta * t * t * t - t * t * t * t * p.alpha,
    ]
}

/// Taylor data at the origin plus an imaginary-axis scan.
#[derive(Debug, Clone, PartialEq)]
pub struct CharReport {
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    /// `min |P(i w)|` over `w` in `[scan_start, scan_bound]`.
    pub axis_margin: f64,
    pub margin_omega: f64,
    pub scan_start: f64,
    pub scan_bound: f64,
}

pub const AXIS_SCAN_STEP: f64 = 1e-3;
pub const AXIS_MARGIN_THRESHOLD: f64 = 1e-6;

/// Frequency beyond which `|w^2|` dominates every other term of `P(i w)`.
pub fn axis_scan_bound(p: &OscillatorParams) -> f64 {
    let bound = 2.0 * (p.b.abs() + p.beta.abs() + (p.a + p.alpha).abs().sqrt() + 1.0);
    bound.max(10.0)
}

/// Lower end of the scan. Inside it the cubic Taylor term dominates, which
/// `P'''(0) != 0` already certifies as root-free apart from the origin.
pub fn axis_scan_start(p: &OscillatorParams) -> f64 {
    let t = taylor_at_zero(p);
    let c3 = t[3] / 6.0;
    let c4 = t[4] / 24.0;
    let r = if c4 == 0.0 { 0.25 } else { 0.5 * (c3 / c4).abs() };
    r.clamp(1e-3, 0.25)
}

pub fn char_derivatives(p: &OscillatorParams) -> Result<CharReport> {
    let t = taylor_at_zero(p);
    let start = axis_scan_start(p);
    let bound = axis_scan_bound(p);
    let steps = ((bound - start) / AXIS_SCAN_STEP).ceil() as usize;
    let mut margin = f64::INFINITY;
    let mut at = start;
    for k in 0..=steps {
        let w = (start + k as f64 * AXIS_SCAN_STEP).min(bound);
        let v = char_eval(p, Complex64::new(0.0, w)).norm();
        if v < margin {
            margin = v;
            at = w;
        }
    }
    if margin < AXIS_MARGIN_THRESHOLD {
        return Err(Error::SpectralDegeneracy {
            margin,
            omega: at,
            threshold: AXIS_MARGIN_THRESHOLD,
        });
    }
    Ok(CharReport {
        p0: t[0],
        p1: t[1],
        p2: t[2],
        p3: t[3],
        axis_margin: margin,
        margin_omega: at,
        scan_start: start,
        scan_bound: bound,
    })
}

/// Center basis `Phi` (columns on `[-tau0, 0]`) and normalized adjoint basis
/// `Psi` (rows on `[0, tau0]`).
#[derive(Debug, Clone, PartialEq)]
pub struct BasisPair {
    pub phi: [ThetaPoly; 3],
    pub psi: [ThetaPoly; 3],
    /// `Psi(0)` as three row vectors.
    pub psi0: [[f64; 2]; 3],
}

impl BasisPair {
    /// Column `c` of `Psi(0)`.
    pub fn psi0_column(&self, c: usize) -> [f64; 3] {
        [self.psi0[0][c], self.psi0[1][c], self.psi0[2][c]]
    }
}

/// `Phi(theta) = [[1, theta, theta^2/2], [0, 1, theta]]` as three columns.
pub fn phi_basis(p: &OscillatorParams) -> [ThetaPoly; 3] {
    let lo = -p.tau0;
    [
        ThetaPoly::new(vec![[1.0, 0.0]], lo, 0.0),
        ThetaPoly::new(vec![[0.0, 1.0], [1.0, 0.0]], lo, 0.0),
        ThetaPoly::new(vec![[0.0, 0.0], [0.0, 1.0], [0.5, 0.0]], lo, 0.0),
    ]
}

/// `Phi(theta)` as a `2 x 3` matrix.
pub fn phi_at(theta: f64) -> [[f64; 3]; 2] {
    [[1.0, theta, 0.5 * theta * theta], [0.0, 1.0, theta]]
}

/// The pairing between an adjoint row on `[0, tau0]` and a history column on
/// `[-tau0, 0]`:
/// `psi(0) phi(0) + int_{-tau0}^0 psi(z + tau0) M1 phi(z) dz`.
/// The atom of the kernel at `theta = 0` contributes nothing.
pub fn bilinear(psi_row: &ThetaPoly, phi_col: &ThetaPoly, p: &OscillatorParams) -> f64 {
    let r0 = psi_row.coeff(0);
    let c0 = phi_col.coeff(0);
    let mut value = r0[0] * c0[0] + r0[1] * c0[1];
    let shifted = psi_row.shifted(p.tau0);
    let m1 = p.m1();
    let px = phi_col.component(0);
    let py = phi_col.component(1);
    for r in 0..2 {
        let row = shifted.component(r);
        if row.iter().all(|&c| c == 0.0) {
            continue;
        }
        // (M1 phi)_r = m1[r][0] phi_x + m1[r][1] phi_y
        let mut m1phi = vec![0.0; px.len().max(py.len())];
        for (k, v) in px.iter().enumerate() {
            m1phi[k] += m1[r][0] * v;
        }
        for (k, v) in py.iter().enumerate() {
            m1phi[k] += m1[r][1] * v;
        }
        value += upoly::integrate(&upoly::mul(&row, &m1phi), -p.tau0, 0.0);
    }
    value
}

fn psi_rows_from(psi0: &[[f64; 2]; 3], tau0: f64) -> [ThetaPoly; 3] {
    // Psi(s) = exp(-B s) Psi(0); row i = Psi0_i - s Psi0_{i+1} + s^2/2 Psi0_{i+2}
    std::array::from_fn(|i| {
        let get = |k: usize| if k < 3 { psi0[k] } else { [0.0, 0.0] };
        let c1 = get(i + 1);
        let c2 = get(i + 2);
        ThetaPoly::new(vec![psi0[i], [-c1[0], -c1[1]], [0.5 * c2[0], 0.5 * c2[1]]], 0.0, tau0)
    })
}

/// The matrix `(Psi, Phi)`.
pub fn pairing(psi: &[ThetaPoly; 3], phi: &[ThetaPoly; 3], p: &OscillatorParams) -> [[f64; 3]; 3] {
    std::array::from_fn(|i| std::array::from_fn(|k| bilinear(&psi[i], &phi[k], p)))
}

/// Normalized adjoint basis: `Psi(s) = exp(-B s) Psi(0)` with `Psi(0)` fixed by
/// the nine equations `(Psi, Phi) = I` in its six entries.
pub fn psi_basis(p: &OscillatorParams) -> Result<BasisPair> {
    let phi = phi_basis(p);
    let mut mat = DMatrix::<f64>::zeros(9, 6);
    for r in 0..3 {
        for c in 0..2 {
            let mut unit = [[0.0; 2]; 3];
            unit[r][c] = 1.0;
            let rows = psi_rows_from(&unit, p.tau0);
            let pr = pairing(&rows, &phi, p);
            for i in 0..3 {
                for k in 0..3 {
                    mat[(3 * i + k, 2 * r + c)] = pr[i][k];
                }
            }
        }
    }
    let rhs = DVector::from_fn(9, |idx, _| if idx / 3 == idx % 3 { 1.0 } else { 0.0 });
    let svd = mat.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-12 * smax) {
        return Err(Error::Normalization(format!(
            "normalization system is rank deficient (singular values {smin:e} .. {smax:e})"
        )));
    }
    let x = svd.solve(&rhs, 0.0).map_err(|e| Error::Normalization(e.to_string()))?;
    let psi0: [[f64; 2]; 3] = std::array::from_fn(|r| [x[2 * r], x[2 * r + 1]]);
    let psi = psi_rows_from(&psi0, p.tau0);
    let pr = pairing(&psi, &phi, p);
    let residual = identity_residual(&pr);
    if residual >= 1e-10 {
        return Err(Error::Normalization(format!(
            "(Psi, Phi) differs from the identity by {residual:e}"
        )));
    }
    Ok(BasisPair { phi, psi, psi0 })
}

pub fn identity_residual(m: &[[f64; 3]; 3]) -> f64 {
    let mut r = 0.0f64;
    for (i, row) in m.iter().enumerate() {
        for (k, v) in row.iter().enumerate() {
            let target = if i == k { 1.0 } else { 0.0 };
            r = r.max((v - target).abs());
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    #[test]
    fn reference_point_a1_beta0() {
        let p = locus(1.0, 0.0).unwrap();
        assert!((p.tau0 - std::f64::consts::SQRT_2).abs() < 1e-10);
        assert!((p.b + std::f64::consts::SQRT_2).abs() < 1e-10);
        assert_eq!(p.alpha, 1.0);
        assert!((p.kappa1 - 0.75).abs() < 1e-12);
        assert!((p.kappa2 - 2.1213203436).abs() < 1e-10);
    }

    #[test]
    fn reference_point_a2_beta1() {
        let p = locus(2.0, 1.0).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((p.tau0 - phi).abs() < 1e-12);
        assert!((p.b + 5f64.sqrt()).abs() < 1e-12);
        assert!((p.kappa2 - 9.7082039325).abs() < 1e-9);
    }

    #[test]
    fn degenerate_and_domain_errors() {
        assert!(matches!(locus(1.5, 1.0), Err(Error::DegenerateCubicTerm { .. })));
        assert!(matches!(locus(0.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(locus(-1.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn characteristic_values() {
        let p = locus(1.0, 0.0).unwrap();
        assert!(char_eval(&p, Complex64::new(0.0, 0.0)).norm() < 1e-15);
        // -cos(sqrt2) + i (sin(sqrt2) - sqrt2)
        let v = char_eval(&p, Complex64::new(0.0, 1.0));
        assert!((v.re - (-SQRT2.cos())).abs() < 1e-12);
        assert!((v.im - (SQRT2.sin() - SQRT2)).abs() < 1e-12);
        assert!((v.re + 0.155944).abs() < 1e-6);
        assert!((v.im + 0.426447).abs() < 1e-6);
        let w = char_eval(&p, Complex64::new(10.0, 0.0));
        let expected = 100.0 - 10.0 * SQRT2 + 1.0 - (-10.0 * SQRT2).exp();
        assert!((w.re - expected).abs() < 1e-10);
        assert!((w.re - 86.8578).abs() < 1e-4);
    }

    #[test]
    fn taylor_data_and_axis_margin() {
        let p = locus(1.0, 0.0).unwrap();
        let r = char_derivatives(&p).unwrap();
        assert!((r.p3 - 2.0 * SQRT2).abs() < 1e-10);
        assert!((p.kappa2 * r.p3 - 6.0).abs() < 1e-10);
        assert!(r.axis_margin > 1e-3);

        let q = locus(2.0, 1.0).unwrap();
        let r = char_derivatives(&q).unwrap();
        assert!(r.p0.abs() < 1e-12 && r.p1.abs() < 1e-12 && r.p2.abs() < 1e-12);
        assert!(r.axis_margin > 1e-3);
    }

    #[test]
    fn closed_forms_match_finite_differences() {
        let p = locus(2.0, 1.0).unwrap();
        let t = taylor_at_zero(&p);
        let h = 1e-2;
        let f = |x: f64| char_eval(&p, Complex64::new(x, 0.0)).re;
        // fourth-order central difference for the third derivative
        let d3 = (-f(3.0 * h) + 8.0 * f(2.0 * h) - 13.0 * f(h) + 13.0 * f(-h) - 8.0 * f(-2.0 * h) + f(-3.0 * h))
            / (8.0 * h * h * h);
        assert!((d3 - t[3]).abs() < 1e-3 * t[3].abs());
    }

    #[test]
    fn adjoint_normalization() {
        for (a, beta) in [(1.0, 0.0), (2.0, 1.0)] {
            let p = locus(a, beta).unwrap();
            let basis = psi_basis(&p).unwrap();
            let pr = pairing(&basis.psi, &basis.phi, &p);
            assert!(identity_residual(&pr) < 1e-10);
            let col = basis.psi0_column(1);
            assert!((col[1] - p.kappa1).abs() < 1e-10);
            assert!((col[2] - p.kappa2).abs() < 1e-10);
        }
    }

    #[test]
    fn adjoint_first_entry_matches_laurent_coefficient() {
        // psi0[0][1] is the residue-order coefficient of 1/P:
        // c4^2/c3^3 - c5/c3^2 with P = c3 l^3 + c4 l^4 + c5 l^5 + ...
        let p = locus(1.0, 0.0).unwrap();
        let basis = psi_basis(&p).unwrap();
        let c3 = SQRT2 / 3.0;
        let c4 = -1.0 / 6.0;
        let c5 = SQRT2 / 30.0;
        let expected = c4 * c4 / (c3 * c3 * c3) - c5 / (c3 * c3);
        assert!((basis.psi0[0][1] - expected).abs() < 1e-12);
        assert!((expected - 3.0 * SQRT2 / 80.0).abs() < 1e-14);
    }

    #[test]
    fn bilinear_examples() {
        let p = locus(1.0, 0.0).unwrap();
        let row = ThetaPoly::constant([1.0, 0.0], 0.0, p.tau0);
        let col = ThetaPoly::constant([1.0, 0.0], -p.tau0, 0.0);
        assert!((bilinear(&row, &col, &p) - 1.0).abs() < 1e-15);

        let zero = ThetaPoly::zero(0.0, p.tau0);
        let any = ThetaPoly::new(vec![[1.0, 2.0], [3.0, -1.0]], -p.tau0, 0.0);
        assert_eq!(bilinear(&zero, &any, &p), 0.0);

        let row = ThetaPoly::constant([0.0, 1.0], 0.0, p.tau0);
        let col = ThetaPoly::constant([0.0, 1.0], -p.tau0, 0.0);
        assert!((bilinear(&row, &col, &p) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn basis_differential_relations() {
        // Phi' = Phi B and Psi' = -B Psi, coefficientwise
        let p = locus(2.0, 1.0).unwrap();
        let basis = psi_basis(&p).unwrap();
        let d_phi: Vec<_> = basis.phi.iter().map(ThetaPoly::derivative).collect();
        assert!(d_phi[0].is_zero());
        assert_eq!(d_phi[1], basis.phi[0]);
        assert_eq!(d_phi[2], basis.phi[1]);
        let d_psi: Vec<_> = basis.psi.iter().map(ThetaPoly::derivative).collect();
        assert!(d_psi[0].add(&basis.psi[1]).max_abs() < 1e-14);
        assert!(d_psi[1].add(&basis.psi[2]).max_abs() < 1e-14);
        assert!(d_psi[2].is_zero());
    }
}
