//! Independent numerical checks: a method-of-steps integrator for the full
//! delay equation, a Runge-Kutta integrator for the normal form, projection
//! of delay trajectories onto the center subspace, a Chebyshev collocation
//! spectrum and an end-to-end comparison of the two flows.

use crate::ddouble::{dot, orthonormalize, DDLu, DDMatrix, DD};
use crate::error::{Error, Result};
use crate::linear::{psi_basis, BasisPair, OscillatorParams};
use crate::reduction::{reduce_with, Embedding, FGSeries, NFSeries, ReductionOptions};
use nalgebra::{DMatrix, Matrix3};
use num_complex::Complex64;

pub const BLOWUP_NORM: f64 = 1e6;
/// Largest `|center eigenvalue| / gap` accepted after refinement.
pub const CLUSTER_RATIO: f64 = 1e-4;
const SCREEN_RATIO: f64 = 0.1;

/// Initial function on `[-tau0, 0]`.
pub enum History<'a> {
    Function(&'a dyn Fn(f64) -> [f64; 2]),
    /// `N + 1` samples at `-tau0 + i tau0 / N`.
    Samples(Vec<[f64; 2]>),
}

/// Solution on a uniform grid with `dt = tau0 / N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub n_per_delay: usize,
    /// Samples of the initial function at `-tau0 + i dt`, `i = 0..=N`.
    pub history: Vec<[f64; 2]>,
    /// `t_k = k dt`, starting at 0.
    pub times: Vec<f64>,
    /// States at `times`; the first equals the last history sample.
    pub states: Vec<[f64; 2]>,
}

impl Trajectory {
    /// State at grid index `i` counted from `t = -tau0` (history first).
    pub fn at_index(&self, i: usize) -> [f64; 2] {
        let n = self.n_per_delay;
        if i <= n {
            self.history[i]
        } else {
            self.states[i - n]
        }
    }
}

// Cubic Lagrange weights at the midpoint of an interval, for stencils that
// start one node before it (centered), at it (forward) or two nodes before
// (backward).
const MID_CENTERED: [f64; 4] = [-0.0625, 0.5625, 0.5625, -0.0625];
const MID_FORWARD: [f64; 4] = [0.3125, 0.9375, -0.3125, 0.0625];
const MID_BACKWARD: [f64; 4] = [0.0625, -0.3125, 0.9375, 0.3125];

/// Value halfway between grid nodes `k` and `k + 1` (indices from `t = -tau0`).
/// Stencils never straddle a multiple of `tau0`, where the solution has
/// reduced smoothness.
fn midpoint(grid: &[[f64; 2]], k: usize, n: usize) -> [f64; 2] {
    let seg_start = (k / n) * n;
    let seg_end = seg_start + n;
    let (start, w) = if k > seg_start && k + 2 <= seg_end && k + 2 < grid.len() {
        (k - 1, MID_CENTERED)
    } else if k + 3 <= seg_end && k + 3 < grid.len() {
        (k, MID_FORWARD)
    } else {
        (k - 2, MID_BACKWARD)
    };
    let mut v = [0.0; 2];
    for (i, wi) in w.iter().enumerate() {
        v[0] += wi * grid[start + i][0];
        v[1] += wi * grid[start + i][1];
    }
    v
}

fn dde_rhs(p: &OscillatorParams, fg: &FGSeries, z: [f64; 2], zd: [f64; 2]) -> [f64; 2] {
    let f: f64 = (2..=fg.max_degree()).map(|j| fg.f(j).eval(&z)).sum();
    let g: f64 = (2..=fg.max_degree()).map(|j| fg.g(j).eval(&zd)).sum();
    [
        z[1],
        -p.a * z[0] - p.b * z[1] + p.alpha * zd[0] + p.beta * zd[1] + f + g,
    ]
}

fn axpy(z: [f64; 2], h: f64, k: [f64; 2]) -> [f64; 2] {
    [z[0] + h * k[0], z[1] + h * k[1]]
}

/// Classical RK4 with step `tau0 / n`. Delayed arguments at stage times are
/// grid values or cubic interpolants of them (exact history values when the
/// history is a function).
pub fn simulate_dde(
    p: &OscillatorParams,
    fg: &FGSeries,
    history: &History,
    t_end: f64,
    n: usize,
) -> Result<Trajectory> {
    if n < 8 {
        return Err(Error::Validation(format!("need at least 8 steps per delay, got {n}")));
    }
    if !(t_end > 0.0) {
        return Err(Error::Validation(format!("end time must be positive, got {t_end}")));
    }
    let dt = p.tau0 / n as f64;
    let hist: Vec<[f64; 2]> = match history {
        History::Function(f) => (0..=n).map(|i| f(-p.tau0 + i as f64 * dt)).collect(),
        History::Samples(s) => {
            if s.len() != n + 1 {
                return Err(Error::Validation(format!(
                    "history needs {} samples, got {}",
                    n + 1,
                    s.len()
                )));
            }
            s.clone()
        }
    };
    let steps = (t_end / dt - 1e-9).ceil().max(1.0) as usize;
    let mut grid = hist.clone();
    grid.reserve(steps);
    for step in 0..steps {
        let i = n + step; // current node
        let z = grid[i];
        let d0 = grid[i - n];
        let d1 = grid[i - n + 1];
        let dm = match history {
            History::Function(f) if i - n < n => f(-p.tau0 + (step as f64 + 0.5) * dt),
            _ => midpoint(&grid, i - n, n),
        };
        let k1 = dde_rhs(p, fg, z, d0);
        let k2 = dde_rhs(p, fg, axpy(z, 0.5 * dt, k1), dm);
        let k3 = dde_rhs(p, fg, axpy(z, 0.5 * dt, k2), dm);
        let k4 = dde_rhs(p, fg, axpy(z, dt, k3), d1);
        let next = [
            z[0] + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            z[1] + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ];
        let norm = next[0].hypot(next[1]);
        if !(norm <= BLOWUP_NORM) {
            return Err(Error::Blowup {
                t: (step + 1) as f64 * dt,
                norm,
            });
        }
        grid.push(next);
    }
    let states = grid[n..].to_vec();
    let times = (0..states.len()).map(|k| k as f64 * dt).collect();
    Ok(Trajectory {
        dt,
        n_per_delay: n,
        history: hist,
        times,
        states,
    })
}

/// RK4 for `u' = B u + sum_j g_j(u)`; returns the states at `k dt`, `k = 0..=steps`.
pub fn simulate_nf(nf: &NFSeries, u0: [f64; 3], t_end: f64, dt: f64) -> Result<Vec<[f64; 3]>> {
    if !(dt > 0.0) || !(t_end >= 0.0) {
        return Err(Error::Validation("need dt > 0 and t_end >= 0".into()));
    }
    let steps = (t_end / dt - 1e-9).ceil().max(0.0) as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let mut u = u0;
    out.push(u);
    let add = |u: [f64; 3], h: f64, k: [f64; 3]| [u[0] + h * k[0], u[1] + h * k[1], u[2] + h * k[2]];
    for step in 0..steps {
        let k1 = nf.rhs(&u);
        let k2 = nf.rhs(&add(u, 0.5 * dt, k1));
        let k3 = nf.rhs(&add(u, 0.5 * dt, k2));
        let k4 = nf.rhs(&add(u, dt, k3));
        for i in 0..3 {
            u[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let norm = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
        if !(norm <= BLOWUP_NORM) {
            return Err(Error::Blowup {
                t: (step + 1) as f64 * dt,
                norm,
            });
        }
        out.push(u);
    }
    Ok(out)
}

/// `u(t) = (Psi, z_t)` at every time node of the trajectory, with the
/// integral term evaluated by composite Simpson on the grid.
pub fn project_center(traj: &Trajectory, p: &OscillatorParams) -> Result<Vec<[f64; 3]>> {
    let basis = psi_basis(p)?;
    project_center_with(traj, p, &basis)
}

pub fn project_center_with(traj: &Trajectory, p: &OscillatorParams, basis: &BasisPair) -> Result<Vec<[f64; 3]>> {
    let n = traj.n_per_delay;
    if n % 2 == 1 {
        return Err(Error::Quadrature(format!(
            "Simpson quadrature needs an even number of intervals, got {n}"
        )));
    }
    let dt = traj.dt;
    let m1 = p.m1();
    // weights[i][r] = Simpson weight times psi_r(zeta + tau0) M1 at zeta = -tau0 + i dt
    let weights: Vec<[[f64; 2]; 3]> = (0..=n)
        .map(|i| {
            let w = dt / 3.0
                * if i == 0 || i == n {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
            let s = i as f64 * dt;
            std::array::from_fn(|r| {
                let psi = basis.psi[r].eval_unchecked(s);
                std::array::from_fn(|c| w * (psi[0] * m1[0][c] + psi[1] * m1[1][c]))
            })
        })
        .collect();
    let mut out = Vec::with_capacity(traj.states.len());
    for k in 0..traj.states.len() {
        let z = traj.states[k];
        let mut u = [0.0; 3];
        for (r, ur) in u.iter_mut().enumerate() {
            *ur = basis.psi0[r][0] * z[0] + basis.psi0[r][1] * z[1];
        }
        for (i, w) in weights.iter().enumerate() {
            let zi = traj.at_index(k + i);
            for (r, ur) in u.iter_mut().enumerate() {
                *ur += w[r][0] * zi[0] + w[r][1] * zi[1];
            }
        }
        out.push(u);
    }
    Ok(out)
}

/// Collocation spectrum near the triple zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralOracle {
    pub n: usize,
    /// `(2N + 2) x (2N + 2)` generator matrix; unknowns are `x` at the nodes,
    /// then `y` at the nodes, nodes ordered from `theta = 0` to `-tau0`.
    pub matrix: DMatrix<f64>,
    /// All eigenvalues of `matrix`, by increasing modulus.
    pub eigenvalues: Vec<Complex64>,
    /// The three eigenvalues nearest 0, refined in extended precision.
    pub center_eigs: [Complex64; 3],
    /// Modulus of the fourth-nearest eigenvalue.
    pub gap: f64,
    /// Restriction of the generator to the center invariant subspace.
    pub restriction: [[f64; 3]; 3],
    /// `|M'^3| / |M'|^3` with `M'` the restriction shifted by its mean eigenvalue.
    pub nilpotency_residual: f64,
    /// `|M'^2| / |M'|^2`; bounded away from zero for index exactly 3.
    pub index_two_ratio: f64,
}

impl SpectralOracle {
    pub fn max_center_modulus(&self) -> f64 {
        self.center_eigs.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Collocation nodes `theta_k = tau0/2 (cos(k pi / N) - 1)` and the
/// generator matrix in double-double, built from the locus recomputed in
/// extended precision.
fn collocation_dd(p: &OscillatorParams, n: usize) -> DDMatrix {
    let a = DD::new(p.a);
    let beta = DD::new(p.beta);
    let alpha = DD::new(p.alpha);
    let tau = if p.alpha == p.a {
        (beta + (beta * beta + DD::new(2.0) * a).sqrt()) / a
    } else {
        DD::new(p.tau0)
    };
    let b = if p.alpha == p.a { beta - a * tau } else { DD::new(p.b) };
    let half = tau * DD::new(0.5);
    let nodes: Vec<DD> = (0..=n)
        .map(|k| half * (DD::new((k as f64 * std::f64::consts::PI / n as f64).cos()) - DD::ONE))
        .collect();
    // barycentric weights for the actual node set
    let w: Vec<DD> = (0..=n)
        .map(|j| {
            let prod = (0..=n)
                .filter(|&k| k != j)
                .fold(DD::ONE, |acc, k| acc * (nodes[j] - nodes[k]));
            DD::ONE / prod
        })
        .collect();
    let mut d = vec![vec![DD::ZERO; n + 1]; n + 1];
    for i in 0..=n {
        let mut diag = DD::ZERO;
        for j in 0..=n {
            if i != j {
                let v = (w[j] / w[i]) / (nodes[i] - nodes[j]);
                d[i][j] = v;
                diag = diag - v;
            }
        }
        d[i][i] = diag;
    }
    let m = n + 1;
    let mut mat = DDMatrix::zeros(2 * m);
    for c in 0..2 {
        for i in 1..=n {
            for j in 0..=n {
                mat.set(c * m + i, c * m + j, d[i][j]);
            }
        }
    }
    // theta = 0 rows: L phi = M0 phi(0) + M1 phi(-tau0)
    let m0 = [[DD::ZERO, DD::ONE], [-a, -b]];
    let m1 = [[DD::ZERO, DD::ZERO], [alpha, beta]];
    for r in 0..2 {
        for c in 0..2 {
            mat.set(r * m, c * m, m0[r][c]);
            let v = mat.at(r * m, c * m + n) + m1[r][c];
            mat.set(r * m, c * m + n, v);
        }
    }
    mat
}

fn det3(m: &[[DD; 3]; 3]) -> DD {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn matmul3(a: &[[DD; 3]; 3], b: &[[DD; 3]; 3]) -> [[DD; 3]; 3] {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..3).fold(DD::ZERO, |acc, k| acc + a[i][k] * b[k][j])))
}

fn fro3(a: &[[DD; 3]; 3]) -> f64 {
    a.iter().flatten().map(|v| v.to_f64().powi(2)).sum::<f64>().sqrt()
}

/// Roots of `l^3 - c2 l^2 + c1 l - c0`, computed after scaling the root size to 1.
fn cubic_roots(c2: DD, c1: DD, c0: DD) -> [Complex64; 3] {
    let s = c2
        .to_f64()
        .abs()
        .max(c1.to_f64().abs().sqrt())
        .max(c0.to_f64().abs().cbrt());
    if s == 0.0 {
        return [Complex64::new(0.0, 0.0); 3];
    }
    let sd = DD::new(s);
    let e2 = (c2 / sd).to_f64();
    let e1 = (c1 / (sd * sd)).to_f64();
    let e0 = (c0 / (sd * sd * sd)).to_f64();
    let companion = Matrix3::new(e2, -e1, e0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0);
    let ev = companion.complex_eigenvalues();
    [ev[0] * s, ev[1] * s, ev[2] * s]
}

pub fn spectral_oracle(p: &OscillatorParams, n: usize) -> Result<SpectralOracle> {
    if n < 8 {
        return Err(Error::Validation(format!("collocation needs N >= 8, got {n}")));
    }
    let dd = collocation_dd(p, n);
    let size = dd.n;
    let matrix = DMatrix::from_fn(size, size, |r, c| dd.at(r, c).to_f64());
    let mut eigenvalues: Vec<Complex64> = matrix.clone().complex_eigenvalues().iter().copied().collect();
    eigenvalues.sort_by(|x, y| x.norm().total_cmp(&y.norm()));
    let gap = eigenvalues[3].norm();
    // rounding splits a defective triple eigenvalue by about eps^(1/3) |A|,
    // so the f64 spectrum only has to show a separated group of three
    let cluster = eigenvalues[2].norm();
    if !(cluster < SCREEN_RATIO * gap) {
        return Err(Error::SpectralMismatch(format!(
            "three eigenvalues nearest 0 reach {cluster:e}, fourth at {gap:e}; no isolated triple cluster"
        )));
    }

    // inverse subspace iteration in double-double around a small shift
    let sigma = DD::new(1e-3 * gap);
    let mut shifted = dd.clone();
    for i in 0..size {
        shifted.set(i, i, shifted.at(i, i) - sigma);
    }
    let lu =
        DDLu::new(shifted).ok_or_else(|| Error::SpectralMismatch("shifted collocation matrix is singular".into()))?;
    let mut v: Vec<Vec<DD>> = (0..3)
        .map(|c| {
            (0..size)
                .map(|r| DD::new(((r * (c + 2) + c) % 7) as f64 - 3.0 + 0.1 * c as f64))
                .collect()
        })
        .collect();
    orthonormalize(&mut v);
    for _ in 0..60 {
        for col in v.iter_mut() {
            *col = lu.solve(col);
        }
        orthonormalize(&mut v);
    }
    let av: Vec<Vec<DD>> = v.iter().map(|col| dd.mul_vec(col)).collect();
    let m: [[DD; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| dot(&v[i], &av[j])));

    // invariance check: |A V - V M| small
    let mut leak = 0.0f64;
    for j in 0..3 {
        for r in 0..size {
            let vm = (0..3).fold(DD::ZERO, |acc, i| acc + v[i][r] * m[i][j]);
            leak = leak.max((av[j][r] - vm).to_f64().abs());
        }
    }
    if !(leak < 1e-12) {
        return Err(Error::SpectralMismatch(format!(
            "center subspace iteration did not converge (leak {leak:e})"
        )));
    }

    let trace = m[0][0] + m[1][1] + m[2][2];
    let minors = m[0][0] * m[1][1] - m[0][1] * m[1][0] + m[0][0] * m[2][2] - m[0][2] * m[2][0] + m[1][1] * m[2][2]
        - m[1][2] * m[2][1];
    let det = det3(&m);
    let center_eigs = cubic_roots(trace, minors, det);
    let radius = center_eigs.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if !(radius < CLUSTER_RATIO * gap) {
        return Err(Error::SpectralMismatch(format!(
            "refined center eigenvalues reach {radius:e}, above {CLUSTER_RATIO:e} x gap {gap:e}"
        )));
    }

    let mean = trace / DD::new(3.0);
    let mut shifted_m = m;
    for (i, row) in shifted_m.iter_mut().enumerate() {
        row[i] = row[i] - mean;
    }
    let sq = matmul3(&shifted_m, &shifted_m);
    let cube = matmul3(&sq, &shifted_m);
    let norm = fro3(&shifted_m);
    let nilpotency_residual = if norm > 0.0 { fro3(&cube) / norm.powi(3) } else { 0.0 };
    let index_two_ratio = if norm > 0.0 { fro3(&sq) / norm.powi(2) } else { 0.0 };

    Ok(SpectralOracle {
        n,
        matrix,
        eigenvalues,
        center_eigs,
        gap,
        restriction: std::array::from_fn(|i| std::array::from_fn(|j| m[i][j].to_f64())),
        nilpotency_residual,
        index_two_ratio,
    })
}

/// Settings for [`compare_flows`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOptions {
    /// Unit direction of the initial center coordinates.
    pub direction: [f64; 3],
    /// Steps per delay interval (even).
    pub n: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        let s = 1.0 / 3f64.sqrt();
        Self {
            direction: [s, s, s],
            n: 96,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowComparison {
    pub eps: f64,
    pub t_end: f64,
    /// `max_t |u_DDE(t) - u_NF(t)|`.
    pub error: f64,
    pub times: Vec<f64>,
    pub projected: Vec<[f64; 3]>,
    pub predicted: Vec<[f64; 3]>,
}

fn embedding_u1(emb: &Embedding, u: &[f64; 3]) -> [f64; 3] {
    let mut out = *u;
    for k in &emb.u1 {
        let v = k.eval(u);
        for i in 0..3 {
            out[i] += v[i];
        }
    }
    out
}

fn embedding_history(emb: &Embedding, u: &[f64; 3], theta: f64) -> [f64; 2] {
    let w = embedding_u1(emb, u);
    let mut z = [w[0] + theta * w[1] + 0.5 * theta * theta * w[2], w[1] + theta * w[2]];
    for t in &emb.u2 {
        let v = t.field.eval(theta);
        z[0] += v[0].eval(u);
        z[1] += v[1].eval(u);
    }
    z
}

/// Runs the delay equation from a point of the (truncated) center manifold
/// with center coordinates of size `eps` and compares its projection with
/// the normal form flow mapped through the same near-identity change of
/// coordinates. The run length is `min(1, 0.2 / eps)`.
pub fn compare_flows(
    p: &OscillatorParams,
    fg: &FGSeries,
    target: &NFSeries,
    eps: f64,
    opts: &FlowOptions,
) -> Result<FlowComparison> {
    if !(eps > 0.0) {
        return Err(Error::Validation(format!("amplitude must be positive, got {eps}")));
    }
    let basis = psi_basis(p)?;
    let order = target.max_degree();
    let (_, trace) = reduce_with(fg, p, &basis, order, &ReductionOptions::default())?;
    let emb = trace.embedding();
    let u0 = opts.direction.map(|d| d * eps);
    let t_end = (0.2 / eps).min(1.0);
    let seed = |theta: f64| embedding_history(&emb, &u0, theta);
    let traj = simulate_dde(p, fg, &History::Function(&seed), t_end, opts.n)?;
    let projected = project_center_with(&traj, p, &basis)?;
    let nf = simulate_nf(target, u0, t_end, traj.dt)?;
    let count = projected.len().min(nf.len());
    let predicted: Vec<[f64; 3]> = nf[..count].iter().map(|u| embedding_u1(&emb, u)).collect();
    let error = projected[..count]
        .iter()
        .zip(&predicted)
        .map(|(a, b)| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt())
        .fold(0.0, f64::max);
    Ok(FlowComparison {
        eps,
        t_end,
        error,
        times: traj.times[..count].to_vec(),
        projected: projected[..count].to_vec(),
        predicted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homological::{Family, WLabel};
    use crate::linear::locus;
    use crate::poly::HomoPoly;

    #[test]
    fn zero_history_stays_zero() {
        let p = locus(1.0, 0.0).unwrap();
        let mut fg = FGSeries::zero(2);
        fg.set_f(2, HomoPoly::monomial(2, [2, 0, 0], 1.0)).unwrap();
        let zero = |_: f64| [0.0, 0.0];
        let t = simulate_dde(&p, &fg, &History::Function(&zero), 3.0, 16).unwrap();
        assert!(t.states.iter().all(|s| s == &[0.0, 0.0]));
    }

    #[test]
    fn constant_equilibrium() {
        let p = locus(2.0, 1.0).unwrap();
        let c = |_: f64| [0.1, 0.0];
        let t = simulate_dde(&p, &FGSeries::zero(2), &History::Function(&c), 4.0, 16).unwrap();
        for s in &t.states {
            assert!((s[0] - 0.1).abs() < 1e-15 && s[1].abs() < 1e-15);
        }
        let u = project_center(&t, &p).unwrap();
        for w in u.windows(2) {
            for i in 0..3 {
                assert!((w[0][i] - w[1][i]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn dde_self_convergence() {
        let p = locus(1.0, 0.0).unwrap();
        let mut fg = FGSeries::zero(2);
        fg.set_f(2, HomoPoly::monomial(2, [2, 0, 0], 0.5)).unwrap();
        let h = |t: f64| [0.2 * (t + 0.3).sin(), 0.2 * (t + 0.3).cos()];
        let end = |n: usize| {
            *simulate_dde(&p, &fg, &History::Function(&h), 2.0 * p.tau0, n)
                .unwrap()
                .states
                .last()
                .unwrap()
        };
        let r = end(256);
        let e1 = (end(16)[0] - r[0]).abs();
        let e2 = (end(32)[0] - r[0]).abs();
        assert!(e1 / e2 >= 4.0, "ratio {}", e1 / e2);
    }

    #[test]
    fn nilpotent_flow() {
        let nf = NFSeries::zero(2);
        let fixed = simulate_nf(&nf, [1.0, 0.0, 0.0], 1.0, 0.1).unwrap();
        assert!(fixed.iter().all(|u| u == &[1.0, 0.0, 0.0]));
        let path = simulate_nf(&nf, [0.0, 0.0, 1.0], 1.0, 0.1).unwrap();
        let last = path.last().unwrap();
        assert!((last[0] - 0.5).abs() < 1e-12 && (last[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rk4_order_on_normal_form() {
        let mut nf = NFSeries::zero(2);
        nf.set(WLabel::new(Family::A, 2, 0).unwrap(), 1.0).unwrap();
        let end = |dt: f64| *simulate_nf(&nf, [0.3, 0.1, -0.2], 1.0, dt).unwrap().last().unwrap();
        let r = end(1e-4);
        let e1 = (end(0.1)[2] - r[2]).abs();
        let e2 = (end(0.05)[2] - r[2]).abs();
        let ratio = e1 / e2;
        assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}");
    }

    #[test]
    fn odd_grid_rejected() {
        let p = locus(1.0, 0.0).unwrap();
        let zero = |_: f64| [0.0, 0.0];
        let t = simulate_dde(&p, &FGSeries::zero(2), &History::Function(&zero), 1.0, 9).unwrap();
        assert!(matches!(project_center(&t, &p), Err(Error::Quadrature(_))));
    }

    #[test]
    fn linear_flow_projection_is_nilpotent() {
        let p = locus(1.0, 0.0).unwrap();
        let u0 = [0.01, -0.02, 0.015];
        let h = |th: f64| [u0[0] + th * u0[1] + 0.5 * th * th * u0[2], u0[1] + th * u0[2]];
        let t = simulate_dde(&p, &FGSeries::zero(2), &History::Function(&h), 1.0, 32).unwrap();
        let u = project_center(&t, &p).unwrap();
        for (k, ut) in u.iter().enumerate() {
            let s = t.times[k];
            let exact = [u0[0] + s * u0[1] + 0.5 * s * s * u0[2], u0[1] + s * u0[2], u0[2]];
            for i in 0..3 {
                assert!((ut[i] - exact[i]).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn oracle_reference_points() {
        for (a, beta) in [(1.0, 0.0), (2.0, 1.0)] {
            let p = locus(a, beta).unwrap();
            let o = spectral_oracle(&p, 24).unwrap();
            assert_eq!(o.matrix.nrows(), 50);
            assert!(o.max_center_modulus() < 1e-5, "{:?}", o.center_eigs);
            assert!(o.gap > 0.1);
            assert!(o.nilpotency_residual < 1e-6);
            assert!(o.index_two_ratio > 1e-3);
        }
    }

    #[test]
    fn oracle_off_locus() {
        let p = locus(1.0, 0.0).unwrap().with_alpha(1.1);
        assert!(matches!(spectral_oracle(&p, 24), Err(Error::SpectralMismatch(_))));
    }
}
