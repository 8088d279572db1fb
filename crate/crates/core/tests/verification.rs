use trizero::reduction::{FGSeries, NFSeries};
use trizero::verify::{compare_flows, project_center, simulate_dde, spectral_oracle, FlowOptions, History};
use trizero::{locus, realize, HomoPoly};

fn a20() -> NFSeries {
    let mut t = NFSeries::zero(2);
    t.set("A[2,0]".parse().unwrap(), 1.0).unwrap();
    t
}

#[test]
fn flow_error_is_not_discretization_error() {
    for (a, beta) in [(1.0, 0.0), (2.0, 1.0)] {
        let p = locus(a, beta).unwrap();
        let target = a20();
        let fg = realize(&target, &p).unwrap().fg;
        let e = |n| {
            compare_flows(
                &p,
                &fg,
                &target,
                0.02,
                &FlowOptions {
                    n,
                    ..FlowOptions::default()
                },
            )
            .unwrap()
            .error
        };
        let (coarse, fine) = (e(64), e(128));
        assert!(((coarse - fine) / fine).abs() < 0.1, "{coarse:e} vs {fine:e}");
    }
}

#[test]
fn zero_target_flows_agree_to_discretization_level() {
    let p = locus(1.0, 0.0).unwrap();
    let c = compare_flows(
        &p,
        &FGSeries::zero(2),
        &NFSeries::zero(2),
        0.02,
        &FlowOptions::default(),
    )
    .unwrap();
    assert!(c.error < 1e-10, "{:e}", c.error);
}

#[test]
fn linear_center_solutions_follow_the_nilpotent_flow() {
    for (a, beta) in [(1.0, 0.0), (2.0, 1.0)] {
        let p = locus(a, beta).unwrap();
        let u0 = [0.03, -0.01, 0.02];
        let h = |th: f64| [u0[0] + th * u0[1] + 0.5 * th * th * u0[2], u0[1] + th * u0[2]];
        let traj = simulate_dde(&p, &FGSeries::zero(2), &History::Function(&h), 1.0, 64).unwrap();
        let u = project_center(&traj, &p).unwrap();
        for (t, ut) in traj.times.iter().zip(&u) {
            let exact = [u0[0] + t * u0[1] + 0.5 * t * t * u0[2], u0[1] + t * u0[2], u0[2]];
            for i in 0..3 {
                assert!((ut[i] - exact[i]).abs() < 1e-4);
            }
        }
    }
}

#[test]
fn equilibrium_drift_matches_forcing() {
    let p = locus(1.0, 0.0).unwrap();
    let mut fg = FGSeries::zero(2);
    fg.set_f(2, HomoPoly::monomial(2, [2, 0, 0], 1.0)).unwrap();
    let c = 0.1;
    let h = move |_: f64| [c, 0.0];
    let traj = simulate_dde(&p, &fg, &History::Function(&h), 0.05, 64).unwrap();
    let dt = traj.dt;
    // y' = F(c, 0) = c^2 at the first step
    let y1 = traj.states[1][1];
    assert!((y1 - dt * c * c).abs() < 2.0 * dt * dt * c * c);
    let unforced = simulate_dde(&p, &FGSeries::zero(2), &History::Function(&h), 0.05, 64).unwrap();
    assert!(unforced
        .states
        .iter()
        .all(|z| (z[0] - c).abs() < 1e-15 && z[1].abs() < 1e-15));
}

#[test]
fn center_cluster_stays_resolved_across_sizes() {
    let p = locus(2.0, 1.0).unwrap();
    for n in [12, 16, 20, 24, 32] {
        let o = spectral_oracle(&p, n).unwrap();
        assert!(o.max_center_modulus() < 1e-5, "N = {n}: {:e}", o.max_center_modulus());
        assert!(o.nilpotency_residual < 1e-6);
        assert!(o.index_two_ratio > 1e-3);
    }
}
