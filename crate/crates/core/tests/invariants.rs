//! Cross-module properties: conservation over full runs, linear covariance,
//! order preservation through the relaxation path, section-point invariants,
//! and stiff-step cross-checks.

use rrk_core::analysis::{
    convergence_order, poincare_section, CrossingDirection, SectionConfig,
};
use rrk_core::integrators::{
    dirk_stages, integrate, rk_step_explicit, IntegrateOptions, NewtonOptions, Scheme,
};
use rrk_core::ode::{Invariant, OdeProblem};
use rrk_core::problems;
use rrk_core::tableaux::registry_get;
use rrk_core::Error;

fn relax(invariant: &str) -> Scheme {
    Scheme::Relaxation {
        invariant: invariant.into(),
        mode: None,
    }
}

#[test]
fn relaxation_conserves_invariants_across_problem_matrix() {
    // short desk runs over a spread of problems and methods
    let cases = [
        ("lotka-volterra", "rk44", "hamiltonian", 0.85, 100.0),
        ("duffing", "bs85", "hamiltonian", 0.25, 100.0),
        ("henon-heiles", "ssprk33", "hamiltonian", 0.1, 100.0),
        ("kepler", "ssprk33", "hamiltonian", 0.01, 50.0),
        ("kepler", "ssprk33", "angular-momentum", 0.01, 50.0),
        ("harmonic", "dp75", "energy", 0.2, 100.0),
        ("nonlinear", "fehlberg4", "energy", 0.05, 100.0),
        ("harmonic2", "heun3", "energy", 0.2, 100.0),
    ];
    for (pname, mname, inv, dt, t_end) in cases {
        let p = problems::by_name(pname).unwrap();
        let t = registry_get(mname).unwrap();
        let traj = integrate(
            &p,
            &t,
            &relax(inv),
            &p.initial_state,
            0.0,
            t_end,
            dt,
            &IntegrateOptions::default(),
        )
        .unwrap();
        let h0 = traj.series(inv).unwrap()[0];
        let drift = traj.invariant_drift(inv).unwrap();
        assert!(
            drift <= 1e-11 * h0.abs().max(1.0),
            "{pname}/{mname} on {inv}: drift {drift:e}"
        );
        for g in &traj.gammas {
            assert!(*g > 0.0 && *g < 2.0, "{pname}/{mname}: gamma {g}");
        }
    }
}

#[test]
fn relaxation_preserves_linear_invariants_of_the_baseline() {
    // KdV mass is linear; relaxed steps stay on the baseline direction, so
    // it is conserved to round-off at every step
    let p = problems::kdv_semidiscretization(64, (-20.0, 60.0)).unwrap();
    let t = registry_get("norsett23").unwrap();
    let traj = integrate(
        &p,
        &t,
        &relax("energy"),
        &p.initial_state,
        0.0,
        20.0,
        0.5,
        &IntegrateOptions::default(),
    )
    .unwrap();
    let dx = 80.0 / 64.0;
    let raw_sum0: f64 = traj.series("mass").unwrap()[0] / dx;
    for m in traj.series("mass").unwrap() {
        let raw_sum = m / dx;
        assert!(
            (raw_sum - raw_sum0).abs() <= 1e-10 * 64.0,
            "mass sum drift {:e}",
            raw_sum - raw_sum0
        );
    }
}

#[test]
fn superconvergence_matrix_with_baselines() {
    // relaxation gains one order for odd-p methods on Euclidean Hamiltonian
    // problems; baselines stay at their classical order
    let opts = IntegrateOptions::default();
    let dts = [0.2, 0.1, 0.05, 0.025];
    for pname in ["harmonic", "nonlinear"] {
        let p = problems::by_name(pname).unwrap();
        for (mname, p_order) in [("heun3", 3.0), ("bs85", 5.0)] {
            let t = registry_get(mname).unwrap();
            let base = convergence_order(&p, &t, &Scheme::Baseline, &dts, 10.0, &opts).unwrap();
            assert!(
                (base.slope - p_order).abs() <= 0.25,
                "{pname}/{mname} baseline slope {}",
                base.slope
            );
            let rx = convergence_order(&p, &t, &relax("energy"), &dts, 10.0, &opts).unwrap();
            assert!(
                (rx.slope - (p_order + 1.0)).abs() <= 0.25,
                "{pname}/{mname} relaxation slope {}",
                rx.slope
            );
            assert!(rx.observed_order().is_some());
        }
        // even orders gain nothing
        for (mname, p_order) in [("ssprk22", 2.0), ("rk44", 4.0)] {
            let t = registry_get(mname).unwrap();
            let rx = convergence_order(&p, &t, &relax("energy"), &dts, 10.0, &opts).unwrap();
            assert!(
                (rx.slope - p_order).abs() <= 0.25,
                "{pname}/{mname} relaxation slope {}",
                rx.slope
            );
        }
    }
}

#[test]
fn dirk_relaxation_keeps_superconvergent_order() {
    // the relaxed norsett23 (p = 3) also gains an order on the harmonic
    // oscillator, exercising the DIRK + gamma path end to end
    let p = problems::harmonic_oscillator(1);
    let t = registry_get("norsett23").unwrap();
    let fit = convergence_order(
        &p,
        &t,
        &relax("energy"),
        &[0.2, 0.1, 0.05, 0.025],
        10.0,
        &IntegrateOptions::default(),
    )
    .unwrap();
    assert!((fit.slope - 4.0).abs() <= 0.25, "slope {}", fit.slope);
}

#[test]
fn poincare_points_conserve_h_on_relaxation_runs() {
    let p = problems::by_name("henon-heiles").unwrap();
    let t = registry_get("ssprk33").unwrap();
    let traj = integrate(
        &p,
        &t,
        &relax("hamiltonian"),
        &p.initial_state,
        0.0,
        1000.0,
        0.1,
        &IntegrateOptions::default(),
    )
    .unwrap();
    let pts = poincare_section(
        &p,
        &traj,
        &SectionConfig {
            plane_coord: 0,
            plane_value: 0.0,
            record_coords: (1, 3),
            direction: CrossingDirection::Positive,
            project_invariant: Some("hamiltonian".into()),
        },
    )
    .unwrap();
    assert!(pts.len() > 100, "expected a dense section, got {}", pts.len());
    let inv = p.invariant("hamiltonian").unwrap();
    let h0 = inv.value(&traj.states[0]);
    for pt in &pts {
        assert!(
            (inv.value(&pt.state) - h0).abs() <= 1e-10,
            "section point drift {:e}",
            inv.value(&pt.state) - h0
        );
        assert!(pt.plane_residual.abs() <= 1e-6);
    }
    // quasiperiodic motion: points stay within the energy shell bounds in
    // (q2, p2); the section is bounded well inside the escape region
    for pt in &pts {
        assert!(pt.point[0].abs() < 0.5 && pt.point[1].abs() < 0.5);
    }
}

#[test]
fn one_stiff_dirk_step_matches_fine_explicit_reference() {
    // one norsett23 step of dt = 0.5 on the stiff KdV semidiscretization,
    // cross-checked against rk44 marching the same interval at dt = 1e-4
    let p = problems::kdv_semidiscretization(128, (-20.0, 60.0)).unwrap();
    let t = registry_get("norsett23").unwrap();
    let opts = NewtonOptions {
        tol: 1e-11,
        max_iter: 50,
    };
    let (_fs, _d, u_dirk, iters) = dirk_stages(&p, &t, 0.0, &p.initial_state, 0.5, &opts).unwrap();
    assert!(
        iters <= 10 * t.s,
        "expected <= 10 Newton iterations per stage, got {iters} total"
    );
    let rk = registry_get("rk44").unwrap();
    let mut u = p.initial_state.clone();
    let sub_dt = 1e-4;
    for k in 0..5000 {
        let (next, _) = rk_step_explicit(&p, &rk, k as f64 * sub_dt, &u, sub_dt).unwrap();
        u = next;
    }
    let err = p.error_norm(&u_dirk, &u);
    // third-order local error at dt = 0.5 (measured 8.7e-4)
    assert!(err <= 5e-3, "one-step cross-check error {err:e}");
}

#[test]
fn bracket_failure_aborts_the_run_with_diagnostics() {
    // u' = u with H = u^2/2: H only grows along the step direction, so the
    // relaxation equation has no root near 1 and the run must abort rather
    // than silently fall back to the baseline
    let p = OdeProblem::new(
        "expanding",
        vec![1.0],
        Box::new(|_t, u, out| {
            out[0] = u[0];
            Ok(())
        }),
    )
    .with_invariant(
        Invariant::new("h", Box::new(|u: &[f64]| 0.5 * u[0] * u[0]))
            .with_gradient(Box::new(|u: &[f64]| u.to_vec())),
    );
    let t = registry_get("rk44").unwrap();
    let err = integrate(
        &p,
        &t,
        &relax("h"),
        &[1.0],
        0.0,
        1.0,
        0.1,
        &IntegrateOptions::default(),
    )
    .unwrap_err();
    assert_eq!(err.step_index(), Some(0));
    match err {
        Error::StepFailed { source, .. } => {
            assert!(matches!(*source, Error::BracketFailure { .. }), "{source}");
        }
        other => panic!("expected StepFailed, got {other}"),
    }
}

#[test]
fn duffing_relaxation_stays_in_the_right_half_plane() {
    // near-separatrix orbit: the baseline either spirals inward or escapes
    // across q = 0, the relaxed run stays on the closed curve with q >= 0
    let p = problems::by_name("duffing").unwrap();
    let t = registry_get("bs85").unwrap();
    let traj = integrate(
        &p,
        &t,
        &relax("hamiltonian"),
        &p.initial_state,
        0.0,
        5000.0,
        0.25,
        &IntegrateOptions::default(),
    )
    .unwrap();
    for state in &traj.states {
        assert!(state[0] >= 0.0, "entered q < 0: {state:?}");
    }
}

#[test]
fn lotka_volterra_baseline_spirals_inward() {
    // the baseline loses H (whose minimum sits at the equilibrium (1,1)),
    // the relaxed run stays on the level curve
    let p = problems::by_name("lotka-volterra").unwrap();
    let t = registry_get("rk44").unwrap();
    let traj = integrate(
        &p,
        &t,
        &Scheme::Baseline,
        &p.initial_state,
        0.0,
        500.0,
        0.85,
        &IntegrateOptions::default(),
    )
    .unwrap();
    let series = traj.series("hamiltonian").unwrap();
    assert!(series.last().unwrap() - series[0] <= -1e-2);
}

#[test]
fn henon_heiles_baseline_dissipates_monotonically() {
    let p = problems::by_name("henon-heiles").unwrap();
    let t = registry_get("ssprk33").unwrap();
    let traj = integrate(
        &p,
        &t,
        &Scheme::Baseline,
        &p.initial_state,
        0.0,
        5000.0,
        0.1,
        &IntegrateOptions::default(),
    )
    .unwrap();
    let series = traj.series("hamiltonian").unwrap();
    let h0 = series[0];
    for k in 1..series.len() {
        assert!(
            series[k] <= series[k - 1] + 1e-13 * h0.abs(),
            "H increased at step {k}"
        );
    }
    assert!(series.last().unwrap() < &h0);
}

#[test]
fn relaxed_heun3_beats_baseline_rk44_on_the_nonlinear_oscillator() {
    // third-order relaxation with superconvergence lands below the
    // fourth-order baseline at the same step size
    let p = problems::nonlinear_oscillator();
    let opts = IntegrateOptions::default();
    let heun = registry_get("heun3").unwrap();
    let rk = registry_get("rk44").unwrap();
    let relax_traj = integrate(&p, &heun, &relax("energy"), &p.initial_state, 0.0, 10.0, 0.025, &opts)
        .unwrap();
    let base_traj = integrate(&p, &rk, &Scheme::Baseline, &p.initial_state, 0.0, 10.0, 0.025, &opts)
        .unwrap();
    let err = |traj: &rrk_core::Trajectory| {
        let tf = traj.final_time();
        p.error_norm(traj.final_state(), &p.reference_solution(tf).unwrap())
    };
    assert!(err(&relax_traj) < err(&base_traj));
    // every recorded state stays on the unit circle
    for state in &relax_traj.states {
        let r = (state[0] * state[0] + state[1] * state[1]).sqrt();
        assert!((r - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn all_schemes_preserve_total_linear_momentum() {
    let p = problems::by_name("solar").unwrap();
    let meta = p.nbody.clone().unwrap();
    let t = registry_get("ssprk22").unwrap();
    for scheme in [Scheme::Baseline, relax("hamiltonian")] {
        let traj = integrate(&p, &t, &scheme, &p.initial_state, 0.0, 4000.0, 200.0, &IntegrateOptions::default())
            .unwrap();
        let p0 = meta.total_momentum(&traj.states[0]);
        for state in &traj.states {
            let pk = meta.total_momentum(state);
            for (a, b) in pk.iter().zip(&p0) {
                assert!((a - b).abs() <= 1e-10, "momentum drift {:e}", a - b);
            }
        }
    }
}

#[test]
fn relaxed_trajectory_lands_within_one_step_of_t_end() {
    let p = problems::by_name("lotka-volterra").unwrap();
    let t = registry_get("rk44").unwrap();
    let traj = integrate(
        &p,
        &t,
        &relax("hamiltonian"),
        &p.initial_state,
        0.0,
        30.0,
        0.85,
        &IntegrateOptions::default(),
    )
    .unwrap();
    let tf = traj.final_time();
    assert!(tf >= 30.0 - 1e-7);
    assert!(tf < 30.0 + 0.85);
    // strictly increasing times
    for k in 1..traj.times.len() {
        assert!(traj.times[k] > traj.times[k - 1]);
    }
}

#[test]
fn every_registered_method_converges_at_its_declared_order() {
    // order conditions are checked only through order 4; the declared orders
    // (including the fifth-order pair) are certified here by measurement
    let p = problems::harmonic_oscillator(1);
    let opts = IntegrateOptions::default();
    for name in rrk_core::METHOD_NAMES {
        let t = registry_get(name).unwrap();
        let fit = convergence_order(
            &p,
            &t,
            &Scheme::Baseline,
            &[0.2, 0.1, 0.05, 0.025],
            10.0,
            &opts,
        )
        .unwrap();
        let expected = t.declared_order as f64;
        assert!(
            (fit.slope - expected).abs() <= 0.25,
            "{name}: slope {} vs declared {expected}",
            fit.slope
        );
        assert!(fit.observed_order().is_some(), "{name}: r2 {}", fit.r_squared);
    }
}

#[test]
fn duffing_cloud_volume_matches_symplectic_reference() {
    // nonlinear problem: the hull measurement itself limits the attainable
    // flatness (the relaxed members' time grids desynchronize), so relaxation
    // and symplectic Euler agree at the 1e-9 level here rather than at
    // machine accuracy, while the baseline loses volume outright
    let p = problems::duffing();
    let t = registry_get("rk44").unwrap();
    let mut rng = rrk_core::rng::SplitMix64::new(rrk_core::rng::DEFAULT_SEED);
    let cloud: Vec<Vec<f64>> = (0..200)
        .map(|_| {
            let [x, y] = rng.in_disk([1.0, 0.0], 0.001);
            vec![x, y]
        })
        .collect();
    let opts = IntegrateOptions::default();
    let series = |scheme: &Scheme| {
        rrk_core::analysis::volume_series(&p, &t, scheme, &cloud, 0.25, 200.0, 4, &opts).unwrap()
    };
    let relaxed = series(&relax("hamiltonian"));
    let baseline = series(&Scheme::Baseline);
    let symplectic = series(&Scheme::SymplecticEuler);
    assert!(relaxed.slope.abs() <= 1e-7, "relaxed slope {:e}", relaxed.slope);
    assert!(symplectic.slope.abs() <= 1e-7, "symplectic slope {:e}", symplectic.slope);
    assert!(
        baseline.slope.abs() >= 100.0 * relaxed.slope.abs(),
        "baseline {:e} vs relaxed {:e}",
        baseline.slope,
        relaxed.slope
    );
}
