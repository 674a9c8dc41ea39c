//! One function per experiment, all emitting a CSV table plus a JSON metrics
//! summary.

use std::path::PathBuf;
use std::time::Instant;

use serde_json::{json, Value};

use rrk_core::analysis::{
    convergence_order, error_growth_fit, gamma_asymptotic_check, lemma_a2_sweep, poincare_section,
    temperature_series, volume_series, CrossingDirection, SectionConfig,
};
use rrk_core::integrators::{integrate, IntegrateOptions, Scheme, Trajectory};
use rrk_core::ode::OdeProblem;
use rrk_core::rng::SplitMix64;
use rrk_core::tableaux::ButcherTableau;
use rrk_core::{problems, registry_get};

use crate::output::{paths, write_json, Cell, CsvTable};
use crate::spec::{Experiment, ExperimentSpec, SchemeKind};
use crate::CliError;

pub struct ExperimentReport {
    pub summary: Value,
    pub csv_path: PathBuf,
    pub json_path: PathBuf,
}

fn build_problem(spec: &ExperimentSpec) -> Result<OdeProblem, CliError> {
    let problem = match spec.problem.as_str() {
        "kepler" => problems::kepler(spec.eccentricity),
        "kdv" => problems::kdv_semidiscretization(spec.grid_n, (-20.0, 60.0))?,
        other => problems::by_name(other)?,
    };
    Ok(problem)
}

fn build_scheme(spec: &ExperimentSpec) -> Scheme {
    match spec.scheme {
        SchemeKind::Baseline => Scheme::Baseline,
        SchemeKind::SymplecticEuler => Scheme::SymplecticEuler,
        SchemeKind::Relaxation => Scheme::Relaxation {
            invariant: spec.invariant.clone().expect("validated at resolve"),
            mode: None,
        },
        SchemeKind::Projection => Scheme::Projection {
            invariant: spec.invariant.clone().expect("validated at resolve"),
        },
    }
}

fn tableau(spec: &ExperimentSpec) -> ButcherTableau {
    registry_get(&spec.method).expect("validated at resolve")
}

fn run_trajectory(
    spec: &ExperimentSpec,
    problem: &OdeProblem,
) -> Result<Trajectory, rrk_core::Error> {
    integrate(
        problem,
        &tableau(spec),
        &build_scheme(spec),
        &problem.initial_state,
        0.0,
        spec.t_end,
        spec.dt,
        &IntegrateOptions::default(),
    )
}

fn gamma_stats(traj: &Trajectory) -> Value {
    let mut finite: Vec<f64> = traj.gammas.iter().copied().filter(|g| g.is_finite()).collect();
    if finite.is_empty() {
        return Value::Null;
    }
    finite.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    json!({
        "min": finite[0],
        "max": finite[finite.len() - 1],
        "median": finite[finite.len() / 2],
    })
}

fn invariant_metrics(problem: &OdeProblem, traj: &Trajectory) -> Value {
    let mut map = serde_json::Map::new();
    for inv in &problem.invariants {
        let series = traj.series(&inv.name).expect("recorded");
        let first = series[0];
        let last = *series.last().expect("non-empty");
        let drift = traj.invariant_drift(&inv.name).expect("recorded");
        map.insert(
            inv.name.clone(),
            json!({
                "initial": first,
                "final": last,
                "max_drift": drift,
                "max_drift_relative": drift / first.abs().max(f64::MIN_POSITIVE),
            }),
        );
    }
    Value::Object(map)
}

/// Trajectory CSV: time, gamma, invariant series, and (for small systems)
/// the state components.
fn trajectory_table(problem: &OdeProblem, traj: &Trajectory, extra: &[(&str, Vec<f64>)]) -> CsvTable {
    let mut header: Vec<String> = vec!["time".into(), "gamma".into()];
    for inv in &problem.invariants {
        header.push(inv.name.clone());
    }
    for (name, _) in extra {
        header.push((*name).into());
    }
    let include_state = problem.dim <= 8;
    if include_state {
        for i in 0..problem.dim {
            header.push(format!("u{i}"));
        }
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut table = CsvTable::new(&header_refs);
    for k in 0..traj.len() {
        let mut row: Vec<Cell> = Vec::with_capacity(header.len());
        row.push(traj.times[k].into());
        let gamma = if k == 0 { 1.0 } else { traj.gammas[k - 1] };
        row.push(gamma.into());
        for series in &traj.invariant_series {
            row.push(series[k].into());
        }
        for (_, series) in extra {
            row.push(series[k].into());
        }
        if include_state {
            for v in &traj.states[k] {
                row.push((*v).into());
            }
        }
        table.push(row);
    }
    table
}

pub fn run(spec: &ExperimentSpec) -> Result<ExperimentReport, CliError> {
    let started = Instant::now();
    let (csv_path, json_path) = paths(&spec.output);
    let (table, metrics) = match spec.experiment {
        Experiment::Integrate => run_integrate(spec)?,
        Experiment::Converge => run_converge(spec)?,
        Experiment::Errgrowth => run_errgrowth(spec)?,
        Experiment::Poincare => run_poincare(spec)?,
        Experiment::Volume => run_volume(spec)?,
        Experiment::Kdv => run_kdv(spec)?,
        Experiment::Solar => run_solar(spec)?,
        Experiment::Argon => run_argon(spec)?,
        Experiment::LemmaA2 => run_lemma(spec)?,
        Experiment::GammaAsymptotic => run_gamma_asymptotic(spec)?,
    };
    table.write(&csv_path)?;
    let summary = json!({
        "experiment": spec.experiment.name(),
        "spec": serde_json::to_value(spec).expect("spec serializes"),
        "metrics": metrics,
        "csv": csv_path.display().to_string(),
        "wall_time_s": started.elapsed().as_secs_f64(),
        "version": env!("CARGO_PKG_VERSION"),
    });
    write_json(&json_path, &summary)?;
    Ok(ExperimentReport {
        summary,
        csv_path,
        json_path,
    })
}

fn run_integrate(spec: &ExperimentSpec) -> Result<(CsvTable, Value), CliError> {
    let problem = build_problem(spec)?;
    let traj = run_trajectory(spec, &problem)?;
    let table = trajectory_table(&problem, &traj, &[]);
    let metrics = json!({
        "steps": traj.gammas.len(),
        "final_time": traj.final_time(),
        "invariants": invariant_metrics(&problem, &traj),
        "gamma": gamma_stats(&traj),
    });
    Ok((table, metrics))
}

fn run_converge(spec: &ExperimentSpec) -> Result<(CsvTable, Value), CliError> {
    let problem = build_problem(spec)?;
    let fit = convergence_order(
        &problem,
        &tableau(spec),
        &build_scheme(spec),
        &spec.dts,
        spec.t_end,
        &IntegrateOptions::default(),
    )?;
    let mut table = CsvTable::new(&["dt", "error", "in_window"]);
    for ((dt, err), used) in fit.dts.iter().zip(&fit.errors).zip(&fit.in_window) {
        table.push(vec![(*dt).into(), (*err).into(), (usize::from(*used)).into()]);
    }
    let metrics = json!({
        "slope": fit.slope,
        "r_squared": fit.r_squared,
        "observed_order": fit.observed_order(),
        "window": fit.in_window,
        "errors": fit.errors,
    });
    Ok((table, metrics))
}

fn sample_times(spec: &ExperimentSpec) -> Vec<f64> {
    let mut out = Vec::new();
    let mut t = spec.sample_every;
    while t <= spec.t_end + 1e-9 * spec.sample_every {
        out.push(t.min(spec.t_end));
        t += spec.sample_every;
    }
    out
}

fn run_errgrowth(spec: &ExperimentSpec) -> Result<(CsvTable, Value), CliError> {
    let problem = build_problem(spec)?;
    let samples = sample_times(spec);
    let fit = error_growth_fit(
        &problem,
        &tableau(spec),
        &build_scheme(spec),
        spec.dt,
        spec.t_end,
        &samples,
        &IntegrateOptions::default(),
    )?;
    let mut table = CsvTable::new(&["time", "error"]);
    for (t, e) in &fit.series {
        table.push(vec![(*t).into(), (*e).into()]);
    }
    let metrics = json!({
        "exponent": fit.exponent,
        "r_squared": fit.r_squared,
        "window": { "t_lo": fit.window.0, "t_hi": fit.window.1 },
        "samples": fit.series.len(),
    });
    Ok((table, metrics))
}

fn run_poincare(spec: &ExperimentSpec) -> Result<(CsvTable, Value), CliError> {
    let problem = build_problem(spec)?;
    let traj = run_trajectory(spec, &problem)?;
    // section plane: q1 = 0 recording (q2, p2) for Henon-Heiles; first
    // coordinate zero recording (u0, u1) otherwise
    let (plane_coord, record) = match spec.problem.as_str() {
        "henon-heiles" | "henon-heiles-chaotic" => (0usize, (1usize, 3usize)),
        _ => (0usize, (0usize, 1usize)),
    };
    let direction = match spec.direction.as_str() {
        "negative" => CrossingDirection::Negative,
        "both" => CrossingDirection::Both,
        _ => CrossingDirection::Positive,
    };
    let project_invariant = match spec.scheme {
        SchemeKind::Relaxation | SchemeKind::Projection => spec.invariant.clone(),
        _ => None,
    };
    let cfg = SectionConfig {
        plane_coord,
        plane_value: 0.0,
        record_coords: record,
        direction,
        project_invariant,
    };
    let points = poincare_section(&problem, &traj, &cfg)?;
    let mut table = CsvTable::new(&["time", "a", "b", "plane_residual"]);
    for pt in &points {
        table.push(vec![
            pt.time.into(),
            pt.point[0].into(),
            pt.point[1].into(),
            pt.plane_residual.into(),
        ]);
    }
    let invariant_drift_at_points = spec.invariant.as_ref().map(|name| {
        let inv = problem.invariant(name).expect("validated");
        let h0 = inv.value(&traj.states[0]);
        points
            .iter()
            .map(|pt| (inv.value(&pt.state) - h0).abs())
            .fold(0.0, f64::max)
    });
    let metrics = json!({
        "crossings": points.len(),
        "direction": spec.direction,
        "plane_coord": plane_coord,
        "record_coords": [record.0, record.1],
        "max_invariant_drift_at_points": invariant_drift_at_points,
        "trajectory_invariants": invariant_metrics(&problem, &traj),
    });
    Ok((table, metrics))
}

fn run_volume(spec: &ExperimentSpec) -> Result<(CsvTable, Value), CliError> {
    let problem = build_problem(spec)?;
    let mut rng = SplitMix64::new(spec.seed);
    let center = [problem.initial_state[0], problem.initial_state[1]];
    let cloud: Vec<Vec<f64>> = (0..spec.points)
        .map(|_| {
            let [x, y] = rng.in_disk(center, spec.radius);
            let mut state = problem.initial_state.clone();
            state[0] = x;
            state[1] = y;
            state
        })
        .collect();
    let series = volume_series(
        &problem,
        &tableau(spec),
        &build_scheme(spec),
        &cloud,
        spec.dt,
        spec.t_end,
        spec.stride,
        &IntegrateOptions::default(),
    )?;
    let mut table = CsvTable::new(&["time", "relative_area_change"]);
    for (t, rc) in series.times.iter().zip(&series.relative_change) {
        table.push(vec![(*t).into(), (*rc).into()]);
    }
    let metrics = json!({
        "slope": series.slope,
        "r_squared": series.r_squared,
        "initial_area": series.initial_area,
        "points": spec.points,
        "radius": spec.radius,
        "seed": spec.seed,
    });
    Ok((table, metrics))
}

fn run_kdv(spec: &ExperimentSpec) -> Result<(CsvTable, Value), CliError> {
    let problem = build_problem(spec)?;
    let traj = run_trajectory(spec, &problem)?;
    let errors: Vec<f64> = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(t, u)| {
            let reference = problem.reference_solution(*t).expect("soliton reference");
            problem.error_norm(u, &reference)
        })
        .collect();
    let final_error = *errors.last().expect("non-empty");
    let table = trajectory_table(&problem, &traj, &[("error", errors)]);
    let metrics = json!({
        "steps": traj.gammas.len(),
        "final_time": traj.final_time(),
        "final_error": final_error,
        "grid_n": spec.grid_n,
        "invariants": invariant_metrics(&problem, &traj),
        "gamma": gamma_stats(&traj),
    });
    Ok((table, metrics))
}

fn run_solar(spec: &ExperimentSpec) -> Result<(CsvTable, Value), CliError> {
    let problem = build_problem(spec)?;
    let traj = run_trajectory(spec, &problem)?;
    let meta = problem.nbody.as_ref().expect("solar carries body data");
    let bodies = meta.bodies();
    // heliocentric distances document the orbit deviations
    let mut radii: Vec<(String, Vec<f64>)> = (0..bodies)
        .map(|i| (format!("r{i}"), Vec::with_capacity(traj.len())))
        .collect();
    for state in &traj.states {
        for (i, (_, series)) in radii.iter_mut().enumerate() {
            let mut r2 = 0.0;
            for d in 0..3 {
                let delta = state[3 * i + d] - state[d];
                r2 += delta * delta;
            }
            series.push(r2.sqrt());
        }
    }
    let extra: Vec<(&str, Vec<f64>)> = radii
        .iter()
        .map(|(name, series)| (name.as_str(), series.clone()))
        .collect();
    let table = trajectory_table(&problem, &traj, &extra);
    let p0 = meta.total_momentum(&traj.states[0]);
    let p1 = meta.total_momentum(traj.final_state());
    let momentum_drift: f64 = p0
        .iter()
        .zip(&p1)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let metrics = json!({
        "steps": traj.gammas.len(),
        "final_time": traj.final_time(),
        "invariants": invariant_metrics(&problem, &traj),
        "total_momentum_drift": momentum_drift,
        "gamma": gamma_stats(&traj),
    });
    Ok((table, metrics))
}

fn run_argon(spec: &ExperimentSpec) -> Result<(CsvTable, Value), CliError> {
    let problem = build_problem(spec)?;
    let traj = run_trajectory(spec, &problem)?;
    let meta = problem.nbody.as_ref().expect("argon carries body data");
    let temps = temperature_series(&traj, meta);
    let mean_t = temps.values.iter().sum::<f64>() / temps.values.len() as f64;
    let table = trajectory_table(&problem, &traj, &[("temperature", temps.values.clone())]);
    let metrics = json!({
        "steps": traj.gammas.len(),
        "final_time": traj.final_time(),
        "invariants": invariant_metrics(&problem, &traj),
        "temperature": {
            "mean": mean_t,
            "drift_slope": temps.drift_slope,
            "intercept": temps.drift_intercept,
            "r_squared": temps.r_squared,
            "fit_window": { "t_lo": traj.times[0], "t_hi": traj.final_time() },
        },
        "gamma": gamma_stats(&traj),
    });
    Ok((table, metrics))
}

fn run_lemma(spec: &ExperimentSpec) -> Result<(CsvTable, Value), CliError> {
    let checks = lemma_a2_sweep(spec.max_s);
    let mut table = CsvTable::new(&["s", "m", "lhs", "rhs", "residual_zero"]);
    let mut all_zero = true;
    for c in &checks {
        all_zero &= c.residual.is_zero();
        table.push(vec![
            (c.s as i64).into(),
            (c.m as i64).into(),
            Cell::Text(c.lhs.to_string()),
            Cell::Text(c.rhs.to_string()),
            (usize::from(c.residual.is_zero())).into(),
        ]);
    }
    let metrics = json!({
        "max_s": spec.max_s,
        "cases": checks.len(),
        "all_residuals_zero": all_zero,
    });
    Ok((table, metrics))
}

fn run_gamma_asymptotic(spec: &ExperimentSpec) -> Result<(CsvTable, Value), CliError> {
    let t = tableau(spec);
    let fit = gamma_asymptotic_check(&t, &[1.0, 0.0], &spec.dts)?;
    let mut table = CsvTable::new(&["dt", "gamma", "gamma_minus_one"]);
    for (dt, gamma) in &fit.gammas {
        table.push(vec![(*dt).into(), (*gamma).into(), (gamma - 1.0).into()]);
    }
    let relative_error = fit
        .predicted_constant
        .map(|pred| ((fit.constant - pred) / pred).abs());
    let metrics = json!({
        "method": spec.method,
        "exponent": fit.exponent,
        "constant": fit.constant,
        "predicted_constant": fit.predicted_constant,
        "constant_relative_error": relative_error,
        "r_squared": fit.r_squared,
    });
    Ok((table, metrics))
}
