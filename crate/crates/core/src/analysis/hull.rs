//! Convex hulls of point clouds and the phase-volume series built on them.

use crate::error::{Error, Result};
use crate::integrators::{
    dirk_step, rk_step_explicit, rrk_step, symplectic_euler_step, GammaMode, IntegrateOptions,
    Scheme,
};
use crate::linalg::linear_fit;
use crate::ode::OdeProblem;
use crate::tableaux::{ButcherTableau, TableauKind};

/// Area of a planar convex hull.
#[derive(Debug, Clone, Copy)]
pub struct HullArea {
    pub area: f64,
    /// All points collinear (area 0).
    pub degenerate: bool,
}

/// Convex hull via the monotone chain, area via the shoelace formula; exact
/// for the hull polygon up to round-off.
pub fn convex_hull_area_2d(points: &[[f64; 2]]) -> Result<HullArea> {
    if points.len() < 3 {
        return Err(Error::PreconditionViolated(format!(
            "hull area needs at least 3 points, got {}",
            points.len()
        )));
    }
    let mut pts: Vec<[f64; 2]> = points.to_vec();
    pts.sort_by(|a, b| {
        a[0].partial_cmp(&b[0])
            .expect("finite coordinates")
            .then(a[1].partial_cmp(&b[1]).expect("finite coordinates"))
    });
    pts.dedup();
    if pts.len() < 3 {
        return Ok(HullArea {
            area: 0.0,
            degenerate: true,
        });
    }

    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| -> f64 {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };

    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    let hull: Vec<[f64; 2]> = lower.into_iter().chain(upper).collect();
    if hull.len() < 3 {
        return Ok(HullArea {
            area: 0.0,
            degenerate: true,
        });
    }

    let mut twice_area = 0.0;
    for i in 0..hull.len() {
        let [x0, y0] = hull[i];
        let [x1, y1] = hull[(i + 1) % hull.len()];
        twice_area += x0 * y1 - x1 * y0;
    }
    Ok(HullArea {
        area: 0.5 * twice_area.abs(),
        degenerate: false,
    })
}

/// Phase-volume history of an evolving point cloud.
#[derive(Debug, Clone)]
pub struct VolumeSeries {
    /// Mean actual time of the cloud at each sample (the grids of the cloud
    /// members desynchronize slightly under relaxation).
    pub times: Vec<f64>,
    /// (area - area_0) / area_0 at each sample.
    pub relative_change: Vec<f64>,
    pub initial_area: f64,
    /// Linear-fit slope of the relative change against time.
    pub slope: f64,
    pub r_squared: f64,
}

/// Evolve every cloud member independently for ceil(t_end/dt) steps of
/// nominal size dt, measuring the hull area of the first two state
/// coordinates every `sample_stride` steps. Errors carry the index of the
/// failing cloud member.
pub fn volume_series(
    problem: &OdeProblem,
    tableau: &ButcherTableau,
    scheme: &Scheme,
    cloud: &[Vec<f64>],
    dt: f64,
    t_end: f64,
    sample_stride: usize,
    opts: &IntegrateOptions,
) -> Result<VolumeSeries> {
    if cloud.len() < 3 {
        return Err(Error::PreconditionViolated(
            "volume series needs at least 3 cloud points".into(),
        ));
    }
    let stride = sample_stride.max(1);
    let n_steps = (t_end / dt).ceil() as usize;

    let mode = match scheme {
        Scheme::Relaxation { invariant, mode } => {
            let inv = problem.invariant(invariant)?;
            Some(mode.unwrap_or(if inv.quadratic.is_some() {
                GammaMode::QuadraticClosedForm
            } else {
                GammaMode::RootFind
            }))
        }
        _ => None,
    };

    let mut states: Vec<Vec<f64>> = cloud.to_vec();
    let mut times = vec![0.0; cloud.len()];
    let mut sample_times = Vec::new();
    let mut areas = Vec::new();

    let record =
        |states: &[Vec<f64>], times: &[f64], sample_times: &mut Vec<f64>, areas: &mut Vec<f64>| -> Result<()> {
            let pts: Vec<[f64; 2]> = states.iter().map(|u| [u[0], u[1]]).collect();
            let hull = convex_hull_area_2d(&pts)?;
            sample_times.push(times.iter().sum::<f64>() / times.len() as f64);
            areas.push(hull.area);
            Ok(())
        };
    record(&states, &times, &mut sample_times, &mut areas)?;

    for step in 1..=n_steps {
        for (idx, (u, t)) in states.iter_mut().zip(times.iter_mut()).enumerate() {
            let advance_err = |e: Error| e.at_step(idx, *t);
            match scheme {
                Scheme::Baseline => {
                    let next = match tableau.kind {
                        TableauKind::Explicit => {
                            rk_step_explicit(problem, tableau, *t, u, dt)
                                .map_err(advance_err)?
                                .0
                        }
                        TableauKind::DiagonallyImplicit => {
                            dirk_step(problem, tableau, *t, u, dt, &opts.newton)
                                .map_err(advance_err)?
                                .0
                        }
                    };
                    *u = next;
                    *t += dt;
                }
                Scheme::Relaxation { invariant, .. } => {
                    let out = rrk_step(
                        problem,
                        tableau,
                        invariant,
                        *t,
                        u,
                        dt,
                        mode.expect("resolved above"),
                        opts,
                    )
                    .map_err(advance_err)?;
                    *t += out.dt_effective;
                    *u = out.u_next;
                }
                Scheme::Projection { invariant } => {
                    let out = crate::integrators::projection_step(
                        problem, tableau, invariant, *t, u, dt, opts,
                    )
                    .map_err(advance_err)?;
                    *t += dt;
                    *u = out.u_next;
                }
                Scheme::SymplecticEuler => {
                    *u = symplectic_euler_step(problem, u, dt).map_err(advance_err)?;
                    *t += dt;
                }
            }
        }
        if step % stride == 0 || step == n_steps {
            record(&states, &times, &mut sample_times, &mut areas)?;
        }
    }

    let initial_area = areas[0];
    let relative_change: Vec<f64> = areas
        .iter()
        .map(|a| (a - initial_area) / initial_area)
        .collect();
    let (slope, _intercept, r_squared) = linear_fit(&sample_times, &relative_change);
    Ok(VolumeSeries {
        times: sample_times,
        relative_change,
        initial_area,
        slope,
        r_squared,
    })
}
