//! Turning trajectories into quantitative findings: observed convergence
//! orders, error-growth exponents in time, Poincare sections, phase-volume
//! series, kinetic temperature, and direct checks of the combinatorial
//! identities behind the relaxation parameter's expansion.

mod hull;
mod identities;
mod poincare;

pub use hull::{convex_hull_area_2d, volume_series, HullArea, VolumeSeries};
pub use identities::{
    gamma_asymptotic_check, lemma_a2_sweep, verify_lemma_a2, GammaAsymptotic, LemmaA2Check,
    Rational,
};
pub use poincare::{poincare_section, CrossingDirection, SectionConfig, SectionPoint};

use crate::error::{Error, Result};
use crate::integrators::{integrate, IntegrateOptions, Scheme, Trajectory};
use crate::linalg::linear_fit;
use crate::ode::{NBodyMeta, OdeProblem};
use crate::tableaux::ButcherTableau;

/// Error floor of the asymptotic fit window (100 x machine epsilon).
pub const ORDER_FIT_FLOOR: f64 = 100.0 * f64::EPSILON;
/// Error ceiling of the asymptotic fit window.
pub const ORDER_FIT_CEILING: f64 = 1e-1;
/// Errors at or above this level count as saturated in growth fits.
pub const SATURATION_LEVEL: f64 = 0.5;

/// Result of a convergence study over a set of step sizes.
#[derive(Debug, Clone)]
pub struct OrderFit {
    pub dts: Vec<f64>,
    pub errors: Vec<f64>,
    /// Least-squares slope of log(error) against log(dt) over the asymptotic
    /// window.
    pub slope: f64,
    pub r_squared: f64,
    /// Which (dt, error) pairs fell inside the asymptotic window.
    pub in_window: Vec<bool>,
}

impl OrderFit {
    /// The slope qualifies as an observed order only with a clean fit.
    pub fn observed_order(&self) -> Option<f64> {
        (self.r_squared >= 0.98).then_some(self.slope)
    }
}

/// Error-growth fit over a late time window.
#[derive(Debug, Clone)]
pub struct GrowthFit {
    /// (time, error) samples over the whole run.
    pub series: Vec<(f64, f64)>,
    /// Fit window in time, after transient and saturation trimming.
    pub window: (f64, f64),
    /// Least-squares slope of log(error) against log(t) over the window.
    pub exponent: f64,
    pub r_squared: f64,
}

/// Measure final-time errors against the problem's reference for each step
/// size and fit the observed order. Errors are taken at each trajectory's
/// actual final time (the relaxation grid is non-uniform), in the problem's
/// error norm.
pub fn convergence_order(
    problem: &OdeProblem,
    tableau: &ButcherTableau,
    scheme: &Scheme,
    dts: &[f64],
    t_end: f64,
    opts: &IntegrateOptions,
) -> Result<OrderFit> {
    if !problem.has_analytic_solution() {
        return Err(Error::ReferenceUnavailable(problem.name.clone()));
    }
    if dts.len() < 2 {
        return Err(Error::PreconditionViolated(
            "convergence study needs at least two step sizes".into(),
        ));
    }
    let mut errors = Vec::with_capacity(dts.len());
    for &dt in dts {
        let traj = integrate(
            problem,
            tableau,
            scheme,
            &problem.initial_state,
            0.0,
            t_end,
            dt,
            opts,
        )?;
        let t_final = traj.final_time();
        let reference = problem.reference_solution(t_final)?;
        errors.push(problem.error_norm(traj.final_state(), &reference));
    }
    let (slope, r_squared, in_window) = fit_loglog(dts, &errors, ORDER_FIT_FLOOR, ORDER_FIT_CEILING)?;
    Ok(OrderFit {
        dts: dts.to_vec(),
        errors,
        slope,
        r_squared,
        in_window,
    })
}

fn fit_loglog(
    x: &[f64],
    y: &[f64],
    floor: f64,
    ceiling: f64,
) -> Result<(f64, f64, Vec<bool>)> {
    let in_window: Vec<bool> = y.iter().map(|&e| e > floor && e < ceiling).collect();
    let xs: Vec<f64> = x
        .iter()
        .zip(&in_window)
        .filter(|(_, w)| **w)
        .map(|(v, _)| v.ln())
        .collect();
    let ys: Vec<f64> = y
        .iter()
        .zip(&in_window)
        .filter(|(_, w)| **w)
        .map(|(v, _)| v.ln())
        .collect();
    if xs.len() < 2 {
        return Err(Error::PreconditionViolated(
            "fewer than two samples inside the asymptotic fit window".into(),
        ));
    }
    let (slope, _intercept, r2) = linear_fit(&xs, &ys);
    Ok((slope, r2, in_window))
}

/// Fit the growth exponent of the error in time: integrate once, sample the
/// error at the stored times nearest to `sample_times` (comparing against the
/// reference at those same times), and fit log(error) against log(t) over the
/// late window [0.2 t_end, t_end] with saturated samples (error >= 0.5)
/// excluded.
pub fn error_growth_fit(
    problem: &OdeProblem,
    tableau: &ButcherTableau,
    scheme: &Scheme,
    dt: f64,
    t_end: f64,
    sample_times: &[f64],
    opts: &IntegrateOptions,
) -> Result<GrowthFit> {
    if !problem.has_analytic_solution() {
        return Err(Error::ReferenceUnavailable(problem.name.clone()));
    }
    let traj = integrate(
        problem,
        tableau,
        scheme,
        &problem.initial_state,
        0.0,
        t_end,
        dt,
        opts,
    )?;
    let mut series = Vec::with_capacity(sample_times.len());
    for &t in sample_times {
        let k = traj.nearest_index(t);
        let tk = traj.times[k];
        let reference = problem.reference_solution(tk)?;
        series.push((tk, problem.error_norm(&traj.states[k], &reference)));
    }

    let t_lo = 0.2 * t_end;
    let window_pts: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|(t, e)| *t >= t_lo && *e < SATURATION_LEVEL && *e > ORDER_FIT_FLOOR)
        .collect();
    if window_pts.len() < 2 {
        return Err(Error::SaturatedWindow);
    }
    let xs: Vec<f64> = window_pts.iter().map(|(t, _)| t.ln()).collect();
    let ys: Vec<f64> = window_pts.iter().map(|(_, e)| e.ln()).collect();
    let (exponent, _intercept, r_squared) = linear_fit(&xs, &ys);
    let window = (
        window_pts.first().unwrap().0,
        window_pts.last().unwrap().0,
    );
    Ok(GrowthFit {
        series,
        window,
        exponent,
        r_squared,
    })
}

/// Kinetic temperature along a trajectory, with a linear drift fit.
#[derive(Debug, Clone)]
pub struct TemperatureSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Linear drift fitted over the whole run.
    pub drift_slope: f64,
    pub drift_intercept: f64,
    pub r_squared: f64,
}

pub fn temperature_series(traj: &Trajectory, meta: &NBodyMeta) -> TemperatureSeries {
    let values: Vec<f64> = traj.states.iter().map(|u| meta.temperature(u)).collect();
    let (drift_slope, drift_intercept, r_squared) = linear_fit(&traj.times, &values);
    TemperatureSeries {
        times: traj.times.clone(),
        values,
        drift_slope,
        drift_intercept,
        r_squared,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems;
    use crate::tableaux::registry_get;

    #[test]
    fn baseline_rk44_order_on_harmonic() {
        let p = problems::harmonic_oscillator(1);
        let t = registry_get("rk44").unwrap();
        let fit = convergence_order(
            &p,
            &t,
            &Scheme::Baseline,
            &[0.4, 0.2, 0.1, 0.05],
            10.0,
            &IntegrateOptions::default(),
        )
        .unwrap();
        assert!(
            (fit.slope - 4.0).abs() <= 0.25,
            "slope {} (errors {:?})",
            fit.slope,
            fit.errors
        );
        assert!(fit.observed_order().is_some());
        // errors strictly decrease with dt inside the window
        for k in 1..fit.errors.len() {
            if fit.in_window[k] && fit.in_window[k - 1] {
                assert!(fit.errors[k] < fit.errors[k - 1]);
            }
        }
    }

    #[test]
    fn reference_required() {
        let p = problems::lotka_volterra();
        let t = registry_get("rk44").unwrap();
        let err = convergence_order(
            &p,
            &t,
            &Scheme::Baseline,
            &[0.2, 0.1],
            1.0,
            &IntegrateOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::ReferenceUnavailable(_)));
    }

    #[test]
    fn saturated_growth_window_is_an_error() {
        // a reference nowhere near the numerical solution saturates every
        // sample
        let p = problems::harmonic_oscillator(1)
            .with_analytic_solution(Box::new(|_t| vec![10.0, 10.0]));
        let t = registry_get("rk44").unwrap();
        let err = error_growth_fit(
            &p,
            &t,
            &Scheme::Baseline,
            0.1,
            10.0,
            &[2.0, 4.0, 6.0, 8.0, 10.0],
            &IntegrateOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::SaturatedWindow));
    }

    #[test]
    fn temperature_of_free_particles_is_constant() {
        let meta = NBodyMeta {
            masses: vec![1.0, 1.0],
            space_dim: 2,
            k_b: 1.0,
            momentum_offset: 4,
        };
        let traj = Trajectory {
            times: vec![0.0, 1.0, 2.0],
            states: vec![vec![0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0]; 3],
            gammas: vec![1.0, 1.0],
            invariant_names: vec![],
            invariant_series: vec![],
        };
        let series = temperature_series(&traj, &meta);
        assert!((series.values[0] - 0.5).abs() < 1e-15); // (1 + 1) / (2*2*1)
        assert!(series.drift_slope.abs() < 1e-15);
    }
}
