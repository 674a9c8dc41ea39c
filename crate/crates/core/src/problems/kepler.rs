//! The Kepler two-body problem with both its conserved quantities registered.

use crate::error::Error;
use crate::ode::{CanonicalSeparable, Invariant, OdeProblem};

/// Kepler problem, state (q1, q2, p1, p2):
///
///   q' = p,  p' = -q / |q|^3,
///   H = |p|^2 / 2 - 1 / |q|,   L = q1 p2 - q2 p1.
///
/// Starts at perihelion q = (1 - e, 0), p = (0, sqrt((1+e)/(1-e))), the
/// standard initial condition with semi-major axis a = 1, H = -1/2 and period
/// 2 pi. The reference solution solves Kepler's equation for the eccentric
/// anomaly by Newton iteration to 1e-14.
pub fn kepler(e: f64) -> OdeProblem {
    assert!((0.0..1.0).contains(&e), "eccentricity in [0, 1)");
    let u0 = vec![1.0 - e, 0.0, 0.0, ((1.0 + e) / (1.0 - e)).sqrt()];
    OdeProblem::new(
        "kepler",
        u0,
        Box::new(|_t, u, out| {
            let r2 = u[0] * u[0] + u[1] * u[1];
            if r2 <= 1e-300 {
                return Err(Error::DomainViolation("Kepler collision: q = 0".into()));
            }
            let r3 = r2 * r2.sqrt();
            out[0] = u[2];
            out[1] = u[3];
            out[2] = -u[0] / r3;
            out[3] = -u[1] / r3;
            Ok(())
        }),
    )
    .with_invariant(
        Invariant::new(
            "hamiltonian",
            Box::new(|u: &[f64]| {
                let r = (u[0] * u[0] + u[1] * u[1]).sqrt();
                0.5 * (u[2] * u[2] + u[3] * u[3]) - 1.0 / r
            }),
        )
        .with_gradient(Box::new(|u: &[f64]| {
            let r2 = u[0] * u[0] + u[1] * u[1];
            let r3 = r2 * r2.sqrt();
            vec![u[0] / r3, u[1] / r3, u[2], u[3]]
        })),
    )
    .with_invariant(
        Invariant::new(
            "angular-momentum",
            Box::new(|u: &[f64]| u[0] * u[3] - u[1] * u[2]),
        )
        .with_gradient(Box::new(|u: &[f64]| vec![u[3], -u[2], -u[1], u[0]])),
    )
    .with_analytic_solution(Box::new(move |t: f64| kepler_reference(e, t)))
    .with_partition(CanonicalSeparable {
        q_indices: vec![0, 1],
        p_indices: vec![2, 3],
        grad_v: Box::new(|q: &[f64]| {
            let r2 = q[0] * q[0] + q[1] * q[1];
            let r3 = r2 * r2.sqrt();
            vec![q[0] / r3, q[1] / r3]
        }),
        grad_t: Box::new(|p: &[f64]| p.to_vec()),
    })
}

/// Exact orbit for a = 1, perihelion at t = 0: solve E - e sin E = t for the
/// eccentric anomaly E, then
///   q = (cos E - e, sqrt(1 - e^2) sin E),
///   p = dq/dt with dE/dt = 1 / (1 - e cos E).
fn kepler_reference(e: f64, t: f64) -> Vec<f64> {
    let mean = t;
    let mut ecc = if e > 0.8 { std::f64::consts::PI } else { mean };
    for _ in 0..100 {
        let f = ecc - e * ecc.sin() - mean;
        let fp = 1.0 - e * ecc.cos();
        let delta = f / fp;
        ecc -= delta;
        if delta.abs() <= 1e-14 * ecc.abs().max(1.0) {
            break;
        }
    }
    let (sin_e, cos_e) = ecc.sin_cos();
    let beta = (1.0 - e * e).sqrt();
    let e_dot = 1.0 / (1.0 - e * cos_e);
    vec![
        cos_e - e,
        beta * sin_e,
        -sin_e * e_dot,
        beta * cos_e * e_dot,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invariants_at_the_initial_condition() {
        // classical perihelion start: H = -1/2, L = sqrt(1 - e^2), a = 1
        let e = 0.5;
        let p = kepler(e);
        let h = p.invariant("hamiltonian").unwrap().value(&p.initial_state);
        assert!((h + 0.5).abs() < 1e-15, "{h}");
        let l = p
            .invariant("angular-momentum")
            .unwrap()
            .value(&p.initial_state);
        assert!((l - (1.0f64 - e * e).sqrt()).abs() < 1e-15, "{l}");
    }

    #[test]
    fn reference_is_periodic_with_kepler_period() {
        // third law: T = 2 pi a^{3/2} with a = -1/(2H) = 1
        let p = kepler(0.5);
        let period = 2.0 * std::f64::consts::PI;
        let u0 = p.reference_solution(0.0).unwrap();
        for (a, b) in u0.iter().zip(p.initial_state.iter()) {
            assert!((a - b).abs() < 1e-13);
        }
        let ut = p.reference_solution(3.0 * period).unwrap();
        for (a, b) in ut.iter().zip(p.initial_state.iter()) {
            assert!((a - b).abs() < 1e-11, "{a} vs {b}");
        }
    }

    #[test]
    fn reference_satisfies_the_ode() {
        // centered-difference residual of the Kepler-equation solution
        let p = kepler(0.5);
        let h = 1e-6;
        for k in 0..24 {
            let t = 0.26 * k as f64;
            let up = p.reference_solution(t + h).unwrap();
            let um = p.reference_solution(t - h).unwrap();
            let u = p.reference_solution(t).unwrap();
            let f = p.rhs_alloc(t, &u).unwrap();
            for i in 0..4 {
                let fd = (up[i] - um[i]) / (2.0 * h);
                assert!(
                    (fd - f[i]).abs() <= 1e-9 * f[i].abs().max(1.0),
                    "t={t}, component {i}: {fd} vs {}",
                    f[i]
                );
            }
        }
    }

    #[test]
    fn collision_raises_domain_violation() {
        let p = kepler(0.5);
        assert!(p.rhs_alloc(0.0, &[0.0, 0.0, 1.0, 1.0]).is_err());
    }
}
