//! The test-problem suite: right-hand sides, Hamiltonians and other
//! invariants with analytic gradients, initial conditions, and analytic
//! solutions where available.

mod kdv;
mod kepler;
mod nbody;

pub use kdv::{kdv_semidiscretization, FourierOperators, KDV_SOLITON_AMPLITUDE, KDV_SOLITON_OFFSET};
pub use kepler::kepler;
pub use nbody::{argon_crystal, outer_solar_system, NBodyState, DATA_DIR_ENV};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::ode::{CanonicalSeparable, Invariant, OdeProblem, QuadraticForm};

/// Lotka-Volterra predator-prey system with invariant
/// H(u) = u1 - log(u1) + u2 - log(u2). States must stay positive; evaluations
/// at non-positive states raise rather than clamp.
pub fn lotka_volterra() -> OdeProblem {
    OdeProblem::new(
        "lotka-volterra",
        vec![1.0, 2.0],
        Box::new(|_t, u, out| {
            if u[0] <= 0.0 || u[1] <= 0.0 {
                return Err(Error::DomainViolation(format!(
                    "Lotka-Volterra state left the positive quadrant: ({}, {})",
                    u[0], u[1]
                )));
            }
            out[0] = u[0] * (1.0 - u[1]);
            out[1] = u[1] * (u[0] - 1.0);
            Ok(())
        }),
    )
    .with_invariant(
        Invariant::new(
            "hamiltonian",
            Box::new(|u: &[f64]| u[0] - u[0].ln() + u[1] - u[1].ln()),
        )
        .with_gradient(Box::new(|u: &[f64]| {
            vec![1.0 - 1.0 / u[0], 1.0 - 1.0 / u[1]]
        })),
    )
}

/// Initial condition selector for the Henon-Heiles system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HenonHeilesIc {
    /// All components 0.12; quasiperiodic motion, two closed section curves.
    Quasiperiodic,
    /// q1 = q2 = p2 = 0.12, p1 = sqrt(2) sqrt(0.15925); chaotic motion.
    Chaotic,
}

/// Henon-Heiles system, state (q1, q2, p1, p2), with
/// H = (p1^2 + p2^2)/2 + (q1^2 + q2^2)/2 + q1^2 q2 - q2^3/3.
pub fn henon_heiles(ic: HenonHeilesIc) -> OdeProblem {
    let u0 = match ic {
        HenonHeilesIc::Quasiperiodic => vec![0.12, 0.12, 0.12, 0.12],
        HenonHeilesIc::Chaotic => {
            vec![0.12, 0.12, std::f64::consts::SQRT_2 * 0.15925f64.sqrt(), 0.12]
        }
    };
    let name = match ic {
        HenonHeilesIc::Quasiperiodic => "henon-heiles",
        HenonHeilesIc::Chaotic => "henon-heiles-chaotic",
    };
    OdeProblem::new(
        name,
        u0,
        Box::new(|_t, u, out| {
            let (q1, q2, p1, p2) = (u[0], u[1], u[2], u[3]);
            out[0] = p1;
            out[1] = p2;
            out[2] = -(q1 + 2.0 * q1 * q2);
            out[3] = -(q2 + q1 * q1 - q2 * q2);
            Ok(())
        }),
    )
    .with_invariant(
        Invariant::new(
            "hamiltonian",
            Box::new(|u: &[f64]| {
                let (q1, q2, p1, p2) = (u[0], u[1], u[2], u[3]);
                0.5 * (p1 * p1 + p2 * p2)
                    + 0.5 * (q1 * q1 + q2 * q2)
                    + q1 * q1 * q2
                    - q2 * q2 * q2 / 3.0
            }),
        )
        .with_gradient(Box::new(|u: &[f64]| {
            let (q1, q2, p1, p2) = (u[0], u[1], u[2], u[3]);
            vec![
                q1 + 2.0 * q1 * q2,
                q2 + q1 * q1 - q2 * q2,
                p1,
                p2,
            ]
        })),
    )
    .with_partition(CanonicalSeparable {
        q_indices: vec![0, 1],
        p_indices: vec![2, 3],
        grad_v: Box::new(|q: &[f64]| {
            vec![
                q[0] + 2.0 * q[0] * q[1],
                q[1] + q[0] * q[0] - q[1] * q[1],
            ]
        }),
        grad_t: Box::new(|p: &[f64]| p.to_vec()),
    })
}

/// Undamped Duffing oscillator q'' = q - q^3 as the first-order system
/// (q, p) with H = p^2/2 - q^2/2 + q^4/4. The initial condition (1.4142, 0)
/// sits inside, but very near, the separatrix through (sqrt(2), 0).
// the truncated decimal is intentional: starting exactly on sqrt(2) would
// put the orbit on the separatrix instead of just inside it
#[allow(clippy::approx_constant)]
pub fn duffing() -> OdeProblem {
    OdeProblem::new(
        "duffing",
        vec![1.4142, 0.0],
        Box::new(|_t, u, out| {
            out[0] = u[1];
            out[1] = u[0] - u[0] * u[0] * u[0];
            Ok(())
        }),
    )
    .with_invariant(
        Invariant::new(
            "hamiltonian",
            Box::new(|u: &[f64]| {
                let (q, p) = (u[0], u[1]);
                0.5 * p * p - 0.5 * q * q + 0.25 * q * q * q * q
            }),
        )
        .with_gradient(Box::new(|u: &[f64]| {
            vec![-u[0] + u[0] * u[0] * u[0], u[1]]
        })),
    )
    .with_partition(CanonicalSeparable {
        q_indices: vec![0],
        p_indices: vec![1],
        grad_v: Box::new(|q: &[f64]| vec![-q[0] + q[0] * q[0] * q[0]]),
        grad_t: Box::new(|p: &[f64]| p.to_vec()),
    })
}

/// One or two uncoupled harmonic oscillators u' = L u with
/// L = [[0, -1], [1, 0]] per pair and total energy H = ||u||^2 / 2.
///
/// The analytic solution rotates each pair counterclockwise; the orientation
/// is pinned by the matrix exponential of L (L maps (1, 0) to (0, 1)).
pub fn harmonic_oscillator(count: usize) -> OdeProblem {
    assert!(count == 1 || count == 2, "one or two oscillators");
    let dim = 2 * count;
    let u0 = if count == 1 {
        vec![1.0, 0.0]
    } else {
        vec![1.0, 0.0, 0.5, 0.5]
    };
    let name = if count == 1 { "harmonic" } else { "harmonic2" };
    let init = u0.clone();
    OdeProblem::new(
        name,
        u0,
        Box::new(move |_t, u, out| {
            for k in 0..count {
                out[2 * k] = -u[2 * k + 1];
                out[2 * k + 1] = u[2 * k];
            }
            Ok(())
        }),
    )
    .with_invariant(
        Invariant::new(
            "energy",
            Box::new(|u: &[f64]| 0.5 * u.iter().map(|v| v * v).sum::<f64>()),
        )
        .with_gradient(Box::new(|u: &[f64]| u.to_vec()))
        .with_quadratic(QuadraticForm::ScaledIdentity(1.0)),
    )
    .with_analytic_solution(Box::new(move |t: f64| {
        let (s, c) = t.sin_cos();
        let mut u = vec![0.0; dim];
        for k in 0..count {
            u[2 * k] = c * init[2 * k] - s * init[2 * k + 1];
            u[2 * k + 1] = s * init[2 * k] + c * init[2 * k + 1];
        }
        u
    }))
    .with_partition(CanonicalSeparable {
        // canonical pairs (q, p) = (u2, u1) per oscillator
        q_indices: (0..count).map(|k| 2 * k + 1).collect(),
        p_indices: (0..count).map(|k| 2 * k).collect(),
        grad_v: Box::new(|q: &[f64]| q.to_vec()),
        grad_t: Box::new(|p: &[f64]| p.to_vec()),
    })
}

/// Nonlinear oscillator u' = ||u||^{-2} (-u2, u1) with H = ||u||^2 / 2; for
/// ||u0|| = 1 the solution is the unit-speed rotation (cos t, sin t). The
/// period depends only on the energy.
pub fn nonlinear_oscillator() -> OdeProblem {
    OdeProblem::new(
        "nonlinear",
        vec![1.0, 0.0],
        Box::new(|_t, u, out| {
            let r2 = u[0] * u[0] + u[1] * u[1];
            if r2 <= 1e-300 {
                return Err(Error::DomainViolation(
                    "nonlinear oscillator undefined at the origin".into(),
                ));
            }
            out[0] = -u[1] / r2;
            out[1] = u[0] / r2;
            Ok(())
        }),
    )
    .with_invariant(
        Invariant::new(
            "energy",
            Box::new(|u: &[f64]| 0.5 * (u[0] * u[0] + u[1] * u[1])),
        )
        .with_gradient(Box::new(|u: &[f64]| u.to_vec()))
        .with_quadratic(QuadraticForm::ScaledIdentity(1.0)),
    )
    .with_analytic_solution(Box::new(|t: f64| vec![t.cos(), t.sin()]))
}

/// General Euclidean Hamiltonian problem: f(u) = g(||u||^2 / 2) (-p, q) for
/// u = (q, p), conserving H = ||u||^2 / 2. Odd-order relaxation methods are
/// superconvergent on this class.
pub fn euclidean_hamiltonian<G>(name: &'static str, pairs: usize, g: G, u0: Vec<f64>) -> OdeProblem
where
    G: Fn(f64) -> f64 + Send + Sync + 'static,
{
    assert_eq!(u0.len(), 2 * pairs);
    OdeProblem::new(
        name,
        u0,
        Box::new(move |_t, u, out| {
            let half_norm2 = 0.5 * u.iter().map(|v| v * v).sum::<f64>();
            let scale = g(half_norm2);
            if !scale.is_finite() {
                return Err(Error::DomainViolation(format!(
                    "g(||u||^2/2) not finite at ||u||^2/2 = {half_norm2}"
                )));
            }
            let (q, p) = u.split_at(pairs);
            for k in 0..pairs {
                out[k] = -scale * p[k];
                out[pairs + k] = scale * q[k];
            }
            Ok(())
        }),
    )
    .with_invariant(
        Invariant::new(
            "energy",
            Box::new(|u: &[f64]| 0.5 * u.iter().map(|v| v * v).sum::<f64>()),
        )
        .with_gradient(Box::new(|u: &[f64]| u.to_vec()))
        .with_quadratic(QuadraticForm::ScaledIdentity(1.0)),
    )
}

/// Four-dimensional skew-symmetric linear system conserving ||u||^2 that is
/// NOT of Euclidean Hamiltonian form; the superconvergence gain does not
/// apply here (negative control).
pub fn skew4_counterexample() -> OdeProblem {
    let l = Matrix::from_rows(&[
        &[0.0, 0.0, -1.0, -1.0],
        &[0.0, 0.0, 0.0, -1.0],
        &[1.0, 0.0, 0.0, -1.0],
        &[1.0, 1.0, 1.0, 0.0],
    ]);
    let l_rhs = l.clone();
    let l_ref = l;
    OdeProblem::new(
        "skew4",
        vec![1.0, 0.0, 0.0, 0.0],
        Box::new(move |_t, u, out| {
            l_rhs.matvec_into(u, out);
            Ok(())
        }),
    )
    .with_invariant(
        Invariant::new(
            "energy",
            Box::new(|u: &[f64]| 0.5 * u.iter().map(|v| v * v).sum::<f64>()),
        )
        .with_gradient(Box::new(|u: &[f64]| u.to_vec()))
        .with_quadratic(QuadraticForm::ScaledIdentity(1.0)),
    )
    .with_analytic_solution(Box::new(move |t: f64| {
        let mut tl = l_ref.clone();
        tl.scale(t);
        tl.expm().matvec(&[1.0, 0.0, 0.0, 0.0])
    }))
}

/// Linear Hamiltonian system u = (q, p), q' = P p, p' = -Q q with
/// H = q^T Q q / 2 + p^T P p / 2 -- quadratic but not a function of the
/// Euclidean norm, so again no superconvergence (negative control).
pub fn linear_hamiltonian_counterexample() -> OdeProblem {
    let q_mat = Matrix::from_rows(&[&[1.0, 1.0], &[1.0, 2.0]]);
    let p_mat = Matrix::from_rows(&[&[3.0, 2.0], &[2.0, 4.0]]);
    // generator [[0, P], [-Q, 0]] on (q1, q2, p1, p2)
    let gen = Matrix::from_rows(&[
        &[0.0, 0.0, 3.0, 2.0],
        &[0.0, 0.0, 2.0, 4.0],
        &[-1.0, -1.0, 0.0, 0.0],
        &[-1.0, -2.0, 0.0, 0.0],
    ]);
    // H = 1/2 u^T W u with W = blockdiag(Q, P)
    let mut w = Matrix::zeros(4, 4);
    for i in 0..2 {
        for j in 0..2 {
            w[(i, j)] = q_mat[(i, j)];
            w[(2 + i, 2 + j)] = p_mat[(i, j)];
        }
    }
    let w_grad = w.clone();
    let w_eval = w.clone();
    let gen_rhs = gen.clone();
    let gen_ref = gen;
    OdeProblem::new(
        "linear-hamiltonian",
        vec![1.0, 0.0, 0.0, 0.0],
        Box::new(move |_t, u, out| {
            gen_rhs.matvec_into(u, out);
            Ok(())
        }),
    )
    .with_invariant(
        Invariant::new(
            "hamiltonian",
            Box::new(move |u: &[f64]| 0.5 * crate::linalg::dot(u, &w_eval.matvec(u))),
        )
        .with_gradient(Box::new(move |u: &[f64]| w_grad.matvec(u)))
        .with_quadratic(QuadraticForm::Dense(w)),
    )
    .with_analytic_solution(Box::new(move |t: f64| {
        let mut tg = gen_ref.clone();
        tg.scale(t);
        tg.expm().matvec(&[1.0, 0.0, 0.0, 0.0])
    }))
}

/// Problem names exposed on the command line.
pub const PROBLEM_NAMES: [&str; 12] = [
    "lotka-volterra",
    "henon-heiles",
    "henon-heiles-chaotic",
    "duffing",
    "harmonic",
    "harmonic2",
    "nonlinear",
    "kepler",
    "kdv",
    "solar",
    "argon",
    "linear-hamiltonian",
];

/// Construct a problem from its command-line name with its standard
/// parameters. `skew4` is also accepted (used by the superconvergence
/// negative controls).
pub fn by_name(name: &str) -> Result<OdeProblem> {
    match name {
        "lotka-volterra" => Ok(lotka_volterra()),
        "henon-heiles" => Ok(henon_heiles(HenonHeilesIc::Quasiperiodic)),
        "henon-heiles-chaotic" => Ok(henon_heiles(HenonHeilesIc::Chaotic)),
        "duffing" => Ok(duffing()),
        "harmonic" => Ok(harmonic_oscillator(1)),
        "harmonic2" => Ok(harmonic_oscillator(2)),
        "nonlinear" => Ok(nonlinear_oscillator()),
        "kepler" => Ok(kepler(0.5)),
        "kdv" => kdv_semidiscretization(128, (-20.0, 60.0)),
        "solar" => outer_solar_system(),
        "argon" => argon_crystal(),
        "skew4" => Ok(skew4_counterexample()),
        "linear-hamiltonian" => Ok(linear_hamiltonian_counterexample()),
        _ => Err(Error::PreconditionViolated(format!(
            "unknown problem `{name}`"
        ))),
    }
}
