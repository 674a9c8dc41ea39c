//! Diagonally implicit stepping: the stage equations are solved sequentially,
//! each with a damped-free Newton iteration on
//! g(y_i) = y_i - u - dt sum_{j<=i} a_ij f_j = 0.

use crate::error::{Error, Result};
use crate::linalg::{all_finite, axpy, Matrix};
use crate::ode::OdeProblem;
use crate::tableaux::{ButcherTableau, TableauKind};

#[derive(Debug, Clone)]
pub struct NewtonOptions {
    /// Infinity-norm residual tolerance for each stage solve.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        // Tight enough that stiffly accurate tableaux with large weights
        // still reproduce their stability function to 1e-12; the stage loop
        // additionally floors the tolerance at the rounding level of the
        // residual, so large systems cannot be asked for the impossible.
        NewtonOptions {
            tol: 1e-13,
            max_iter: 50,
        }
    }
}

/// Solve all stages of a DIRK step. Returns the stage derivatives, the step
/// direction d = sum_i b_i f_i, the baseline update u + dt d, and the total
/// Newton iteration count.
pub fn dirk_stages(
    problem: &OdeProblem,
    tableau: &ButcherTableau,
    tn: f64,
    u: &[f64],
    dt: f64,
    opts: &NewtonOptions,
) -> Result<(Vec<Vec<f64>>, Vec<f64>, Vec<f64>, usize)> {
    if tableau.kind != TableauKind::DiagonallyImplicit {
        return Err(Error::PreconditionViolated(format!(
            "dirk step requires a diagonally implicit tableau, got `{}`",
            tableau.name
        )));
    }
    let n = problem.dim;
    let s = tableau.s;
    let mut stage_fs: Vec<Vec<f64>> = Vec::with_capacity(s);
    let mut total_iters = 0usize;

    for i in 0..s {
        let ti = tn + tableau.c[i] * dt;
        // explicit part: u + dt sum_{j<i} a_ij f_j
        let mut known = u.to_vec();
        for (j, f) in stage_fs.iter().enumerate().take(i) {
            axpy(dt * tableau.a(i, j), f, &mut known);
        }
        let aii = tableau.a(i, i);
        if aii == 0.0 {
            let f = problem.rhs_alloc(ti, &known)?;
            if !all_finite(&f) {
                return Err(Error::NonFiniteState {
                    context: "explicit DIRK stage",
                });
            }
            stage_fs.push(f);
            total_iters += 1;
            continue;
        }

        let mut y = known.clone();
        let mut converged = false;
        let mut fy = vec![0.0; n];
        let mut residual = f64::INFINITY;
        for _ in 0..opts.max_iter {
            total_iters += 1;
            problem.rhs(ti, &y, &mut fy)?;
            if !all_finite(&fy) {
                return Err(Error::NonFiniteState {
                    context: "DIRK stage derivative",
                });
            }
            // g = y - dt*aii*f(y) - known
            let mut g = vec![0.0; n];
            residual = 0.0;
            let mut scale = 0.0f64;
            for k in 0..n {
                g[k] = y[k] - dt * aii * fy[k] - known[k];
                residual = residual.max(g[k].abs());
                scale = scale
                    .max(y[k].abs())
                    .max(known[k].abs())
                    .max((dt * aii * fy[k]).abs());
            }
            // rounding floor of the residual itself
            let effective_tol = opts.tol.max(64.0 * f64::EPSILON * scale);
            if residual <= effective_tol {
                converged = true;
                break;
            }
            // Newton system (I - dt*aii*J) delta = -g, Jacobian refreshed
            // every iteration.
            let jac = problem.jacobian_or_fd(ti, &y)?;
            let mut m = Matrix::zeros(n, n);
            for r in 0..n {
                for c in 0..n {
                    m[(r, c)] = -dt * aii * jac[(r, c)];
                }
                m[(r, r)] += 1.0;
            }
            for gk in &mut g {
                *gk = -*gk;
            }
            let delta = m.lu_solve(&g)?;
            for k in 0..n {
                y[k] += delta[k];
            }
            if !all_finite(&y) {
                return Err(Error::NonFiniteState {
                    context: "DIRK Newton iterate",
                });
            }
        }
        if !converged {
            return Err(Error::NewtonDivergence {
                context: "DIRK stage solve",
                residual,
                iterations: opts.max_iter,
                tolerance: opts.tol,
            });
        }
        stage_fs.push(fy);
    }

    let mut d = vec![0.0; n];
    for (bi, f) in tableau.b.iter().zip(stage_fs.iter()) {
        axpy(*bi, f, &mut d);
    }
    let mut u_plus = u.to_vec();
    axpy(dt, &d, &mut u_plus);
    if !all_finite(&u_plus) {
        return Err(Error::NonFiniteState {
            context: "DIRK update",
        });
    }
    Ok((stage_fs, d, u_plus, total_iters))
}

/// One baseline DIRK step; see [`dirk_stages`] for the stage solve contract.
pub fn dirk_step(
    problem: &OdeProblem,
    tableau: &ButcherTableau,
    tn: f64,
    u: &[f64],
    dt: f64,
    opts: &NewtonOptions,
) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    let (_fs, d, u_plus, iters) = dirk_stages(problem, tableau, tn, u, dt, opts)?;
    Ok((u_plus, d, iters))
}
