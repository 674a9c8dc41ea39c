//! Problem description: right-hand side, conserved functionals, optional
//! analytic solution and Jacobian, and structural metadata used by the
//! steppers and analysis routines.

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};

pub type RhsFn = dyn Fn(f64, &[f64], &mut [f64]) -> Result<()> + Send + Sync;
pub type ScalarFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
pub type GradFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;
pub type SolutionFn = dyn Fn(f64) -> Vec<f64> + Send + Sync;
pub type JacobianFn = dyn Fn(f64, &[f64]) -> Matrix + Send + Sync;

/// Structure of a quadratic functional H(u) = 1/2 u^T W u, which admits a
/// closed-form relaxation parameter.
#[derive(Clone)]
pub enum QuadraticForm {
    /// W = w * I. The energies of the oscillator problems (w = 1) and the
    /// KdV semidiscretization (w = dx) have this shape.
    ScaledIdentity(f64),
    /// General symmetric W.
    Dense(Matrix),
}

impl QuadraticForm {
    /// Weighted inner product <x, y>_W.
    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            QuadraticForm::ScaledIdentity(w) => w * dot(x, y),
            QuadraticForm::Dense(w) => dot(x, &w.matvec(y)),
        }
    }

    pub fn value(&self, u: &[f64]) -> f64 {
        0.5 * self.inner(u, u)
    }
}

/// A named conserved functional of the problem.
pub struct Invariant {
    pub name: String,
    eval: Box<ScalarFn>,
    grad: Option<Box<GradFn>>,
    pub quadratic: Option<QuadraticForm>,
}

impl Invariant {
    pub fn new(name: impl Into<String>, eval: Box<ScalarFn>) -> Self {
        Invariant {
            name: name.into(),
            eval,
            grad: None,
            quadratic: None,
        }
    }

    pub fn with_gradient(mut self, grad: Box<GradFn>) -> Self {
        self.grad = Some(grad);
        self
    }

    pub fn with_quadratic(mut self, form: QuadraticForm) -> Self {
        self.quadratic = Some(form);
        self
    }

    pub fn value(&self, u: &[f64]) -> f64 {
        (self.eval)(u)
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.grad.is_some()
    }

    /// Analytic gradient when supplied, otherwise central differences with
    /// h = cbrt(eps) * max(1, |u_i|).
    pub fn gradient(&self, u: &[f64]) -> Vec<f64> {
        if let Some(g) = &self.grad {
            return g(u);
        }
        let h0 = f64::EPSILON.cbrt();
        let mut g = vec![0.0; u.len()];
        let mut work = u.to_vec();
        for i in 0..u.len() {
            let h = h0 * u[i].abs().max(1.0);
            work[i] = u[i] + h;
            let fp = (self.eval)(&work);
            work[i] = u[i] - h;
            let fm = (self.eval)(&work);
            work[i] = u[i];
            g[i] = (fp - fm) / (2.0 * h);
        }
        g
    }
}

/// Canonical (q, p) partition with separable H = T(p) + V(q), as required by
/// the symplectic Euler stepper.
pub struct CanonicalSeparable {
    pub q_indices: Vec<usize>,
    pub p_indices: Vec<usize>,
    /// dV/dq as a function of the q sub-vector.
    pub grad_v: Box<GradFn>,
    /// dT/dp as a function of the p sub-vector.
    pub grad_t: Box<GradFn>,
}

/// Bookkeeping for N-body problems: per-body masses and the state layout
/// [q_0 .. q_{n-1}, p_0 .. p_{n-1}] with `space_dim` components per body.
#[derive(Clone, Debug)]
pub struct NBodyMeta {
    pub masses: Vec<f64>,
    pub space_dim: usize,
    /// Boltzmann constant in the problem's unit system.
    pub k_b: f64,
    /// Index of the first momentum component.
    pub momentum_offset: usize,
}

impl NBodyMeta {
    pub fn bodies(&self) -> usize {
        self.masses.len()
    }

    /// Kinetic temperature sum |p_i|^2 / m_i / (2 N k_B).
    pub fn temperature(&self, state: &[f64]) -> f64 {
        let n = self.bodies();
        let mut twice_kinetic = 0.0;
        for (i, m) in self.masses.iter().enumerate() {
            let off = self.momentum_offset + i * self.space_dim;
            let p2: f64 = state[off..off + self.space_dim]
                .iter()
                .map(|v| v * v)
                .sum();
            twice_kinetic += p2 / m;
        }
        twice_kinetic / (2.0 * n as f64 * self.k_b)
    }

    /// Total linear momentum (space_dim components).
    pub fn total_momentum(&self, state: &[f64]) -> Vec<f64> {
        let mut total = vec![0.0; self.space_dim];
        for i in 0..self.bodies() {
            let off = self.momentum_offset + i * self.space_dim;
            for d in 0..self.space_dim {
                total[d] += state[off + d];
            }
        }
        total
    }
}

/// An initial value problem with named invariants.
pub struct OdeProblem {
    pub name: String,
    pub dim: usize,
    rhs: Box<RhsFn>,
    pub invariants: Vec<Invariant>,
    analytic: Option<Box<SolutionFn>>,
    jacobian: Option<Box<JacobianFn>>,
    pub partition: Option<CanonicalSeparable>,
    pub nbody: Option<NBodyMeta>,
    pub initial_state: Vec<f64>,
    /// Scale factor applied to Euclidean error norms (sqrt(dx) for the KdV
    /// semidiscretization so errors are discrete L2).
    pub error_norm_weight: f64,
}

impl OdeProblem {
    pub fn new(name: impl Into<String>, initial_state: Vec<f64>, rhs: Box<RhsFn>) -> Self {
        OdeProblem {
            name: name.into(),
            dim: initial_state.len(),
            rhs,
            invariants: Vec::new(),
            analytic: None,
            jacobian: None,
            partition: None,
            nbody: None,
            initial_state,
            error_norm_weight: 1.0,
        }
    }

    pub fn with_invariant(mut self, inv: Invariant) -> Self {
        self.invariants.push(inv);
        self
    }

    pub fn with_analytic_solution(mut self, f: Box<SolutionFn>) -> Self {
        self.analytic = Some(f);
        self
    }

    pub fn with_jacobian(mut self, f: Box<JacobianFn>) -> Self {
        self.jacobian = Some(f);
        self
    }

    pub fn with_partition(mut self, p: CanonicalSeparable) -> Self {
        self.partition = Some(p);
        self
    }

    pub fn with_nbody(mut self, meta: NBodyMeta) -> Self {
        self.nbody = Some(meta);
        self
    }

    pub fn with_error_norm_weight(mut self, w: f64) -> Self {
        self.error_norm_weight = w;
        self
    }

    pub fn rhs(&self, t: f64, u: &[f64], out: &mut [f64]) -> Result<()> {
        (self.rhs)(t, u, out)
    }

    pub fn rhs_alloc(&self, t: f64, u: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.rhs(t, u, &mut out)?;
        Ok(out)
    }

    pub fn invariant(&self, name: &str) -> Result<&Invariant> {
        self.invariants
            .iter()
            .find(|inv| inv.name == name)
            .ok_or_else(|| Error::UnknownInvariant(name.to_string(), self.name.clone()))
    }

    /// Primary invariant (the first registered one, by convention the
    /// Hamiltonian).
    pub fn primary_invariant(&self) -> Option<&Invariant> {
        self.invariants.first()
    }

    pub fn has_analytic_solution(&self) -> bool {
        self.analytic.is_some()
    }

    pub fn reference_solution(&self, t: f64) -> Result<Vec<f64>> {
        match &self.analytic {
            Some(f) => Ok(f(t)),
            None => Err(Error::ReferenceUnavailable(self.name.clone())),
        }
    }

    pub fn analytic_jacobian(&self, t: f64, u: &[f64]) -> Option<Matrix> {
        self.jacobian.as_ref().map(|j| j(t, u))
    }

    /// Jacobian of the rhs: analytic when supplied, otherwise forward finite
    /// differences with perturbation sqrt(eps) * max(1, |u_k|).
    pub fn jacobian_or_fd(&self, t: f64, u: &[f64]) -> Result<Matrix> {
        if let Some(j) = &self.jacobian {
            return Ok(j(t, u));
        }
        let n = self.dim;
        let f0 = self.rhs_alloc(t, u)?;
        let mut jac = Matrix::zeros(n, n);
        let mut pert = u.to_vec();
        let h0 = f64::EPSILON.sqrt();
        let mut fcol = vec![0.0; n];
        for k in 0..n {
            let h = h0 * u[k].abs().max(1.0);
            pert[k] = u[k] + h;
            self.rhs(t, &pert, &mut fcol)?;
            pert[k] = u[k];
            for i in 0..n {
                jac[(i, k)] = (fcol[i] - f0[i]) / h;
            }
        }
        Ok(jac)
    }

    /// Weighted Euclidean distance used for error measurements.
    pub fn error_norm(&self, a: &[f64], b: &[f64]) -> f64 {
        let sq: f64 = a
            .iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y) * (x - y))
            .sum();
        self.error_norm_weight * sq.sqrt()
    }
}
