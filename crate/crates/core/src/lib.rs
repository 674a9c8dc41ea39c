//! Structure-preserving Runge-Kutta integration built around the relaxation
//! approach: the baseline update direction is kept but rescaled each step so
//! a chosen nonlinear invariant (typically the Hamiltonian) is conserved to
//! machine precision, with the step interpreted as advancing time by
//! gamma * dt.
//!
//! The crate bundles
//! * a registry of explicit and diagonally implicit Butcher tableaux,
//! * relaxation, orthogonal-projection, and symplectic Euler steppers next to
//!   the plain baseline methods,
//! * the canonical Hamiltonian test problems (Lotka-Volterra, Henon-Heiles,
//!   Duffing, Kepler, oscillators, a pseudospectral KdV semidiscretization,
//!   the outer solar system, and a Lennard-Jones argon crystal), and
//! * analysis tools: convergence orders, error-growth exponents, Poincare
//!   sections, convex-hull phase-volume tracking, kinetic temperature, and
//!   direct checks of the combinatorial identities behind the relaxation
//!   parameter's asymptotics.

pub mod analysis;
pub mod error;
pub mod integrators;
pub mod linalg;
pub mod ode;
pub mod problems;
pub mod rng;
pub mod tableaux;

pub use error::{Error, Result};
pub use integrators::{
    integrate, GammaMode, IntegrateOptions, Scheme, StepOutcome, Trajectory,
};
pub use ode::{Invariant, OdeProblem, QuadraticForm};
pub use tableaux::{registry_get, ButcherTableau, TableauKind, METHOD_NAMES};
