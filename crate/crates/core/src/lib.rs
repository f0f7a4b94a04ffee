//! Explicit primal-dual iterations for ℓ1-penalized least squares under
//! linear equality constraints,
//!
//! ```text
//! minimize ‖Kx − y‖² + 2λ‖Ax‖₁   subject to   Bx = b,
//! ```
//!
//! using only products with `K`, `A`, `B` and their transposes. The crate
//! also carries the special cases of that iteration (iterative
//! soft-thresholding, its constrained variant, basis pursuit, ℓ1-ball
//! constrained least squares), a FISTA baseline, brute-force reference
//! solvers for tiny problems, and a synthetic magnetoencephalography
//! experiment on a cubed-sphere shell.

pub mod json;
pub mod linops;
pub mod meg;
pub mod oracle;
pub mod prox;
pub mod solvers;

pub use linops::{DenseMatrix, LinearMap, LinopError, NormEstimate};
pub use prox::{GroupLayout, GroupedVector, ProxError, ProxFn};
pub use solvers::{
    PenaltyKind, ProblemSpec, RunReport, SolveError, SolverConfig, SolverState, StepSizes,
};
