//! The primal-dual iteration for penalized, linearly constrained least
//! squares, its special cases, a FISTA baseline and diagnostics.
//!
//! All schemes run through one driver that handles initialization,
//! stopping, trace sampling and the divergence guard. Multipliers are kept
//! in the units of the optimality system
//! `Kᵀ(Kx − y) + Aᵀw − Bᵀv = 0`, `w = P_λ(w + Ax)`, `Bx = b`
//! regardless of the step sizes.

mod config;
mod diagnostics;
mod driver;
mod fista;
mod gist;
mod primal;
mod problem;

use crate::linops::{DenseMatrix, LinearMap, LinopError};
use crate::prox::ProxError;

pub use config::{resolve_fista_steps, resolve_steps, SolverConfig, StepSizes, STEP_MARGIN};
pub use diagnostics::{
    constraint_residual, kkt_residuals, lyapunov_value, objective, KktResiduals,
    LYAPUNOV_NEGATIVE_TOL,
};
pub use driver::{RunReport, SolverState, TracePoint};
pub use problem::{Constraint, PenaltyKind, ProblemSpec};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolveError {
    #[error("invalid problem: {0}")]
    Problem(String),
    #[error(transparent)]
    Linop(#[from] LinopError),
    #[error(transparent)]
    Prox(#[from] ProxError),
    #[error("alpha must be greater than 1/2, got {0}")]
    InvalidAlpha(f64),
    #[error("{name} must be a positive finite number, got {value}")]
    InvalidStep { name: &'static str, value: f64 },
    #[error("step condition {condition} violated: value {value:.6}")]
    StepCondition { condition: &'static str, value: f64 },
    #[error("{0}")]
    Unsupported(String),
    #[error("iterates diverged at iteration {iteration} (norm {norm:e})")]
    Diverged { iteration: usize, norm: f64 },
    #[error("Lyapunov form is indefinite (value {0:e}); step conditions are violated")]
    IndefiniteLyapunov(f64),
    #[error("constraint system is inconsistent: least-squares residual {residual:e}")]
    Infeasible { residual: f64 },
}

/// Iteration selected by [`run`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    /// Predictor-corrector primal-dual iteration for any `A`, `B`.
    Gist,
    /// Soft thresholding (or its joint / ℓ1-ball analogues) with the
    /// constraint handled by a multiplier step. Requires `A = Id`.
    Thresholding,
    Fista,
}

/// Runs `alg` on `p`. `observer` sees the state at iteration 0 and after
/// every step.
pub fn run(
    alg: Algorithm,
    p: &ProblemSpec,
    c: &SolverConfig,
    observer: Option<&mut dyn FnMut(&SolverState)>,
) -> Result<RunReport, SolveError> {
    p.validate()?;
    match alg {
        Algorithm::Gist => {
            if matches!(p.penalty, PenaltyKind::L1Ball { .. }) && !p.a.is_identity() {
                return Err(SolveError::Unsupported(
                    "the l1-ball constraint needs A = identity".into(),
                ));
            }
            let steps = resolve_steps(p, c)?;
            let scheme = gist::Gist::new(p, &steps);
            driver::drive(p, c, steps, scheme, observer)
        }
        Algorithm::Thresholding => {
            if !p.a.is_identity() {
                return Err(SolveError::Unsupported(
                    "thresholding iterations need A = identity".into(),
                ));
            }
            let steps = resolve_steps(p, c)?;
            let scheme = primal::Thresholding::new(p, &steps);
            driver::drive(p, c, steps, scheme, observer)
        }
        Algorithm::Fista => {
            if p.constraint.is_some() {
                return Err(SolveError::Unsupported(
                    "FISTA does not handle linear constraints".into(),
                ));
            }
            if !p.a.is_identity() {
                return Err(SolveError::Unsupported("FISTA needs A = identity".into()));
            }
            let steps = resolve_fista_steps(p, c)?;
            let scheme = fista::Fista::new(p, &steps);
            driver::drive(p, c, steps, scheme, observer)
        }
    }
}

/// General iteration with constraint and penalty map.
pub fn solve_constrained_gist(p: &ProblemSpec, c: &SolverConfig) -> Result<RunReport, SolveError> {
    run(Algorithm::Gist, p, c, None)
}

/// The iteration without linear constraints.
pub fn solve_gist(p: &ProblemSpec, c: &SolverConfig) -> Result<RunReport, SolveError> {
    if p.constraint.is_some() {
        return Err(SolveError::Unsupported(
            "solve_gist takes no constraint; use solve_constrained_gist".into(),
        ));
    }
    run(Algorithm::Gist, p, c, None)
}

/// Iterative soft thresholding, `x ← S_{τλ}(x + τKᵀ(y − Kx))`.
pub fn solve_ista(p: &ProblemSpec, c: &SolverConfig) -> Result<RunReport, SolveError> {
    if p.constraint.is_some() {
        return Err(SolveError::Unsupported(
            "solve_ista takes no constraint; use solve_cista".into(),
        ));
    }
    run(Algorithm::Thresholding, p, c, None)
}

/// Soft thresholding with a multiplier step for `Bx = b`.
pub fn solve_cista(p: &ProblemSpec, c: &SolverConfig) -> Result<RunReport, SolveError> {
    if p.constraint.is_none() {
        return Err(SolveError::Unsupported(
            "solve_cista needs a constraint; use solve_ista".into(),
        ));
    }
    run(Algorithm::Thresholding, p, c, None)
}

/// `minimize ‖x‖₁ subject to Bx = b`. `lambda` is the internal threshold
/// scale; the limit does not depend on it when the minimizer is unique.
pub fn solve_basis_pursuit(
    b_op: &LinearMap,
    b: &[f64],
    c: &SolverConfig,
    lambda: f64,
) -> Result<RunReport, SolveError> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(SolveError::Problem(format!(
            "basis pursuit needs a positive lambda, got {lambda}"
        )));
    }
    run(
        Algorithm::Thresholding,
        &basis_pursuit_problem(b_op, b, lambda),
        c,
        None,
    )
}

/// The problem solved by [`solve_basis_pursuit`]: `K = 0`, `A = Id`.
pub fn basis_pursuit_problem(b_op: &LinearMap, b: &[f64], lambda: f64) -> ProblemSpec {
    let n = b_op.cols();
    ProblemSpec::new(LinearMap::zero(1, n), vec![0.0], lambda)
        .with_constraint(b_op.clone(), b.to_vec())
}

/// `minimize ‖Kx − y‖² subject to ‖x‖₁ ≤ R and Bx = b`.
pub fn solve_l1_constrained(
    k: &LinearMap,
    y: &[f64],
    b_op: Option<&LinearMap>,
    b: &[f64],
    radius: f64,
    c: &SolverConfig,
) -> Result<RunReport, SolveError> {
    let mut p = ProblemSpec::new(k.clone(), y.to_vec(), 0.0)
        .with_penalty(PenaltyKind::L1Ball { radius });
    if let Some(op) = b_op {
        p = p.with_constraint(op.clone(), b.to_vec());
    }
    run(Algorithm::Thresholding, &p, c, None)
}

/// FISTA over the thresholding step of the penalty, no constraint.
pub fn solve_fista(p: &ProblemSpec, c: &SolverConfig) -> Result<RunReport, SolveError> {
    run(Algorithm::Fista, p, c, None)
}

/// Residual `min_x ‖Bx − b‖` of a dense constraint system, used to
/// reject inconsistent systems before iterating.
pub fn least_squares_residual(b_op: &DenseMatrix, b: &[f64]) -> Result<f64, SolveError> {
    if b.len() != b_op.rows() {
        return Err(SolveError::Problem(format!(
            "b has length {}, B has {} rows",
            b.len(),
            b_op.rows()
        )));
    }
    let m = nalgebra::DMatrix::from_row_slice(b_op.rows(), b_op.cols(), b_op.as_slice());
    let rhs = nalgebra::DVector::from_column_slice(b);
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let x = svd
        .solve(&rhs, smax * 1e-12 * b_op.rows().max(b_op.cols()) as f64)
        .map_err(|e| SolveError::Problem(e.to_string()))?;
    Ok((m * x - rhs).norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inconsistent_system_has_positive_residual() {
        let b = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let r = least_squares_residual(&b, &[1.0, 3.0]).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
        assert!(least_squares_residual(&b, &[2.0, 2.0]).unwrap() < 1e-12);
    }
}
