use serde::Serialize;

use crate::linops::{
    estimate_sq_norm, gram_combination_sq_norm, LinearMap, DEFAULT_NORM_MAX_ITER,
    DEFAULT_NORM_TOL, NORM_SAFETY_FACTOR,
};

use super::{ProblemSpec, SolveError, SolverState};

/// Fraction of the admissible step used by automatic step selection.
pub const STEP_MARGIN: f64 = 0.9;

#[derive(Clone, Debug)]
pub struct SolverConfig {
    /// Data-term step; `None` selects it from a norm estimate.
    pub tau1: Option<f64>,
    /// Dual (penalty) step.
    pub tau2: Option<f64>,
    /// Constraint step.
    pub tau3: Option<f64>,
    /// Multiplier damping, must exceed 1/2.
    pub alpha: f64,
    pub max_iter: usize,
    /// Stop when the relative change of every iterate falls below this.
    pub rel_tol: f64,
    pub trace_every: usize,
    /// Seed of the power iterations used for step selection.
    pub seed: u64,
    /// Verify user-supplied steps against estimated operator norms.
    pub check_steps: bool,
    /// Abort when an iterate's norm exceeds this.
    pub divergence_limit: f64,
    pub warm_start: Option<SolverState>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tau1: None,
            tau2: None,
            tau3: None,
            alpha: 1.0,
            max_iter: 10_000,
            rel_tol: 1e-9,
            trace_every: 10,
            seed: 0,
            check_steps: true,
            divergence_limit: 1e12,
            warm_start: None,
        }
    }
}

impl SolverConfig {
    pub fn with_steps(mut self, steps: &StepSizes) -> Self {
        self.tau1 = Some(steps.tau1);
        self.tau2 = Some(steps.tau2);
        self.tau3 = Some(steps.tau3);
        self.alpha = steps.alpha;
        self
    }
}

/// Step sizes actually used by a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StepSizes {
    pub tau1: f64,
    pub tau2: f64,
    pub tau3: f64,
    pub alpha: f64,
}

fn positive(name: &'static str, v: Option<f64>) -> Result<Option<f64>, SolveError> {
    match v {
        Some(t) if !(t > 0.0 && t.is_finite()) => Err(SolveError::InvalidStep { name, value: t }),
        other => Ok(other),
    }
}

fn zero_map(n: usize) -> LinearMap {
    LinearMap::zero(1, n)
}

/// Resolves the steps of the primal-dual iteration so that
/// `‖τ1 KᵀK/2 + τ3 BᵀB‖ < 1` and `τ2 ‖AAᵀ‖ < 1` (`τ2 ≤ 1` for `A = Id`).
///
/// Missing steps default to `τ1 = τ3 = 0.9 / (1.01 ‖KᵀK/2 + BᵀB‖)` and
/// `τ2 = 0.9 / (1.01 ‖AAᵀ‖)`, or `τ2 = 1` when `A` is the identity.
pub fn resolve_steps(p: &ProblemSpec, c: &SolverConfig) -> Result<StepSizes, SolveError> {
    if !(c.alpha > 0.5 && c.alpha.is_finite()) {
        return Err(SolveError::InvalidAlpha(c.alpha));
    }
    let tau1 = positive("tau1", c.tau1)?;
    let tau2 = positive("tau2", c.tau2)?;
    let tau3 = positive("tau3", c.tau3)?;
    let n = p.n_unknowns();
    let b = p
        .constraint
        .as_ref()
        .map_or_else(|| zero_map(n), |c| c.op.clone());

    let (tau1, tau3) = match (tau1.or(tau3), tau3.or(tau1)) {
        (Some(t1), Some(t3)) => {
            if c.check_steps {
                let est = gram_combination_sq_norm(
                    &p.k,
                    &b,
                    t1 / 2.0,
                    t3,
                    DEFAULT_NORM_TOL,
                    DEFAULT_NORM_MAX_ITER,
                    c.seed,
                )?;
                if est.safe_value() >= 1.0 {
                    return Err(SolveError::StepCondition {
                        condition: "‖τ1·KᵀK/2 + τ3·BᵀB‖ < 1",
                        value: est.safe_value(),
                    });
                }
            }
            (t1, t3)
        }
        _ => {
            let est = gram_combination_sq_norm(
                &p.k,
                &b,
                0.5,
                1.0,
                DEFAULT_NORM_TOL,
                DEFAULT_NORM_MAX_ITER,
                c.seed,
            )?;
            let t = if est.value > 0.0 {
                STEP_MARGIN / est.safe_value()
            } else {
                1.0
            };
            (t, t)
        }
    };

    let tau2 = if p.a.is_identity() {
        let t2 = tau2.unwrap_or(1.0);
        if c.check_steps && t2 > 1.0 {
            return Err(SolveError::StepCondition {
                condition: "τ2 ≤ 1 for A = Id",
                value: t2,
            });
        }
        t2
    } else {
        match tau2 {
            Some(t2) => {
                if c.check_steps {
                    let est = estimate_sq_norm(&p.a, DEFAULT_NORM_TOL, DEFAULT_NORM_MAX_ITER, c.seed)?;
                    if t2 * est.safe_value() >= 1.0 {
                        return Err(SolveError::StepCondition {
                            condition: "τ2·‖AAᵀ‖ < 1",
                            value: t2 * est.safe_value(),
                        });
                    }
                }
                t2
            }
            None => {
                let est = estimate_sq_norm(&p.a, DEFAULT_NORM_TOL, DEFAULT_NORM_MAX_ITER, c.seed)?;
                if est.value > 0.0 {
                    STEP_MARGIN / est.safe_value()
                } else {
                    1.0
                }
            }
        }
    };

    Ok(StepSizes {
        tau1,
        tau2,
        tau3,
        alpha: c.alpha,
    })
}

/// Gradient step for FISTA: `τ1 ‖KᵀK‖ ≤ 1`, default `0.9 / (1.01 ‖KᵀK‖)`.
pub fn resolve_fista_steps(p: &ProblemSpec, c: &SolverConfig) -> Result<StepSizes, SolveError> {
    let tau1 = positive("tau1", c.tau1)?;
    let tau1 = match tau1 {
        Some(t) => {
            if c.check_steps {
                let est = estimate_sq_norm(&p.k, DEFAULT_NORM_TOL, DEFAULT_NORM_MAX_ITER, c.seed)?;
                if t * est.value > NORM_SAFETY_FACTOR {
                    return Err(SolveError::StepCondition {
                        condition: "τ1·‖KᵀK‖ ≤ 1",
                        value: t * est.value,
                    });
                }
            }
            t
        }
        None => {
            let est = estimate_sq_norm(&p.k, DEFAULT_NORM_TOL, DEFAULT_NORM_MAX_ITER, c.seed)?;
            if est.value > 0.0 {
                STEP_MARGIN / est.safe_value()
            } else {
                1.0
            }
        }
    };
    Ok(StepSizes {
        tau1,
        tau2: 1.0,
        tau3: tau1,
        alpha: c.alpha,
    })
}
