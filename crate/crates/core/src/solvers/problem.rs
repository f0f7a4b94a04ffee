use std::fmt;
use std::sync::Arc;

use crate::linops::LinearMap;
use crate::prox::{
    for_each_group, joint_threshold_in_place, project_l1_ball_in_place, project_linf_in_place,
    soft_threshold_in_place, GroupLayout, ProxFn,
};

use super::SolveError;

/// The nonsmooth term `H(Ax)` of the objective (scaled by `2λ`).
#[derive(Clone)]
pub enum PenaltyKind {
    /// `Σ |(Ax)_i|`
    SeparableL1,
    /// `Σ_rows max_j |(Ax)_ij|` over groups of `group` channels.
    JointMax { group: usize, layout: GroupLayout },
    /// Any convex `H` given through its proximity operator.
    GenericProx(Arc<dyn ProxFn>),
    /// Hard constraint `‖x‖₁ ≤ radius` in place of a penalty; `λ` is unused.
    L1Ball { radius: f64 },
}

impl fmt::Debug for PenaltyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PenaltyKind::SeparableL1 => write!(f, "SeparableL1"),
            PenaltyKind::JointMax { group, layout } => {
                write!(f, "JointMax {{ group: {group}, layout: {layout:?} }}")
            }
            PenaltyKind::GenericProx(p) => write!(f, "GenericProx({})", p.name()),
            PenaltyKind::L1Ball { radius } => write!(f, "L1Ball {{ radius: {radius} }}"),
        }
    }
}

impl PenaltyKind {
    pub fn joint(group: usize) -> Self {
        PenaltyKind::JointMax {
            group,
            layout: GroupLayout::Contiguous,
        }
    }

    /// `H(z)` without the `λ` factor. `+∞` outside an ℓ1-ball constraint;
    /// NaN when a generic prox does not expose its function value.
    pub fn value(&self, z: &[f64]) -> f64 {
        match self {
            PenaltyKind::SeparableL1 => z.iter().map(|v| v.abs()).sum(),
            PenaltyKind::JointMax { group, layout } => {
                let n_rows = z.len() / group;
                (0..n_rows)
                    .map(|i| {
                        (0..*group)
                            .map(|c| z[layout.index(i, c, *group, n_rows)].abs())
                            .fold(0.0f64, f64::max)
                    })
                    .sum()
            }
            PenaltyKind::GenericProx(p) => p.value(z).unwrap_or(f64::NAN),
            PenaltyKind::L1Ball { radius } => {
                let l1: f64 = z.iter().map(|v| v.abs()).sum();
                if l1 <= radius * (1.0 + 1e-12) + 1e-300 {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// In place `u ← prox_{t·H}(u)`; for the ℓ1 ball this is `Q_R` for any `t`.
    pub(crate) fn shrink(&self, u: &mut [f64], t: f64) {
        match self {
            PenaltyKind::SeparableL1 => soft_threshold_in_place(u, t),
            PenaltyKind::JointMax { group, layout } => {
                let mut order = Vec::with_capacity(*group);
                for_each_group(u, *group, *layout, |row| {
                    joint_threshold_in_place(row, t, &mut order)
                });
            }
            PenaltyKind::GenericProx(p) => {
                let out = p.prox(u, t);
                u.copy_from_slice(&out);
            }
            PenaltyKind::L1Ball { radius } => project_l1_ball_in_place(u, *radius),
        }
    }

    /// In place `u ← prox_{γ(λH)*}(u)`, the dual step of the primal-dual
    /// iteration. For norms this is a projection and `γ` drops out.
    pub(crate) fn dual_project(&self, u: &mut [f64], lambda: f64, gamma: f64) {
        match self {
            PenaltyKind::SeparableL1 => project_linf_in_place(u, lambda),
            PenaltyKind::JointMax { group, layout } => {
                for_each_group(u, *group, *layout, |row| project_l1_ball_in_place(row, lambda));
            }
            PenaltyKind::GenericProx(p) => {
                let scaled: Vec<f64> = u.iter().map(|v| v / gamma).collect();
                let q = p.prox(&scaled, lambda / gamma);
                u.iter_mut().zip(&q).for_each(|(v, qi)| *v -= gamma * qi);
            }
            PenaltyKind::L1Ball { radius } => {
                let mut q: Vec<f64> = u.iter().map(|v| v / gamma).collect();
                project_l1_ball_in_place(&mut q, *radius);
                u.iter_mut().zip(&q).for_each(|(v, qi)| *v -= gamma * qi);
            }
        }
    }
}

/// Linear equality constraint `Bx = b`.
#[derive(Clone, Debug)]
pub struct Constraint {
    pub op: LinearMap,
    pub rhs: Vec<f64>,
}

/// `minimize ‖Kx − y‖² + 2λ H(Ax)  subject to  Bx = b`.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub k: LinearMap,
    pub a: LinearMap,
    pub constraint: Option<Constraint>,
    pub y: Vec<f64>,
    pub lambda: f64,
    pub penalty: PenaltyKind,
}

impl ProblemSpec {
    /// Plain `‖Kx − y‖² + 2λ‖x‖₁`.
    pub fn new(k: LinearMap, y: Vec<f64>, lambda: f64) -> Self {
        let n = k.cols();
        ProblemSpec {
            k,
            a: LinearMap::identity(n),
            constraint: None,
            y,
            lambda,
            penalty: PenaltyKind::SeparableL1,
        }
    }

    pub fn with_penalty_map(mut self, a: LinearMap) -> Self {
        self.a = a;
        self
    }

    pub fn with_constraint(mut self, op: LinearMap, rhs: Vec<f64>) -> Self {
        self.constraint = Some(Constraint { op, rhs });
        self
    }

    pub fn with_penalty(mut self, penalty: PenaltyKind) -> Self {
        self.penalty = penalty;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn n_unknowns(&self) -> usize {
        self.k.cols()
    }

    pub fn n_constraints(&self) -> usize {
        self.constraint.as_ref().map_or(0, |c| c.op.rows())
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        let n = self.k.cols();
        if n == 0 {
            return Err(SolveError::Problem("K has no columns".into()));
        }
        if self.a.cols() != n {
            return Err(SolveError::Problem(format!(
                "A has {} columns, K has {n}",
                self.a.cols()
            )));
        }
        if self.y.len() != self.k.rows() {
            return Err(SolveError::Problem(format!(
                "y has length {}, K has {} rows",
                self.y.len(),
                self.k.rows()
            )));
        }
        if let Some(c) = &self.constraint {
            if c.op.cols() != n {
                return Err(SolveError::Problem(format!(
                    "B has {} columns, K has {n}",
                    c.op.cols()
                )));
            }
            if c.rhs.len() != c.op.rows() {
                return Err(SolveError::Problem(format!(
                    "b has length {}, B has {} rows",
                    c.rhs.len(),
                    c.op.rows()
                )));
            }
            if c.rhs.iter().any(|v| !v.is_finite()) {
                return Err(SolveError::Problem("b has non-finite entries".into()));
            }
        }
        if self.y.iter().any(|v| !v.is_finite()) {
            return Err(SolveError::Problem("y has non-finite entries".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(SolveError::Problem(format!(
                "lambda must be nonnegative, got {}",
                self.lambda
            )));
        }
        match &self.penalty {
            PenaltyKind::JointMax { group, .. } => {
                if *group == 0 || self.a.rows() % group != 0 {
                    return Err(SolveError::Problem(format!(
                        "penalty groups of {group} do not divide Ax of length {}",
                        self.a.rows()
                    )));
                }
            }
            PenaltyKind::L1Ball { radius } => {
                if !(*radius >= 0.0 && radius.is_finite()) {
                    return Err(SolveError::Problem(format!(
                        "l1-ball radius must be nonnegative, got {radius}"
                    )));
                }
            }
            _ => {}
        }
        Ok(())
    }
}
