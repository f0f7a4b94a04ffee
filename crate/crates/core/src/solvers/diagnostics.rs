use serde::Serialize;

use crate::linops::{norm2, LinearMap};

use super::{PenaltyKind, ProblemSpec, SolveError, SolverState, StepSizes};

/// Values of the Lyapunov form below `-LYAPUNOV_NEGATIVE_TOL` are reported
/// as an indefinite form.
pub const LYAPUNOV_NEGATIVE_TOL: f64 = 1e-10;

/// Residuals of the optimality system.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KktResiduals {
    /// `‖Kᵀ(Kx − y) + Aᵀw − Bᵀv‖`
    pub stationarity: f64,
    /// `‖w − P(w + Ax)‖` with `P` the projection on the dual ball.
    pub dual_feasibility: f64,
    /// `‖Bx − b‖`
    pub primal_feasibility: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity
            .max(self.dual_feasibility)
            .max(self.primal_feasibility)
    }
}

fn check_len(what: &'static str, v: &[f64], n: usize) -> Result<(), SolveError> {
    if v.len() == n {
        Ok(())
    } else {
        Err(SolveError::Linop(crate::linops::LinopError::Dimension {
            op: what,
            expected: n,
            found: v.len(),
        }))
    }
}

/// `‖Kx − y‖² + 2λ H(Ax)`; for the ℓ1-ball variant the penalty is the
/// indicator of the ball.
pub fn objective(p: &ProblemSpec, x: &[f64]) -> Result<f64, SolveError> {
    check_len("objective", x, p.n_unknowns())?;
    let mut r = p.k.apply(x)?;
    r.iter_mut().zip(&p.y).for_each(|(ri, yi)| *ri -= yi);
    let data = r.iter().map(|v| v * v).sum::<f64>();
    let ax = p.a.apply(x)?;
    let pen = p.penalty.value(&ax);
    Ok(match p.penalty {
        PenaltyKind::L1Ball { .. } => data + pen,
        _ if p.lambda == 0.0 => data,
        _ => data + 2.0 * p.lambda * pen,
    })
}

/// `‖Bx − b‖`, zero without constraint.
pub fn constraint_residual(p: &ProblemSpec, x: &[f64]) -> f64 {
    match &p.constraint {
        Some(c) => {
            let mut bx = vec![0.0; c.op.rows()];
            c.op.apply_into(x, &mut bx);
            bx.iter()
                .zip(&c.rhs)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        }
        None => 0.0,
    }
}

pub(crate) fn stationarity_residual(p: &ProblemSpec, s: &SolverState) -> f64 {
    let n = p.n_unknowns();
    let mut kx = vec![0.0; p.k.rows()];
    p.k.apply_into(&s.x, &mut kx);
    kx.iter_mut().zip(&p.y).for_each(|(a, b)| *a -= b);
    let mut g = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    p.k.adjoint_into(&kx, &mut g);
    p.a.adjoint_into(&s.w, &mut tmp);
    g.iter_mut().zip(&tmp).for_each(|(a, b)| *a += b);
    if let Some(c) = &p.constraint {
        c.op.adjoint_into(&s.v, &mut tmp);
        g.iter_mut().zip(&tmp).for_each(|(a, b)| *a -= b);
    }
    norm2(&g)
}

/// Residuals of `Kᵀ(Kx − y) + Aᵀw − Bᵀv = 0`, `w = P(w + Ax)`, `Bx = b`.
pub fn kkt_residuals(p: &ProblemSpec, s: &SolverState) -> KktResiduals {
    let mut u = vec![0.0; p.a.rows()];
    p.a.apply_into(&s.x, &mut u);
    u.iter_mut().zip(&s.w).for_each(|(a, b)| *a += b);
    p.penalty.dual_project(&mut u, p.lambda, 1.0);
    let dual = s
        .w
        .iter()
        .zip(&u)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    KktResiduals {
        stationarity: stationarity_residual(p, s),
        dual_feasibility: dual,
        primal_feasibility: constraint_residual(p, &s.x),
    }
}

fn sq(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum()
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn sq_image(op: &LinearMap, v: &[f64], adjoint: bool) -> f64 {
    let out = if adjoint {
        let mut o = vec![0.0; op.cols()];
        op.adjoint_into(v, &mut o);
        o
    } else {
        let mut o = vec![0.0; op.rows()];
        op.apply_into(v, &mut o);
        o
    };
    sq(&out)
}

/// Weighted squared distance of `s` to `reference` that the iteration
/// contracts when the step conditions hold:
///
/// ```text
/// ‖Δx‖² − τ3‖BΔx‖² + (τ1²/τ2)(‖Δw‖² − τ2‖AᵀΔw‖²) + α(τ1²/τ3)‖Δv‖²
/// ```
///
/// This is `‖UΔx‖² + ‖VΔw‖² + α‖Δv‖²` of the unit-step iteration after
/// rescaling `K`, `A`, `B` by `√τ1`, `√τ2`, `√τ3`.
pub fn lyapunov_value(
    p: &ProblemSpec,
    steps: &StepSizes,
    reference: &SolverState,
    s: &SolverState,
) -> Result<f64, SolveError> {
    reference.check_len(p)?;
    s.check_len(p)?;
    let dx = diff(&reference.x, &s.x);
    let dw = diff(&reference.w, &s.w);
    let dv = diff(&reference.v, &s.v);
    let StepSizes {
        tau1,
        tau2,
        tau3,
        alpha,
    } = *steps;
    let mut val = sq(&dx);
    if let Some(c) = &p.constraint {
        val -= tau3 * sq_image(&c.op, &dx, false);
    }
    val += tau1 * tau1 / tau2 * (sq(&dw) - tau2 * sq_image(&p.a, &dw, true));
    val += alpha * tau1 * tau1 / tau3 * sq(&dv);
    if val < -LYAPUNOV_NEGATIVE_TOL {
        return Err(SolveError::IndefiniteLyapunov(val));
    }
    Ok(val)
}

impl SolverState {
    fn check_len(&self, p: &ProblemSpec) -> Result<(), SolveError> {
        check_len("state x", &self.x, p.n_unknowns())?;
        check_len("state w", &self.w, p.a.rows())?;
        check_len("state v", &self.v, p.n_constraints())
    }
}
