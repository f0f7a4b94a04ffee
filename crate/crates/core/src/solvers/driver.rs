use serde::Serialize;

use crate::linops::norm2;

use super::diagnostics::{constraint_residual, kkt_residuals, objective, stationarity_residual};
use super::{KktResiduals, ProblemSpec, SolveError, SolverConfig, StepSizes};

/// Iterates `(x, w, v)` after `iteration` steps. `w` is the multiplier of
/// the penalty term (length `A.rows`), `v` that of `Bx = b`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverState {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
    pub v: Vec<f64>,
    pub iteration: usize,
}

impl SolverState {
    pub fn zeros(p: &ProblemSpec) -> Self {
        SolverState {
            x: vec![0.0; p.n_unknowns()],
            w: vec![0.0; p.a.rows()],
            v: vec![0.0; p.n_constraints()],
            iteration: 0,
        }
    }

    fn check_shape(&self, p: &ProblemSpec) -> Result<(), SolveError> {
        let ok = self.x.len() == p.n_unknowns()
            && self.w.len() == p.a.rows()
            && self.v.len() == p.n_constraints();
        if ok {
            Ok(())
        } else {
            Err(SolveError::Problem(format!(
                "warm start has shapes x:{} w:{} v:{}, expected x:{} w:{} v:{}",
                self.x.len(),
                self.w.len(),
                self.v.len(),
                p.n_unknowns(),
                p.a.rows(),
                p.n_constraints()
            )))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub objective: f64,
    pub constraint_norm: f64,
    pub kkt_stationarity: f64,
    pub rel_change: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub final_state: SolverState,
    pub steps: StepSizes,
    /// Sampled at iterations 1, 1 + trace_every, 1 + 2·trace_every, ...
    pub trace: Vec<TracePoint>,
    pub kkt_residuals: KktResiduals,
    pub iterations_run: usize,
    pub converged: bool,
    pub final_rel_change: f64,
}

impl RunReport {
    pub fn objective_trace(&self) -> Vec<f64> {
        self.trace.iter().map(|t| t.objective).collect()
    }

    pub fn constraint_norm_trace(&self) -> Vec<f64> {
        self.trace.iter().map(|t| t.constraint_norm).collect()
    }

    pub fn x(&self) -> &[f64] {
        &self.final_state.x
    }
}

pub(crate) trait Scheme {
    /// Called once with the initial state before the first step.
    fn reset(&mut self, _s: &SolverState) {}
    fn step(&mut self, s: &mut SolverState);
}

fn rel_diff(new: &[f64], old: &[f64]) -> f64 {
    let d = new
        .iter()
        .zip(old)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    d / norm2(new).max(1.0)
}

pub(crate) fn drive<S: Scheme>(
    p: &ProblemSpec,
    c: &SolverConfig,
    steps: StepSizes,
    mut scheme: S,
    mut observer: Option<&mut dyn FnMut(&SolverState)>,
) -> Result<RunReport, SolveError> {
    if c.trace_every == 0 {
        return Err(SolveError::Problem("trace_every must be positive".into()));
    }
    if !(c.rel_tol >= 0.0) {
        return Err(SolveError::Problem(format!(
            "rel_tol must be nonnegative, got {}",
            c.rel_tol
        )));
    }
    let mut s = match &c.warm_start {
        Some(w) => {
            w.check_shape(p)?;
            SolverState {
                iteration: 0,
                ..w.clone()
            }
        }
        None => SolverState::zeros(p),
    };
    scheme.reset(&s);
    if let Some(obs) = observer.as_deref_mut() {
        obs(&s);
    }

    let mut prev = s.clone();
    let mut trace = Vec::with_capacity(c.max_iter / c.trace_every + 1);
    let mut converged = false;
    let mut rel = f64::INFINITY;
    for n in 1..=c.max_iter {
        prev.x.copy_from_slice(&s.x);
        prev.w.copy_from_slice(&s.w);
        prev.v.copy_from_slice(&s.v);
        scheme.step(&mut s);
        s.iteration = n;

        let norm = norm2(&s.x).max(norm2(&s.w)).max(norm2(&s.v));
        if !norm.is_finite() || norm > c.divergence_limit {
            return Err(SolveError::Diverged { iteration: n, norm });
        }
        rel = rel_diff(&s.x, &prev.x)
            .max(rel_diff(&s.w, &prev.w))
            .max(rel_diff(&s.v, &prev.v));

        if (n - 1) % c.trace_every == 0 {
            trace.push(TracePoint {
                iteration: n,
                objective: objective(p, &s.x)?,
                constraint_norm: constraint_residual(p, &s.x),
                kkt_stationarity: stationarity_residual(p, &s),
                rel_change: rel,
            });
        }
        if let Some(obs) = observer.as_deref_mut() {
            obs(&s);
        }
        if rel < c.rel_tol {
            converged = true;
            break;
        }
    }

    Ok(RunReport {
        kkt_residuals: kkt_residuals(p, &s),
        iterations_run: s.iteration,
        final_state: s,
        steps,
        trace,
        converged,
        final_rel_change: rel,
    })
}
