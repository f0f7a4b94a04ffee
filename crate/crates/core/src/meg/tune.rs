//! Choice of `λ` by the discrepancy principle: the data residual of the
//! reconstruction should equal the noise norm.

use serde::{Deserialize, Serialize};

use crate::solvers::{RunReport, SolveError, SolverState};

use super::MegError;

#[derive(Clone, Debug)]
pub struct TuneOptions {
    /// Accept when `|residual − target| ≤ tol_rel·target`.
    pub tol_rel: f64,
    /// Smallest `λ` tried, as a fraction of the starting `λ`.
    pub min_ratio: f64,
    /// Factor between successive `λ` while searching for a bracket.
    pub step_down: f64,
    pub max_evals: usize,
    /// First `λ` to try instead of the upper end, e.g. a value tuned on a
    /// related problem. The bracket is then searched in both directions.
    pub start: Option<f64>,
    /// Factor between successive `λ` when searching from `start`.
    pub start_step: f64,
}

impl Default for TuneOptions {
    fn default() -> Self {
        TuneOptions {
            tol_rel: 0.02,
            min_ratio: 1e-6,
            step_down: 10.0,
            max_evals: 40,
            start: None,
            start_step: 2.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuneEval {
    pub lambda: f64,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug)]
pub struct Tuned {
    pub lambda: f64,
    pub residual: f64,
    pub report: RunReport,
    pub evaluations: Vec<TuneEval>,
}

/// Finds `λ ≤ lambda_hi` whose solve has data residual within
/// `tol_rel·target` of `target`.
///
/// `solve(λ, warm)` runs the solver and returns the report together with
/// the data residual. Each call is warm-started from the previous one. The
/// search walks `λ` geometrically from `lambda_hi` (or `opts.start`) until
/// the target is bracketed, then refines with Illinois regula falsi on
/// `(log λ, log residual)`.
pub fn tune_lambda<F>(
    mut solve: F,
    lambda_hi: f64,
    target: f64,
    opts: &TuneOptions,
) -> Result<Tuned, MegError>
where
    F: FnMut(f64, Option<&SolverState>) -> Result<(RunReport, f64), SolveError>,
{
    if !(target > 0.0 && target.is_finite()) {
        return Err(MegError::Tuning(format!("target residual must be positive, got {target}")));
    }
    if !(lambda_hi > 0.0 && lambda_hi.is_finite()) {
        return Err(MegError::Tuning(format!("upper lambda must be positive, got {lambda_hi}")));
    }
    if !(opts.tol_rel > 0.0 && opts.step_down > 1.0 && opts.min_ratio > 0.0 && opts.min_ratio < 1.0) {
        return Err(MegError::Tuning("invalid tuning options".into()));
    }
    let mut evals = Vec::new();
    let mut warm: Option<SolverState> = None;
    let mut eval = |lambda: f64, warm: &mut Option<SolverState>, evals: &mut Vec<TuneEval>| {
        let (report, residual) = solve(lambda, warm.as_ref())?;
        *warm = Some(report.final_state.clone());
        evals.push(TuneEval {
            lambda,
            residual,
            iterations: report.iterations_run,
        });
        Ok::<_, MegError>((report, residual))
    };
    let accept = |r: f64| (r - target).abs() <= opts.tol_rel * target;
    let done = |lambda, residual, report, evaluations| Tuned {
        lambda,
        residual,
        report,
        evaluations,
    };

    let start = opts.start.filter(|&l| l > 0.0 && l < lambda_hi);
    let step = if start.is_some() { opts.start_step } else { opts.step_down };
    let lambda0 = start.unwrap_or(lambda_hi);
    let (report, r0) = eval(lambda0, &mut warm, &mut evals)?;
    if accept(r0) {
        return Ok(done(lambda0, r0, report, evals));
    }
    // (λ, residual) with residual above the target, and below it
    let mut hi;
    let mut lo;
    if r0 > target {
        hi = (lambda0, r0);
        let lambda_min = lambda_hi * opts.min_ratio;
        loop {
            if hi.0 <= lambda_min {
                return Err(MegError::TargetBelowRange {
                    target,
                    min_residual: hi.1,
                    max_residual: evals.iter().map(|e| e.residual).fold(0.0, f64::max),
                    lambda: hi.0,
                });
            }
            if evals.len() >= opts.max_evals {
                return Err(MegError::Tuning(format!("no bracket after {} solves", evals.len())));
            }
            let lambda = (hi.0 / step).max(lambda_min);
            let (report, r) = eval(lambda, &mut warm, &mut evals)?;
            if accept(r) {
                return Ok(done(lambda, r, report, evals));
            }
            if r < target {
                lo = (lambda, r);
                break;
            }
            hi = (lambda, r);
        }
    } else {
        lo = (lambda0, r0);
        loop {
            if lo.0 >= lambda_hi {
                return Err(MegError::TargetAboveRange {
                    target,
                    max_residual: lo.1,
                });
            }
            if evals.len() >= opts.max_evals {
                return Err(MegError::Tuning(format!("no bracket after {} solves", evals.len())));
            }
            let lambda = (lo.0 * step).min(lambda_hi);
            let (report, r) = eval(lambda, &mut warm, &mut evals)?;
            if accept(r) {
                return Ok(done(lambda, r, report, evals));
            }
            if r > target {
                hi = (lambda, r);
                break;
            }
            lo = (lambda, r);
        }
    }

    let f = |r: f64| r.ln() - target.ln();
    let (mut f_lo, mut f_hi) = (f(lo.1), f(hi.1));
    let mut side = 0i8;
    while evals.len() < opts.max_evals {
        let (a, b) = (lo.0.ln(), hi.0.ln());
        let mut t = a - f_lo * (b - a) / (f_hi - f_lo);
        if !(t > a.min(b) && t < a.max(b)) {
            t = 0.5 * (a + b);
        }
        let lambda = t.exp();
        let (report, r) = eval(lambda, &mut warm, &mut evals)?;
        if accept(r) {
            return Ok(done(lambda, r, report, evals));
        }
        if r < target {
            lo = (lambda, r);
            f_lo = f(r);
            if side == -1 {
                f_hi /= 2.0;
            }
            side = -1;
        } else {
            hi = (lambda, r);
            f_hi = f(r);
            if side == 1 {
                f_lo /= 2.0;
            }
            side = 1;
        }
    }
    Err(MegError::Tuning(format!(
        "residual not within {:.1}% of {target:e} after {} solves (bracket [{:e}, {:e}])",
        100.0 * opts.tol_rel,
        evals.len(),
        lo.0,
        hi.0
    )))
}
