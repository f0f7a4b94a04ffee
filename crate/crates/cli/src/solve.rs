use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail};
use cgist_core::linops::io::{read_matrix, read_vector};
use cgist_core::linops::{norm2, DenseMatrix, LinearMap};
use cgist_core::solvers::{
    basis_pursuit_problem, constraint_residual, least_squares_residual, objective, run, Algorithm,
    PenaltyKind, ProblemSpec, RunReport, SolveError, SolverConfig,
};

use crate::args::{AlgorithmArg, BpArgs, L1cArgs, PenaltyArg, SolveArgs, SolverFlags};
use crate::output::{finish, solve_failure, SolveReport};
use crate::Failure;

/// Relative least-squares residual above which `Bx = b` counts as
/// inconsistent.
const FEASIBILITY_TOL: f64 = 1e-8;

fn config(f: &SolverFlags) -> SolverConfig {
    SolverConfig {
        tau1: f.tau1,
        tau2: f.tau2,
        tau3: f.tau3,
        alpha: f.alpha,
        max_iter: f.max_iter,
        rel_tol: f.rel_tol,
        trace_every: f.trace_every,
        seed: f.seed,
        check_steps: !f.unchecked_steps,
        ..SolverConfig::default()
    }
}

fn penalty(p: PenaltyArg) -> PenaltyKind {
    match p {
        PenaltyArg::L1 => PenaltyKind::SeparableL1,
        PenaltyArg::Joint(m) => PenaltyKind::joint(m),
    }
}

fn show(p: &Path) -> String {
    p.display().to_string()
}

/// Reads `y` and checks it against the rows of `k`.
fn read_data(k_path: &Path, y_path: &Path) -> anyhow::Result<(DenseMatrix, Vec<f64>)> {
    let k = read_matrix(k_path)?;
    let y = read_vector(y_path)?;
    if y.len() != k.rows() {
        bail!(
            "{} has length {}, but {} has {} rows",
            show(y_path),
            y.len(),
            show(k_path),
            k.rows()
        );
    }
    Ok((k, y))
}

/// Loads `Bx = b`, rejecting shape mismatches and inconsistent systems.
fn read_constraint(
    b_path: Option<&PathBuf>,
    rhs_path: Option<&PathBuf>,
    n: usize,
) -> anyhow::Result<Option<(DenseMatrix, Vec<f64>)>> {
    let (b_path, rhs_path) = match (b_path, rhs_path) {
        (None, None) => return Ok(None),
        (Some(_), None) => bail!("--b-file given without --rhs-file: the constraint needs a right-hand side"),
        (None, Some(r)) => bail!("--rhs-file {} given without a constraint matrix (--b-file)", show(r)),
        (Some(b), Some(r)) => (b, r),
    };
    let b = read_matrix(b_path)?;
    let rhs = read_vector(rhs_path)?;
    if b.cols() != n {
        bail!("{} has {} columns, expected {n} unknowns", show(b_path), b.cols());
    }
    if rhs.len() != b.rows() {
        bail!(
            "{} has length {}, but {} has {} rows",
            show(rhs_path),
            rhs.len(),
            show(b_path),
            b.rows()
        );
    }
    let residual = least_squares_residual(&b, &rhs).map_err(|e| anyhow!(e))?;
    if residual > FEASIBILITY_TOL * norm2(&rhs).max(1.0) {
        return Err(anyhow!(SolveError::Infeasible { residual })
            .context(format!("{} and {}", show(b_path), show(rhs_path))));
    }
    Ok(Some((b, rhs)))
}

fn report<'a>(command: &'a str, algorithm: &'a str, p: &ProblemSpec, r: &'a RunReport) -> Result<SolveReport<'a>, Failure> {
    Ok(SolveReport {
        command,
        algorithm,
        converged: r.converged,
        iterations: r.iterations_run,
        final_rel_change: r.final_rel_change,
        objective: objective(p, r.x()).map_err(solve_failure)?,
        constraint_norm: constraint_residual(p, r.x()),
        kkt: r.kkt_residuals,
        steps: r.steps,
        lambda: p.lambda,
        x: &r.final_state.x,
        w: &r.final_state.w,
        v: &r.final_state.v,
    })
}

pub fn run_solve(a: &SolveArgs) -> Result<u8, Failure> {
    let (k, y) = read_data(&a.k, &a.y)?;
    let n = k.cols();
    let mut p = ProblemSpec::new(k.into(), y, a.flags.lambda).with_penalty(penalty(a.flags.penalty));
    if let Some(path) = &a.a {
        let am = read_matrix(path)?;
        if am.cols() != n {
            return Err(anyhow!("{} has {} columns, expected {n} unknowns", show(path), am.cols()).into());
        }
        p = p.with_penalty_map(am.into());
    }
    let constrained = match read_constraint(a.b.as_ref(), a.rhs.as_ref(), n)? {
        Some((b, rhs)) => {
            p = p.with_constraint(b.into(), rhs);
            true
        }
        None => false,
    };
    let (alg, name) = match (a.algorithm, a.a.is_some(), constrained) {
        (AlgorithmArg::Fista, _, _) => (Algorithm::Fista, "fista"),
        (AlgorithmArg::Auto, false, false) => (Algorithm::Thresholding, "ista"),
        (AlgorithmArg::Auto, false, true) => (Algorithm::Thresholding, "cista"),
        (AlgorithmArg::Auto, true, false) => (Algorithm::Gist, "gist"),
        (AlgorithmArg::Auto, true, true) => (Algorithm::Gist, "constrained_gist"),
    };
    let r = run(alg, &p, &config(&a.flags), None).map_err(solve_failure)?;
    finish(&report("solve", name, &p, &r)?, &r, a.flags.out.as_deref())
}

fn run_ball(
    command: &str,
    k: DenseMatrix,
    y: Vec<f64>,
    constraint: Option<(DenseMatrix, Vec<f64>)>,
    radius: f64,
    flags: &SolverFlags,
) -> Result<u8, Failure> {
    let mut p = ProblemSpec::new(k.into(), y, 0.0).with_penalty(PenaltyKind::L1Ball { radius });
    if let Some((b, rhs)) = constraint {
        p = p.with_constraint(b.into(), rhs);
    }
    let r = run(Algorithm::Thresholding, &p, &config(flags), None).map_err(solve_failure)?;
    finish(&report(command, "l1_ball", &p, &r)?, &r, flags.out.as_deref())
}

pub fn run_bp(a: &BpArgs) -> Result<u8, Failure> {
    if let Some(radius) = a.radius {
        let (b, rhs) = read_data(&a.b, &a.rhs)?;
        return run_ball("bp", b, rhs, None, radius, &a.flags);
    }
    let n = read_matrix(&a.b)?.cols();
    let (b, rhs) = read_constraint(Some(&a.b), Some(&a.rhs), n)?.expect("both paths given");
    let op: LinearMap = b.into();
    let p = basis_pursuit_problem(&op, &rhs, a.flags.lambda);
    let r = run(Algorithm::Thresholding, &p, &config(&a.flags), None).map_err(solve_failure)?;
    finish(&report("bp", "basis_pursuit", &p, &r)?, &r, a.flags.out.as_deref())
}

pub fn run_l1c(a: &L1cArgs) -> Result<u8, Failure> {
    let (k, y) = read_data(&a.k, &a.y)?;
    let constraint = read_constraint(a.b.as_ref(), a.rhs.as_ref(), k.cols())?;
    run_ball("l1c", k, y, constraint, a.radius, &a.flags)
}
