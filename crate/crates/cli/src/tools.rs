use anyhow::anyhow;
use cgist_core::linops::io::{format_matrix, format_vector, read_matrix};
use cgist_core::linops::{
    estimate_sq_norm, gram_combination_sq_norm, DenseMatrix, LinearMap, DEFAULT_NORM_MAX_ITER,
    DEFAULT_NORM_TOL,
};
use cgist_core::prox::{joint_threshold, project_l1_ball, project_linf, soft_threshold};
use cgist_core::solvers::{resolve_steps, ProblemSpec, SolverConfig, StepSizes};
use serde::Serialize;

use crate::args::{NormcheckArgs, ProxArgs, ProxOp};
use crate::output::{solve_failure, to_json};
use crate::{Failure, EXIT_CONVERGED};

fn need(v: Option<f64>, flag: &str, op: &str) -> anyhow::Result<f64> {
    v.ok_or_else(|| anyhow!("prox {op} needs --{flag}"))
}

pub fn run_prox(a: &ProxArgs) -> Result<u8, Failure> {
    let (z, file_cols) = match (&a.values, &a.input) {
        (Some(v), None) => (v.clone(), None),
        (None, Some(path)) => {
            let m = read_matrix(path)?;
            let cols = m.cols();
            (m.as_slice().to_vec(), Some(cols))
        }
        _ => return Err(anyhow!("give the input with --values or --input").into()),
    };
    if z.is_empty() {
        return Err(anyhow!("the input vector is empty").into());
    }
    let text = match a.op {
        ProxOp::Soft => format_vector(&soft_threshold(&z, need(a.lambda, "lambda", "soft")?)?),
        ProxOp::Linf => format_vector(&project_linf(&z, need(a.lambda, "lambda", "linf")?)?),
        ProxOp::L1ball => format_vector(&project_l1_ball(&z, need(a.radius, "radius", "l1ball")?)?),
        ProxOp::Joint => {
            let lambda = need(a.lambda, "lambda", "joint")?;
            let m = match (a.group, file_cols) {
                (Some(m), _) => m,
                (None, Some(c)) if c > 1 => c,
                _ => return Err(anyhow!("prox joint needs --group or a matrix input with one group per row").into()),
            };
            if m == 0 || z.len() % m != 0 {
                return Err(anyhow!("{} entries do not split into groups of {m}", z.len()).into());
            }
            let mut out = Vec::with_capacity(z.len());
            for row in z.chunks(m) {
                out.extend(joint_threshold(row, lambda)?);
            }
            format_matrix(&DenseMatrix::from_row_major(z.len() / m, m, out)?)
        }
    };
    print!("{text}");
    Ok(EXIT_CONVERGED)
}

#[derive(Serialize)]
struct Condition {
    description: &'static str,
    value: f64,
    holds: bool,
}

#[derive(Serialize)]
struct NormReport {
    k_sq_norm: f64,
    a_sq_norm: f64,
    b_sq_norm: f64,
    tau1: f64,
    tau2: f64,
    tau3: f64,
    primal: Condition,
    dual: Condition,
    suggested: StepSizes,
}

fn sq_norm(op: &LinearMap, seed: u64) -> anyhow::Result<f64> {
    Ok(estimate_sq_norm(op, DEFAULT_NORM_TOL, DEFAULT_NORM_MAX_ITER, seed)?.value)
}

/// Estimates `‖KᵀK‖`, `‖AAᵀ‖`, `‖BᵀB‖` and checks
/// `‖τ1/2·KᵀK + τ3·BᵀB‖ < 1` and `τ2‖AAᵀ‖ < 1` (`τ2 ≤ 1` for `A = Id`).
/// Steps not given default to the automatic choice.
pub fn run_normcheck(a: &NormcheckArgs) -> Result<u8, Failure> {
    let k = read_matrix(&a.k)?;
    let n = k.cols();
    let k: LinearMap = k.into();
    let mut p = ProblemSpec::new(k.clone(), vec![0.0; k.rows()], 1.0);
    let mut a_op = LinearMap::identity(n);
    if let Some(path) = &a.a {
        let am = read_matrix(path)?;
        if am.cols() != n {
            return Err(anyhow!("{} has {} columns, expected {n}", path.display(), am.cols()).into());
        }
        a_op = am.into();
        p = p.with_penalty_map(a_op.clone());
    }
    let mut b_op = LinearMap::zero(1, n);
    if let Some(path) = &a.b {
        let bm = read_matrix(path)?;
        if bm.cols() != n {
            return Err(anyhow!("{} has {} columns, expected {n}", path.display(), bm.cols()).into());
        }
        b_op = bm.into();
        p = p.with_constraint(b_op.clone(), vec![0.0; b_op.rows()]);
    }
    let config = SolverConfig {
        seed: a.seed,
        ..SolverConfig::default()
    };
    let suggested = resolve_steps(&p, &config).map_err(solve_failure)?;
    let tau1 = a.tau1.or(a.tau3).unwrap_or(suggested.tau1);
    let tau3 = a.tau3.or(a.tau1).unwrap_or(suggested.tau3);
    let tau2 = a.tau2.unwrap_or(suggested.tau2);
    for (name, t) in [("tau1", tau1), ("tau2", tau2), ("tau3", tau3)] {
        if !(t > 0.0 && t.is_finite()) {
            return Err(anyhow!("{name} must be positive and finite, got {t}").into());
        }
    }

    let a_sq = sq_norm(&a_op, a.seed)?;
    let primal = gram_combination_sq_norm(&k, &b_op, tau1 / 2.0, tau3, DEFAULT_NORM_TOL, DEFAULT_NORM_MAX_ITER, a.seed)?.value;
    let identity = a_op.is_identity();
    let dual_value = tau2 * a_sq;
    let report = NormReport {
        k_sq_norm: sq_norm(&k, a.seed)?,
        a_sq_norm: a_sq,
        b_sq_norm: sq_norm(&b_op, a.seed)?,
        tau1,
        tau2,
        tau3,
        primal: Condition {
            description: "‖τ1/2·KᵀK + τ3·BᵀB‖ < 1",
            value: primal,
            holds: primal < 1.0,
        },
        dual: Condition {
            description: if identity { "τ2 ≤ 1 (A = Id)" } else { "τ2·‖AAᵀ‖ < 1" },
            value: dual_value,
            holds: if identity { dual_value <= 1.0 } else { dual_value < 1.0 },
        },
        suggested,
    };
    print!("{}", to_json(&report)?);
    for c in [&report.primal, &report.dual] {
        eprintln!(
            "{}: {:.6} {}",
            c.description,
            c.value,
            if c.holds { "holds" } else { "VIOLATED" }
        );
    }
    if !(report.primal.holds && report.dual.holds) {
        eprintln!(
            "suggested steps: tau1 = {:.6e}, tau2 = {:.6e}, tau3 = {:.6e}",
            suggested.tau1, suggested.tau2, suggested.tau3
        );
    }
    Ok(EXIT_CONVERGED)
}
