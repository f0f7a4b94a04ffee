use std::fs;
use std::path::Path;

use anyhow::Context;
use cgist_core::solvers::{KktResiduals, RunReport, SolveError, StepSizes, TracePoint};
use serde::Serialize;

use crate::{Failure, EXIT_CAP, EXIT_CONVERGED, EXIT_DIVERGED, EXIT_INPUT};

#[derive(Serialize)]
pub struct SolveReport<'a> {
    pub command: &'a str,
    pub algorithm: &'a str,
    pub converged: bool,
    pub iterations: usize,
    pub final_rel_change: f64,
    pub objective: f64,
    pub constraint_norm: f64,
    pub kkt: KktResiduals,
    pub steps: StepSizes,
    pub lambda: f64,
    pub x: &'a [f64],
    pub w: &'a [f64],
    pub v: &'a [f64],
}

pub fn to_json<T: Serialize>(value: &T) -> anyhow::Result<String> {
    Ok(cgist_core::json::to_string_pretty(value)? + "\n")
}

pub fn write_trace(path: &Path, trace: &[TracePoint]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for t in trace {
        w.serialize(t)?;
    }
    w.flush()?;
    Ok(())
}

/// Prints the report, writes `report.json` and `trace.csv` under `out`
/// when given, and maps the run's stopping reason to an exit code.
pub fn finish(report: &SolveReport, run: &RunReport, out: Option<&Path>) -> Result<u8, Failure> {
    let json = to_json(report)?;
    print!("{json}");
    if let Some(dir) = out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join("report.json");
        fs::write(&path, &json).with_context(|| format!("writing {}", path.display()))?;
        write_trace(&dir.join("trace.csv"), &run.trace)?;
    }
    Ok(if run.converged { EXIT_CONVERGED } else { EXIT_CAP })
}

pub fn solve_failure(e: SolveError) -> Failure {
    let code = match e {
        SolveError::Diverged { .. } => EXIT_DIVERGED,
        _ => EXIT_INPUT,
    };
    Failure {
        code,
        error: e.into(),
    }
}
