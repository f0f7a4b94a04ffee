use std::fmt::Write as _;
use std::fs;

use anyhow::Context;
use cgist_core::meg::{run_experiment, write_snapshot, ExperimentConfig, MEGReport};

use crate::args::MegArgs;
use crate::output::{to_json, write_trace};
use crate::{Failure, EXIT_CONVERGED};

fn summary(reports: &[&MEGReport]) -> String {
    let mut s = format!(
        "{:<5}{:>12}{:>14}{:>14}{:>8}{:>14}{:>14}{:>8}\n",
        "case", "e_rec", "div_norm", "rel_div", "nnz", "residual", "lambda", "iters"
    );
    for r in reports {
        let _ = writeln!(
            s,
            "{:<5}{:>12.4}{:>14.3e}{:>14.3e}{:>8}{:>14.3e}{:>14.3e}{:>8}",
            r.case.label(),
            r.e_rec,
            r.div_norm,
            r.relative_divergence,
            r.nnz,
            r.residual,
            r.lambda_used,
            r.iterations
        );
    }
    s
}

/// Runs the configured cases and writes, per case, `report_<c>.json`,
/// `trace_<c>.csv`, `field_<c>` and `coefficients_<c>` snapshots, plus
/// `field_input` and `summary.txt`.
pub fn run_meg(a: &MegArgs) -> Result<u8, Failure> {
    let mut config = match &a.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            ExperimentConfig::from_json(&text).with_context(|| path.display().to_string())?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = a.seed {
        config.seeds.noise = seed;
    }
    if let Some(t) = a.trace_every {
        config.trace_every = t;
    }
    config.validate()?;
    let out = &a.out;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;

    let (setup, outcomes) = run_experiment(&config)?;
    write_snapshot(out, "field_input", "field", &setup, &setup.input_field)?;
    for o in &outcomes {
        let c = o.report.case.label();
        let path = out.join(format!("report_{c}.json"));
        fs::write(&path, to_json(&o.report)?).with_context(|| format!("writing {}", path.display()))?;
        write_trace(&out.join(format!("trace_{c}.csv")), &o.run.trace)?;
        write_snapshot(out, &format!("field_{c}"), "field", &setup, &o.field)?;
        write_snapshot(out, &format!("coefficients_{c}"), "coefficients", &setup, &o.coefficients)?;
    }
    let table = summary(&outcomes.iter().map(|o| &o.report).collect::<Vec<_>>());
    let path = out.join("summary.txt");
    fs::write(&path, &table).with_context(|| format!("writing {}", path.display()))?;
    print!("{table}");
    Ok(EXIT_CONVERGED)
}
