//! The four reconstruction cases on synthetic data.
//!
//! Unknowns are wavelet coefficients `w`, the current is `J = W⁻¹w`, the
//! forward map is `K W⁻¹` and the constraint is `div(W⁻¹w) = 0`. Both maps
//! are divided by their estimated spectral norms so `λ` and the step sizes
//! are dimensionless; reported residuals are converted back to Tesla.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::linops::{estimate_sq_norm, io, norm2, LinearMap};
use crate::prox::GroupLayout;
use crate::solvers::{
    resolve_fista_steps, resolve_steps, run, Algorithm, PenaltyKind, ProblemSpec, RunReport,
    SolveError, SolverConfig, SolverState, StepSizes,
};

use super::divergence::{divergence_matrix, CsrMatrix};
use super::forward::biot_savart_matrix;
use super::grid::{build_grid, CubedSphereGrid, FACE_NAMES};
use super::input::{make_input_model, random_bumps, Bump};
use super::noise::add_noise;
use super::sensors::{sample_sensors, SensorArray, SENSOR_RADIUS};
use super::tune::{tune_lambda, TuneEval, TuneOptions};
use super::wavelet::FaceWavelet;
use super::MegError;

/// Wavelet coefficients at or below this magnitude count as zero.
pub const NNZ_THRESHOLD: f64 = 1e-12;
const CASE_REL_TOL: f64 = 1e-12;
const NORM_TOL: f64 = 1e-10;
const NORM_MAX_ITER: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Case {
    A,
    B,
    C,
    D,
}

impl Case {
    pub const ALL: [Case; 4] = [Case::A, Case::B, Case::C, Case::D];

    pub fn label(self) -> &'static str {
        match self {
            Case::A => "a",
            Case::B => "b",
            Case::C => "c",
            Case::D => "d",
        }
    }

    /// Cases b and d impose `div J = 0`.
    pub fn constrained(self) -> bool {
        matches!(self, Case::B | Case::D)
    }

    /// Cases c and d couple the two channels of each coefficient.
    pub fn joint(self) -> bool {
        matches!(self, Case::C | Case::D)
    }

    /// The unconstrained case with the same penalty.
    pub fn counterpart(self) -> Option<Case> {
        match self {
            Case::B => Some(Case::A),
            Case::D => Some(Case::C),
            _ => None,
        }
    }

    pub fn algorithm(self) -> Algorithm {
        if self.constrained() {
            Algorithm::Thresholding
        } else {
            Algorithm::Fista
        }
    }

    pub fn penalty(self) -> PenaltyKind {
        if self.joint() {
            PenaltyKind::JointMax {
                group: 2,
                layout: GroupLayout::ChannelMajor,
            }
        } else {
            PenaltyKind::SeparableL1
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Seeds {
    pub sensors: u64,
    pub input: u64,
    pub noise: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds {
            sensors: 1,
            input: 2,
            noise: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Budgets {
    /// FISTA cases a and c.
    pub unconstrained: usize,
    /// Constrained cases b and d.
    pub constrained: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            unconstrained: 2000,
            constrained: 20_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub n_face: usize,
    pub sensors: usize,
    pub noise_level: f64,
    pub seeds: Seeds,
    pub cases: Vec<Case>,
    pub budgets: Budgets,
    pub lambda_tol: f64,
    /// Defaults to the deepest admissible decomposition.
    pub wavelet_levels: Option<usize>,
    pub bumps: usize,
    pub trace_every: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n_face: 16,
            sensors: 500,
            noise_level: 0.1,
            seeds: Seeds::default(),
            cases: Case::ALL.to_vec(),
            budgets: Budgets::default(),
            lambda_tol: 0.02,
            wavelet_levels: None,
            bumps: 3,
            trace_every: 100,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, MegError> {
        let c: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| MegError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), MegError> {
        let bad = |m: String| Err(MegError::Config(m));
        if self.n_face < 8 || !self.n_face.is_power_of_two() {
            return bad(format!(
                "n_face must be a power of two (dyadic) of at least 8, got {}",
                self.n_face
            ));
        }
        if self.sensors == 0 {
            return bad("sensors must be at least 1".into());
        }
        if !(self.noise_level > 0.0 && self.noise_level.is_finite()) {
            return bad(format!(
                "noise_level must be positive to tune lambda, got {}",
                self.noise_level
            ));
        }
        if self.cases.is_empty() {
            return bad("cases must not be empty".into());
        }
        if self.budgets.unconstrained == 0 || self.budgets.constrained == 0 {
            return bad("budgets must be positive".into());
        }
        if !(self.lambda_tol > 0.0 && self.lambda_tol < 1.0) {
            return bad(format!("lambda_tol must lie in (0, 1), got {}", self.lambda_tol));
        }
        if self.bumps == 0 {
            return bad("bumps must be at least 1".into());
        }
        if self.trace_every == 0 {
            return bad("trace_every must be positive".into());
        }
        if let Some(l) = self.wavelet_levels {
            FaceWavelet::new(self.n_face, l)?;
        }
        Ok(())
    }

    pub fn budget(&self, case: Case) -> usize {
        if case.constrained() {
            self.budgets.constrained
        } else {
            self.budgets.unconstrained
        }
    }
}

/// Everything that does not depend on the noise realization.
pub struct MegSetup {
    pub config: ExperimentConfig,
    pub grid: CubedSphereGrid,
    pub sensors: SensorArray,
    pub wavelet: FaceWavelet,
    pub bumps: Vec<Bump>,
    pub input_field: Vec<f64>,
    /// `K J_in` in Tesla.
    pub clean_data: Vec<f64>,
    /// `K W⁻¹ / data_scale`.
    pub forward: LinearMap,
    pub data_scale: f64,
    pub divergence: Arc<CsrMatrix>,
    /// `div ∘ W⁻¹ / constraint_scale`.
    pub constraint: LinearMap,
    pub constraint_scale: f64,
}

/// One noisy data set, in normalized units.
#[derive(Clone, Debug)]
pub struct NoisyData {
    pub seed: u64,
    pub y: Vec<f64>,
    /// `‖ε‖` in Tesla.
    pub noise_norm: f64,
    /// `‖ε‖` in normalized units.
    pub target: f64,
}

impl MegSetup {
    pub fn build(config: &ExperimentConfig) -> Result<Self, MegError> {
        config.validate()?;
        let grid = build_grid(config.n_face)?;
        let sensors = sample_sensors(config.sensors, SENSOR_RADIUS, config.seeds.sensors);
        let wavelet = match config.wavelet_levels {
            Some(l) => FaceWavelet::new(config.n_face, l)?,
            None => FaceWavelet::with_max_levels(config.n_face)?,
        };
        let kbs = biot_savart_matrix(&grid, &sensors)?;
        let bumps = random_bumps(config.bumps, config.seeds.input)?;
        let input_field = make_input_model(&grid, &bumps)?;
        let clean_data = kbs.matvec(&input_field);

        // rows of K W⁻¹ are W⁻ᵀ applied to rows of K
        let mut total = kbs;
        for r in 0..total.rows() {
            wavelet.inverse_adjoint_in_place(total.row_mut(r));
        }
        let k_sq = estimate_sq_norm(&LinearMap::from(total.clone()), NORM_TOL, NORM_MAX_ITER, 0)?;
        let data_scale = k_sq.value.sqrt();
        if !(data_scale > 0.0) {
            return Err(MegError::InvalidInput("forward operator is zero".into()));
        }
        total.scale_in_place(1.0 / data_scale);
        let forward = LinearMap::from(total);

        let divergence = Arc::new(divergence_matrix(&grid));
        let d = Arc::clone(&divergence);
        let dt = Arc::clone(&divergence);
        let div_op = LinearMap::callback(
            "divergence",
            divergence.rows,
            divergence.cols,
            move |x, out| d.apply_into(x, out),
            move |y, out| dt.adjoint_into(y, out),
        );
        let b_raw = LinearMap::compose(div_op, wavelet.synthesis_map(grid.field_len()))?;
        let b_sq = estimate_sq_norm(&b_raw, NORM_TOL, NORM_MAX_ITER, 0)?;
        let constraint_scale = b_sq.value.sqrt();
        let constraint = LinearMap::scaled(1.0 / constraint_scale, b_raw);

        Ok(MegSetup {
            config: config.clone(),
            grid,
            sensors,
            wavelet,
            bumps,
            input_field,
            clean_data,
            forward,
            data_scale,
            divergence,
            constraint,
            constraint_scale,
        })
    }

    pub fn noisy_data(&self, seed: u64) -> Result<NoisyData, MegError> {
        let (y, noise_norm) = add_noise(&self.clean_data, self.config.noise_level, seed)?;
        Ok(NoisyData {
            seed,
            y: y.iter().map(|v| v / self.data_scale).collect(),
            noise_norm,
            target: noise_norm / self.data_scale,
        })
    }

    pub fn problem(&self, case: Case, data: &NoisyData, lambda: f64) -> ProblemSpec {
        let p = ProblemSpec::new(self.forward.clone(), data.y.clone(), lambda)
            .with_penalty(case.penalty());
        if case.constrained() {
            p.with_constraint(self.constraint.clone(), vec![0.0; self.grid.n_voxels()])
        } else {
            p
        }
    }

    /// Step sizes for `case`, estimated once and reused across `λ`.
    pub fn steps(&self, case: Case, data: &NoisyData) -> Result<StepSizes, MegError> {
        let p = self.problem(case, data, 1.0);
        let c = SolverConfig::default();
        Ok(match case.algorithm() {
            Algorithm::Fista => resolve_fista_steps(&p, &c)?,
            _ => resolve_steps(&p, &c)?,
        })
    }

    /// Smallest `λ` for which `w = 0` is optimal without the constraint
    /// (also with it, since `b = 0`).
    pub fn lambda_max(&self, case: Case, data: &NoisyData) -> Result<f64, MegError> {
        let g = self.forward.adjoint_apply(&data.y)?;
        let nv = self.grid.n_voxels();
        Ok(if case.joint() {
            (0..nv).map(|k| g[k].abs() + g[nv + k].abs()).fold(0.0, f64::max)
        } else {
            g.iter().fold(0.0f64, |m, v| m.max(v.abs()))
        })
    }

    /// Runs `case` at a fixed `λ`.
    #[allow(clippy::too_many_arguments)]
    pub fn solve_at(
        &self,
        case: Case,
        data: &NoisyData,
        lambda: f64,
        steps: &StepSizes,
        max_iter: usize,
        warm: Option<&SolverState>,
        observer: Option<&mut dyn FnMut(&SolverState)>,
    ) -> Result<RunReport, SolveError> {
        let p = self.problem(case, data, lambda);
        let c = SolverConfig {
            max_iter,
            rel_tol: CASE_REL_TOL,
            trace_every: self.config.trace_every,
            check_steps: false,
            warm_start: warm.cloned(),
            ..SolverConfig::default()
        }
        .with_steps(steps);
        run(case.algorithm(), &p, &c, observer)
    }

    /// `‖K̃w − ỹ‖` in normalized units.
    pub fn residual(&self, data: &NoisyData, w: &[f64]) -> f64 {
        let mut r = vec![0.0; data.y.len()];
        self.forward.apply_into(w, &mut r);
        r.iter()
            .zip(&data.y)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Tunes `λ` for `case` and reports the reconstruction. The search
    /// starts from `lambda_start` when given, otherwise from `λ_max`.
    pub fn run_case(
        &self,
        case: Case,
        data: &NoisyData,
        lambda_start: Option<f64>,
    ) -> Result<CaseOutcome, MegError> {
        let steps = self.steps(case, data)?;
        let budget = self.config.budget(case);
        let opts = TuneOptions {
            tol_rel: self.config.lambda_tol,
            start: lambda_start,
            ..TuneOptions::default()
        };
        let tuned = tune_lambda(
            |lambda, warm| {
                let rep = self.solve_at(case, data, lambda, &steps, budget, warm, None)?;
                let r = self.residual(data, rep.x());
                Ok((rep, r))
            },
            self.lambda_max(case, data)?,
            data.target,
            &opts,
        )?;
        let w = tuned.report.x().to_vec();
        let field = self.wavelet.inverse(&w);
        let report = self.report(case, data, &w, &field, tuned.lambda, &tuned.report, tuned.evaluations);
        Ok(CaseOutcome {
            report,
            run: tuned.report,
            coefficients: w,
            field,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn report(
        &self,
        case: Case,
        data: &NoisyData,
        w: &[f64],
        field: &[f64],
        lambda: f64,
        run: &RunReport,
        tuning: Vec<TuneEval>,
    ) -> MEGReport {
        let diff: Vec<f64> = field.iter().zip(&self.input_field).map(|(a, b)| a - b).collect();
        let mut div = vec![0.0; self.grid.n_voxels()];
        self.divergence.apply_into(field, &mut div);
        MEGReport {
            case,
            e_rec: norm2(&diff) / norm2(&self.input_field),
            div_norm: norm2(&div),
            relative_divergence: self.grid.mid_radius() * self.grid.area_norm(&div)
                / self.grid.field_area_norm(field).max(f64::MIN_POSITIVE),
            nnz: w.iter().filter(|v| v.abs() > NNZ_THRESHOLD).count(),
            coefficient_count: w.len(),
            residual: self.residual(data, w) * self.data_scale,
            noise_norm: data.noise_norm,
            lambda_used: lambda,
            data_scale: self.data_scale,
            iterations: run.iterations_run,
            converged: run.converged,
            noise_seed: data.seed,
            tuning,
        }
    }

    /// `‖div J_in‖`, the discretization floor of the input model.
    pub fn input_div_norm(&self) -> f64 {
        let mut div = vec![0.0; self.grid.n_voxels()];
        self.divergence.apply_into(&self.input_field, &mut div);
        norm2(&div)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MEGReport {
    pub case: Case,
    /// `‖J_rec − J_in‖ / ‖J_in‖`
    pub e_rec: f64,
    /// `‖div J_rec‖` in A/m³ (Euclidean over voxels).
    pub div_norm: f64,
    /// `r·‖div J_rec‖_A / ‖J_rec‖_A`, area weighted and dimensionless.
    pub relative_divergence: f64,
    pub nnz: usize,
    pub coefficient_count: usize,
    /// `‖K J_rec − y‖` in Tesla.
    pub residual: f64,
    pub noise_norm: f64,
    /// In normalized units; multiply by `data_scale²` for the unscaled problem.
    pub lambda_used: f64,
    pub data_scale: f64,
    pub iterations: usize,
    pub converged: bool,
    pub noise_seed: u64,
    pub tuning: Vec<TuneEval>,
}

pub struct CaseOutcome {
    pub report: MEGReport,
    pub run: RunReport,
    pub coefficients: Vec<f64>,
    pub field: Vec<f64>,
}

/// Builds the setup, draws one noise realization and runs the configured
/// cases in order. A constrained case starts its `λ` search from the value
/// tuned for its unconstrained counterpart when that ran first.
pub fn run_experiment(config: &ExperimentConfig) -> Result<(MegSetup, Vec<CaseOutcome>), MegError> {
    let setup = MegSetup::build(config)?;
    let data = setup.noisy_data(config.seeds.noise)?;
    let mut out: Vec<CaseOutcome> = Vec::with_capacity(config.cases.len());
    for &case in &config.cases {
        let start = case.counterpart().and_then(|c| {
            out.iter()
                .find(|o| o.report.case == c)
                .map(|o| o.report.lambda_used)
        });
        let o = setup
            .run_case(case, &data, start)
            .map_err(|e| MegError::Case(case.label(), Box::new(e)))?;
        out.push(o);
    }
    Ok((setup, out))
}

#[derive(Clone, Debug, Serialize)]
struct SnapshotLayout<'a> {
    kind: &'a str,
    n_face: usize,
    length: usize,
    face_order: [&'static str; 6],
    per_face: &'static str,
    channels: [&'static str; 2],
    channel_layout: &'static str,
    wavelet_levels: Option<usize>,
}

/// Writes `values` to `<dir>/<stem>.txt` in the dense vector format and a
/// layout description to `<dir>/<stem>.json`. `kind` is `"field"` or
/// `"coefficients"`.
pub fn write_snapshot(
    dir: &Path,
    stem: &str,
    kind: &str,
    setup: &MegSetup,
    values: &[f64],
) -> Result<(), MegError> {
    let layout = SnapshotLayout {
        kind,
        n_face: setup.grid.n_face,
        length: values.len(),
        face_order: FACE_NAMES,
        per_face: "row-major: row index j along eta, column index i along xi",
        channels: ["e1", "e2"],
        channel_layout: "channel-major: all e1 entries, then all e2 entries",
        wavelet_levels: (kind == "coefficients").then_some(setup.wavelet.levels),
    };
    io::write_vector(&dir.join(format!("{stem}.txt")), values)?;
    let json = crate::json::to_string_pretty(&layout).map_err(|e| MegError::Io(e.to_string()))?;
    std::fs::write(dir.join(format!("{stem}.json")), json)
        .map_err(|e| MegError::Io(format!("{}: {e}", dir.display())))?;
    Ok(())
}
