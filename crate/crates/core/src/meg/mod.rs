//! Synthetic magnetoencephalography experiment: tangential currents on a
//! thin spherical shell, radial field readings above it, sparse wavelet
//! reconstructions with and without a zero-divergence constraint.

mod divergence;
mod experiment;
mod forward;
mod grid;
mod input;
mod noise;
mod sensors;
mod tune;
mod wavelet;

use crate::linops::LinopError;
use crate::solvers::SolveError;

pub use divergence::{divergence_matrix, divergence_operator, relative_divergence, CsrMatrix};
pub use experiment::{
    run_experiment, write_snapshot, Budgets, Case, CaseOutcome, ExperimentConfig, MEGReport,
    MegSetup, NoisyData, Seeds, NNZ_THRESHOLD,
};
pub use forward::{biot_savart_matrix, biot_savart_operator, kernel, MU0_OVER_4PI};
pub use grid::{build_grid, build_grid_with, CubedSphereGrid, FACE_NAMES, OUTER_RADIUS, THICKNESS, V3};
pub use input::{make_input_model, random_bumps, Bump};
pub use noise::add_noise;
pub use sensors::{sample_sensors, SensorArray, SENSOR_RADIUS};
pub use tune::{tune_lambda, TuneEval, TuneOptions, Tuned};
pub use wavelet::FaceWavelet;

#[derive(Debug, thiserror::Error)]
pub enum MegError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("wavelet levels {levels} exceed the maximum {max} for this face size")]
    InvalidLevels { levels: usize, max: usize },
    #[error("sensor {sensor} lies {distance:e} m from voxel {voxel}; the kernel is singular")]
    SingularKernel { sensor: usize, voxel: usize, distance: f64 },
    #[error("{0}")]
    InvalidInput(String),
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error("target residual {target:e} exceeds the largest achievable residual {max_residual:e} (lambda -> infinity)")]
    TargetAboveRange { target: f64, max_residual: f64 },
    #[error("target residual {target:e} is below the achievable range [{min_residual:e}, {max_residual:e}] (smallest lambda tried {lambda:e})")]
    TargetBelowRange { target: f64, min_residual: f64, max_residual: f64, lambda: f64 },
    #[error("lambda tuning failed: {0}")]
    Tuning(String),
    #[error("case {0}: {1}")]
    Case(&'static str, Box<MegError>),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Linop(#[from] LinopError),
    #[error("{0}")]
    Io(String),
}
