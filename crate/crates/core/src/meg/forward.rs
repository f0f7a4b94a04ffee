//! Biot-Savart map from tangential voxel currents to radial field values.

use crate::linops::{DenseMatrix, LinearMap};

use super::grid::{CubedSphereGrid, V3};
use super::sensors::SensorArray;
use super::MegError;

/// μ₀ / 4π in T·m/A.
pub const MU0_OVER_4PI: f64 = 1e-7;

/// `(μ₀/4π) [(r − r′)/|r − r′|³ × e_r(r)] · t`
pub fn kernel(sensor: &V3, e_r: &V3, source: &V3, tangent: &V3) -> f64 {
    let d = sensor - source;
    let n = d.norm();
    MU0_OVER_4PI * (d / (n * n * n)).cross(e_r).dot(tangent)
}

/// Dense matrix with one row per sensor and one column per
/// `(channel, voxel)` in channel-major order. Midpoint rule over voxels.
pub fn biot_savart_matrix(
    grid: &CubedSphereGrid,
    sensors: &SensorArray,
) -> Result<DenseMatrix, MegError> {
    let nv = grid.n_voxels();
    let mut m = DenseMatrix::zeros(sensors.len(), 2 * nv);
    let tiny = 1e-9 * grid.outer_radius;
    for (i, (r, e)) in sensors.positions.iter().zip(&sensors.radial_units).enumerate() {
        let row = m.row_mut(i);
        for v in 0..nv {
            let src = &grid.voxel_centers[v];
            let dist = (r - src).norm();
            if dist < tiny {
                return Err(MegError::SingularKernel {
                    sensor: i,
                    voxel: v,
                    distance: dist,
                });
            }
            let vol = grid.voxel_volumes[v];
            let [t1, t2] = &grid.tangent_frames[v];
            row[v] = kernel(r, e, src, t1) * vol;
            row[nv + v] = kernel(r, e, src, t2) * vol;
        }
    }
    Ok(m)
}

pub fn biot_savart_operator(
    grid: &CubedSphereGrid,
    sensors: &SensorArray,
) -> Result<LinearMap, MegError> {
    Ok(biot_savart_matrix(grid, sensors)?.into())
}
