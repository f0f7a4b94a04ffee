//! Divergence-free input currents `J = curl(G e_r) = ∇G × e_r` from a
//! stream function `G` built of compactly supported bumps.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::grid::{CubedSphereGrid, V3};
use super::MegError;

/// `G(θ) = amplitude·(1 − (θ/width)²)³` for geodesic angle `θ < width` from
/// `center`, zero beyond. `amplitude` is in A/m.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: [f64; 3],
    /// radians
    pub width: f64,
    pub amplitude: f64,
}

impl Bump {
    fn check(&self) -> Result<V3, MegError> {
        let c = V3::from(self.center);
        if !(self.width > 0.0 && self.width < PI) {
            return Err(MegError::InvalidInput(format!(
                "bump width must lie in (0, π), got {}",
                self.width
            )));
        }
        if !(c.norm() > 0.0 && c.iter().all(|v| v.is_finite()) && self.amplitude.is_finite()) {
            return Err(MegError::InvalidInput("bump center must be a finite nonzero vector".into()));
        }
        Ok(c.normalize())
    }

    /// Surface current (A/m²) at the unit direction `p` on the sphere of
    /// radius `r`.
    fn current(&self, c: &V3, p: &V3, r: f64) -> V3 {
        let theta = p.cross(c).norm().atan2(p.dot(c));
        if theta >= self.width {
            return V3::zeros();
        }
        let w2 = self.width * self.width;
        let q = 1.0 - theta * theta / w2;
        // G'(θ)/sin θ, with its limit at θ = 0
        let g = if theta < 1e-8 {
            -6.0 * self.amplitude / w2
        } else {
            -6.0 * self.amplitude * theta * q * q / (w2 * theta.sin())
        };
        // ∇G = G'(θ)/r · θ̂ and θ̂·sin θ = p cos θ − c
        (p * theta.cos() - c).cross(p) * (g / r)
    }
}

/// `count` bumps centered in the upper hemisphere (polar angle ≤ 75°) with
/// pairwise disjoint supports, widths in `[0.6, 0.8]` rad and amplitudes
/// of either sign with magnitude in `[0.005, 0.01]` A/m.
pub fn random_bumps(count: usize, seed: u64) -> Result<Vec<Bump>, MegError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bumps: Vec<Bump> = Vec::with_capacity(count);
    let mut attempts = 0;
    while bumps.len() < count {
        attempts += 1;
        if attempts > 100_000 {
            return Err(MegError::InvalidInput(format!(
                "could not place {count} disjoint bumps"
            )));
        }
        let z: f64 = rng.gen_range(75f64.to_radians().cos()..1.0);
        let phi: f64 = rng.gen_range(0.0..2.0 * PI);
        let rho = (1.0 - z * z).sqrt();
        let c = V3::new(rho * phi.cos(), rho * phi.sin(), z);
        let width = rng.gen_range(0.6..0.8);
        let mag: f64 = rng.gen_range(0.005..0.01);
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let clear = bumps.iter().all(|b| {
            let bc = V3::from(b.center);
            bc.cross(&c).norm().atan2(bc.dot(&c)) > b.width + width
        });
        if clear {
            bumps.push(Bump {
                center: [c.x, c.y, c.z],
                width,
                amplitude: sign * mag,
            });
        }
    }
    Ok(bumps)
}

/// The tangent field (channel-major) of `curl(G e_r)`, sampled at voxel
/// centers.
pub fn make_input_model(grid: &CubedSphereGrid, bumps: &[Bump]) -> Result<Vec<f64>, MegError> {
    let centers = bumps.iter().map(Bump::check).collect::<Result<Vec<_>, _>>()?;
    let nv = grid.n_voxels();
    let r = grid.mid_radius();
    let mut field = vec![0.0; 2 * nv];
    for v in 0..nv {
        let p = grid.voxel_centers[v].normalize();
        let j: V3 = bumps
            .iter()
            .zip(&centers)
            .map(|(b, c)| b.current(c, &p, r))
            .sum();
        let [e1, e2] = grid.tangent_frames[v];
        field[v] = j.dot(&e1);
        field[nv + v] = j.dot(&e2);
    }
    Ok(field)
}
