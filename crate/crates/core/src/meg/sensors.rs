use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::grid::V3;

pub const SENSOR_RADIUS: f64 = 0.10;

#[derive(Clone, Debug)]
pub struct SensorArray {
    pub positions: Vec<V3>,
    pub radial_units: Vec<V3>,
}

impl SensorArray {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Area-uniform points on the upper hemisphere: `z` uniform in `[0, r]`
/// and azimuth uniform, by Archimedes' hat-box theorem.
pub fn sample_sensors(count: usize, radius: f64, seed: u64) -> SensorArray {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions = Vec::with_capacity(count);
    let mut radial_units = Vec::with_capacity(count);
    for _ in 0..count {
        let z: f64 = rng.gen_range(0.0..=1.0);
        let phi: f64 = rng.gen_range(0.0..2.0 * PI);
        let rho = (1.0 - z * z).sqrt();
        let e = V3::new(rho * phi.cos(), rho * phi.sin(), z);
        positions.push(e * radius);
        radial_units.push(e);
    }
    SensorArray {
        positions,
        radial_units,
    }
}
