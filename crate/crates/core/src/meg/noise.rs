use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linops::norm2;

use super::MegError;

/// Adds seeded Gaussian noise rescaled so that `‖ε‖ = level·‖y‖` exactly.
/// Returns the noisy data and `‖ε‖`.
pub fn add_noise(y: &[f64], level: f64, seed: u64) -> Result<(Vec<f64>, f64), MegError> {
    if !(level >= 0.0 && level.is_finite()) {
        return Err(MegError::InvalidInput(format!(
            "noise level must be finite and nonnegative, got {level}"
        )));
    }
    let target = level * norm2(y);
    if target == 0.0 {
        return Ok((y.to_vec(), 0.0));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eps: Vec<f64> = (0..y.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
    let s = target / norm2(&eps);
    let noisy: Vec<f64> = y.iter().zip(&eps).map(|(a, e)| a + s * e).collect();
    Ok((noisy, target))
}
