//! Power-iteration estimates of squared spectral norms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dense::{dot, norm2};
use super::{LinearMap, LinopError};

pub const DEFAULT_NORM_TOL: f64 = 1e-8;
pub const DEFAULT_NORM_MAX_ITER: usize = 5000;
/// Inflation applied to estimates before they enter step-size selection.
pub const NORM_SAFETY_FACTOR: f64 = 1.01;

/// Estimated largest eigenvalue of a Gram operator (a squared spectral norm).
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct NormEstimate {
    pub value: f64,
    pub iterations_used: usize,
    pub converged: bool,
}

impl NormEstimate {
    /// The estimate inflated by [`NORM_SAFETY_FACTOR`].
    pub fn safe_value(&self) -> f64 {
        self.value * NORM_SAFETY_FACTOR
    }
}

/// Estimates `‖op‖²`, the largest eigenvalue of `opᵀ op`.
pub fn estimate_sq_norm(
    op: &LinearMap,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<NormEstimate, LinopError> {
    check_tol(tol)?;
    if op.is_zero() {
        return Ok(exact(0.0));
    }
    if op.is_identity() {
        return Ok(exact(1.0));
    }
    let mut tmp = vec![0.0; op.rows()];
    Ok(power_iteration(op.cols(), tol, max_iter, seed, |v, out| {
        op.apply_into(v, &mut tmp);
        op.adjoint_into(&tmp, out);
        dot(&tmp, &tmp)
    }))
}

/// Estimates `‖c_k KᵀK + c_b BᵀB‖` without assembling either Gram matrix.
#[allow(clippy::too_many_arguments)]
pub fn gram_combination_sq_norm(
    k: &LinearMap,
    b: &LinearMap,
    c_k: f64,
    c_b: f64,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<NormEstimate, LinopError> {
    check_tol(tol)?;
    if k.cols() != b.cols() {
        return Err(LinopError::Dimension {
            op: "gram_combination_sq_norm",
            expected: k.cols(),
            found: b.cols(),
        });
    }
    if c_k < 0.0 || c_b < 0.0 || !c_k.is_finite() || !c_b.is_finite() {
        return Err(LinopError::InvalidParameter("weights must be finite and nonnegative"));
    }
    let k_active = c_k > 0.0 && !k.is_zero();
    let b_active = c_b > 0.0 && !b.is_zero();
    if !k_active && !b_active {
        return Ok(exact(0.0));
    }
    let n = k.cols();
    let mut tk = vec![0.0; k.rows()];
    let mut tb = vec![0.0; b.rows()];
    let mut scratch = vec![0.0; n];
    Ok(power_iteration(n, tol, max_iter, seed, |v, out| {
        out.iter_mut().for_each(|o| *o = 0.0);
        let mut rayleigh = 0.0;
        if k_active {
            k.apply_into(v, &mut tk);
            k.adjoint_into(&tk, &mut scratch);
            out.iter_mut().zip(&scratch).for_each(|(o, s)| *o += c_k * s);
            rayleigh += c_k * dot(&tk, &tk);
        }
        if b_active {
            b.apply_into(v, &mut tb);
            b.adjoint_into(&tb, &mut scratch);
            out.iter_mut().zip(&scratch).for_each(|(o, s)| *o += c_b * s);
            rayleigh += c_b * dot(&tb, &tb);
        }
        rayleigh
    }))
}

fn check_tol(tol: f64) -> Result<(), LinopError> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(LinopError::InvalidParameter("tolerance must be positive"))
    }
}

fn exact(value: f64) -> NormEstimate {
    NormEstimate {
        value,
        iterations_used: 0,
        converged: true,
    }
}

/// Power iteration on a symmetric PSD operator. `gram(v, out)` writes `G v`
/// into `out` and returns the Rayleigh quotient `vᵀ G v` for unit `v`.
fn power_iteration<F>(n: usize, tol: f64, max_iter: usize, seed: u64, mut gram: F) -> NormEstimate
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut gv = vec![0.0; n];
    let mut prev = f64::NAN;
    let mut best = 0.0f64;
    for it in 1..=max_iter {
        let rq = gram(&v, &mut gv);
        best = best.max(rq);
        if rq <= 0.0 {
            // v is in the null space; the operator is zero on our subspace.
            return NormEstimate {
                value: best,
                iterations_used: it,
                converged: true,
            };
        }
        if prev.is_finite() && (rq - prev).abs() < tol * rq {
            return NormEstimate {
                value: rq,
                iterations_used: it,
                converged: true,
            };
        }
        prev = rq;
        let ng = norm2(&gv);
        v.iter_mut().zip(&gv).for_each(|(x, g)| *x = g / ng);
    }
    NormEstimate {
        value: best,
        iterations_used: max_iter,
        converged: false,
    }
}
