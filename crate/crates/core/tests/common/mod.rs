#![allow(dead_code)]

use cgist_core::linops::{norm_inf, DenseMatrix, LinearMap};
use cgist_core::ProblemSpec;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let data = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    DenseMatrix::from_row_major(rows, cols, data).unwrap()
}

pub fn gaussian_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn kty_inf(k: &LinearMap, y: &[f64]) -> f64 {
    norm_inf(&k.adjoint_apply(y).unwrap())
}

/// Random tiny problem with full-column-rank `K`, optionally with a
/// consistent constraint of one or two rows.
pub fn tiny_instance(seed: u64, constrained: bool) -> ProblemSpec {
    let mut r = rng(seed);
    let n = r.gen_range(2..=6);
    let k: LinearMap = gaussian(n + 2, n, &mut r).into();
    let y = gaussian_vec(n + 2, &mut r);
    let lambda = r.gen_range(0.05..0.5) * kty_inf(&k, &y);
    let mut p = ProblemSpec::new(k, y, lambda);
    if constrained {
        let m = r.gen_range(1..=2.min(n - 1));
        let b = gaussian(m, n, &mut r);
        let x0 = gaussian_vec(n, &mut r);
        let rhs = b.matvec(&x0);
        p = p.with_constraint(b.into(), rhs);
    }
    p
}

/// Columns spanning the null space of a dense matrix.
pub fn null_space(b: &DenseMatrix) -> Vec<Vec<f64>> {
    let n = b.cols();
    let m = DMatrix::from_row_slice(b.rows(), n, b.as_slice());
    // pad to square so the SVD returns a full right basis
    let mut sq = DMatrix::zeros(n.max(b.rows()), n);
    sq.rows_mut(0, b.rows()).copy_from(&m);
    let svd = sq.svd(false, true);
    let vt = svd.v_t.unwrap();
    let smax = svd.singular_values.max();
    (0..n)
        .filter(|&i| svd.singular_values[i] <= 1e-10 * smax.max(1.0))
        .map(|i| vt.row(i).iter().copied().collect())
        .collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}
