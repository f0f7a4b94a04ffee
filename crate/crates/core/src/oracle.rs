//! Brute-force reference solvers for tiny instances, independent of the
//! iterative code paths: sign-pattern enumeration of the optimality
//! system, bisection for the ℓ1-ball projection, support enumeration for
//! basis pursuit, and dense eigendecompositions for operator norms.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::linops::LinearMap;
use crate::solvers::{PenaltyKind, ProblemSpec};

pub const MAX_TINY_UNKNOWNS: usize = 6;
pub const MAX_TINY_PENALTY_ROWS: usize = 8;
pub const MAX_BP_UNKNOWNS: usize = 12;
pub const MAX_BP_ROWS: usize = 8;

const SIGN_TOL: f64 = 1e-10;
const KKT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("{what} is {value}, oracle limit is {limit}")]
    TooLarge {
        what: &'static str,
        value: usize,
        limit: usize,
    },
    #[error("oracle does not handle {0}")]
    Unsupported(String),
    #[error("no sign pattern gives a consistent optimality system")]
    Degenerate,
    #[error("linear system is infeasible (least-squares residual {residual:e})")]
    Infeasible { residual: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleSolution {
    pub x: Vec<f64>,
    /// Penalty multiplier, `|w_i| ≤ λ`.
    pub w: Vec<f64>,
    /// Constraint multiplier.
    pub v: Vec<f64>,
    pub objective: f64,
    /// Sign pattern of `Ax` (of `x` for basis pursuit).
    pub active_signs: Vec<i8>,
    pub kkt_ok: bool,
}

fn to_na(op: &LinearMap) -> DMatrix<f64> {
    let d = op.to_dense();
    DMatrix::from_row_slice(d.rows(), d.cols(), d.as_slice())
}

/// Least-norm solution of `m z = rhs` and its residual norm.
fn pseudo_solve(m: &DMatrix<f64>, rhs: &DVector<f64>) -> (DVector<f64>, f64) {
    if m.ncols() == 0 || m.nrows() == 0 {
        return (DVector::zeros(m.ncols()), rhs.norm());
    }
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = smax * 1e-12 * m.nrows().max(m.ncols()) as f64;
    let z = svd
        .solve(rhs, eps.max(1e-300))
        .unwrap_or_else(|_| DVector::zeros(m.ncols()));
    let r = (m * &z - rhs).norm();
    (z, r)
}

fn select_rows(m: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)])
}

/// Exact minimizer of a tiny separable-ℓ1 problem by enumerating all
/// `3^r` sign patterns of `Ax` (`r = A.rows`). Each pattern fixes the
/// penalty to a linear term on a face, which is an equality-constrained
/// quadratic program solved through its saddle-point system.
pub fn oracle_solve_tiny(p: &ProblemSpec) -> Result<OracleSolution, OracleError> {
    let n = p.n_unknowns();
    if n > MAX_TINY_UNKNOWNS {
        return Err(OracleError::TooLarge {
            what: "unknown dimension",
            value: n,
            limit: MAX_TINY_UNKNOWNS,
        });
    }
    let r = p.a.rows();
    if r > MAX_TINY_PENALTY_ROWS {
        return Err(OracleError::TooLarge {
            what: "penalty rows",
            value: r,
            limit: MAX_TINY_PENALTY_ROWS,
        });
    }
    if !matches!(p.penalty, PenaltyKind::SeparableL1) {
        return Err(OracleError::Unsupported(format!("{:?}", p.penalty)));
    }
    let k = to_na(&p.k);
    let a = to_na(&p.a);
    let y = DVector::from_column_slice(&p.y);
    let (bm, bv) = match &p.constraint {
        Some(c) => (to_na(&c.op), DVector::from_column_slice(&c.rhs)),
        None => (DMatrix::zeros(0, n), DVector::zeros(0)),
    };
    let ktk = k.transpose() * &k;
    let kty = k.transpose() * &y;
    let lambda = p.lambda;
    let true_objective = |x: &DVector<f64>| {
        let res = &k * x - &y;
        res.norm_squared() + 2.0 * lambda * (&a * x).abs().sum()
    };

    let mut best: Option<(f64, Vec<i8>, DVector<f64>)> = None;
    let mut signs = vec![-1i8; r];
    loop {
        let zero_rows: Vec<usize> = (0..r).filter(|&i| signs[i] == 0).collect();
        let az = select_rows(&a, &zero_rows);
        let m_c = bm.nrows() + az.nrows();
        let mut c = DMatrix::zeros(m_c, n);
        c.rows_mut(0, bm.nrows()).copy_from(&bm);
        c.rows_mut(bm.nrows(), az.nrows()).copy_from(&az);
        let mut d = DVector::zeros(m_c);
        d.rows_mut(0, bv.len()).copy_from(&bv);

        let s = DVector::from_iterator(r, signs.iter().map(|&v| v as f64));
        let mut sys = DMatrix::zeros(n + m_c, n + m_c);
        sys.view_mut((0, 0), (n, n)).copy_from(&ktk);
        sys.view_mut((0, n), (n, m_c)).copy_from(&c.transpose());
        sys.view_mut((n, 0), (m_c, n)).copy_from(&c);
        let mut rhs = DVector::zeros(n + m_c);
        rhs.rows_mut(0, n)
            .copy_from(&(&kty - a.transpose() * &s * lambda));
        rhs.rows_mut(n, m_c).copy_from(&d);

        let (z, res) = pseudo_solve(&sys, &rhs);
        let x = z.rows(0, n).into_owned();
        let feasible = res <= KKT_TOL * (1.0 + rhs.norm());
        let ax = &a * &x;
        let consistent = (0..r).all(|i| signs[i] == 0 || signs[i] as f64 * ax[i] >= -SIGN_TOL);
        if feasible && consistent {
            let obj = true_objective(&x);
            let better = match &best {
                None => true,
                Some((b, _, _)) => obj < b - 1e-12 * (1.0 + b.abs()),
            };
            if better {
                best = Some((obj, signs.clone(), x));
            }
        }

        // next pattern in lexicographic order over (−1, 0, +1)
        let mut i = r;
        loop {
            if i == 0 {
                return finish_tiny(best, &k, &a, &bm, &y, lambda);
            }
            i -= 1;
            if signs[i] < 1 {
                signs[i] += 1;
                for s in signs.iter_mut().skip(i + 1) {
                    *s = -1;
                }
                break;
            }
        }
    }
}

fn finish_tiny(
    best: Option<(f64, Vec<i8>, DVector<f64>)>,
    k: &DMatrix<f64>,
    a: &DMatrix<f64>,
    bm: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda: f64,
) -> Result<OracleSolution, OracleError> {
    let (objective, signs, x) = best.ok_or(OracleError::Degenerate)?;
    let r = a.nrows();
    // Kᵀ(Kx − y) + A_Nᵀ λ s_N + A_Zᵀ w_Z − Bᵀ v = 0, solved for (w_Z, v)
    let zero_rows: Vec<usize> = (0..r).filter(|&i| signs[i] == 0).collect();
    let mut wn = DVector::zeros(r);
    for i in 0..r {
        wn[i] = lambda * signs[i] as f64;
    }
    let g = k.transpose() * (k * &x - y) + a.transpose() * &wn;
    let az = select_rows(a, &zero_rows);
    let mut m = DMatrix::zeros(x.len(), az.nrows() + bm.nrows());
    m.view_mut((0, 0), (x.len(), az.nrows()))
        .copy_from(&az.transpose());
    m.view_mut((0, az.nrows()), (x.len(), bm.nrows()))
        .copy_from(&(-bm.transpose()));
    let (mult, res) = pseudo_solve(&m, &(-&g));
    let mut w = wn;
    for (j, &i) in zero_rows.iter().enumerate() {
        w[i] = mult[j];
    }
    let v: Vec<f64> = mult.iter().skip(az.nrows()).copied().collect();
    let kkt_ok = res < KKT_TOL * (1.0 + g.norm())
        && zero_rows
            .iter()
            .all(|&i| w[i].abs() <= lambda * (1.0 + KKT_TOL) + 1e-12);
    Ok(OracleSolution {
        x: x.iter().copied().collect(),
        w: w.iter().copied().collect(),
        v,
        objective,
        active_signs: signs,
        kkt_ok,
    })
}

/// Projection on `{‖x‖₁ ≤ R}` by bisection on the threshold `t` solving
/// `Σ max(|z_i| − t, 0) = R`.
pub fn oracle_project_l1(z: &[f64], radius: f64) -> Vec<f64> {
    let l1: f64 = z.iter().map(|v| v.abs()).sum();
    if l1 <= radius {
        return z.to_vec();
    }
    let excess = |t: f64| z.iter().map(|v| (v.abs() - t).max(0.0)).sum::<f64>() - radius;
    let mut lo = 0.0;
    let mut hi = z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    z.iter()
        .map(|v| v.signum() * (v.abs() - t).max(0.0))
        .collect()
}

/// `min ‖x‖₁ s.t. Bx = b` by enumerating supports of size at most
/// `B.rows`; an optimum of the linear program sits at a basic solution.
pub fn oracle_basis_pursuit_tiny(b_op: &LinearMap, b: &[f64]) -> Result<OracleSolution, OracleError> {
    let n = b_op.cols();
    let m = b_op.rows();
    if n > MAX_BP_UNKNOWNS {
        return Err(OracleError::TooLarge {
            what: "unknown dimension",
            value: n,
            limit: MAX_BP_UNKNOWNS,
        });
    }
    if m > MAX_BP_ROWS {
        return Err(OracleError::TooLarge {
            what: "constraint rows",
            value: m,
            limit: MAX_BP_ROWS,
        });
    }
    let bm = to_na(b_op);
    let bv = DVector::from_column_slice(b);
    let tol = KKT_TOL * (1.0 + bv.norm());

    let mut best: Option<(f64, DVector<f64>)> = None;
    let mut min_res = f64::INFINITY;
    for mask in 0u32..(1u32 << n) {
        if mask.count_ones() as usize > m {
            continue;
        }
        let cols: Vec<usize> = (0..n).filter(|j| mask & (1 << j) != 0).collect();
        let sub = DMatrix::from_fn(m, cols.len(), |i, j| bm[(i, cols[j])]);
        let (z, res) = pseudo_solve(&sub, &bv);
        min_res = min_res.min(res);
        if res > tol {
            continue;
        }
        let mut x = DVector::zeros(n);
        for (j, &c) in cols.iter().enumerate() {
            x[c] = z[j];
        }
        let l1 = x.abs().sum();
        if best.as_ref().map_or(true, |(b, _)| l1 < b - 1e-12 * (1.0 + b)) {
            best = Some((l1, x));
        }
    }
    let (objective, x) = best.ok_or(OracleError::Infeasible { residual: min_res })?;

    // dual certificate with λ = 1: B_Sᵀv = sign(x_S), ‖Bᵀv‖∞ ≤ 1
    let support: Vec<usize> = (0..n).filter(|&j| x[j] != 0.0).collect();
    let bs_t = DMatrix::from_fn(support.len(), m, |i, j| bm[(j, support[i])]);
    let sgn = DVector::from_iterator(support.len(), support.iter().map(|&j| x[j].signum()));
    let (v, res) = pseudo_solve(&bs_t, &sgn);
    let w = bm.transpose() * &v;
    let kkt_ok = res < KKT_TOL * (1.0 + sgn.norm()) && w.amax() <= 1.0 + KKT_TOL;
    Ok(OracleSolution {
        active_signs: x.iter().map(|v| v.signum() as i8 * (*v != 0.0) as i8).collect(),
        x: x.iter().copied().collect(),
        w: w.iter().copied().collect(),
        v: v.iter().copied().collect(),
        objective,
        kkt_ok,
    })
}

/// `‖op‖² = λ_max(opᵀop)` from a dense symmetric eigendecomposition.
pub fn dense_sq_norm(op: &LinearMap) -> f64 {
    let m = to_na(op);
    let g = if m.nrows() < m.ncols() {
        &m * m.transpose()
    } else {
        m.transpose() * &m
    };
    max_eigenvalue(g)
}

/// `‖c_k KᵀK + c_b BᵀB‖` from a dense symmetric eigendecomposition.
pub fn dense_gram_combination_sq_norm(k: &LinearMap, b: &LinearMap, c_k: f64, c_b: f64) -> f64 {
    let km = to_na(k);
    let bm = to_na(b);
    let g = km.transpose() * &km * c_k + bm.transpose() * &bm * c_b;
    max_eigenvalue(g).max(0.0)
}

fn max_eigenvalue(g: DMatrix<f64>) -> f64 {
    if g.nrows() == 0 {
        return 0.0;
    }
    let e = SymmetricEigen::new(g);
    e.eigenvalues.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
}
