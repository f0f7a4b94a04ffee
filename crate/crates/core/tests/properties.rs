mod common;

use std::sync::Arc;

use cgist_core::linops::{dot, estimate_sq_norm, norm1, norm2, LinearMap};
use cgist_core::oracle::{dense_sq_norm, oracle_project_l1};
use cgist_core::prox::{
    joint_threshold, moreau_complement, project_l1_ball, project_linf, soft_threshold,
    L1BallIndicator, ProxFn,
};
use cgist_core::solvers::{run, Algorithm, PenaltyKind, SolverConfig, SolverState};
use common::*;
use proptest::prelude::*;

fn vec_in(len: impl Into<proptest::sample::SizeRange>, r: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-r..r, len)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// A random map of one of the composite kinds, `rows × cols`.
fn random_map(kind: u8, rows: usize, cols: usize, seed: u64) -> LinearMap {
    let mut g = rng(seed);
    let d = |r, c, g: &mut _| -> LinearMap { gaussian(r, c, g).into() };
    match kind % 5 {
        0 => d(rows, cols, &mut g),
        1 => LinearMap::compose(d(rows, 3, &mut g), d(3, cols, &mut g)).unwrap(),
        2 => LinearMap::stack(vec![d(1, cols, &mut g), d(rows, cols, &mut g)]).unwrap(),
        3 => LinearMap::scaled(-0.7, d(rows, cols, &mut g)),
        _ => {
            let m = gaussian(rows, cols, &mut g);
            let mt = m.transpose();
            LinearMap::callback(
                "dense callback",
                rows,
                cols,
                move |x, out| m.matvec_into(x, out),
                move |y, out| mt.matvec_into(y, out),
            )
        }
    }
}

proptest! {
    #[test]
    fn adjoint_identity(kind in 0u8..5, rows in 1usize..12, cols in 1usize..12, seed in 0u64..1000) {
        let op = random_map(kind, rows, cols, seed);
        let mut g = rng(seed + 1);
        let u = gaussian_vec(op.cols(), &mut g);
        let v = gaussian_vec(op.rows(), &mut g);
        let au = op.apply(&u).unwrap();
        let atv = op.adjoint_apply(&v).unwrap();
        let scale = (norm2(&au) * norm2(&v)).max(norm2(&u) * norm2(&atv)).max(f64::MIN_POSITIVE);
        prop_assert!((dot(&au, &v) - dot(&u, &atv)).abs() / scale < 1e-10);
    }

    #[test]
    fn composition_is_sequential_application(rows in 1usize..10, mid in 1usize..10, cols in 1usize..10, seed in 0u64..1000) {
        let mut g = rng(seed);
        let p: LinearMap = gaussian(rows, mid, &mut g).into();
        let q: LinearMap = gaussian(mid, cols, &mut g).into();
        let x = gaussian_vec(cols, &mut g);
        let pq = LinearMap::compose(p.clone(), q.clone()).unwrap().apply(&x).unwrap();
        let seq = p.apply(&q.apply(&x).unwrap()).unwrap();
        prop_assert!(dist(&pq, &seq) <= 1e-12 * norm2(&seq).max(1.0));
    }

    #[test]
    fn norm_estimate_does_not_exceed_the_eigenvalue(rows in 1usize..15, cols in 1usize..15, seed in 0u64..1000) {
        let op: LinearMap = gaussian(rows, cols, &mut rng(seed)).into();
        let est = estimate_sq_norm(&op, 1e-10, 10_000, seed).unwrap();
        let exact = dense_sq_norm(&op);
        prop_assert!(est.value <= exact * (1.0 + 1e-10), "{} > {}", est.value, exact);
    }

    #[test]
    fn soft_plus_clamp_is_identity(z in vec_in(1..30, 100.0), lambda in 0.0..50.0f64) {
        let s = soft_threshold(&z, lambda).unwrap();
        let p = project_linf(&z, lambda).unwrap();
        for i in 0..z.len() {
            prop_assert!((s[i] + p[i] - z[i]).abs() <= 1e-15 * z[i].abs().max(1.0));
        }
    }

    #[test]
    fn l1_ball_projection_is_feasible_and_matches_bisection(z in vec_in(1..12, 10.0), radius in 0.0..20.0f64) {
        let p = project_l1_ball(&z, radius).unwrap();
        prop_assert!(norm1(&p) <= radius * (1.0 + 1e-12) + 1e-300);
        let o = oracle_project_l1(&z, radius);
        prop_assert!(dist(&p, &o) < 1e-8);
    }

    #[test]
    fn operators_are_nonexpansive(a in vec_in(8, 5.0), b in vec_in(8, 5.0), lambda in 0.0..4.0f64) {
        let d = dist(&a, &b) * (1.0 + 1e-12) + 1e-14;
        let ops: [fn(&[f64], f64) -> Vec<f64>; 4] = [
            |z, l| soft_threshold(z, l).unwrap(),
            |z, l| project_linf(z, l).unwrap(),
            |z, l| project_l1_ball(z, l).unwrap(),
            |z, l| joint_threshold(z, l).unwrap(),
        ];
        for op in ops {
            prop_assert!(dist(&op(&a, lambda), &op(&b, lambda)) <= d);
        }
    }

    #[test]
    fn clamp_scales(z in vec_in(1..20, 10.0), lambda in 0.0..5.0f64, c in 0.01..100.0f64) {
        let cz: Vec<f64> = z.iter().map(|v| c * v).collect();
        let lhs = project_linf(&cz, c * lambda).unwrap();
        let rhs = project_linf(&z, lambda).unwrap();
        for i in 0..z.len() {
            prop_assert!((lhs[i] - c * rhs[i]).abs() <= 1e-12 * (c * rhs[i]).abs().max(1.0));
        }
    }

    #[test]
    fn joint_threshold_ignores_the_order_of_ties(
        mag in 0.1..5.0f64,
        ties in 2usize..5,
        rest in vec_in(0..4, 5.0),
        lambda in 0.0..6.0f64,
        rot in 0usize..8,
    ) {
        let mut z: Vec<f64> = (0..ties).map(|i| if i % 2 == 0 { mag } else { -mag }).collect();
        z.extend(rest);
        let t = joint_threshold(&z, lambda).unwrap();
        let n = z.len();
        let perm: Vec<usize> = (0..n).map(|i| (i + rot) % n).collect();
        let zp: Vec<f64> = perm.iter().map(|&i| z[i]).collect();
        let tp = joint_threshold(&zp, lambda).unwrap();
        for (k, &i) in perm.iter().enumerate() {
            prop_assert!((tp[k] - t[i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn ball_complement_is_joint_threshold(z in vec_in(1..10, 5.0), lambda in 0.0..6.0f64) {
        let ball: Arc<dyn ProxFn> = Arc::new(L1BallIndicator { radius: lambda });
        let c = moreau_complement(ball).prox(&z, 1.0);
        let t = joint_threshold(&z, lambda).unwrap();
        prop_assert!(dist(&c, &t) < 1e-12 * norm2(&z).max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn dual_iterates_stay_feasible(seed in 0u64..10_000, joint in any::<bool>(), constrained in any::<bool>()) {
        let mut p = tiny_instance(seed, constrained);
        let n = p.n_unknowns();
        let group = if joint && n % 2 == 0 { 2 } else { 1 };
        if group == 2 {
            p = p.with_penalty(PenaltyKind::joint(2));
        }
        let lambda = p.lambda;
        let c = SolverConfig { max_iter: 300, rel_tol: 0.0, ..Default::default() };
        let mut worst = 0.0f64;
        let mut obs = |s: &SolverState| {
            if s.iteration >= 1 {
                for row in s.w.chunks(group) {
                    worst = worst.max(norm1(row) - lambda);
                }
            }
        };
        for alg in [Algorithm::Gist, Algorithm::Thresholding] {
            run(alg, &p, &c, Some(&mut obs as &mut dyn FnMut(&SolverState))).unwrap();
        }
        prop_assert!(worst <= 1e-12 * lambda.max(1.0), "{worst}");
    }
}
