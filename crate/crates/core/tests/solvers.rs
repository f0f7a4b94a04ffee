mod common;

use std::sync::Arc;

use cgist_core::linops::{norm1, norm2, norm_inf, DenseMatrix, LinearMap};
use cgist_core::oracle::{oracle_basis_pursuit_tiny, oracle_solve_tiny};
use cgist_core::prox::{soft_threshold, L1Norm};
use cgist_core::solvers::{
    kkt_residuals, objective, run, solve_basis_pursuit, solve_cista, solve_constrained_gist,
    solve_fista, solve_gist, solve_ista, solve_l1_constrained, Algorithm, PenaltyKind,
    ProblemSpec, SolveError, SolverConfig, SolverState,
};
use common::*;

fn long() -> SolverConfig {
    SolverConfig {
        max_iter: 200_000,
        rel_tol: 1e-14,
        ..Default::default()
    }
}

fn fixed(n: usize) -> SolverConfig {
    SolverConfig {
        max_iter: n,
        rel_tol: 0.0,
        ..Default::default()
    }
}

fn iterates(alg: Algorithm, p: &ProblemSpec, c: &SolverConfig) -> Vec<SolverState> {
    let mut out = Vec::new();
    let mut obs = |s: &SolverState| out.push(s.clone());
    run(alg, p, c, Some(&mut obs)).unwrap();
    out
}

#[test]
fn scalar_problem_converges_to_soft_threshold() {
    let p = ProblemSpec::new(LinearMap::identity(1), vec![2.0], 1.0);
    let r = solve_constrained_gist(&p, &long()).unwrap();
    assert!((r.x()[0] - 1.0).abs() < 1e-10, "{:?}", r.x());
    assert!(r.converged);
}

#[test]
fn two_variable_constrained_example() {
    let b = DenseMatrix::from_rows(&[vec![1.0, -1.0]]).unwrap();
    let p = ProblemSpec::new(LinearMap::identity(2), vec![1.0, 1.0], 0.5)
        .with_constraint(b.into(), vec![0.0]);
    for r in [
        solve_constrained_gist(&p, &long()).unwrap(),
        solve_cista(&p, &long()).unwrap(),
    ] {
        assert!(max_abs_diff(r.x(), &[0.5, 0.5]) < 1e-9, "{:?}", r.x());
        assert!(r.kkt_residuals.primal_feasibility < 1e-10);
        assert!(r.kkt_residuals.max() < 1e-8);
    }
    let o = oracle_solve_tiny(&p).unwrap();
    assert!(max_abs_diff(&o.x, &[0.5, 0.5]) < 1e-12);
}

#[test]
fn zero_lambda_is_least_squares() {
    let k = DenseMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
    let p = ProblemSpec::new(k.into(), vec![3.0, 5.0], 0.0);
    let r = solve_constrained_gist(&p, &long()).unwrap();
    // K⁻¹y = (0.8, 1.4)
    assert!(max_abs_diff(r.x(), &[0.8, 1.4]) < 1e-8, "{:?}", r.x());
}

#[test]
fn gist_without_constraint_equals_ista() {
    for seed in 0..5 {
        let p = tiny_instance(seed, false);
        let a = iterates(Algorithm::Gist, &p, &fixed(50));
        let b = iterates(Algorithm::Thresholding, &p, &fixed(50));
        for (s, t) in a.iter().zip(&b) {
            assert!(max_abs_diff(&s.x, &t.x) < 1e-12);
        }
    }
}

#[test]
fn total_variation_matches_oracle() {
    // forward differences on 4 samples of a step
    let d = DenseMatrix::from_rows(&[
        vec![-1.0, 1.0, 0.0, 0.0],
        vec![0.0, -1.0, 1.0, 0.0],
        vec![0.0, 0.0, -1.0, 1.0],
    ])
    .unwrap();
    let y = vec![0.0, 0.1, 0.9, 1.0];
    let p = ProblemSpec::new(LinearMap::identity(4), y.clone(), 0.2).with_penalty_map(d.into());
    let r = solve_gist(&p, &long()).unwrap();
    let o = oracle_solve_tiny(&p).unwrap();
    assert!(max_abs_diff(r.x(), &o.x) < 1e-7, "{:?} vs {:?}", r.x(), o.x);
    let jump = r.x()[2] - r.x()[1];
    assert!(jump < y[2] - y[1] && jump > 0.0);
    // the flat parts stay flat
    assert!((r.x()[0] - r.x()[1]).abs() < 1e-8 && (r.x()[2] - r.x()[3]).abs() < 1e-8);
}

#[test]
fn ista_identity_and_zero_data() {
    let y = vec![3.0, -0.2, 0.7, -2.0];
    let p = ProblemSpec::new(LinearMap::identity(4), y.clone(), 0.5);
    let r = solve_ista(&p, &long()).unwrap();
    let expect = soft_threshold(&y, 0.5).unwrap();
    assert!(max_abs_diff(r.x(), &expect) < 1e-12);

    let mut g = rng(3);
    let k: LinearMap = gaussian(5, 7, &mut g).into();
    let p = ProblemSpec::new(k, vec![0.0; 5], 0.3);
    let r = solve_ista(&p, &long()).unwrap();
    assert!(r.x().iter().all(|&v| v == 0.0));
}

#[test]
fn ista_objective_is_monotone() {
    let mut g = rng(11);
    let k: LinearMap = gaussian(10, 25, &mut g).into();
    let mut x0 = vec![0.0; 25];
    x0[3] = 1.0;
    x0[10] = -2.0;
    x0[17] = 0.5;
    let mut y = k.apply(&x0).unwrap();
    let e = gaussian_vec(10, &mut g);
    y.iter_mut().zip(&e).for_each(|(a, b)| *a += 0.01 * b);
    let p = ProblemSpec::new(k, y, 0.05);
    let c = SolverConfig {
        trace_every: 1,
        ..fixed(2000)
    };
    let r = solve_ista(&p, &c).unwrap();
    let obj = r.objective_trace();
    for w in obj.windows(2) {
        assert!(w[1] <= w[0] + 1e-12 * w[0].abs(), "{} > {}", w[1], w[0]);
    }
}

#[test]
fn cista_antisymmetric_example() {
    let b = DenseMatrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
    let p = ProblemSpec::new(LinearMap::identity(2), vec![1.0, -1.0], 0.5)
        .with_constraint(b.into(), vec![0.0]);
    let r = solve_cista(&p, &long()).unwrap();
    assert!(max_abs_diff(r.x(), &[0.5, -0.5]) < 1e-9);
    let o = oracle_solve_tiny(&p).unwrap();
    assert!(max_abs_diff(&o.x, &[0.5, -0.5]) < 1e-12);
}

#[test]
fn cista_constraint_norm_decays() {
    let mut g = rng(5);
    let k: LinearMap = gaussian(8, 12, &mut g).into();
    let b = gaussian(4, 12, &mut g);
    let xf = gaussian_vec(12, &mut g);
    let rhs: Vec<f64> = b.matvec(&xf).iter().map(|v| 100.0 * v).collect();
    let y = gaussian_vec(8, &mut g);
    let p = ProblemSpec::new(k, y, 0.2).with_constraint(b.into(), rhs);
    let r = solve_cista(&p, &long()).unwrap();
    assert!(r.kkt_residuals.primal_feasibility < 1e-6);
    let tail = r.constraint_norm_trace();
    assert!(tail.last().unwrap() < &tail[0]);
}

#[test]
fn basis_pursuit_examples() {
    let b: LinearMap = DenseMatrix::from_rows(&[vec![1.0, 2.0]]).unwrap().into();
    let r = solve_basis_pursuit(&b, &[2.0], &long(), 1.0).unwrap();
    assert!(max_abs_diff(r.x(), &[0.0, 1.0]) < 1e-8, "{:?}", r.x());
    let r = solve_basis_pursuit(&b, &[0.0], &long(), 1.0).unwrap();
    assert!(r.x().iter().all(|&v| v == 0.0));
    assert!(solve_basis_pursuit(&b, &[1.0], &long(), 0.0).is_err());
}

#[test]
fn basis_pursuit_matches_support_enumeration() {
    for seed in 0..5 {
        let mut g = rng(100 + seed);
        let b = gaussian(6, 12, &mut g);
        let mut x0 = vec![0.0; 12];
        x0[(seed as usize * 5) % 12] = 1.5;
        x0[(seed as usize * 7 + 3) % 12] = -0.7;
        let rhs = b.matvec(&x0);
        let op: LinearMap = b.into();
        let r = solve_basis_pursuit(&op, &rhs, &long(), 1.0).unwrap();
        let o = oracle_basis_pursuit_tiny(&op, &rhs).unwrap();
        assert!((norm1(r.x()) - o.objective).abs() < 1e-8);
        assert!(max_abs_diff(r.x(), &o.x) < 1e-6);
    }
}

#[test]
fn l1_ball_examples() {
    let k = LinearMap::identity(1);
    let r = solve_l1_constrained(&k, &[2.0], None, &[], 1.0, &long()).unwrap();
    assert!((r.x()[0] - 1.0).abs() < 1e-10);

    let mut g = rng(8);
    let km: LinearMap = gaussian(6, 4, &mut g).into();
    let y = gaussian_vec(6, &mut g);
    let b = DenseMatrix::from_rows(&[vec![1.0, 1.0, 1.0, 1.0]]).unwrap();
    let bop: LinearMap = b.into();
    let ls = oracle_solve_tiny(
        &ProblemSpec::new(km.clone(), y.clone(), 0.0).with_constraint(bop.clone(), vec![0.5]),
    )
    .unwrap();
    let radius = norm1(&ls.x) * 1.5;
    let r = solve_l1_constrained(&km, &y, Some(&bop), &[0.5], radius, &long()).unwrap();
    assert!(max_abs_diff(r.x(), &ls.x) < 1e-7, "{:?} vs {:?}", r.x(), ls.x);
    assert!(norm1(r.x()) < radius);

    let r = solve_l1_constrained(&km, &y, Some(&bop), &[0.0], 0.0, &long()).unwrap();
    assert!(norm_inf(r.x()) < 1e-12);
}

#[test]
fn fista_and_ista_share_the_fixed_point() {
    for seed in 0..3 {
        let p = tiny_instance(seed + 40, false);
        let a = solve_ista(&p, &long()).unwrap();
        let b = solve_fista(&p, &long()).unwrap();
        assert!(max_abs_diff(a.x(), b.x()) < 1e-8);
    }
    let p = ProblemSpec::new(LinearMap::identity(3), vec![1.0, -2.0, 0.5], 0.0);
    let r = solve_fista(&p, &long()).unwrap();
    assert!(max_abs_diff(r.x(), &[1.0, -2.0, 0.5]) < 1e-10);
}

fn iterations_to(alg: Algorithm, p: &ProblemSpec, limit: &[f64], tol: f64) -> usize {
    let mut hit = None;
    let mut obs = |s: &SolverState| {
        if hit.is_none() {
            let d: Vec<f64> = s.x.iter().zip(limit).map(|(a, b)| a - b).collect();
            if norm2(&d) <= tol * norm2(limit) {
                hit = Some(s.iteration);
            }
        }
    };
    run(alg, p, &fixed(20_000), Some(&mut obs)).unwrap();
    hit.unwrap_or(usize::MAX)
}

#[test]
fn fista_is_faster_than_gist() {
    // ill-conditioned columns make acceleration pay off
    let mut g = rng(21);
    let mut k = gaussian(30, 30, &mut g);
    for r in 0..30 {
        for c in 0..30 {
            k.set(r, c, k.get(r, c) / (1.0 + c as f64 / 5.0));
        }
    }
    let y = gaussian_vec(30, &mut g);
    let k: LinearMap = k.into();
    let lambda = 1e-2 * kty_inf(&k, &y);
    let p = ProblemSpec::new(k, y, lambda);
    let limit = solve_fista(&p, &long()).unwrap().final_state.x;
    let f = iterations_to(Algorithm::Fista, &p, &limit, 1e-6);
    let s = iterations_to(Algorithm::Gist, &p, &limit, 1e-6);
    assert!(f < s, "fista {f}, gist {s}");
}

#[test]
fn dual_iterates_stay_in_the_ball() {
    let p = tiny_instance(7, true);
    for alg in [Algorithm::Gist, Algorithm::Thresholding] {
        for s in iterates(alg, &p, &fixed(300)).iter().skip(1) {
            assert!(norm_inf(&s.w) <= p.lambda * (1.0 + 1e-12) + 1e-12);
        }
    }
    let q = tiny_instance(8, false).with_penalty(PenaltyKind::joint(1));
    for s in iterates(Algorithm::Gist, &q, &fixed(100)).iter().skip(1) {
        assert!(norm_inf(&s.w) <= q.lambda * (1.0 + 1e-12));
    }
}

#[test]
fn converged_point_beats_feasible_perturbations() {
    let mut g = rng(31);
    let k: LinearMap = gaussian(6, 6, &mut g).into();
    let b = gaussian(2, 6, &mut g);
    let y = gaussian_vec(6, &mut g);
    let rhs = b.matvec(&gaussian_vec(6, &mut g));
    let basis = null_space(&b);
    assert_eq!(basis.len(), 4);
    let p = ProblemSpec::new(k, y, 0.3).with_constraint(b.into(), rhs);
    let r = solve_constrained_gist(&p, &long()).unwrap();
    let f0 = objective(&p, r.x()).unwrap();
    for _ in 0..1000 {
        let scale = 10f64.powf(rand::Rng::gen_range(&mut g, -4.0..0.0));
        let mut z = r.x().to_vec();
        for v in &basis {
            let c: f64 = rand::Rng::sample(&mut g, rand_distr::StandardNormal);
            z.iter_mut().zip(v).for_each(|(a, b)| *a += scale * c * b);
        }
        assert!(f0 <= objective(&p, &z).unwrap() + 1e-8);
    }
}

#[test]
fn generic_prox_matches_separable_penalty() {
    let p = tiny_instance(12, true);
    let q = p
        .clone()
        .with_penalty(PenaltyKind::GenericProx(Arc::new(L1Norm { weight: 1.0 })));
    let a = iterates(Algorithm::Gist, &p, &fixed(100));
    let b = iterates(Algorithm::Gist, &q, &fixed(100));
    for (s, t) in a.iter().zip(&b) {
        assert!(max_abs_diff(&s.x, &t.x) < 1e-12);
    }
    let r = solve_constrained_gist(&q, &long()).unwrap();
    let o = oracle_solve_tiny(&p).unwrap();
    assert!((objective(&p, r.x()).unwrap() - o.objective).abs() < 1e-8 * o.objective.max(1.0));
}

#[test]
fn joint_penalty_gist_equals_cista() {
    let mut g = rng(13);
    let k: LinearMap = gaussian(6, 8, &mut g).into();
    let b = gaussian(2, 8, &mut g);
    let rhs = b.matvec(&gaussian_vec(8, &mut g));
    let y = gaussian_vec(6, &mut g);
    let p = ProblemSpec::new(k, y, 0.4)
        .with_constraint(b.into(), rhs)
        .with_penalty(PenaltyKind::joint(2));
    let a = iterates(Algorithm::Gist, &p, &fixed(50));
    let c = iterates(Algorithm::Thresholding, &p, &fixed(50));
    for (s, t) in a.iter().zip(&c) {
        assert!(max_abs_diff(&s.x, &t.x) < 1e-12);
    }
    let r = solve_cista(&p, &long()).unwrap();
    assert!(r.kkt_residuals.max() < 1e-8, "{:?}", r.kkt_residuals);
}

#[test]
fn errors_are_reported() {
    let p = tiny_instance(1, true);
    let bad_alpha = SolverConfig {
        alpha: 0.4,
        ..Default::default()
    };
    assert!(matches!(
        solve_constrained_gist(&p, &bad_alpha),
        Err(SolveError::InvalidAlpha(_))
    ));
    let mut q = p.clone();
    q.y.push(1.0);
    assert!(matches!(solve_cista(&q, &long()), Err(SolveError::Problem(_))));
    assert!(solve_ista(&p, &long()).is_err());
    assert!(solve_fista(&p, &long()).is_err());

    let wild = SolverConfig {
        tau1: Some(50.0),
        tau3: Some(50.0),
        check_steps: false,
        ..fixed(10_000)
    };
    assert!(matches!(
        solve_cista(&p, &wild),
        Err(SolveError::Diverged { .. })
    ));
}

#[test]
fn trace_length_and_kkt_at_oracle_solution() {
    let p = tiny_instance(2, true);
    for (n, every) in [(95, 10), (100, 10), (7, 3), (1, 5)] {
        let c = SolverConfig {
            trace_every: every,
            ..fixed(n)
        };
        let r = solve_cista(&p, &c).unwrap();
        assert_eq!(r.trace.len(), n.div_ceil(every));
        assert_eq!(r.iterations_run, n);
        assert!(!r.converged);
    }
    let o = oracle_solve_tiny(&p).unwrap();
    assert!(o.kkt_ok);
    let s = SolverState {
        x: o.x,
        w: o.w,
        v: o.v,
        iteration: 0,
    };
    assert!(kkt_residuals(&p, &s).max() < 1e-9);
}

#[test]
fn warm_start_from_a_solution_stops_quickly() {
    let p = tiny_instance(4, true);
    let r = solve_cista(&p, &long()).unwrap();
    let c = SolverConfig {
        warm_start: Some(r.final_state.clone()),
        rel_tol: 1e-12,
        ..Default::default()
    };
    let again = solve_cista(&p, &c).unwrap();
    assert!(again.converged && again.iterations_run < 5);
    let bad = SolverConfig {
        warm_start: Some(SolverState {
            x: vec![0.0],
            w: vec![],
            v: vec![],
            iteration: 0,
        }),
        ..Default::default()
    };
    assert!(solve_cista(&p, &bad).is_err());
}
