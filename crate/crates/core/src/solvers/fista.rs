//! FISTA with the standard momentum sequence `t ← (1 + √(1 + 4t²))/2`.

use super::driver::{Scheme, SolverState};
use super::{PenaltyKind, ProblemSpec, StepSizes};
use crate::linops::LinearMap;

pub(crate) struct Fista<'a> {
    k: &'a LinearMap,
    y: &'a [f64],
    lambda: f64,
    penalty: &'a PenaltyKind,
    tau: f64,
    t: f64,
    z: Vec<f64>,
    x_prev: Vec<f64>,
    kz: Vec<f64>,
    u: Vec<f64>,
}

impl<'a> Fista<'a> {
    pub(crate) fn new(p: &'a ProblemSpec, steps: &StepSizes) -> Self {
        let n = p.n_unknowns();
        Fista {
            k: &p.k,
            y: &p.y,
            lambda: p.lambda,
            penalty: &p.penalty,
            tau: steps.tau1,
            t: 1.0,
            z: vec![0.0; n],
            x_prev: vec![0.0; n],
            kz: vec![0.0; p.k.rows()],
            u: vec![0.0; n],
        }
    }
}

impl Scheme for Fista<'_> {
    fn reset(&mut self, s: &SolverState) {
        self.z.copy_from_slice(&s.x);
        self.x_prev.copy_from_slice(&s.x);
        self.t = 1.0;
    }

    fn step(&mut self, s: &mut SolverState) {
        let tau = self.tau;
        self.k.apply_into(&self.z, &mut self.kz);
        self.kz.iter_mut().zip(self.y).for_each(|(r, y)| *r = y - *r);
        self.k.adjoint_into(&self.kz, &mut self.u);
        self.u
            .iter_mut()
            .zip(&self.z)
            .for_each(|(u, z)| *u = z + tau * *u);

        self.x_prev.copy_from_slice(&s.x);
        s.x.copy_from_slice(&self.u);
        self.penalty.shrink(&mut s.x, tau * self.lambda);
        for i in 0..s.w.len() {
            s.w[i] = (self.u[i] - s.x[i]) / tau;
        }

        let t_next = (1.0 + (1.0 + 4.0 * self.t * self.t).sqrt()) / 2.0;
        let beta = (self.t - 1.0) / t_next;
        for i in 0..self.z.len() {
            self.z[i] = s.x[i] + beta * (s.x[i] - self.x_prev[i]);
        }
        self.t = t_next;
    }
}
