//! The `A = Id` specialization: a forward step followed by the penalty's
//! thresholding (soft, joint, generic prox or ℓ1-ball projection), with a
//! multiplier step for the constraint when present.

use super::driver::{Scheme, SolverState};
use super::{PenaltyKind, ProblemSpec, StepSizes};
use crate::linops::LinearMap;

pub(crate) struct Thresholding<'a> {
    k: &'a LinearMap,
    b: Option<(&'a LinearMap, &'a [f64])>,
    y: &'a [f64],
    lambda: f64,
    penalty: &'a PenaltyKind,
    tau1: f64,
    rho: f64,
    alpha: f64,
    kx: Vec<f64>,
    bx: Vec<f64>,
    vbar: Vec<f64>,
    u: Vec<f64>,
    tmp: Vec<f64>,
}

impl<'a> Thresholding<'a> {
    pub(crate) fn new(p: &'a ProblemSpec, steps: &StepSizes) -> Self {
        let n = p.n_unknowns();
        let m = p.n_constraints();
        Thresholding {
            k: &p.k,
            b: p.constraint.as_ref().map(|c| (&c.op, c.rhs.as_slice())),
            y: &p.y,
            lambda: p.lambda,
            penalty: &p.penalty,
            tau1: steps.tau1,
            rho: steps.tau3 / steps.tau1,
            alpha: steps.alpha,
            kx: vec![0.0; p.k.rows()],
            bx: vec![0.0; m],
            vbar: vec![0.0; m],
            u: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }
}

impl Scheme for Thresholding<'_> {
    fn step(&mut self, s: &mut SolverState) {
        let t1 = self.tau1;
        if let Some((b, rhs)) = self.b {
            b.apply_into(&s.x, &mut self.bx);
            for i in 0..rhs.len() {
                self.vbar[i] = s.v[i] - self.rho * (self.bx[i] - rhs[i]);
            }
        }

        if self.k.is_zero() {
            self.u.iter_mut().for_each(|u| *u = 0.0);
        } else {
            self.k.apply_into(&s.x, &mut self.kx);
            self.kx.iter_mut().zip(self.y).for_each(|(r, y)| *r = y - *r);
            self.k.adjoint_into(&self.kx, &mut self.u);
        }
        if let Some((b, _)) = self.b {
            b.adjoint_into(&self.vbar, &mut self.tmp);
            self.u.iter_mut().zip(&self.tmp).for_each(|(u, t)| *u += t);
        }
        self.u
            .iter_mut()
            .zip(&s.x)
            .for_each(|(u, x)| *u = x + t1 * *u);

        s.x.copy_from_slice(&self.u);
        self.penalty.shrink(&mut s.x, t1 * self.lambda);
        // the dual variable is what the shrinkage removed
        for i in 0..s.w.len() {
            s.w[i] = (self.u[i] - s.x[i]) / t1;
        }

        if let Some((b, rhs)) = self.b {
            b.apply_into(&s.x, &mut self.bx);
            let c = self.rho / self.alpha;
            for i in 0..rhs.len() {
                s.v[i] -= c * (self.bx[i] - rhs[i]);
            }
        }
    }
}
