//! Predictor-corrector primal-dual iteration with step sizes τ1, τ2, τ3.

use super::driver::{Scheme, SolverState};
use super::{PenaltyKind, ProblemSpec, StepSizes};
use crate::linops::LinearMap;

pub(crate) struct Gist<'a> {
    k: &'a LinearMap,
    a: &'a LinearMap,
    b: Option<(&'a LinearMap, &'a [f64])>,
    y: &'a [f64],
    lambda: f64,
    penalty: &'a PenaltyKind,
    tau1: f64,
    // τ3/τ1: converts the multiplier step to problem units
    rho: f64,
    gamma: f64,
    alpha: f64,
    kx: Vec<f64>,
    bx: Vec<f64>,
    vbar: Vec<f64>,
    g: Vec<f64>,
    xbar: Vec<f64>,
    ax: Vec<f64>,
    tmp: Vec<f64>,
}

impl<'a> Gist<'a> {
    pub(crate) fn new(p: &'a ProblemSpec, steps: &StepSizes) -> Self {
        let n = p.n_unknowns();
        let m = p.n_constraints();
        Gist {
            k: &p.k,
            a: &p.a,
            b: p.constraint.as_ref().map(|c| (&c.op, c.rhs.as_slice())),
            y: &p.y,
            lambda: p.lambda,
            penalty: &p.penalty,
            tau1: steps.tau1,
            rho: steps.tau3 / steps.tau1,
            gamma: steps.tau2 / steps.tau1,
            alpha: steps.alpha,
            kx: vec![0.0; p.k.rows()],
            bx: vec![0.0; m],
            vbar: vec![0.0; m],
            g: vec![0.0; n],
            xbar: vec![0.0; n],
            ax: vec![0.0; p.a.rows()],
            tmp: vec![0.0; n],
        }
    }
}

impl Scheme for Gist<'_> {
    fn step(&mut self, s: &mut SolverState) {
        let t1 = self.tau1;

        // v̄ = v − ρ(Bx − b)
        if let Some((b, rhs)) = self.b {
            b.apply_into(&s.x, &mut self.bx);
            for i in 0..rhs.len() {
                self.vbar[i] = s.v[i] - self.rho * (self.bx[i] - rhs[i]);
            }
        }

        // g = x + τ1 (Kᵀ(y − Kx) + Bᵀv̄)
        self.k.apply_into(&s.x, &mut self.kx);
        self.kx.iter_mut().zip(self.y).for_each(|(r, y)| *r = y - *r);
        self.k.adjoint_into(&self.kx, &mut self.g);
        if let Some((b, _)) = self.b {
            b.adjoint_into(&self.vbar, &mut self.tmp);
            self.g.iter_mut().zip(&self.tmp).for_each(|(g, t)| *g += t);
        }
        self.g
            .iter_mut()
            .zip(&s.x)
            .for_each(|(g, x)| *g = x + t1 * *g);

        // x̄ = g − τ1 Aᵀw
        self.a.adjoint_into(&s.w, &mut self.tmp);
        for i in 0..self.g.len() {
            self.xbar[i] = self.g[i] - t1 * self.tmp[i];
        }

        // w = prox(w + (τ2/τ1) A x̄)
        self.a.apply_into(&self.xbar, &mut self.ax);
        s.w.iter_mut()
            .zip(&self.ax)
            .for_each(|(w, a)| *w += self.gamma * a);
        self.penalty.dual_project(&mut s.w, self.lambda, self.gamma);

        // x = g − τ1 Aᵀw
        self.a.adjoint_into(&s.w, &mut self.tmp);
        for i in 0..self.g.len() {
            s.x[i] = self.g[i] - t1 * self.tmp[i];
        }

        // v = v − (ρ/α)(Bx − b)
        if let Some((b, rhs)) = self.b {
            b.apply_into(&s.x, &mut self.bx);
            let c = self.rho / self.alpha;
            for i in 0..rhs.len() {
                s.v[i] -= c * (self.bx[i] - rhs[i]);
            }
        }
    }
}
