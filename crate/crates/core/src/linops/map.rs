use std::fmt;
use std::sync::Arc;

use super::dense::DenseMatrix;
use super::LinopError;

type ApplyFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// A matrix-free operator given by a forward and an adjoint callback.
///
/// Both callbacks receive a zero-initialized output buffer of the right length.
pub struct CallbackMap {
    rows: usize,
    cols: usize,
    name: String,
    forward: Box<ApplyFn>,
    adjoint: Box<ApplyFn>,
}

impl fmt::Debug for CallbackMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CallbackMap")
            .field("name", &self.name)
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .finish()
    }
}

/// Discriminant of a [`LinearMap`], mostly for diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MapKind {
    Dense,
    Composition,
    Scaled,
    Stacked,
    Zero,
    Identity,
    Callback,
}

/// A linear operator with forward and adjoint application.
///
/// Operators are immutable after construction and cheap to clone; the heavy
/// variants share their data behind an `Arc`.
#[derive(Clone, Debug)]
pub enum LinearMap {
    Dense(Arc<DenseMatrix>),
    Identity(usize),
    Zero { rows: usize, cols: usize },
    Scaled(f64, Box<LinearMap>),
    /// `outer ∘ inner`
    Composition(Box<LinearMap>, Box<LinearMap>),
    /// Vertical concatenation `[op_0; op_1; ...]`.
    Stacked(Vec<LinearMap>),
    Callback(Arc<CallbackMap>),
}

impl From<DenseMatrix> for LinearMap {
    fn from(m: DenseMatrix) -> Self {
        LinearMap::Dense(Arc::new(m))
    }
}

impl LinearMap {
    pub fn dense(m: DenseMatrix) -> Self {
        m.into()
    }

    pub fn identity(n: usize) -> Self {
        LinearMap::Identity(n)
    }

    pub fn zero(rows: usize, cols: usize) -> Self {
        LinearMap::Zero { rows, cols }
    }

    pub fn scaled(factor: f64, op: LinearMap) -> Self {
        LinearMap::Scaled(factor, Box::new(op))
    }

    /// `outer ∘ inner`, i.e. `x ↦ outer(inner(x))`.
    pub fn compose(outer: LinearMap, inner: LinearMap) -> Result<Self, LinopError> {
        if outer.cols() != inner.rows() {
            return Err(LinopError::ComposeMismatch {
                outer_cols: outer.cols(),
                inner_rows: inner.rows(),
            });
        }
        Ok(LinearMap::Composition(Box::new(outer), Box::new(inner)))
    }

    pub fn stack(ops: Vec<LinearMap>) -> Result<Self, LinopError> {
        let cols = match ops.first() {
            Some(op) => op.cols(),
            None => return Err(LinopError::EmptyShape { rows: 0, cols: 0 }),
        };
        if let Some(bad) = ops.iter().find(|op| op.cols() != cols) {
            return Err(LinopError::StackMismatch {
                expected: cols,
                found: bad.cols(),
            });
        }
        Ok(LinearMap::Stacked(ops))
    }

    pub fn callback<F, G>(
        name: impl Into<String>,
        rows: usize,
        cols: usize,
        forward: F,
        adjoint: G,
    ) -> Self
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        G: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        LinearMap::Callback(Arc::new(CallbackMap {
            rows,
            cols,
            name: name.into(),
            forward: Box::new(forward),
            adjoint: Box::new(adjoint),
        }))
    }

    pub fn rows(&self) -> usize {
        match self {
            LinearMap::Dense(m) => m.rows(),
            LinearMap::Identity(n) => *n,
            LinearMap::Zero { rows, .. } => *rows,
            LinearMap::Scaled(_, op) => op.rows(),
            LinearMap::Composition(outer, _) => outer.rows(),
            LinearMap::Stacked(ops) => ops.iter().map(LinearMap::rows).sum(),
            LinearMap::Callback(c) => c.rows,
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            LinearMap::Dense(m) => m.cols(),
            LinearMap::Identity(n) => *n,
            LinearMap::Zero { cols, .. } => *cols,
            LinearMap::Scaled(_, op) => op.cols(),
            LinearMap::Composition(_, inner) => inner.cols(),
            LinearMap::Stacked(ops) => ops[0].cols(),
            LinearMap::Callback(c) => c.cols,
        }
    }

    pub fn kind(&self) -> MapKind {
        match self {
            LinearMap::Dense(_) => MapKind::Dense,
            LinearMap::Identity(_) => MapKind::Identity,
            LinearMap::Zero { .. } => MapKind::Zero,
            LinearMap::Scaled(..) => MapKind::Scaled,
            LinearMap::Composition(..) => MapKind::Composition,
            LinearMap::Stacked(_) => MapKind::Stacked,
            LinearMap::Callback(_) => MapKind::Callback,
        }
    }

    /// True only for the structural identity variant.
    pub fn is_identity(&self) -> bool {
        matches!(self, LinearMap::Identity(_))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            LinearMap::Zero { .. } => true,
            LinearMap::Scaled(s, op) => *s == 0.0 || op.is_zero(),
            _ => false,
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>, LinopError> {
        if x.len() != self.cols() {
            return Err(LinopError::Dimension {
                op: "apply",
                expected: self.cols(),
                found: x.len(),
            });
        }
        let mut out = vec![0.0; self.rows()];
        self.apply_into(x, &mut out);
        Ok(out)
    }

    pub fn adjoint_apply(&self, y: &[f64]) -> Result<Vec<f64>, LinopError> {
        if y.len() != self.rows() {
            return Err(LinopError::Dimension {
                op: "adjoint_apply",
                expected: self.rows(),
                found: y.len(),
            });
        }
        let mut out = vec![0.0; self.cols()];
        self.adjoint_into(y, &mut out);
        Ok(out)
    }

    /// `out = op · x`, overwriting `out`. Lengths are only debug-checked.
    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols());
        debug_assert_eq!(out.len(), self.rows());
        match self {
            LinearMap::Dense(m) => m.matvec_into(x, out),
            LinearMap::Identity(_) => out.copy_from_slice(x),
            LinearMap::Zero { .. } => out.iter_mut().for_each(|v| *v = 0.0),
            LinearMap::Scaled(s, op) => {
                op.apply_into(x, out);
                out.iter_mut().for_each(|v| *v *= s);
            }
            LinearMap::Composition(outer, inner) => {
                let mut tmp = vec![0.0; inner.rows()];
                inner.apply_into(x, &mut tmp);
                outer.apply_into(&tmp, out);
            }
            LinearMap::Stacked(ops) => {
                let mut offset = 0;
                for op in ops {
                    let r = op.rows();
                    op.apply_into(x, &mut out[offset..offset + r]);
                    offset += r;
                }
            }
            LinearMap::Callback(c) => {
                out.iter_mut().for_each(|v| *v = 0.0);
                (c.forward)(x, out);
            }
        }
    }

    /// `out = opᵀ · y`, overwriting `out`.
    pub fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(y.len(), self.rows());
        debug_assert_eq!(out.len(), self.cols());
        match self {
            LinearMap::Dense(m) => m.matvec_t_into(y, out),
            LinearMap::Identity(_) => out.copy_from_slice(y),
            LinearMap::Zero { .. } => out.iter_mut().for_each(|v| *v = 0.0),
            LinearMap::Scaled(s, op) => {
                op.adjoint_into(y, out);
                out.iter_mut().for_each(|v| *v *= s);
            }
            LinearMap::Composition(outer, inner) => {
                let mut tmp = vec![0.0; outer.cols()];
                outer.adjoint_into(y, &mut tmp);
                inner.adjoint_into(&tmp, out);
            }
            LinearMap::Stacked(ops) => {
                out.iter_mut().for_each(|v| *v = 0.0);
                let mut tmp = vec![0.0; out.len()];
                let mut offset = 0;
                for op in ops {
                    let r = op.rows();
                    op.adjoint_into(&y[offset..offset + r], &mut tmp);
                    out.iter_mut().zip(&tmp).for_each(|(o, t)| *o += t);
                    offset += r;
                }
            }
            LinearMap::Callback(c) => {
                out.iter_mut().for_each(|v| *v = 0.0);
                (c.adjoint)(y, out);
            }
        }
    }

    /// Assembles the operator column by column. Meant for small maps.
    pub fn to_dense(&self) -> DenseMatrix {
        if let LinearMap::Dense(m) = self {
            return (**m).clone();
        }
        let (rows, cols) = (self.rows(), self.cols());
        let mut m = DenseMatrix::zeros(rows, cols);
        let mut e = vec![0.0; cols];
        let mut col = vec![0.0; rows];
        for j in 0..cols {
            e[j] = 1.0;
            self.apply_into(&e, &mut col);
            for (i, v) in col.iter().enumerate() {
                m.set(i, j, *v);
            }
            e[j] = 0.0;
        }
        m
    }
}
