//! CDF(4,2) interpolating wavelets by lifting, applied separably per face
//! and per channel with a Mallat layout.
//!
//! One analysis level on a line of even length `m = 2h`, with `s = x[0::2]`
//! and `d = x[1::2]`:
//!
//! ```text
//! d[k] -= (−s[k−1] + 9 s[k] + 9 s[k+1] − s[k+2]) / 16
//! s[k] += (d[k−1] + d[k]) / 4
//! out = (√2·s, d/√2)
//! ```
//!
//! Boundaries use whole-point symmetric extension of the signal.

use std::f64::consts::SQRT_2;

use crate::linops::LinearMap;

use super::MegError;

#[inline]
fn sidx(k: isize, h: usize) -> usize {
    let h = h as isize;
    (if k < 0 {
        -k
    } else if k >= h {
        2 * h - 1 - k
    } else {
        k
    }) as usize
}

#[inline]
fn didx(k: isize) -> usize {
    k.max(0) as usize
}

/// `(index into s, weight)` of the prediction for `d[k]`.
#[inline]
fn stencil(k: usize, h: usize) -> [(usize, f64); 4] {
    let k = k as isize;
    [
        (sidx(k - 1, h), -1.0 / 16.0),
        (sidx(k, h), 9.0 / 16.0),
        (sidx(k + 1, h), 9.0 / 16.0),
        (sidx(k + 2, h), -1.0 / 16.0),
    ]
}

fn forward_line(x: &[f64], out: &mut [f64], s: &mut [f64], d: &mut [f64]) {
    let h = x.len() / 2;
    for k in 0..h {
        s[k] = x[2 * k];
        d[k] = x[2 * k + 1];
    }
    for k in 0..h {
        d[k] -= stencil(k, h).iter().map(|&(i, c)| c * s[i]).sum::<f64>();
    }
    for k in 0..h {
        s[k] += (d[didx(k as isize - 1)] + d[k]) / 4.0;
    }
    for k in 0..h {
        out[k] = s[k] * SQRT_2;
        out[h + k] = d[k] / SQRT_2;
    }
}

fn inverse_line(c: &[f64], out: &mut [f64], s: &mut [f64], d: &mut [f64]) {
    let h = c.len() / 2;
    for k in 0..h {
        s[k] = c[k] / SQRT_2;
        d[k] = c[h + k] * SQRT_2;
    }
    for k in 0..h {
        s[k] -= (d[didx(k as isize - 1)] + d[k]) / 4.0;
    }
    for k in 0..h {
        d[k] += stencil(k, h).iter().map(|&(i, c)| c * s[i]).sum::<f64>();
    }
    for k in 0..h {
        out[2 * k] = s[k];
        out[2 * k + 1] = d[k];
    }
}

/// Transpose of [`inverse_line`]: each lifting step transposed, in reverse.
fn inverse_adjoint_line(x: &[f64], out: &mut [f64], s: &mut [f64], d: &mut [f64]) {
    let h = x.len() / 2;
    for k in 0..h {
        s[k] = x[2 * k];
        d[k] = x[2 * k + 1];
    }
    for k in 0..h {
        for (i, c) in stencil(k, h) {
            s[i] += c * d[k];
        }
    }
    for k in 0..h {
        d[didx(k as isize - 1)] -= s[k] / 4.0;
        d[k] -= s[k] / 4.0;
    }
    for k in 0..h {
        out[k] = s[k] / SQRT_2;
        out[h + k] = d[k] * SQRT_2;
    }
}

type LineFn = fn(&[f64], &mut [f64], &mut [f64], &mut [f64]);

/// Separable 2D multilevel transform of every `n × n` block of a field.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FaceWavelet {
    pub n_face: usize,
    pub levels: usize,
}

#[derive(Clone, Copy)]
enum Pass {
    Rows,
    Cols,
}

impl FaceWavelet {
    pub fn max_levels(n_face: usize) -> usize {
        (n_face.trailing_zeros() as usize).saturating_sub(2)
    }

    /// Needs `n_face` a power of two ≥ 8 and `levels ≤ log2(n_face) − 2`,
    /// so the coarsest block is at least 4 × 4.
    pub fn new(n_face: usize, levels: usize) -> Result<Self, MegError> {
        if n_face < 8 || !n_face.is_power_of_two() {
            return Err(MegError::InvalidGrid(format!(
                "wavelet needs a power-of-two face size of at least 8, got {n_face}"
            )));
        }
        let max = Self::max_levels(n_face);
        if levels > max {
            return Err(MegError::InvalidLevels { levels, max });
        }
        Ok(FaceWavelet { n_face, levels })
    }

    pub fn with_max_levels(n_face: usize) -> Result<Self, MegError> {
        Self::new(n_face, Self::max_levels(n_face))
    }

    fn block_len(&self) -> usize {
        self.n_face * self.n_face
    }

    fn check(&self, len: usize) {
        assert!(
            len % self.block_len() == 0,
            "field length {len} is not a multiple of {}",
            self.block_len()
        );
    }

    fn pass(&self, block: &mut [f64], m: usize, pass: Pass, f: LineFn, buf: &mut Buffers) {
        let n = self.n_face;
        for line in 0..m {
            let at = |k: usize| match pass {
                Pass::Rows => line * n + k,
                Pass::Cols => k * n + line,
            };
            for k in 0..m {
                buf.line[k] = block[at(k)];
            }
            f(&buf.line[..m], &mut buf.out[..m], &mut buf.s, &mut buf.d);
            for k in 0..m {
                block[at(k)] = buf.out[k];
            }
        }
    }

    /// Analysis, in place.
    pub fn forward_in_place(&self, data: &mut [f64]) {
        self.check(data.len());
        let mut buf = Buffers::new(self.n_face);
        for block in data.chunks_exact_mut(self.block_len()) {
            for l in 0..self.levels {
                let m = self.n_face >> l;
                self.pass(block, m, Pass::Rows, forward_line, &mut buf);
                self.pass(block, m, Pass::Cols, forward_line, &mut buf);
            }
        }
    }

    /// Synthesis, in place.
    pub fn inverse_in_place(&self, data: &mut [f64]) {
        self.check(data.len());
        let mut buf = Buffers::new(self.n_face);
        for block in data.chunks_exact_mut(self.block_len()) {
            for l in (0..self.levels).rev() {
                let m = self.n_face >> l;
                self.pass(block, m, Pass::Cols, inverse_line, &mut buf);
                self.pass(block, m, Pass::Rows, inverse_line, &mut buf);
            }
        }
    }

    /// Transpose of synthesis, in place.
    pub fn inverse_adjoint_in_place(&self, data: &mut [f64]) {
        self.check(data.len());
        let mut buf = Buffers::new(self.n_face);
        for block in data.chunks_exact_mut(self.block_len()) {
            for l in 0..self.levels {
                let m = self.n_face >> l;
                self.pass(block, m, Pass::Rows, inverse_adjoint_line, &mut buf);
                self.pass(block, m, Pass::Cols, inverse_adjoint_line, &mut buf);
            }
        }
    }

    pub fn forward(&self, field: &[f64]) -> Vec<f64> {
        let mut v = field.to_vec();
        self.forward_in_place(&mut v);
        v
    }

    pub fn inverse(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut v = coeffs.to_vec();
        self.inverse_in_place(&mut v);
        v
    }

    pub fn inverse_adjoint(&self, field: &[f64]) -> Vec<f64> {
        let mut v = field.to_vec();
        self.inverse_adjoint_in_place(&mut v);
        v
    }

    /// Synthesis `W⁻¹` on `len` entries as a square [`LinearMap`].
    pub fn synthesis_map(&self, len: usize) -> LinearMap {
        self.check(len);
        let (a, b) = (*self, *self);
        LinearMap::callback(
            "wavelet synthesis",
            len,
            len,
            move |x, out| {
                out.copy_from_slice(x);
                a.inverse_in_place(out);
            },
            move |y, out| {
                out.copy_from_slice(y);
                b.inverse_adjoint_in_place(out);
            },
        )
    }
}

struct Buffers {
    line: Vec<f64>,
    out: Vec<f64>,
    s: Vec<f64>,
    d: Vec<f64>,
}

impl Buffers {
    fn new(n: usize) -> Self {
        Buffers {
            line: vec![0.0; n],
            out: vec![0.0; n],
            s: vec![0.0; n / 2],
            d: vec![0.0; n / 2],
        }
    }
}
