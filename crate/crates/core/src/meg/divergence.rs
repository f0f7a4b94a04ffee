//! Finite-volume surface divergence on the cubed sphere.
//!
//! Each cell edge is a great-circle arc. The flux through it is the edge
//! length times the normal component of an edge-midpoint value. Inside a
//! face that value is the average of the two adjacent cell vectors. Grid
//! lines kink across cube edges, where the plain average is off by O(h)
//! along the edge; there each side extrapolates linearly along its own grid
//! line to the shared midpoint and the two extrapolations are averaged, so
//! the flux stays single-valued.

use std::sync::Arc;

use crate::linops::LinearMap;

use super::grid::{faces, CubedSphereGrid, Face, V3};

/// Row-compressed sparse matrix.
#[derive(Clone, Debug)]
pub struct CsrMatrix {
    pub rows: usize,
    pub cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let span = self.row_ptr[r]..self.row_ptr[r + 1];
            *o = self.col_idx[span.clone()]
                .iter()
                .zip(&self.values[span])
                .map(|(&c, v)| v * x[c])
                .sum();
        }
    }

    pub fn adjoint_into(&self, y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (r, &yr) in y.iter().enumerate() {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                out[self.col_idx[k]] += self.values[k] * yr;
            }
        }
    }

    /// Entries of row `r` as `(column, value)`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }
}

/// Length (on the sphere of radius `r`) and unit normal of the arc between
/// two directions; the normal is flipped to point along `toward`.
fn edge(p1: V3, p2: V3, plane_normal: V3, toward: V3, r: f64) -> (f64, V3) {
    let (p1, p2) = (p1.normalize(), p2.normalize());
    let len = r * p1.cross(&p2).norm().atan2(p1.dot(&p2));
    let mut n = plane_normal.normalize();
    if n.dot(&toward) < 0.0 {
        n = -n;
    }
    (len, n)
}

/// Neighbour of `cell` one step away from the face boundary that contains
/// the edge midpoint `mid`.
fn inward_neighbour(grid: &CubedSphereGrid, fs: &[Face; 6], cell: usize, mid: &V3) -> usize {
    let n = grid.n_face;
    let (face, i, j) = grid.coords(cell);
    let f = &fs[face];
    let s = mid.dot(&f.c);
    let (a, b) = (mid.dot(&f.u) / s, mid.dot(&f.v) / s);
    let last = n - 1;
    if a.abs() > b.abs() {
        grid.index(face, if a > 0.0 { last - 1 } else { 1 }, j)
    } else {
        grid.index(face, i, if b > 0.0 { last - 1 } else { 1 })
    }
}

/// The divergence matrix: rows are voxels, columns are tangent-field
/// entries in channel-major order. Output units are those of the field
/// divided by metres.
pub fn divergence_matrix(grid: &CubedSphereGrid) -> CsrMatrix {
    let n = grid.n_face;
    let nv = grid.n_voxels();
    let d = grid.spacing();
    let r = grid.mid_radius();
    let mut row_ptr = vec![0];
    let mut col_idx = Vec::with_capacity(10 * nv);
    let mut values = Vec::with_capacity(10 * nv);
    let mut entries: Vec<(usize, f64)> = Vec::with_capacity(16);

    let fs = faces();
    for (fi, f) in fs.iter().enumerate() {
        for j in 0..n {
            for i in 0..n {
                let c = grid.index(fi, i, j);
                let (xi, eta) = (grid.angle(i), grid.angle(j));
                let center = grid.voxel_centers[c];
                let area = grid.cell_areas[c];
                entries.clear();
                // (ξ offset, η offset) of the four neighbours
                for (di, dj) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
                    let (ni, nj) = (i as i64 + di, j as i64 + dj);
                    let inside = (0..n as i64).contains(&ni) && (0..n as i64).contains(&nj);
                    let mid = f.point(xi + di as f64 * d / 2.0, eta + dj as f64 * d / 2.0);
                    // edge value as a combination of cell vectors
                    let mut stencil: Vec<(usize, f64)> = Vec::with_capacity(4);
                    let nb = if inside {
                        let nb = grid.index(fi, ni as usize, nj as usize);
                        stencil.extend([(c, 0.5), (nb, 0.5)]);
                        nb
                    } else {
                        // the cell just across the edge midpoint; grid lines
                        // kink at cube edges, so a full step could change row
                        let step = (0.5 + 1e-3) * d;
                        let nb = grid.locate(&f.point(xi + di as f64 * step, eta + dj as f64 * step));
                        let inward = grid.index(fi, (i as i64 - di) as usize, (j as i64 - dj) as usize);
                        let nb_inward = inward_neighbour(grid, &fs, nb, &mid);
                        for (cell, inner) in [(c, inward), (nb, nb_inward)] {
                            // linear extrapolation along the grid line to the edge midpoint
                            let pc = grid.voxel_centers[cell];
                            let rho = pc.angle(&mid) / pc.angle(&grid.voxel_centers[inner]);
                            stencil.extend([(cell, 0.5 * (1.0 + rho)), (inner, -0.5 * rho)]);
                        }
                        nb
                    };
                    debug_assert!(nb != c);
                    let toward = grid.voxel_centers[nb] - center;
                    let (len, normal) = if di != 0 {
                        let a = xi + di as f64 * d / 2.0;
                        let at = |b: f64| f.point(a, b);
                        let p1 = at(eta - d / 2.0);
                        let p2 = at(eta + d / 2.0);
                        edge(p1, p2, (f.c + f.u * a.tan()).cross(&f.v), toward, r)
                    } else {
                        let b = eta + dj as f64 * d / 2.0;
                        let at = |a: f64| f.point(a, b);
                        let p1 = at(xi - d / 2.0);
                        let p2 = at(xi + d / 2.0);
                        edge(p1, p2, (f.c + f.v * b.tan()).cross(&f.u), toward, r)
                    };
                    let w = len / area;
                    for (cell, s) in stencil {
                        let [e1, e2] = grid.tangent_frames[cell];
                        entries.push((cell, w * s * normal.dot(&e1)));
                        entries.push((nv + cell, w * s * normal.dot(&e2)));
                    }
                }
                entries.sort_by_key(|e| e.0);
                for &(col, v) in entries.iter() {
                    match col_idx.last() {
                        Some(&last) if last == col && col_idx.len() > row_ptr[row_ptr.len() - 1] => {
                            *values.last_mut().unwrap() += v;
                        }
                        _ => {
                            col_idx.push(col);
                            values.push(v);
                        }
                    }
                }
                row_ptr.push(col_idx.len());
            }
        }
    }
    CsrMatrix {
        rows: nv,
        cols: 2 * nv,
        row_ptr,
        col_idx,
        values,
    }
}

/// [`divergence_matrix`] as a [`LinearMap`].
pub fn divergence_operator(grid: &CubedSphereGrid) -> LinearMap {
    let m = Arc::new(divergence_matrix(grid));
    let (rows, cols) = (m.rows, m.cols);
    let mt = Arc::clone(&m);
    LinearMap::callback(
        "divergence",
        rows,
        cols,
        move |x, out| m.apply_into(x, out),
        move |y, out| mt.adjoint_into(y, out),
    )
}

/// Dimensionless divergence `r·‖div J‖_A / ‖J‖_A`.
pub fn relative_divergence(grid: &CubedSphereGrid, div: &CsrMatrix, field: &[f64]) -> f64 {
    let mut d = vec![0.0; grid.n_voxels()];
    div.apply_into(field, &mut d);
    grid.mid_radius() * grid.area_norm(&d) / grid.field_area_norm(field)
}
