//! Equiangular cubed-sphere discretization of a thin spherical shell.
//!
//! Voxel `(face, i, j)` has flat index `face·n² + j·n + i`, where `i` runs
//! along the face coordinate `ξ` and `j` along `η`, both in `(−π/4, π/4)`.

use std::f64::consts::FRAC_PI_4;

use nalgebra::Vector3;

use super::MegError;

pub type V3 = Vector3<f64>;

pub const OUTER_RADIUS: f64 = 0.09;
pub const THICKNESS: f64 = 0.001;
pub const FACE_NAMES: [&str; 6] = ["+x", "+y", "-x", "-y", "+z", "-z"];

/// Gnomonic chart `p = c + tan(ξ)·u + tan(η)·v` of one cube face.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Face {
    pub c: V3,
    pub u: V3,
    pub v: V3,
}

pub(crate) fn faces() -> [Face; 6] {
    let f = |c: [f64; 3], u: [f64; 3], v: [f64; 3]| Face {
        c: V3::from(c),
        u: V3::from(u),
        v: V3::from(v),
    };
    [
        f([1., 0., 0.], [0., 1., 0.], [0., 0., 1.]),
        f([0., 1., 0.], [-1., 0., 0.], [0., 0., 1.]),
        f([-1., 0., 0.], [0., -1., 0.], [0., 0., 1.]),
        f([0., -1., 0.], [1., 0., 0.], [0., 0., 1.]),
        f([0., 0., 1.], [0., 1., 0.], [-1., 0., 0.]),
        f([0., 0., -1.], [0., 1., 0.], [1., 0., 0.]),
    ]
}

impl Face {
    /// Unnormalized point of the chart at angles `(ξ, η)`; angles beyond
    /// `±π/4` land on the neighbouring faces.
    pub fn point(&self, xi: f64, eta: f64) -> V3 {
        self.c + self.u * xi.tan() + self.v * eta.tan()
    }
}

#[derive(Clone, Debug)]
pub struct CubedSphereGrid {
    pub n_face: usize,
    pub outer_radius: f64,
    pub thickness: f64,
    pub voxel_centers: Vec<V3>,
    /// m³
    pub voxel_volumes: Vec<f64>,
    /// Area of each cell on the sphere through the voxel centers (m²).
    pub cell_areas: Vec<f64>,
    /// `(e1, e2)` with `e1 × e2 = e_r`; `e1` follows increasing `ξ`.
    pub tangent_frames: Vec<[V3; 2]>,
}

/// `atan(ab / √(1 + a² + b²))`: solid angle of the gnomonic rectangle
/// `[0, a] × [0, b]`.
fn solid_angle_corner(a: f64, b: f64) -> f64 {
    (a * b / (1.0 + a * a + b * b).sqrt()).atan()
}

impl CubedSphereGrid {
    pub fn n_voxels(&self) -> usize {
        6 * self.n_face * self.n_face
    }

    /// Length of a tangent field: two channels per voxel.
    pub fn field_len(&self) -> usize {
        2 * self.n_voxels()
    }

    pub fn mid_radius(&self) -> f64 {
        self.outer_radius - self.thickness / 2.0
    }

    pub fn spacing(&self) -> f64 {
        2.0 * FRAC_PI_4 / self.n_face as f64
    }

    pub fn index(&self, face: usize, i: usize, j: usize) -> usize {
        (face * self.n_face + j) * self.n_face + i
    }

    /// `(face, i, j)` of a flat voxel index.
    pub fn coords(&self, v: usize) -> (usize, usize, usize) {
        let n = self.n_face;
        (v / (n * n), v % n, (v / n) % n)
    }

    /// Cell-center angle of column or row `k`.
    pub fn angle(&self, k: usize) -> f64 {
        -FRAC_PI_4 + (k as f64 + 0.5) * self.spacing()
    }

    /// Voxel whose cell contains the direction `p`.
    pub fn locate(&self, p: &V3) -> usize {
        let fs = faces();
        let (face, f) = fs
            .iter()
            .enumerate()
            .max_by(|a, b| p.dot(&a.1.c).total_cmp(&p.dot(&b.1.c)))
            .unwrap();
        let s = p.dot(&f.c);
        let xi = (p.dot(&f.u) / s).atan();
        let eta = (p.dot(&f.v) / s).atan();
        let cell = |t: f64| {
            let k = ((t + FRAC_PI_4) / self.spacing()).floor();
            (k.max(0.0) as usize).min(self.n_face - 1)
        };
        self.index(face, cell(xi), cell(eta))
    }

    /// 3D vector of voxel `v` from a tangent field in channel-major layout.
    pub fn vector_at(&self, field: &[f64], v: usize) -> V3 {
        let [e1, e2] = self.tangent_frames[v];
        e1 * field[v] + e2 * field[self.n_voxels() + v]
    }

    /// `‖f‖_A = √(Σ area·f²)` for a per-voxel scalar.
    pub fn area_norm(&self, f: &[f64]) -> f64 {
        f.iter()
            .zip(&self.cell_areas)
            .map(|(v, a)| a * v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// Area-weighted norm of a tangent field.
    pub fn field_area_norm(&self, field: &[f64]) -> f64 {
        let nv = self.n_voxels();
        (0..nv)
            .map(|v| self.cell_areas[v] * (field[v].powi(2) + field[nv + v].powi(2)))
            .sum::<f64>()
            .sqrt()
    }
}

pub fn build_grid(n_face: usize) -> Result<CubedSphereGrid, MegError> {
    build_grid_with(n_face, OUTER_RADIUS, THICKNESS)
}

pub fn build_grid_with(
    n_face: usize,
    outer_radius: f64,
    thickness: f64,
) -> Result<CubedSphereGrid, MegError> {
    if n_face < 8 || !n_face.is_power_of_two() {
        return Err(MegError::InvalidGrid(format!(
            "n_face must be a power of two of at least 8, got {n_face}"
        )));
    }
    if !(thickness > 0.0 && thickness < outer_radius && outer_radius.is_finite()) {
        return Err(MegError::InvalidGrid(format!(
            "need 0 < thickness < outer_radius, got {thickness} and {outer_radius}"
        )));
    }
    let inner = outer_radius - thickness;
    let shell = (outer_radius.powi(3) - inner.powi(3)) / 3.0;
    let r_mid = outer_radius - thickness / 2.0;
    let n = n_face;
    let d = 2.0 * FRAC_PI_4 / n as f64;
    let edge = |k: usize| (-FRAC_PI_4 + k as f64 * d).tan();

    let mut grid = CubedSphereGrid {
        n_face,
        outer_radius,
        thickness,
        voxel_centers: Vec::with_capacity(6 * n * n),
        voxel_volumes: Vec::with_capacity(6 * n * n),
        cell_areas: Vec::with_capacity(6 * n * n),
        tangent_frames: Vec::with_capacity(6 * n * n),
    };
    for f in faces() {
        for j in 0..n {
            for i in 0..n {
                let (a1, a2, b1, b2) = (edge(i), edge(i + 1), edge(j), edge(j + 1));
                let omega = solid_angle_corner(a2, b2) - solid_angle_corner(a1, b2)
                    - solid_angle_corner(a2, b1)
                    + solid_angle_corner(a1, b1);
                let xi = -FRAC_PI_4 + (i as f64 + 0.5) * d;
                let eta = -FRAC_PI_4 + (j as f64 + 0.5) * d;
                let r = f.point(xi, eta).normalize();
                let e1 = (f.u - r * f.u.dot(&r)).normalize();
                let e2 = r.cross(&e1);
                grid.voxel_centers.push(r * r_mid);
                grid.voxel_volumes.push(omega * shell);
                grid.cell_areas.push(omega * r_mid * r_mid);
                grid.tangent_frames.push([e1, e2]);
            }
        }
    }
    Ok(grid)
}
