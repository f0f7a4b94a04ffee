//! Thresholding and projection operators.
//!
//! `soft_threshold` and `project_linf` are complementary (`S_λ + P_λ = Id`);
//! `joint_threshold` and `project_l1_ball` are complementary in the same way
//! for the per-group max-norm penalty and its dual ℓ1 ball.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProxError {
    #[error("{name} must be nonnegative and finite, got {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("group size must be at least 1")]
    EmptyGroup,
    #[error("vector of length {len} cannot be split into groups of {group}")]
    Ragged { len: usize, group: usize },
}

fn check_param(name: &'static str, value: f64) -> Result<(), ProxError> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ProxError::InvalidParameter { name, value })
    }
}

/// Componentwise soft-thresholding `S_λ`.
pub fn soft_threshold(z: &[f64], lambda: f64) -> Result<Vec<f64>, ProxError> {
    check_param("lambda", lambda)?;
    let mut out = z.to_vec();
    soft_threshold_in_place(&mut out, lambda);
    Ok(out)
}

/// Componentwise clamp to `[-λ, λ]`, the projection `P_λ` on the ℓ∞ ball.
pub fn project_linf(z: &[f64], lambda: f64) -> Result<Vec<f64>, ProxError> {
    check_param("lambda", lambda)?;
    let mut out = z.to_vec();
    project_linf_in_place(&mut out, lambda);
    Ok(out)
}

/// Euclidean projection `Q_R` onto `{u : ‖u‖₁ ≤ R}`.
pub fn project_l1_ball(z: &[f64], radius: f64) -> Result<Vec<f64>, ProxError> {
    check_param("radius", radius)?;
    let mut out = z.to_vec();
    project_l1_ball_in_place(&mut out, radius);
    Ok(out)
}

/// Joint-sparsity thresholding `T_λ` of one group of `m` values.
///
/// Returns zero when `‖z‖₁ ≤ λ`. Otherwise the `l` largest magnitudes are all
/// set to the common level `(Σ_{k≤l} |z_(k)| − λ)/l` (keeping their signs)
/// and the remaining entries pass through unchanged, where `l` is the largest
/// index whose sorted magnitude is still at least that level.
pub fn joint_threshold(z: &[f64], lambda: f64) -> Result<Vec<f64>, ProxError> {
    check_param("lambda", lambda)?;
    if z.is_empty() {
        return Err(ProxError::EmptyGroup);
    }
    let mut out = z.to_vec();
    let mut order = Vec::with_capacity(z.len());
    joint_threshold_in_place(&mut out, lambda, &mut order);
    Ok(out)
}

#[inline]
pub(crate) fn soft_threshold_in_place(z: &mut [f64], lambda: f64) {
    for v in z.iter_mut() {
        let a = v.abs();
        *v = if a > lambda { v.signum() * (a - lambda) } else { 0.0 };
    }
}

#[inline]
pub(crate) fn project_linf_in_place(z: &mut [f64], lambda: f64) {
    for v in z.iter_mut() {
        *v = v.clamp(-lambda, lambda);
    }
}

/// Stable descending order by magnitude; ties keep the original index order.
fn sort_by_magnitude(z: &[f64], order: &mut Vec<usize>) {
    order.clear();
    order.extend(0..z.len());
    order.sort_by(|&i, &j| {
        z[j].abs()
            .partial_cmp(&z[i].abs())
            .unwrap_or(Ordering::Equal)
            .then(i.cmp(&j))
    });
}

pub(crate) fn project_l1_ball_in_place(z: &mut [f64], radius: f64) {
    let l1: f64 = z.iter().map(|v| v.abs()).sum();
    if l1 <= radius {
        return;
    }
    if radius == 0.0 {
        z.iter_mut().for_each(|v| *v = 0.0);
        return;
    }
    let mut mags: Vec<f64> = z.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &m) in mags.iter().enumerate() {
        cumsum += m;
        let t = (cumsum - radius) / (k + 1) as f64;
        if m > t {
            theta = t;
        } else {
            break;
        }
    }
    for v in z.iter_mut() {
        let a = v.abs() - theta;
        *v = if a > 0.0 { v.signum() * a } else { 0.0 };
    }
}

pub(crate) fn joint_threshold_in_place(z: &mut [f64], lambda: f64, order: &mut Vec<usize>) {
    if lambda == 0.0 {
        return;
    }
    let l1: f64 = z.iter().map(|v| v.abs()).sum();
    if l1 <= lambda {
        z.iter_mut().for_each(|v| *v = 0.0);
        return;
    }
    sort_by_magnitude(z, order);
    let mut cumsum = 0.0;
    let mut level = 0.0;
    let mut count = 0;
    for (k, &idx) in order.iter().enumerate() {
        cumsum += z[idx].abs();
        let t = (cumsum - lambda) / (k + 1) as f64;
        if z[idx].abs() >= t {
            level = t;
            count = k + 1;
        }
    }
    for &idx in &order[..count] {
        z[idx] = z[idx].signum() * level;
    }
}

/// How a flat coefficient vector is split into groups of `m` channels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupLayout {
    /// Row `i` is `z[i*m .. (i+1)*m]`.
    #[default]
    Contiguous,
    /// Channel-major storage: row `i` is `(z[i], z[i+N], …, z[i+(m-1)N])`.
    ChannelMajor,
}

impl GroupLayout {
    #[inline]
    pub(crate) fn index(self, row: usize, channel: usize, m: usize, n_rows: usize) -> usize {
        match self {
            GroupLayout::Contiguous => row * m + channel,
            GroupLayout::ChannelMajor => channel * n_rows + row,
        }
    }
}

/// Applies a row operation to every group of a flat vector in place.
pub(crate) fn for_each_group<F>(z: &mut [f64], m: usize, layout: GroupLayout, mut f: F)
where
    F: FnMut(&mut [f64]),
{
    let n_rows = z.len() / m;
    match layout {
        GroupLayout::Contiguous => z.chunks_exact_mut(m).for_each(f),
        GroupLayout::ChannelMajor => {
            let mut buf = vec![0.0; m];
            for i in 0..n_rows {
                for (c, b) in buf.iter_mut().enumerate() {
                    *b = z[c * n_rows + i];
                }
                f(&mut buf);
                for (c, b) in buf.iter().enumerate() {
                    z[c * n_rows + i] = *b;
                }
            }
        }
    }
}

/// N rows of m channels each, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupedVector {
    m: usize,
    data: Vec<f64>,
}

impl GroupedVector {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, ProxError> {
        let m = rows.first().map_or(1, Vec::len);
        if m == 0 {
            return Err(ProxError::EmptyGroup);
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != m) {
            return Err(ProxError::Ragged {
                len: bad.len(),
                group: m,
            });
        }
        Ok(GroupedVector {
            m,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn from_flat(data: Vec<f64>, m: usize) -> Result<Self, ProxError> {
        if m == 0 {
            return Err(ProxError::EmptyGroup);
        }
        if data.len() % m != 0 {
            return Err(ProxError::Ragged {
                len: data.len(),
                group: m,
            });
        }
        Ok(GroupedVector { m, data })
    }

    pub fn group_size(&self) -> usize {
        self.m
    }

    pub fn n_rows(&self) -> usize {
        self.data.len() / self.m
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.m..(i + 1) * self.m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.m)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.data
    }
}

/// `T_λ` applied independently to every row.
pub fn grouped_joint_threshold(u: &GroupedVector, lambda: f64) -> Result<GroupedVector, ProxError> {
    check_param("lambda", lambda)?;
    let mut out = u.clone();
    let mut order = Vec::with_capacity(u.m);
    out.data
        .chunks_exact_mut(u.m)
        .for_each(|row| joint_threshold_in_place(row, lambda, &mut order));
    Ok(out)
}

/// A proximity operator `z ↦ prox_{sH}(z)` for a convex function `H`.
///
/// `scale` is the positive weight `s` in front of `H`. Indicator functions
/// ignore it.
pub trait ProxFn: Send + Sync {
    fn name(&self) -> &str;

    fn prox(&self, z: &[f64], scale: f64) -> Vec<f64>;

    /// `H(z)` when it has a finite closed form.
    fn value(&self, _z: &[f64]) -> Option<f64> {
        None
    }
}

impl fmt::Debug for dyn ProxFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ProxFn({})", self.name())
    }
}

/// `H(z) = weight · ‖z‖₁`; its prox is soft-thresholding.
#[derive(Clone, Copy, Debug)]
pub struct L1Norm {
    pub weight: f64,
}

impl ProxFn for L1Norm {
    fn name(&self) -> &str {
        "l1"
    }
    fn prox(&self, z: &[f64], scale: f64) -> Vec<f64> {
        let mut out = z.to_vec();
        soft_threshold_in_place(&mut out, self.weight * scale);
        out
    }
    fn value(&self, z: &[f64]) -> Option<f64> {
        Some(self.weight * z.iter().map(|v| v.abs()).sum::<f64>())
    }
}

/// Indicator of the ℓ1 ball of the given radius; its prox is `Q_R`.
#[derive(Clone, Copy, Debug)]
pub struct L1BallIndicator {
    pub radius: f64,
}

impl ProxFn for L1BallIndicator {
    fn name(&self) -> &str {
        "l1-ball"
    }
    fn prox(&self, z: &[f64], _scale: f64) -> Vec<f64> {
        let mut out = z.to_vec();
        project_l1_ball_in_place(&mut out, self.radius);
        out
    }
    fn value(&self, z: &[f64]) -> Option<f64> {
        let l1: f64 = z.iter().map(|v| v.abs()).sum();
        (l1 <= self.radius * (1.0 + 1e-12)).then_some(0.0)
    }
}

/// `H(z) = weight · Σ_rows max_j |z_ij|` over contiguous groups of `m`.
#[derive(Clone, Copy, Debug)]
pub struct JointMaxNorm {
    pub weight: f64,
    pub group: usize,
}

impl ProxFn for JointMaxNorm {
    fn name(&self) -> &str {
        "joint-max"
    }
    fn prox(&self, z: &[f64], scale: f64) -> Vec<f64> {
        let mut out = z.to_vec();
        let mut order = Vec::with_capacity(self.group);
        for row in out.chunks_exact_mut(self.group) {
            joint_threshold_in_place(row, self.weight * scale, &mut order);
        }
        out
    }
    fn value(&self, z: &[f64]) -> Option<f64> {
        Some(
            self.weight
                * z.chunks_exact(self.group)
                    .map(|r| r.iter().fold(0.0f64, |m, v| m.max(v.abs())))
                    .sum::<f64>(),
        )
    }
}

/// `H ≡ 0`; the prox is the identity.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroFn;

impl ProxFn for ZeroFn {
    fn name(&self) -> &str {
        "zero"
    }
    fn prox(&self, z: &[f64], _scale: f64) -> Vec<f64> {
        z.to_vec()
    }
    fn value(&self, _z: &[f64]) -> Option<f64> {
        Some(0.0)
    }
}

/// A prox defined by a closure `(z, scale) -> prox_{scale·H}(z)`.
pub struct FnProx<F> {
    name: String,
    f: F,
}

impl<F> FnProx<F>
where
    F: Fn(&[f64], f64) -> Vec<f64> + Send + Sync,
{
    pub fn new(name: impl Into<String>, f: F) -> Self {
        FnProx {
            name: name.into(),
            f,
        }
    }
}

impl<F> ProxFn for FnProx<F>
where
    F: Fn(&[f64], f64) -> Vec<f64> + Send + Sync,
{
    fn name(&self) -> &str {
        &self.name
    }
    fn prox(&self, z: &[f64], scale: f64) -> Vec<f64> {
        (self.f)(z, scale)
    }
}

/// The prox of the convex conjugate, from the Moreau identity
/// `prox_{sH*}(z) = z − s · prox_{H/s}(z/s)`; at `s = 1` this is `z − prox_H(z)`.
pub struct MoreauComplement {
    inner: Arc<dyn ProxFn>,
    name: String,
}

pub fn moreau_complement(p: Arc<dyn ProxFn>) -> MoreauComplement {
    let name = format!("conjugate({})", p.name());
    MoreauComplement { inner: p, name }
}

impl ProxFn for MoreauComplement {
    fn name(&self) -> &str {
        &self.name
    }
    fn prox(&self, z: &[f64], scale: f64) -> Vec<f64> {
        if scale == 1.0 {
            let p = self.inner.prox(z, 1.0);
            return z.iter().zip(&p).map(|(a, b)| a - b).collect();
        }
        let zs: Vec<f64> = z.iter().map(|v| v / scale).collect();
        let p = self.inner.prox(&zs, 1.0 / scale);
        z.iter().zip(&p).map(|(a, b)| a - scale * b).collect()
    }
}
