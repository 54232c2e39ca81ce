//! Flows X(t,a,w) of Ẋ = X·ẇ for piecewise-linear drivers, the correction
//! flows ζ(φ,w) and Z(t,h,w), and the right logarithmic derivative b(t,γ).

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::lie::{dist, exp_alg, log_grp, renormalize, Group, LieAlgElem, LieGroupElem};
use crate::lift::{lift, omega_distance_at};
use crate::paths::{BesovParams, SampledPath};

/// A G-valued path on the dyadic grid of some level.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupPath {
    level: u32,
    values: Vec<LieGroupElem>,
}

impl GroupPath {
    pub fn new(level: u32, values: Vec<LieGroupElem>) -> Result<Self> {
        if values.len() != (1usize << level) + 1 {
            return Err(Error::BadLength { got: values.len(), dim: 9 });
        }
        Ok(GroupPath { level, values })
    }

    pub fn constant(level: u32, g: LieGroupElem) -> Self {
        GroupPath { level, values: vec![g; (1usize << level) + 1] }
    }

    /// t ↦ exp(t·v).
    pub fn one_parameter(level: u32, v: &LieAlgElem) -> Self {
        let n = 1usize << level;
        let values = (0..=n).map(|k| exp_alg(&(v * (k as f64 / n as f64)))).collect();
        GroupPath { level, values }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn cells(&self) -> usize {
        1usize << self.level
    }

    pub fn values(&self) -> &[LieGroupElem] {
        &self.values
    }

    pub fn get(&self, k: usize) -> &LieGroupElem {
        &self.values[k]
    }

    pub fn start(&self) -> &LieGroupElem {
        &self.values[0]
    }

    pub fn end(&self) -> &LieGroupElem {
        &self.values[self.values.len() - 1]
    }

    /// Left translation g·γ.
    pub fn left_mul(&self, g: &LieGroupElem) -> GroupPath {
        GroupPath { level: self.level, values: self.values.iter().map(|x| g * x).collect() }
    }

    /// Every `stride`-th point, as a path on a coarser grid.
    pub fn coarsen(&self, level: u32) -> Result<GroupPath> {
        if level > self.level {
            return Err(Error::BeyondResolution { requested: level, stored: self.level });
        }
        let stride = 1usize << (self.level - level);
        Ok(GroupPath { level, values: self.values.iter().step_by(stride).copied().collect() })
    }

    /// sup over grid points of d(self, other).
    pub fn sup_distance(&self, other: &GroupPath) -> Result<f64> {
        if self.level != other.level {
            return Err(Error::LevelMismatch(self.level, other.level));
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| dist(a, b)).fold(0.0, f64::max))
    }

    pub fn max_orthogonality_defect(&self) -> f64 {
        self.values.iter().map(crate::lie::orthogonality_defect).fold(0.0, f64::max)
    }
}

fn check_driver(group: Group, w: &SampledPath) -> Result<()> {
    if w.dim() != group.dim() {
        return Err(Error::DimMismatch(w.dim(), group.dim()));
    }
    Ok(())
}

/// Increment of a driver over cell k as an algebra element.
#[inline]
fn cell_increment(group: Group, w: &SampledPath, k: usize) -> LieAlgElem {
    let a = w.point(k);
    let b = w.point(k + 1);
    let mut d = [0.0; 3];
    for c in 0..w.dim() {
        d[c] = b[c] - a[c];
    }
    group.embed(&d)
}

/// X(·,a,w) by exact exponential stepping X_{k+1} = X_k exp(Δw_k).
pub fn solve_flow(group: Group, a: &LieGroupElem, w: &SampledPath) -> Result<GroupPath> {
    check_driver(group, w)?;
    let n = w.cells();
    let mut values = Vec::with_capacity(n + 1);
    let mut x = *a;
    values.push(x);
    for k in 0..n {
        x = renormalize(x * exp_alg(&cell_increment(group, w, k)));
        values.push(x);
    }
    Ok(GroupPath { level: w.level(), values })
}

/// X(1,e,w).
pub fn endpoint(group: Group, w: &SampledPath) -> Result<LieGroupElem> {
    check_driver(group, w)?;
    let mut x = Matrix3::identity();
    for k in 0..w.cells() {
        x = renormalize(x * exp_alg(&cell_increment(group, w, k)));
    }
    Ok(x)
}

/// max over `n_times` evenly spaced grid times of d(X(t,a,w), a·X(t,e,w)).
pub fn left_translation_defect(
    group: Group,
    a: &LieGroupElem,
    w: &SampledPath,
    n_times: usize,
) -> Result<f64> {
    let xa = solve_flow(group, a, w)?;
    let xe = solve_flow(group, &Matrix3::identity(), w)?;
    let n = w.cells();
    let m = n_times.max(1).min(n);
    let mut worst = 0.0f64;
    for j in 0..=m {
        let k = j * n / m;
        worst = worst.max(dist(xa.get(k), &(a * xe.get(k))));
    }
    Ok(worst)
}

/// ζ(φ,w) with X(t,φ_t,w) = X(t,e,w+ζ).
///
/// Computed per cell as the unique linear increment making the identity hold
/// at the grid points: Δζ_k = log(X_k⁻¹ φ_k⁻¹ φ_{k+1} X_{k+1}) − Δw_k. To first
/// order this is Ad(X_k⁻¹)(φ_k⁻¹Δφ_k), the increment of ζ̇ = Ad(X⁻¹)(φ⁻¹φ̇).
pub fn zeta(group: Group, phi: &GroupPath, w: &SampledPath) -> Result<SampledPath> {
    check_driver(group, w)?;
    if phi.level != w.level() {
        return Err(Error::LevelMismatch(phi.level, w.level()));
    }
    if dist(phi.start(), &Matrix3::identity()) > 1e-12 {
        return Err(Error::NonIdentityStart);
    }
    let x = solve_flow(group, &Matrix3::identity(), w)?;
    let n = w.cells();
    let d = group.dim();
    let mut inc = vec![0.0; n * d];
    let mut coords = [0.0; 3];
    for k in 0..n {
        let g = x.get(k).transpose()
            * phi.get(k).transpose()
            * phi.get(k + 1)
            * x.get(k + 1);
        let v = log_grp(&g)? - cell_increment(group, w, k);
        group.coords(&v, &mut coords);
        inc[k * d..(k + 1) * d].copy_from_slice(&coords[..d]);
    }
    SampledPath::from_increments(d, w.level(), &inc)
}

/// sup over grid times of d(X(t,φ_t,w), X(t,e,w+ζ(φ,w))).
pub fn zeta_identity_defect(group: Group, phi: &GroupPath, w: &SampledPath) -> Result<f64> {
    let z = zeta(group, phi, w)?;
    let lhs = solve_flow(group, &Matrix3::identity(), w)?;
    let lhs = GroupPath {
        level: lhs.level,
        values: lhs.values.iter().zip(&phi.values).map(|(x, p)| p * x).collect(),
    };
    let rhs = solve_flow(group, &Matrix3::identity(), &w.add(&z)?)?;
    lhs.sup_distance(&rhs)
}

const GAUSS_OFFSET: f64 = 0.288_675_134_594_812_9; // √3/6

/// Z(·,h,w) solving Z⁻¹Ż = Ad(X(t,e,w))ḣ with a fourth-order Magnus step per
/// cell; X is evaluated exactly inside each cell as X_k exp(τΔw_k).
pub fn flow_shift_z(group: Group, h: &SampledPath, w: &SampledPath) -> Result<GroupPath> {
    check_driver(group, w)?;
    check_driver(group, h)?;
    if h.level() != w.level() {
        return Err(Error::LevelMismatch(h.level(), w.level()));
    }
    let x = solve_flow(group, &Matrix3::identity(), w)?;
    let n = w.cells();
    let mut values = Vec::with_capacity(n + 1);
    let mut z = Matrix3::identity();
    values.push(z);
    for k in 0..n {
        let dw = cell_increment(group, w, k);
        let dh = cell_increment(group, h, k);
        let xk = x.get(k);
        let a1 = group.ad_group(&(xk * exp_alg(&(dw * (0.5 - GAUSS_OFFSET))))) * dh;
        let a2 = group.ad_group(&(xk * exp_alg(&(dw * (0.5 + GAUSS_OFFSET))))) * dh;
        let omega: Vector3<f64> = (a1 + a2) * 0.5 + group.bracket(&a1, &a2) * (3f64.sqrt() / 12.0);
        z = renormalize(z * exp_alg(&omega));
        values.push(z);
    }
    Ok(GroupPath { level: w.level(), values })
}

/// sup over grid times of d(X(t,Z_t,w), X(t,e,w+h)).
pub fn z_identity_defect(group: Group, h: &SampledPath, w: &SampledPath) -> Result<f64> {
    let z = flow_shift_z(group, h, w)?;
    let x = solve_flow(group, &Matrix3::identity(), w)?;
    let lhs = GroupPath {
        level: x.level,
        values: x.values.iter().zip(&z.values).map(|(xv, zv)| zv * xv).collect(),
    };
    let rhs = solve_flow(group, &Matrix3::identity(), &w.add(h)?)?;
    lhs.sup_distance(&rhs)
}

/// ‖ζ(Z(·,h,w),w) − h‖_H.
pub fn round_trip_defect(group: Group, h: &SampledPath, w: &SampledPath) -> Result<f64> {
    let z = flow_shift_z(group, h, w)?;
    let back = zeta(group, &z, w)?;
    Ok(crate::paths::cm_norm(&back.sub(h)?))
}

/// (sup_t d(X(t,e,w), X(t,e,z)), d_Ω(lift w, lift z)) with d_Ω evaluated at `level`.
pub fn flow_continuity_probe(
    group: Group,
    w: &SampledPath,
    z: &SampledPath,
    p: &BesovParams,
    level: u32,
) -> Result<(f64, f64)> {
    let xw = solve_flow(group, &Matrix3::identity(), w)?;
    let xz = solve_flow(group, &Matrix3::identity(), z)?;
    let d_flow = xw.sup_distance(&xz)?;
    let d_omega = omega_distance_at(&lift(w), &lift(z), p, level)?;
    Ok((d_flow, d_omega))
}

/// b(t,γ) with right increments Δb_k = log(γ_{k+1} γ_k⁻¹), in algebra coordinates.
pub fn right_log_derivative_b(group: Group, gamma: &GroupPath) -> Result<SampledPath> {
    let n = gamma.cells();
    let d = group.dim();
    let mut inc = vec![0.0; n * d];
    let mut coords = [0.0; 3];
    for k in 0..n {
        let v = log_grp(&(gamma.get(k + 1) * gamma.get(k).transpose()))?;
        group.coords(&v, &mut coords);
        inc[k * d..(k + 1) * d].copy_from_slice(&coords[..d]);
    }
    SampledPath::from_increments(d, gamma.level, &inc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_driver_is_one_parameter_subgroup() {
        let v = [0.3, -1.1, 0.7];
        let w = SampledPath::linear(8, &v);
        let x = solve_flow(Group::So3, &Matrix3::identity(), &w).unwrap();
        let want = exp_alg(&Vector3::from_column_slice(&v));
        assert!(dist(x.end(), &want) < 1e-12);
    }

    #[test]
    fn zero_driver_is_constant() {
        let a = exp_alg(&Vector3::new(0.1, 0.2, 0.3));
        let x = solve_flow(Group::So3, &a, &SampledPath::zeros(3, 4)).unwrap();
        assert!(x.values().iter().all(|g| *g == a));
    }

    #[test]
    fn zeta_of_identity_path_is_zero() {
        let w = SampledPath::from_fn(3, 5, |t, o| {
            o[0] = t.sin();
            o[1] = t * t;
            o[2] = -t;
        });
        let z = zeta(Group::So3, &GroupPath::constant(5, Matrix3::identity()), &w).unwrap();
        assert!(z.sup_norm() < 1e-14);
    }

    #[test]
    fn zeta_rejects_moved_start() {
        let w = SampledPath::zeros(3, 3);
        let phi = GroupPath::constant(3, exp_alg(&Vector3::new(0.0, 0.0, 0.1)));
        assert_eq!(zeta(Group::So3, &phi, &w), Err(Error::NonIdentityStart));
    }

    #[test]
    fn b_of_one_parameter_subgroup() {
        let v = Vector3::new(0.4, 0.2, -0.9);
        let b = right_log_derivative_b(Group::So3, &GroupPath::one_parameter(6, &v)).unwrap();
        for k in 0..=64 {
            let t = k as f64 / 64.0;
            for c in 0..3 {
                assert!((b.point(k)[c] - t * v[c]).abs() < 1e-12);
            }
        }
    }
}
