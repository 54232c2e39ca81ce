//! so(3)/SO(3) kernel with the inner product ⟨X,Y⟩ = ½ tr(XᵀY), plus a
//! one-dimensional abelian stub (rotations about ε₃).
//!
//! Algebra elements are stored by their coordinates in the orthonormal basis
//! {ε₁, ε₂, ε₃}; in these coordinates ad(v) = hat(v) and Ad(g) = g.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

pub type LieAlgElem = Vector3<f64>;
pub type LieGroupElem = Matrix3<f64>;

/// Distance to π below which `log_grp` refuses to pick a logarithm.
pub const CUT_LOCUS_TOL: f64 = 1e-8;
/// Orthogonality defect above which products are projected back onto SO(3).
pub const RENORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Group {
    So3,
    /// ℝ/2πℤ realized as rotations about ε₃; algebra spanned by ε₃.
    Torus,
}

impl Group {
    pub fn name(self) -> &'static str {
        match self {
            Group::So3 => "so3",
            Group::Torus => "abelian-stub",
        }
    }

    pub fn parse(s: &str) -> Option<Group> {
        match s {
            "so3" => Some(Group::So3),
            "abelian-stub" | "torus" => Some(Group::Torus),
            _ => None,
        }
    }

    /// Dimension of the Lie algebra.
    pub fn dim(self) -> usize {
        match self {
            Group::So3 => 3,
            Group::Torus => 1,
        }
    }

    /// Orthonormal basis of the algebra as 3-vectors.
    pub fn basis(self) -> Vec<LieAlgElem> {
        match self {
            Group::So3 => vec![Vector3::x(), Vector3::y(), Vector3::z()],
            Group::Torus => vec![Vector3::z()],
        }
    }

    /// Algebra element from its coordinates in `basis()`.
    pub fn embed(self, coords: &[f64]) -> LieAlgElem {
        match self {
            Group::So3 => Vector3::new(coords[0], coords[1], coords[2]),
            Group::Torus => Vector3::new(0.0, 0.0, coords[0]),
        }
    }

    /// Coordinates of an algebra element in `basis()`.
    pub fn coords(self, v: &LieAlgElem, out: &mut [f64]) {
        match self {
            Group::So3 => out[..3].copy_from_slice(v.as_slice()),
            Group::Torus => out[0] = v[2],
        }
    }

    pub fn bracket(self, a: &LieAlgElem, b: &LieAlgElem) -> LieAlgElem {
        match self {
            Group::So3 => a.cross(b),
            Group::Torus => Vector3::zeros(),
        }
    }

    /// ad(v) as a matrix on 3-vector coordinates.
    pub fn ad(self, v: &LieAlgElem) -> Matrix3<f64> {
        match self {
            Group::So3 => hat(v),
            Group::Torus => Matrix3::zeros(),
        }
    }

    /// Ad(g) as a matrix on 3-vector coordinates.
    pub fn ad_group(self, g: &LieGroupElem) -> Matrix3<f64> {
        match self {
            Group::So3 => *g,
            Group::Torus => Matrix3::identity(),
        }
    }

    /// Σ_i ad(ε_i)² over the orthonormal basis.
    pub fn casimir(self) -> Matrix3<f64> {
        self.basis().iter().map(|e| self.ad(e) * self.ad(e)).sum()
    }

    /// Casimir restricted to the algebra, as a dim×dim matrix in `basis()` coordinates.
    pub fn casimir_coords(self) -> nalgebra::DMatrix<f64> {
        let b = self.basis();
        let c = self.casimir();
        nalgebra::DMatrix::from_fn(b.len(), b.len(), |i, j| b[i].dot(&(c * b[j])))
    }
}

/// v ↦ the antisymmetric matrix with hat(v)·x = v × x.
pub fn hat(v: &LieAlgElem) -> Matrix3<f64> {
    Matrix3::new(0.0, -v[2], v[1], v[2], 0.0, -v[0], -v[1], v[0], 0.0)
}

/// Inverse of `hat` on the antisymmetric part of m.
pub fn vee(m: &Matrix3<f64>) -> LieAlgElem {
    Vector3::new(
        0.5 * (m[(2, 1)] - m[(1, 2)]),
        0.5 * (m[(0, 2)] - m[(2, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
    )
}

/// ⟨X,Y⟩ = ½ tr(XᵀY), which is the Euclidean product of coordinates.
pub fn inner(a: &LieAlgElem, b: &LieAlgElem) -> f64 {
    a.dot(b)
}

/// Rodrigues formula: rotation by |v| about v/|v|.
pub fn exp_alg(v: &LieAlgElem) -> LieGroupElem {
    let th2 = v.norm_squared();
    let th = th2.sqrt();
    let (a, b) = if th < 1e-4 {
        (1.0 - th2 / 6.0 + th2 * th2 / 120.0, 0.5 - th2 / 24.0 + th2 * th2 / 720.0)
    } else {
        (th.sin() / th, (1.0 - th.cos()) / th2)
    };
    let k = hat(v);
    Matrix3::identity() + k * a + k * k * b
}

/// Rotation angle in [0, π].
pub fn rotation_angle(g: &LieGroupElem) -> f64 {
    let c = 0.5 * (g.trace() - 1.0);
    let s = vee(g).norm();
    s.atan2(c)
}

/// Principal logarithm; errors within 1e-8 of the cut locus.
pub fn log_grp(g: &LieGroupElem) -> Result<LieAlgElem> {
    let axis_sin = vee(g);
    let s = axis_sin.norm();
    let c = 0.5 * (g.trace() - 1.0);
    let th = s.atan2(c);
    if std::f64::consts::PI - th < CUT_LOCUS_TOL {
        return Err(Error::CutLocus { angle: th });
    }
    if th < 1e-4 {
        let th2 = th * th;
        return Ok(axis_sin * (1.0 + th2 / 6.0 + 7.0 * th2 * th2 / 360.0));
    }
    if th < 3.0 {
        return Ok(axis_sin * (th / s));
    }
    // Near π: read the axis from the symmetric part, (1 − cos θ) a aᵀ = sym(g) − cos θ I.
    let sym = (g + g.transpose()) * 0.5 - Matrix3::identity() * c;
    let (mut best, mut idx) = (sym[(0, 0)], 0);
    for i in 1..3 {
        if sym[(i, i)] > best {
            best = sym[(i, i)];
            idx = i;
        }
    }
    let mut a: Vector3<f64> = sym.column(idx).into();
    a /= a.norm();
    if a.dot(&axis_sin) < 0.0 {
        a = -a;
    }
    Ok(a * th)
}

pub fn orthogonality_defect(g: &LieGroupElem) -> f64 {
    (g.transpose() * g - Matrix3::identity()).norm()
}

/// Nearest rotation (polar factor U Vᵀ of the SVD).
pub fn project_to_group(g: &LieGroupElem) -> LieGroupElem {
    let svd = g.svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let mut r = u * v_t;
    if r.determinant() < 0.0 {
        let mut u2 = u;
        u2.column_mut(2).neg_mut();
        r = u2 * v_t;
    }
    r
}

/// Projects back onto SO(3) only when the defect exceeds `RENORM_TOL`.
#[inline]
pub fn renormalize(g: LieGroupElem) -> LieGroupElem {
    if orthogonality_defect(&g) > RENORM_TOL {
        project_to_group(&g)
    } else {
        g
    }
}

/// Group distance |log(g h⁻¹)|, plus a flag set when the pair sits at the
/// cut locus and the chordal fallback ‖g − h‖_F/√2 was used instead.
pub fn distance(g: &LieGroupElem, h: &LieGroupElem) -> (f64, bool) {
    match log_grp(&(g * h.transpose())) {
        Ok(v) => (v.norm(), false),
        Err(_) => ((g - h).norm() / std::f64::consts::SQRT_2, true),
    }
}

pub fn dist(g: &LieGroupElem, h: &LieGroupElem) -> f64 {
    distance(g, h).0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_of_zero_and_pi() {
        assert_eq!(exp_alg(&Vector3::zeros()), Matrix3::identity());
        let r = exp_alg(&(Vector3::x() * std::f64::consts::PI));
        let want = Matrix3::new(1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, -1.0);
        assert!((r - want).norm() < 1e-15);
        assert!(matches!(log_grp(&r), Err(Error::CutLocus { .. })));
    }

    #[test]
    fn log_near_pi_round_trip() {
        let v = Vector3::new(0.3, -0.5, 0.8).normalize() * (std::f64::consts::PI - 1e-5);
        let back = log_grp(&exp_alg(&v)).unwrap();
        assert!((back - v).norm() < 1e-9);
    }

    #[test]
    fn structure_constants() {
        let g = Group::So3;
        assert_eq!(g.bracket(&Vector3::x(), &Vector3::y()), Vector3::z());
        let c = g.casimir();
        assert!((c + Matrix3::identity() * 2.0).norm() < 1e-14);
        assert_eq!(Group::Torus.casimir(), Matrix3::zeros());
    }

    #[test]
    fn hat_bracket_is_commutator() {
        let a = Vector3::new(0.1, 2.0, -1.0);
        let b = Vector3::new(-0.7, 0.4, 0.3);
        let lhs = hat(&a) * hat(&b) - hat(&b) * hat(&a);
        assert!((lhs - hat(&a.cross(&b))).norm() < 1e-15);
        // ½ tr(hat(a)ᵀ hat(b)) = a·b
        assert!((0.5 * (hat(&a).transpose() * hat(&b)).trace() - a.dot(&b)).abs() < 1e-15);
    }

    #[test]
    fn projection_repairs_drift() {
        let g = exp_alg(&Vector3::new(0.2, 0.1, -0.4)) + Matrix3::from_element(1e-9);
        let p = project_to_group(&g);
        assert!(orthogonality_defect(&p) < 1e-14);
        assert!((p.determinant() - 1.0).abs() < 1e-14);
    }
}
