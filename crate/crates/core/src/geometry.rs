//! Wiener-space neighbourhoods: U_r(φ), V_r(z), the tube D_ε, the retraction
//! Ψ_ε onto S = {X(1,e,w) = e}, the quasi-invariance weight, the covering κ
//! bound and probe-based inclusion checks.
//!
//! Every predicate on an open set returns a three-valued [`Verdict`]; values
//! within a relative [`BOUNDARY_BAND`] of the radius are reported as
//! `Boundary` instead of being forced either way.

use nalgebra::{Matrix3, UnitQuaternion, Vector3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flows::{endpoint, solve_flow, zeta, GroupPath};
use crate::lie::{distance, log_grp, Group, LieAlgElem, LieGroupElem};
use crate::lift::{lift, omega_distance_at, AreaField, IteratedIntegral};
use crate::paths::{besov_norm, cm_norm, BesovParams, IncrementField, SampledPath};
use crate::sampler::{brownian_from_rng, SeededStream};
use crate::stats::EstimateCI;

/// Relative half-width of the band around a radius where no verdict is given.
pub const BOUNDARY_BAND: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Inside,
    Outside,
    Boundary,
}

impl Verdict {
    /// `value < bound`, with the relative boundary band.
    pub fn classify(value: f64, bound: f64) -> Verdict {
        let band = BOUNDARY_BAND * bound.abs();
        if value < bound - band {
            Verdict::Inside
        } else if value > bound + band {
            Verdict::Outside
        } else {
            Verdict::Boundary
        }
    }

    /// Verdict for the intersection of several open conditions.
    pub fn all(verdicts: impl IntoIterator<Item = Verdict>) -> Verdict {
        let mut out = Verdict::Inside;
        for v in verdicts {
            match v {
                Verdict::Outside => return Verdict::Outside,
                Verdict::Boundary => out = Verdict::Boundary,
                Verdict::Inside => {}
            }
        }
        out
    }

    pub fn is_inside(self) -> bool {
        self == Verdict::Inside
    }
}

/// Parameters of U_r(φ). Norms are evaluated on the dyadic grid of
/// `quad_level`, which defaults to min(level of φ, 8).
#[derive(Debug, Clone)]
pub struct BallSpec {
    pub center: SampledPath,
    pub radius: f64,
    pub params: BesovParams,
    pub quad_level: u32,
}

impl BallSpec {
    pub fn new(center: SampledPath, radius: f64, params: BesovParams) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidParams(format!("radius must be positive, got {radius}")));
        }
        let quad_level = center.level().min(8);
        Ok(BallSpec { center, radius, params, quad_level })
    }

    pub fn with_quad_level(mut self, level: u32) -> Result<Self> {
        if level > self.center.level() {
            return Err(Error::BeyondResolution { requested: level, stored: self.center.level() });
        }
        self.quad_level = level;
        Ok(self)
    }

    pub fn with_radius(&self, radius: f64) -> Result<Self> {
        let mut b = BallSpec::new(self.center.clone(), radius, self.params)?;
        b.quad_level = self.quad_level;
        Ok(b)
    }
}

fn component_besov(x: &SampledPath, i: usize, m: u32, theta: f64, level: u32) -> Result<f64> {
    let c = x.component(i);
    besov_norm(&IncrementField::at_level(&c, level)?, m, theta)
}

fn area_besov(ii: &IteratedIntegral, i: usize, j: usize, m: u32, theta: f64, level: u32) -> Result<f64> {
    besov_norm(&AreaField::with_pairs(vec![(1.0, ii)], vec![(i, j)], level)?, m, theta)
}

/// The 3d(d+1)/2 norms defining U_{r,φ}, evaluated at ξ, in the order
/// ‖ξ^i‖_{m,θ′/2}; ‖C(ξ^j,ξ^k)‖ (j<k); ‖C(φ^i,ξ^j)‖ (i≤j); ‖C(ξ^i,φ^j)‖ (i≤j).
pub fn u_constraint_values(
    center: &SampledPath,
    xi: &SampledPath,
    p: &BesovParams,
    level: u32,
) -> Result<Vec<f64>> {
    if center.level() != xi.level() {
        return Err(Error::LevelMismatch(center.level(), xi.level()));
    }
    if center.dim() != xi.dim() {
        return Err(Error::DimMismatch(center.dim(), xi.dim()));
    }
    let d = xi.dim();
    let mut out = Vec::with_capacity(3 * d * (d + 1) / 2);
    for i in 0..d {
        out.push(component_besov(xi, i, p.m, p.theta_prime / 2.0, level)?);
    }
    let xx = IteratedIntegral::new(xi, xi)?;
    for j in 0..d {
        for k in j + 1..d {
            out.push(area_besov(&xx, j, k, p.m, p.theta, level)?);
        }
    }
    let px = IteratedIntegral::new(center, xi)?;
    for i in 0..d {
        for j in i..d {
            out.push(area_besov(&px, i, j, p.m, p.theta, level)?);
        }
    }
    let xp = IteratedIntegral::new(xi, center)?;
    for i in 0..d {
        for j in i..d {
            out.push(area_besov(&xp, i, j, p.m, p.theta, level)?);
        }
    }
    Ok(out)
}

/// Membership of ξ in U_{r,φ} (the neighbourhood of 0 carrying φ's cross terms).
pub fn member_u_centered(ball: &BallSpec, xi: &SampledPath) -> Result<Verdict> {
    let vals = u_constraint_values(&ball.center, xi, &ball.params, ball.quad_level)?;
    Ok(Verdict::all(vals.iter().map(|&v| Verdict::classify(v, ball.radius))))
}

/// Membership of w in U_r(φ) = φ + U_{r,φ}.
pub fn member_u(ball: &BallSpec, w: &SampledPath) -> Result<Verdict> {
    member_u_centered(ball, &w.sub(&ball.center)?)
}

/// Membership of w in V_r(z) = {d_Ω(w,z) < r}, with d_Ω evaluated at `level`.
pub fn member_v(
    z: &crate::lift::Level2Lift,
    r: f64,
    w: &crate::lift::Level2Lift,
    p: &BesovParams,
    level: u32,
) -> Result<Verdict> {
    let d = omega_distance_at(w, z, p, level)?;
    Ok(Verdict::classify(d, r))
}

/// The tube D_ε = {d(X(1,e,w), e) < ε} and the pinning tolerance for S.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TubeSpec {
    pub epsilon: f64,
    pub pin_tol: f64,
}

impl TubeSpec {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < std::f64::consts::PI) {
            return Err(Error::InvalidParams(format!("epsilon must lie in (0, pi), got {epsilon}")));
        }
        Ok(TubeSpec { epsilon, pin_tol: 1e-6 })
    }
}

/// d(X(1,e,w), e). The rotation group runs on unit quaternions here, which is
/// several times cheaper than the matrix flow and agrees with it to rounding.
pub fn endpoint_distance(group: Group, w: &SampledPath) -> Result<f64> {
    if group != Group::So3 || w.dim() != 3 {
        return Ok(distance(&endpoint(group, w)?, &Matrix3::identity()).0);
    }
    let mut q = UnitQuaternion::identity();
    for k in 0..w.cells() {
        let (a, b) = (w.point(k), w.point(k + 1));
        q *= UnitQuaternion::from_scaled_axis(Vector3::new(b[0] - a[0], b[1] - a[1], b[2] - a[2]));
    }
    Ok(q.angle())
}

pub fn member_tube(group: Group, tube: &TubeSpec, w: &SampledPath) -> Result<Verdict> {
    Ok(Verdict::classify(endpoint_distance(group, w)?, tube.epsilon))
}

/// ∫₀¹ exp(−τ û) dτ applied to y.
fn averaged_inverse_rotation(u: &LieAlgElem, y: &LieAlgElem) -> LieAlgElem {
    let th2 = u.norm_squared();
    let (c1, c2) = if th2 < 1e-8 {
        (0.5 - th2 / 24.0, 1.0 / 6.0 - th2 / 120.0)
    } else {
        let th = th2.sqrt();
        ((1.0 - th.cos()) / th2, (th - th.sin()) / (th2 * th))
    };
    let uy = u.cross(y);
    y - uy * c1 + u.cross(&uy) * c2
}

/// ψ(a,w)_t = −∫₀^t Ad(X(s,e,w)⁻¹)(log a) ds.
///
/// Inside each cell X(s) = X_k exp(τΔw_k), and the cell integral of
/// exp(−τΔw)X_kᵀ log a is taken in closed form.
pub fn retraction_shift(group: Group, a: &LieGroupElem, w: &SampledPath) -> Result<SampledPath> {
    let c = log_grp(a)?;
    let x = solve_flow(group, &Matrix3::identity(), w)?;
    let n = w.cells();
    let d = group.dim();
    let h = 1.0 / n as f64;
    let mut inc = vec![0.0; n * d];
    let mut coords = [0.0; 3];
    let mut dw = [0.0; 3];
    for k in 0..n {
        let (p, q) = (w.point(k), w.point(k + 1));
        for i in 0..d {
            dw[i] = q[i] - p[i];
        }
        let u = group.embed(&dw);
        let y = group.ad_group(&x.get(k).transpose()) * c;
        let v = match group {
            Group::So3 => averaged_inverse_rotation(&u, &y),
            Group::Torus => y,
        };
        group.coords(&(-v * h), &mut coords);
        inc[k * d..(k + 1) * d].copy_from_slice(&coords[..d]);
    }
    SampledPath::from_increments(d, w.level(), &inc)
}

/// Discrete retraction shift: the development ζ(t ↦ exp(−t log a), w), which
/// lands X(1,e,w+ψ) on a⁻¹X(1,e,w) up to rounding. It agrees with
/// [`retraction_shift`] to first order in the mesh.
pub fn retraction_shift_discrete(
    group: Group,
    a: &LieGroupElem,
    w: &SampledPath,
) -> Result<SampledPath> {
    let c = log_grp(a)?;
    let phi = GroupPath::one_parameter(w.level(), &(-c));
    zeta(group, &phi, w)
}

/// Ψ_ε(w) = w + ψ(X(1,e,w), w), using the discrete shift so that the result
/// is pinned to the identity at rounding precision.
pub fn retract(group: Group, tube: &TubeSpec, w: &SampledPath) -> Result<SampledPath> {
    let a = endpoint(group, w)?;
    if Verdict::classify(distance(&a, &Matrix3::identity()).0, tube.epsilon) == Verdict::Outside {
        return Err(Error::OutsideTube);
    }
    w.add(&retraction_shift_discrete(group, &a, w)?)
}

/// b(1,w) = ∫₀¹ Ad(X(t,e,w)) ∘ dw. Ad(X_k exp(τΔw))Δw = X_kΔw, so the
/// midpoint rule is exact per cell.
pub fn b_one(group: Group, w: &SampledPath) -> Result<LieAlgElem> {
    let x = solve_flow(group, &Matrix3::identity(), w)?;
    let d = group.dim();
    let mut b = Vector3::zeros();
    let mut dw = [0.0; 3];
    for k in 0..w.cells() {
        let (p, q) = (w.point(k), w.point(k + 1));
        for i in 0..d {
            dw[i] = q[i] - p[i];
        }
        b += group.ad_group(x.get(k)) * group.embed(&dw);
    }
    Ok(b)
}

/// exp(−(log a, b(1,w)) − ½|log a|²).
pub fn quasi_invariance_weight(group: Group, a: &LieGroupElem, w: &SampledPath) -> Result<f64> {
    let c = log_grp(a)?;
    let b = b_one(group, w)?;
    Ok((-c.dot(&b) - 0.5 * c.norm_squared()).exp())
}

/// The upper bound of the κ condition in the covering argument,
/// min(ε / (48 n R (K+1) F(K + 18R(K+1))), ½), nudged strictly below it.
pub fn covering_kappa(eps: f64, n: u32, k: u32, r_est: f64, f: &dyn Fn(f64) -> f64) -> Result<f64> {
    if !(eps > 0.0 && r_est > 0.0) || n == 0 {
        return Err(Error::InvalidParams("need eps > 0, n >= 1, R > 0".into()));
    }
    let kk = f64::from(k) + 1.0;
    let fv = f(f64::from(k) + 18.0 * r_est * kk);
    if !(fv > 0.0) {
        return Err(Error::InvalidParams(format!("modulus F must be positive, got {fv}")));
    }
    let bound = (eps / (48.0 * f64::from(n) * r_est * kk * fv)).min(0.5);
    Ok(bound * (1.0 - 1e-12))
}

/// Empirical, non-rigorous modulus F(u) = c·eᵘ fitted as an upper envelope of
/// flow-continuity probes (u = max d_Ω(0,·), ratio = sup d(X,X′)/d_Ω(w,z)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalModulus {
    pub scale: f64,
}

impl EmpiricalModulus {
    pub fn fit(samples: &[(f64, f64)]) -> Self {
        let scale = samples
            .iter()
            .filter(|(_, r)| r.is_finite())
            .map(|&(u, r)| r * (-u).exp())
            .fold(0.0, f64::max);
        EmpiricalModulus { scale }
    }

    pub fn eval(&self, u: f64) -> f64 {
        self.scale * u.exp()
    }
}

/// Rejection sampler for U_r(φ): φ + σB with B Brownian.
#[derive(Debug, Clone)]
pub struct BallSampler {
    pub scale: f64,
    pub pilot_acceptance: f64,
}

impl BallSampler {
    /// Halves σ from 1 until at least `target` of a pilot batch of `pilot`
    /// proposals lands strictly inside the ball (at most 30 halvings).
    pub fn search(ball: &BallSpec, target: f64, pilot: usize, stream: &SeededStream) -> Result<Self> {
        let mut scale = 1.0;
        for round in 0..30u64 {
            let s = stream.child(round);
            let hits = (0..pilot)
                .into_par_iter()
                .map(|i| propose(ball, scale, &s, i as u64).and_then(|w| member_u(ball, &w)))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .filter(|v| v.is_inside())
                .count();
            let rate = hits as f64 / pilot.max(1) as f64;
            if rate >= target {
                return Ok(BallSampler { scale, pilot_acceptance: rate });
            }
            scale *= 0.5;
        }
        Err(Error::InvalidParams("no proposal scale reaches the target acceptance".into()))
    }
}

fn propose(ball: &BallSpec, scale: f64, stream: &SeededStream, index: u64) -> Result<SampledPath> {
    let b = brownian_from_rng(ball.center.dim(), ball.center.level(), &mut stream.rng(index));
    ball.center.add(&b.scaled(scale))
}

/// Draws `n` members of U_r(φ) (boundary-band proposals discarded) and returns
/// them with the observed acceptance estimate.
pub fn sample_ball_members(
    ball: &BallSpec,
    sampler: &BallSampler,
    n: usize,
    stream: &SeededStream,
) -> Result<(Vec<SampledPath>, EstimateCI)> {
    let mut members = Vec::with_capacity(n);
    let mut tried = 0usize;
    let batch = n.max(16);
    while members.len() < n {
        let start = tried as u64;
        let got = (0..batch)
            .into_par_iter()
            .map(|i| -> Result<Option<SampledPath>> {
                let w = propose(ball, sampler.scale, stream, start + i as u64)?;
                Ok(member_u(ball, &w)?.is_inside().then_some(w))
            })
            .collect::<Result<Vec<_>>>()?;
        for (i, g) in got.into_iter().enumerate() {
            if members.len() < n {
                if let Some(w) = g {
                    members.push(w);
                }
                tried = start as usize + i + 1;
            }
        }
        if tried > 1000 * n.max(1) {
            return Err(Error::InvalidParams("acceptance too low".into()));
        }
    }
    Ok((members, EstimateCI::wilson(n, tried)))
}

#[derive(Debug, Clone)]
pub struct InclusionReport {
    /// max_i ‖φ₁^i − φ₂^i‖_H.
    pub h_distance: f64,
    /// δr / (1 + 3r + 2 max_i ‖φ₁^i‖_{m,θ/2}).
    pub threshold: f64,
    pub hypothesis_holds: bool,
    pub probes: usize,
    /// Probes outside U_{(1+δ)r}(φ₂) (boundary-band verdicts are not counted).
    pub u_counterexamples: usize,
    /// Probes outside the V-ball of radius R(5 + 6 max_i ‖φ₁^i‖_{m,θ/2}) r.
    pub v_counterexamples: usize,
    pub v_radius: f64,
    pub max_omega_ratio: f64,
    pub first_counterexample: Option<SampledPath>,
    pub proposal_scale: f64,
    pub acceptance: EstimateCI,
}

/// Probes the inclusions U_r(φ₁) ⊂ U_{(1+δ)r}(φ₂) and U_r(φ₁) ⊂ V_{R(5+6‖φ₁‖)r}(φ₁)
/// with `n_probes` rejection-sampled members of U_r(φ₁). Probing happens
/// only when the H-distance hypothesis holds.
#[allow(clippy::too_many_arguments)]
pub fn inclusion_check(
    phi1: &SampledPath,
    phi2: &SampledPath,
    r: f64,
    delta: f64,
    r_est: f64,
    p: &BesovParams,
    n_probes: usize,
    stream: &SeededStream,
) -> Result<InclusionReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParams(format!("delta must lie in (0,1), got {delta}")));
    }
    let ball1 = BallSpec::new(phi1.clone(), r, *p)?;
    let q = ball1.quad_level;
    let diff = phi1.sub(phi2)?;
    let d = phi1.dim();
    let h_distance = (0..d).map(|i| cm_norm(&diff.component(i))).fold(0.0, f64::max);
    let phi1_norm = (0..d)
        .map(|i| component_besov(phi1, i, p.m, p.theta / 2.0, q))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let threshold = delta * r / (1.0 + 3.0 * r + 2.0 * phi1_norm);
    let hypothesis_holds = h_distance <= threshold;
    let v_radius = r_est * (5.0 + 6.0 * phi1_norm) * r;
    let mut report = InclusionReport {
        h_distance,
        threshold,
        hypothesis_holds,
        probes: 0,
        u_counterexamples: 0,
        v_counterexamples: 0,
        v_radius,
        max_omega_ratio: 0.0,
        first_counterexample: None,
        proposal_scale: 0.0,
        acceptance: EstimateCI::wilson(0, 0),
    };
    if !hypothesis_holds || n_probes == 0 {
        return Ok(report);
    }
    let sampler = BallSampler::search(&ball1, 0.05, 200, &stream.child(1))?;
    let (members, acc) = sample_ball_members(&ball1, &sampler, n_probes, &stream.child(2))?;
    let ball2 = BallSpec::new(phi2.clone(), (1.0 + delta) * r, *p)?.with_quad_level(q)?;
    let center_lift = lift(phi1);
    let checks = members
        .par_iter()
        .map(|w| -> Result<(Verdict, f64)> {
            let vu = member_u(&ball2, w)?;
            let dist = omega_distance_at(&lift(w), &center_lift, p, q)?;
            Ok((vu, dist))
        })
        .collect::<Result<Vec<_>>>()?;
    report.probes = members.len();
    report.proposal_scale = sampler.scale;
    report.acceptance = acc;
    for (w, (vu, dist)) in members.iter().zip(checks) {
        let v_out = Verdict::classify(dist, v_radius) == Verdict::Outside;
        let u_out = vu == Verdict::Outside;
        report.max_omega_ratio = report.max_omega_ratio.max(dist / v_radius);
        if u_out {
            report.u_counterexamples += 1;
        }
        if v_out {
            report.v_counterexamples += 1;
        }
        if (u_out || v_out) && report.first_counterexample.is_none() {
            report.first_counterexample = Some(w.clone());
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::exp_alg;

    #[test]
    fn classify_band() {
        assert_eq!(Verdict::classify(0.5, 1.0), Verdict::Inside);
        assert_eq!(Verdict::classify(1.0, 1.0), Verdict::Boundary);
        assert_eq!(Verdict::classify(1.0 + 2e-6, 1.0), Verdict::Outside);
        assert_eq!(Verdict::all([Verdict::Inside, Verdict::Boundary]), Verdict::Boundary);
    }

    #[test]
    fn center_is_inside() {
        let phi = SampledPath::from_fn(2, 6, |t, o| {
            o[0] = t * t;
            o[1] = (2.0 * t).sin();
        });
        let ball = BallSpec::new(phi.clone(), 0.1, BesovParams::default()).unwrap();
        assert_eq!(member_u(&ball, &phi).unwrap(), Verdict::Inside);
        assert_eq!(u_constraint_values(&phi, &phi.sub(&phi).unwrap(), &ball.params, 6).unwrap().len(), 9);
    }

    #[test]
    fn kappa_plug_in() {
        let k = covering_kappa(48.0, 1, 0, 1.0, &|_| 1.0).unwrap();
        assert!(k < 0.5 && k > 0.5 - 1e-11);
    }

    #[test]
    fn identity_needs_no_shift() {
        let w = SampledPath::zeros(3, 5);
        let s = retraction_shift(Group::So3, &Matrix3::identity(), &w).unwrap();
        assert_eq!(s.sup_norm(), 0.0);
        let a = exp_alg(&Vector3::new(0.0, 0.0, 0.2));
        assert_eq!(quasi_invariance_weight(Group::So3, &Matrix3::identity(), &w).unwrap(), 1.0);
        assert!(quasi_invariance_weight(Group::So3, &a, &w).unwrap() > 0.0);
    }
}
