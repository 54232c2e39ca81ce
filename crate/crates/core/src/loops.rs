//! Calculus on the based loop group in the right-invariant trivialization:
//! the sine frame of H₀, the connection ∇_h k = −P₀∫[h, k̇], the zeroth-order
//! terms of the Weitzenböck formula, its truncated frame sums, and a Monte
//! Carlo integration-by-parts check on pinned loops.
//!
//! A 1-form α is carried by its Riesz path α_t ∈ H₀ (𝔤-valued, algebra
//! coordinates), so that (α, h) = ∫⟨α̇_t, ḣ_t⟩dt. The piecewise-constant α̇
//! is the density against ḣ.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flows::{right_log_derivative_b, solve_flow};
use crate::geometry::{b_one, member_tube, retract, TubeSpec, Verdict};
use crate::lie::{exp_alg, log_grp, Group, LieAlgElem, LieGroupElem};
use crate::paths::{cm_inner, SampledPath};
use crate::sampler::{brownian_from_rng, SeededStream};
use crate::stats::EstimateCI;

fn vec_at(group: Group, p: &SampledPath, k: usize) -> LieAlgElem {
    group.embed(p.point(k))
}

fn check(group: Group, p: &SampledPath) -> Result<()> {
    if p.dim() != group.dim() {
        return Err(Error::DimMismatch(p.dim(), group.dim()));
    }
    Ok(())
}

fn check_pair(group: Group, a: &SampledPath, b: &SampledPath) -> Result<()> {
    check(group, a)?;
    check(group, b)?;
    if a.level() != b.level() {
        return Err(Error::LevelMismatch(a.level(), b.level()));
    }
    Ok(())
}

fn from_vectors(group: Group, level: u32, vals: &[LieAlgElem]) -> Result<SampledPath> {
    let d = group.dim();
    let mut out = vec![0.0; vals.len() * d];
    for (k, v) in vals.iter().enumerate() {
        group.coords(v, &mut out[k * d..(k + 1) * d]);
    }
    SampledPath::new(d, level, out)
}

/// Pointwise bracket [h(t), k(t)] on the grid.
pub fn bracket_path(group: Group, h: &SampledPath, k: &SampledPath) -> Result<SampledPath> {
    check_pair(group, h, k)?;
    let vals: Vec<LieAlgElem> = (0..=h.cells())
        .map(|j| group.bracket(&vec_at(group, h, j), &vec_at(group, k, j)))
        .collect();
    from_vectors(group, h.level(), &vals)
}

/// P₀f = f_t − t f_1 applied to cumulative values.
fn p0(vals: &mut [LieAlgElem]) {
    let n = vals.len() - 1;
    let end = vals[n];
    for (j, v) in vals.iter_mut().enumerate() {
        *v -= end * (j as f64 / n as f64);
    }
}

/// ∇_h k = −P₀ ∫₀^t [h_s, k̇_s] ds. On each cell h is linear and k̇ constant,
/// so the trapezoid rule is exact.
pub fn connection(group: Group, h: &SampledPath, k: &SampledPath) -> Result<SampledPath> {
    check_pair(group, h, k)?;
    let n = h.cells();
    let mut vals = vec![Vector3::zeros(); n + 1];
    for j in 0..n {
        let hm = (vec_at(group, h, j) + vec_at(group, h, j + 1)) * 0.5;
        let dk = vec_at(group, k, j + 1) - vec_at(group, k, j);
        vals[j + 1] = vals[j] - group.bracket(&hm, &dk);
    }
    p0(&mut vals);
    from_vectors(group, h.level(), &vals)
}

/// ‖(∇_h k − ∇_k h) − [k,h]‖_H for h, k ∈ H₀.
pub fn torsion_defect(group: Group, h: &SampledPath, k: &SampledPath) -> Result<f64> {
    let lhs = connection(group, h, k)?.sub(&connection(group, k, h)?)?;
    let br = bracket_path(group, k, h)?;
    Ok(crate::paths::cm_norm(&lhs.sub(&br)?))
}

/// |⟨∇_h k, l⟩_H + ⟨k, ∇_h l⟩_H| for k, l ∈ H₀.
pub fn metric_defect(group: Group, h: &SampledPath, k: &SampledPath, l: &SampledPath) -> Result<f64> {
    let a = cm_inner(&connection(group, h, k)?, l)?;
    let b = cm_inner(k, &connection(group, h, l)?)?;
    Ok((a + b).abs())
}

/// Larger of the torsion and metric-compatibility defects of the triple.
pub fn metric_compatibility_defect(
    group: Group,
    h: &SampledPath,
    k: &SampledPath,
    l: &SampledPath,
) -> Result<f64> {
    Ok(torsion_defect(group, h, k)?.max(metric_defect(group, h, k, l)?))
}

/// |2(∇_h k, l) − ([k,h], l) + ([l,k], h) − ([h,l], k)|: the Koszul formula
/// for right-invariant fields, whose inner products are constant.
pub fn koszul_defect(group: Group, h: &SampledPath, k: &SampledPath, l: &SampledPath) -> Result<f64> {
    let lhs = 2.0 * cm_inner(&connection(group, h, k)?, l)?;
    let rhs = cm_inner(&bracket_path(group, k, h)?, l)? - cm_inner(&bracket_path(group, l, k)?, h)?
        + cm_inner(&bracket_path(group, h, l)?, k)?;
    Ok((lhs - rhs).abs())
}

/// For f(γ) = tr(A γ(t)): |(X_h X_k − X_k X_h) f − X_{[k,h]} f| at γ(t) = g,
/// with X_h f(γ) = tr(A ĥ(t) γ(t)) and the fields composed as operators.
pub fn field_bracket_defect(h: &LieAlgElem, k: &LieAlgElem, g: &LieGroupElem, a: &Matrix3<f64>) -> f64 {
    use crate::lie::hat;
    let (hh, kh) = (hat(h), hat(k));
    // X_h(X_k f)(γ) = d/dτ tr(A k̂ e^{τĥ} g) = tr(A k̂ ĥ g).
    let lhs = (a * (kh * hh - hh * kh) * g).trace();
    let rhs = (a * hat(&k.cross(h)) * g).trace();
    (lhs - rhs).abs()
}

/// Orthonormal sine frame e_{k,a}(t) = √2 sin(kπt)/(kπ) ε_a of H₀, k ≤ K,
/// renormalized to unit discrete H-norm (the discrete frame is then exactly
/// orthogonal for K < 2^M).
#[derive(Debug, Clone)]
pub struct H0Frame {
    pub group: Group,
    pub modes: usize,
    pub level: u32,
    /// Element (k, a) sits at index (k − 1)·dim + a.
    pub elements: Vec<SampledPath>,
}

impl H0Frame {
    pub fn new(group: Group, modes: usize, level: u32) -> Result<Self> {
        if modes == 0 || modes >= (1usize << level) {
            return Err(Error::InvalidParams(format!("need 1 <= K < 2^M, got K={modes}, M={level}")));
        }
        let d = group.dim();
        let mut elements = Vec::with_capacity(modes * d);
        for k in 1..=modes {
            let kp = k as f64 * std::f64::consts::PI;
            for a in 0..d {
                let mut p = SampledPath::from_fn(d, level, |t, o| {
                    o.fill(0.0);
                    o[a] = std::f64::consts::SQRT_2 * (kp * t).sin() / kp;
                });
                // t = 1 is exactly zero in the loop, not sin(kπ) rounding.
                let n = p.cells();
                let mut v = p.values().to_vec();
                v[n * d..].fill(0.0);
                p = SampledPath::new(d, level, v)?;
                let norm = crate::paths::cm_norm(&p);
                elements.push(p.scaled(1.0 / norm));
            }
        }
        Ok(H0Frame { group, modes, level, elements })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Largest |⟨e_i, e_j⟩_H − δ_ij|.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, a) in self.elements.iter().enumerate() {
            for (j, b) in self.elements.iter().enumerate().skip(i) {
                let ip = cm_inner(a, b).expect("same shape");
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((ip - want).abs());
            }
        }
        worst
    }
}

/// A 1-form at a loop: the loop sample and the Riesz path α ∈ H₀.
#[derive(Debug, Clone)]
pub struct LoopOneForm {
    pub group: Group,
    pub alpha: SampledPath,
}

impl LoopOneForm {
    pub fn new(group: Group, alpha: SampledPath) -> Result<Self> {
        check(group, &alpha)?;
        Ok(LoopOneForm { group, alpha })
    }

    /// (α, h) = ∫⟨α̇, ḣ⟩dt.
    pub fn pair(&self, h: &SampledPath) -> Result<f64> {
        cm_inner(&self.alpha, h)
    }

    /// The density α̇ on each cell.
    pub fn density(&self) -> Vec<LieAlgElem> {
        let n = self.alpha.cells() as f64;
        (0..self.alpha.cells())
            .map(|j| (vec_at(self.group, &self.alpha, j + 1) - vec_at(self.group, &self.alpha, j)) * n)
            .collect()
    }
}

/// (T_vα)_t = ∫₀^t [α_s, v] ds − t ∫₀¹ [α_s, v] ds (trapezoid, exact for
/// piecewise-linear α).
pub fn t_v(alpha: &LoopOneForm, v: &LieAlgElem) -> Result<LoopOneForm> {
    let g = alpha.group;
    let a = &alpha.alpha;
    let n = a.cells();
    let h = 1.0 / n as f64;
    let mut vals = vec![Vector3::zeros(); n + 1];
    for j in 0..n {
        let mid = (vec_at(g, a, j) + vec_at(g, a, j + 1)) * 0.5;
        vals[j + 1] = vals[j] + g.bracket(&mid, v) * h;
    }
    p0(&mut vals);
    // P₀ leaves the endpoint at rounding level; pin it exactly.
    vals[n] = Vector3::zeros();
    LoopOneForm::new(g, from_vectors(g, a.level(), &vals)?)
}

/// ∫₀¹ ⟨p_t, q_t⟩ dt for piecewise-linear p, q (exact per cell).
fn l2_inner(group: Group, p: &[LieAlgElem], q: &[LieAlgElem]) -> f64 {
    let _ = group;
    let n = p.len() - 1;
    let h = 1.0 / n as f64;
    (0..n)
        .map(|j| {
            h * ((p[j].dot(&q[j]) + p[j + 1].dot(&q[j + 1])) / 3.0
                + (p[j].dot(&q[j + 1]) + p[j + 1].dot(&q[j])) / 6.0)
        })
        .sum()
}

fn mean_path(p: &[LieAlgElem]) -> LieAlgElem {
    let n = p.len() - 1;
    let h = 1.0 / n as f64;
    (0..n).map(|j| (p[j] + p[j + 1]) * (0.5 * h)).sum()
}

fn vectors(group: Group, p: &SampledPath) -> Vec<LieAlgElem> {
    (0..=p.cells()).map(|k| vec_at(group, p, k)).collect()
}

/// (T₂, T₃) = (∫⟨(Casimir α)_t, h_t⟩dt, −∫∫⟨Casimir α_t, h_s⟩dtds).
pub fn casimir_terms(alpha: &LoopOneForm, h: &SampledPath) -> Result<(f64, f64)> {
    let g = alpha.group;
    check_pair(g, &alpha.alpha, h)?;
    let cas: Matrix3<f64> = g.casimir();
    let ca: Vec<LieAlgElem> = vectors(g, &alpha.alpha).iter().map(|v| cas * v).collect();
    let hv = vectors(g, h);
    let t2 = l2_inner(g, &ca, &hv);
    let t3 = -mean_path(&ca).dot(&mean_path(&hv));
    Ok((t2, t3))
}

/// (supplied rough-Laplacian pairing) + (α,h) + (T_{b1}α, h) + T₂ + T₃.
pub fn weitzenboeck_rhs(
    alpha: &LoopOneForm,
    h: &SampledPath,
    b1: &LieAlgElem,
    laplacian_term: &dyn Fn(&LoopOneForm, &SampledPath) -> Result<f64>,
) -> Result<f64> {
    let lap = laplacian_term(alpha, h)?;
    let id = alpha.pair(h)?;
    let tb = t_v(alpha, b1)?.pair(h)?;
    let (t2, t3) = casimir_terms(alpha, h)?;
    Ok(lap + id + tb + t2 + t3)
}

/// Σ_i α(∇_{e_i}∇_{e_i} h) over the frame.
pub fn frame_sum_second_covariant(alpha: &LoopOneForm, h: &SampledPath, frame: &H0Frame) -> Result<f64> {
    let g = alpha.group;
    frame
        .elements
        .par_iter()
        .map(|e| alpha.pair(&connection(g, e, &connection(g, e, h)?)?))
        .collect::<Result<Vec<f64>>>()
        .map(|v| v.iter().sum())
}

/// ½ Σ_{i,j} α([e_j,e_i]) ([e_j,e_i], h) over the frame (both indices truncated).
pub fn frame_sum_bracket(alpha: &LoopOneForm, h: &SampledPath, frame: &H0Frame) -> Result<f64> {
    let g = alpha.group;
    let els = &frame.elements;
    let rows: Vec<f64> = (0..els.len())
        .into_par_iter()
        .map(|j| -> Result<f64> {
            let mut s = 0.0;
            for i in 0..els.len() {
                let b = bracket_path(g, &els[j], &els[i])?;
                s += alpha.pair(&b)? * cm_inner(&b, h)?;
            }
            Ok(s)
        })
        .collect::<Result<_>>()?;
    Ok(0.5 * rows.iter().sum::<f64>())
}

/// Limits of the two frame sums for the sine frame, from the per-cell
/// densities of α and h:
///   S₁ = ∫ t(1−t)⟨α̇, Cas ḣ⟩ − ∬ (min(s,t) − st)⟨α̇_t, Cas ḣ_s⟩,
///   S₁ + S₂ = ∫⟨Cas α_t, h_t⟩ − ⟨∫Cas α, ∫h⟩.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeitzenboeckClosed {
    pub s1: f64,
    pub s2: f64,
    pub sum: f64,
}

pub fn weitzenboeck_closed(alpha: &LoopOneForm, h: &SampledPath) -> Result<WeitzenboeckClosed> {
    let g = alpha.group;
    check_pair(g, &alpha.alpha, h)?;
    let cas = g.casimir();
    let n = h.cells();
    let dt = 1.0 / n as f64;
    let ad = alpha.density();
    let hd: Vec<LieAlgElem> = LoopOneForm::new(g, h.clone())?.density().iter().map(|v| cas * v).collect();
    // ∫ t(1−t) over cell j.
    let mut local = 0.0;
    for j in 0..n {
        let (a, b) = (j as f64 * dt, (j + 1) as f64 * dt);
        let w = (b * b - a * a) / 2.0 - (b * b * b - a * a * a) / 3.0;
        local += w * ad[j].dot(&hd[j]);
    }
    // u = ∫ G(·,s) q(s) ds solves −u″ = q, u(0) = u(1) = 0, with q = Cas ḣ.
    // u(t) = (1−t)∫₀^t s q + t∫_t^1 (1−s) q, piecewise quadratic; Simpson is exact.
    let mut left = vec![Vector3::zeros(); n + 1];
    let mut right = vec![Vector3::zeros(); n + 1];
    for j in 0..n {
        let (a, b) = (j as f64 * dt, (j + 1) as f64 * dt);
        left[j + 1] = left[j] + hd[j] * ((b * b - a * a) / 2.0);
    }
    for j in (0..n).rev() {
        let (a, b) = (j as f64 * dt, (j + 1) as f64 * dt);
        right[j] = right[j + 1] + hd[j] * ((b - a) - (b * b - a * a) / 2.0);
    }
    let u = |j: usize, t: f64, a: f64| -> LieAlgElem {
        // position t inside cell j starting at a
        let q = hd[j];
        let l = left[j] + q * ((t * t - a * a) / 2.0);
        let r = right[j + 1] + q * (((a + dt) - t) - ((a + dt) * (a + dt) - t * t) / 2.0);
        l * (1.0 - t) + r * t
    };
    let mut green = 0.0;
    for j in 0..n {
        let a = j as f64 * dt;
        let s = u(j, a, a) + u(j, a + 0.5 * dt, a) * 4.0 + u(j, a + dt, a);
        green += ad[j].dot(&s) * (dt / 6.0);
    }
    let s1 = local - green;
    let (t2, t3) = casimir_terms(alpha, h)?;
    let sum = t2 + t3;
    Ok(WeitzenboeckClosed { s1, s2: sum - s1, sum })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationRow {
    pub modes: usize,
    pub s1: f64,
    pub s2: f64,
}

/// Frame sums at each K in `modes`, evaluated on the grid of `level`.
pub fn weitzenboeck_truncation(
    alpha: &LoopOneForm,
    h: &SampledPath,
    modes: &[usize],
) -> Result<Vec<TruncationRow>> {
    modes
        .iter()
        .map(|&k| {
            let frame = H0Frame::new(alpha.group, k, h.level())?;
            Ok(TruncationRow {
                modes: k,
                s1: frame_sum_second_covariant(alpha, h, &frame)?,
                s2: frame_sum_bracket(alpha, h, &frame)?,
            })
        })
        .collect()
}

/// A cylindrical function of γ(½): f(γ) = F(γ(½)).
pub type Cylinder = fn(&LieGroupElem) -> f64;

/// X_h f(γ) = d/dτ f(e^{τh}γ) at τ = 0 for f depending on γ(½), by a central
/// difference with step `step`.
pub fn right_invariant_derivative(f: Cylinder, gamma_half: &LieGroupElem, h_half: &LieAlgElem, step: f64) -> f64 {
    let p = exp_alg(&(h_half * step)) * gamma_half;
    let m = exp_alg(&(h_half * -step)) * gamma_half;
    (f(&p) - f(&m)) / (2.0 * step)
}

#[derive(Debug, Clone)]
pub struct IbpReport {
    pub epsilon: f64,
    pub accepted: usize,
    pub proposals: usize,
    /// Self-normalized weighted estimates of E[X_h f·g] and E[f(−X_h g + (h,b)g)].
    pub lhs: f64,
    pub rhs: f64,
    pub lhs_stderr: f64,
    pub rhs_stderr: f64,
    /// Weighted mean of lhs − rhs per sample and its delta-method standard error.
    pub diff: f64,
    pub stderr: f64,
    /// The same difference without the pinning weights (the raw tube proxy).
    pub diff_unweighted: f64,
    pub stderr_unweighted: f64,
    /// Largest d(γ(1), e) among the retracted loops.
    pub max_pin_error: f64,
}

impl IbpReport {
    pub fn within(&self, sigmas: f64) -> bool {
        self.diff.abs() <= sigmas * self.stderr
    }
}

fn weighted_mean_se(x: &[f64], w: &[f64]) -> (f64, f64) {
    let sw: f64 = w.iter().sum();
    let m = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let v: f64 = x.iter().zip(w).map(|(a, b)| b * b * (a - m) * (a - m)).sum();
    (m, v.sqrt() / sw)
}

/// Monte Carlo check of ∫X_h f·g dν_e = ∫f(−X_h g + (h,b)g) dν_e.
///
/// Paths are drawn from the tube D_ε by rejection, retracted onto S, and
/// reweighted by exp((log a, b(1,Ψ(w))) + ½|log a|²) with a = X(1,e,w), which
/// undoes the shift-and-pin disintegration of Wiener measure over the tube.
/// Loops are γ = X(·,e,Ψ(w)); X_h uses a central difference with step 1e-4.
#[allow(clippy::too_many_arguments)]
pub fn ibp_mc_check(
    group: Group,
    f: Cylinder,
    g: Cylinder,
    h: &SampledPath,
    tube: &TubeSpec,
    n_samples: usize,
    stream: &SeededStream,
) -> Result<IbpReport> {
    check(group, h)?;
    let level = h.level();
    let mid = h.cells() / 2;
    let h_half = vec_at(group, h, mid);
    let chunk = 8192usize;
    let mut rows: Vec<[f64; 4]> = Vec::with_capacity(n_samples);
    let mut proposals = 0usize;
    let mut round = 0u64;
    while rows.len() < n_samples {
        let batch: Vec<Option<[f64; 4]>> = (0..chunk)
            .into_par_iter()
            .map(|i| -> Result<Option<[f64; 4]>> {
                let idx = round * chunk as u64 + i as u64;
                let w = brownian_from_rng(group.dim(), level, &mut stream.rng(idx));
                if member_tube(group, tube, &w)? != Verdict::Inside {
                    return Ok(None);
                }
                let a = crate::flows::endpoint(group, &w)?;
                let wr = retract(group, tube, &w)?;
                let c = log_grp(&a)?;
                let rho = (c.dot(&b_one(group, &wr)?) + 0.5 * c.norm_squared()).exp();
                let gamma = solve_flow(group, &Matrix3::identity(), &wr)?;
                let pin = crate::lie::dist(gamma.end(), &Matrix3::identity());
                let b = right_log_derivative_b(group, &gamma)?;
                let hb = cm_inner(h, &b)?;
                let gh = gamma.get(mid);
                let (fv, gv) = (f(gh), g(gh));
                let xf = right_invariant_derivative(f, gh, &h_half, 1e-4);
                let xg = right_invariant_derivative(g, gh, &h_half, 1e-4);
                Ok(Some([xf * gv, fv * (-xg + hb * gv), rho, pin]))
            })
            .collect::<Result<_>>()?;
        for r in batch {
            if rows.len() == n_samples {
                break;
            }
            proposals += 1;
            if let Some(r) = r {
                rows.push(r);
            }
        }
        round += 1;
        if rows.is_empty() && proposals > 50_000_000 {
            return Err(Error::InvalidParams("tube acceptance too small".into()));
        }
    }
    let rho: Vec<f64> = rows.iter().map(|r| r[2]).collect();
    let ones = vec![1.0; rows.len()];
    let d: Vec<f64> = rows.iter().map(|r| r[0] - r[1]).collect();
    let l: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let rr: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    let (diff, stderr) = weighted_mean_se(&d, &rho);
    let (lhs, lhs_stderr) = weighted_mean_se(&l, &rho);
    let (rhs, rhs_stderr) = weighted_mean_se(&rr, &rho);
    let (diff_u, se_u) = weighted_mean_se(&d, &ones);
    Ok(IbpReport {
        epsilon: tube.epsilon,
        accepted: rows.len(),
        proposals,
        lhs,
        rhs,
        lhs_stderr,
        rhs_stderr,
        diff,
        stderr,
        diff_unweighted: diff_u,
        stderr_unweighted: se_u,
        max_pin_error: rows.iter().map(|r| r[3]).fold(0.0, f64::max),
    })
}

/// Abelian oracle: for the pinned angle x = γ(½) ~ N(0, ¼) and f = F(x),
/// E[X_h f · g] = h(½) E[F′(x) G(x)], by Gauss–Hermite quadrature.
pub fn abelian_ibp_oracle(f_prime_g: impl Fn(f64) -> f64, h_half: f64) -> f64 {
    // ∫ φ(x) N(0,¼)(dx) with x = y/2, y ~ N(0,1); 200-point trapezoid on [−10,10].
    let n = 4000;
    let (lo, hi) = (-10.0, 10.0);
    let dy = (hi - lo) / n as f64;
    let mut acc = 0.0;
    for i in 0..=n {
        let y = lo + i as f64 * dy;
        let wgt = if i == 0 || i == n { 0.5 } else { 1.0 };
        acc += wgt * f_prime_g(0.5 * y) * (-0.5 * y * y).exp();
    }
    h_half * acc * dy / (2.0 * std::f64::consts::PI).sqrt()
}

/// Mean and interval of `x` as a convenience for reports.
pub fn mean_ci(x: &[f64]) -> EstimateCI {
    EstimateCI::from_samples(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_is_orthonormal_and_pinned() {
        let f = H0Frame::new(Group::So3, 4, 8).unwrap();
        assert!(f.orthonormality_defect() < 1e-12);
        for e in &f.elements {
            assert!(e.point(0).iter().chain(e.end()).all(|v| *v == 0.0));
        }
    }

    #[test]
    fn t_v_of_linear_density() {
        let a = SampledPath::from_fn(3, 6, |t, o| {
            o.fill(0.0);
            o[0] = t;
        });
        let a = LoopOneForm::new(Group::So3, a).unwrap();
        let out = t_v(&a, &Vector3::y()).unwrap();
        for k in 0..=64 {
            let t = k as f64 / 64.0;
            let want = t * t / 2.0 - t / 2.0;
            assert!((out.alpha.point(k)[2] - want).abs() < 1e-15);
        }
    }

    #[test]
    fn abelian_bracket_terms_vanish() {
        let h = SampledPath::from_fn(1, 6, |t, o| o[0] = (std::f64::consts::PI * t).sin());
        let k = SampledPath::from_fn(1, 6, |t, o| o[0] = t * (1.0 - t));
        assert_eq!(connection(Group::Torus, &h, &k).unwrap().sup_norm(), 0.0);
        let a = LoopOneForm::new(Group::Torus, k).unwrap();
        assert_eq!(casimir_terms(&a, &h).unwrap(), (0.0, 0.0));
    }
}
