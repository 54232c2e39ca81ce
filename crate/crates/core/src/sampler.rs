//! Seeded Brownian paths, dyadic increment layers, the convergence-rate
//! experiment and Monte Carlo small-ball estimates.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lift::{AreaField, IteratedIntegral};
use crate::paths::{
    besov_norm, dyadic_approx, BesovParams, IncrementField, ProductField, SampledPath,
    SimplexField, SimplexGrid,
};
use crate::stats::{median, ols_slope, quantile, EstimateCI};

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A (seed, stream) pair. Sample i of a stream draws from its own ChaCha
/// stream, so results never depend on how samples are split across workers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeededStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl SeededStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        SeededStream { seed, stream_id }
    }

    /// Independent child stream labelled by `tag`.
    pub fn child(&self, tag: u64) -> SeededStream {
        let mut s = self.stream_id ^ tag.wrapping_mul(0xD6E8_FEB8_6659_FD93);
        SeededStream { seed: self.seed, stream_id: splitmix64(&mut s) }
    }

    fn key(&self) -> [u8; 32] {
        let mut state = self.seed ^ self.stream_id.rotate_left(32);
        let mut key = [0u8; 32];
        for chunk in key.chunks_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        key
    }

    /// Generator for sample `index` of this stream.
    pub fn rng(&self, index: u64) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::from_seed(self.key());
        rng.set_stream(index);
        rng
    }
}

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Brownian path with exact N(0, 2^{−M} I_d) increments drawn from `rng`.
pub fn brownian_from_rng<R: Rng + ?Sized>(d: usize, level: u32, rng: &mut R) -> SampledPath {
    let n = 1usize << level;
    let sd = (1.0 / n as f64).sqrt();
    let inc: Vec<f64> = (0..n * d).map(|_| sd * standard_normal(rng)).collect();
    SampledPath::from_increments(d, level, &inc).expect("consistent length")
}

/// Brownian path for sample 0 of `stream`.
pub fn sample_brownian(d: usize, level: u32, stream: &SeededStream) -> SampledPath {
    brownian_from_rng(d, level, &mut stream.rng(0))
}

/// z(N) = w(N) − w(N−1) for N ≥ 1, with the convention w(0) = 0.
pub fn increment_layer(w: &SampledPath, n_level: u32) -> Result<SampledPath> {
    match n_level {
        0 => Err(Error::InvalidParams("layers start at N = 1".into())),
        1 => dyadic_approx(w, 1),
        _ => dyadic_approx(w, n_level)?.sub(&dyadic_approx(w, n_level - 1)?),
    }
}

/// Maximum discrepancy between C(w(N+1)) − C(w(N)) computed directly and via
/// the four-term expansion in the layer z(N+1), over all pairs at `level`.
pub fn one_step_difference_defect(w: &SampledPath, n_level: u32, level: u32) -> Result<f64> {
    let wn = dyadic_approx(w, n_level)?;
    let wn1 = dyadic_approx(w, n_level + 1)?;
    let z = wn1.sub(&wn)?;
    let c_next = IteratedIntegral::new(&wn1, &wn1)?;
    let c_now = IteratedIntegral::new(&wn, &wn)?;
    let c_zw = IteratedIntegral::new(&z, &wn)?;
    let c_zz = IteratedIntegral::new(&z, &z)?;
    let d = w.dim();
    let n = 1usize << level;
    let stride = 1usize << (w.level() - level);
    let mut worst = 0.0f64;
    for k in 0..n {
        for l in k + 1..=n {
            let (s, t) = (k * stride, l * stride);
            for i in 0..d {
                for j in 0..d {
                    let direct = c_next.entry(i, j, s, t) - c_now.entry(i, j, s, t);
                    let wbar = wn.point(t)[i] - wn.point(s)[i];
                    let zbar = z.point(t)[j] - z.point(s)[j];
                    let expanded = wbar * zbar - c_zw.entry(j, i, s, t)
                        + c_zw.entry(i, j, s, t)
                        + c_zz.entry(i, j, s, t);
                    worst = worst.max((direct - expanded).abs());
                }
            }
        }
    }
    Ok(worst)
}

/// The four statistics tracked by the convergence experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvStat {
    /// ‖z(N)‖_{m,θ/2}
    Layer,
    /// ‖C(w(N+1),w(N+1)) − C(w(N),w(N))‖_{m,θ}
    AreaStep,
    /// ‖C(w(N)^⊥, w(N))‖_{m,θ}
    CrossArea,
    /// ‖(w(N)^⊥)·(w(N))‖_{m,θ}
    CrossProduct,
}

impl ConvStat {
    pub const ALL: [ConvStat; 4] =
        [ConvStat::Layer, ConvStat::AreaStep, ConvStat::CrossArea, ConvStat::CrossProduct];

    pub fn name(self) -> &'static str {
        match self {
            ConvStat::Layer => "layer_norm",
            ConvStat::AreaStep => "area_step_norm",
            ConvStat::CrossArea => "cross_area_norm",
            ConvStat::CrossProduct => "cross_product_norm",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceConfig {
    pub dim: usize,
    pub level: u32,
    pub n_min: u32,
    pub n_max: u32,
    pub params: BesovParams,
    pub n_seeds: usize,
    /// Level at which the norm quadrature is carried out (≤ level).
    pub quad_level: u32,
    pub n_boot: usize,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        ConvergenceConfig {
            dim: 2,
            level: 12,
            n_min: 2,
            n_max: 7,
            params: BesovParams::default(),
            n_seeds: 200,
            quad_level: 10,
            n_boot: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub levels: Vec<u32>,
    /// `estimates[s][i]`: statistic `ConvStat::ALL[s]` at `levels[i]`.
    pub estimates: Vec<Vec<EstimateCI>>,
    pub medians: Vec<Vec<f64>>,
    pub slopes: Vec<SlopeFit>,
}

/// Values of the four statistics of one path for N = n_min..=n_max.
pub fn convergence_statistics(w: &SampledPath, cfg: &ConvergenceConfig) -> Result<Vec<[f64; 4]>> {
    let p = &cfg.params;
    let q = cfg.quad_level;
    let mut out = Vec::new();
    for n in cfg.n_min..=cfg.n_max {
        let wn = dyadic_approx(w, n)?;
        let wprev = dyadic_approx(w, n - 1)?;
        let wnext = dyadic_approx(w, n + 1)?;
        let z = wn.sub(&wprev)?;
        let perp = w.sub(&wn)?;
        let layer = besov_norm(&IncrementField::at_level(&z, q)?, p.m, p.theta / 2.0)?;
        let c_next = IteratedIntegral::new(&wnext, &wnext)?;
        let c_now = IteratedIntegral::new(&wn, &wn)?;
        let step = besov_norm(&AreaField::new(vec![(1.0, &c_next), (-1.0, &c_now)], q)?, p.m, p.theta)?;
        let c_cross = IteratedIntegral::new(&perp, &wn)?;
        let cross = besov_norm(&AreaField::new(vec![(1.0, &c_cross)], q)?, p.m, p.theta)?;
        let prod = besov_norm(&ProductField::all(&perp, &wn, q)?, p.m, p.theta)?;
        out.push([layer, step, cross, prod]);
    }
    Ok(out)
}

fn slope_of_medians(levels: &[f64], per_seed: &[Vec<[f64; 4]>], idx: &[usize], s: usize) -> f64 {
    let logs: Vec<f64> = (0..levels.len())
        .map(|i| {
            let v: Vec<f64> = idx.iter().map(|&k| per_seed[k][i][s]).collect();
            median(&v).log2()
        })
        .collect();
    ols_slope(levels, &logs)
}

/// Rate experiment: per-level estimates of the four
/// statistics and log₂-slopes of their medians with bootstrap intervals.
pub fn convergence_experiment(
    cfg: &ConvergenceConfig,
    stream: &SeededStream,
) -> Result<ConvergenceReport> {
    if cfg.n_min == 0 || cfg.n_max < cfg.n_min || cfg.n_max + 1 > cfg.level {
        return Err(Error::InvalidParams(format!(
            "need 1 <= n_min <= n_max < level, got {}..{} at level {}",
            cfg.n_min, cfg.n_max, cfg.level
        )));
    }
    if cfg.quad_level > cfg.level || cfg.quad_level <= cfg.n_max {
        return Err(Error::InvalidParams("quad_level must lie in (n_max, level]".into()));
    }
    if cfg.n_seeds == 0 {
        return Err(Error::InvalidParams("n_seeds must be positive".into()));
    }
    let per_seed: Vec<Vec<[f64; 4]>> = (0..cfg.n_seeds)
        .into_par_iter()
        .map(|i| {
            let w = brownian_from_rng(cfg.dim, cfg.level, &mut stream.rng(i as u64));
            convergence_statistics(&w, cfg)
        })
        .collect::<Result<_>>()?;
    let levels: Vec<u32> = (cfg.n_min..=cfg.n_max).collect();
    let lv: Vec<f64> = levels.iter().map(|&n| f64::from(n)).collect();
    let mut estimates = Vec::new();
    let mut medians = Vec::new();
    for s in 0..4 {
        let mut est = Vec::new();
        let mut med = Vec::new();
        for i in 0..levels.len() {
            let v: Vec<f64> = per_seed.iter().map(|r| r[i][s]).collect();
            est.push(EstimateCI::from_samples(&v));
            med.push(median(&v));
        }
        estimates.push(est);
        medians.push(med);
    }
    let all: Vec<usize> = (0..cfg.n_seeds).collect();
    let mut rng = stream.child(0xB007).rng(0);
    let resamples: Vec<Vec<usize>> = (0..cfg.n_boot)
        .map(|_| (0..cfg.n_seeds).map(|_| rng.random_range(0..cfg.n_seeds)).collect())
        .collect();
    let slopes = (0..4)
        .map(|s| {
            let slope = slope_of_medians(&lv, &per_seed, &all, s);
            if resamples.is_empty() {
                return SlopeFit { slope, ci_lo: slope, ci_hi: slope };
            }
            let boots: Vec<f64> =
                resamples.iter().map(|idx| slope_of_medians(&lv, &per_seed, idx, s)).collect();
            SlopeFit { slope, ci_lo: quantile(&boots, 0.025), ci_hi: quantile(&boots, 0.975) }
        })
        .collect();
    Ok(ConvergenceReport { levels, estimates, medians, slopes })
}

/// Scalar expression on the simplex grid of w(N).
#[derive(Debug, Clone)]
pub enum GridExpr {
    /// ‖w(N) + offset‖_{m,θ}
    Path { offset: Option<SampledPath>, m: u32, theta: f64 },
    /// ‖C(w(N), y) + offset‖_{m,θ}
    AreaLeft { y: SampledPath, offset: Option<SimplexGrid>, m: u32, theta: f64 },
    /// ‖C(y, w(N)) + offset‖_{m,θ}
    AreaRight { y: SampledPath, offset: Option<SimplexGrid>, m: u32, theta: f64 },
}

struct OffsetField<'a> {
    base: &'a dyn SimplexField,
    offset: Option<&'a SimplexGrid>,
}

impl SimplexField for OffsetField<'_> {
    fn level(&self) -> u32 {
        self.base.level()
    }
    fn comps(&self) -> usize {
        self.base.comps()
    }
    fn row(&self, k: usize, out: &mut [f64]) {
        self.base.row(k, out);
        if let Some(off) = self.offset {
            let n = 1usize << self.level();
            for l in k + 1..=n {
                out[l] += off.get(k, l)[0];
            }
        }
    }
}

impl GridExpr {
    /// Evaluates the expression for a scalar path x sampled at the quadrature level.
    pub fn eval(&self, x: &SampledPath) -> Result<f64> {
        match self {
            GridExpr::Path { offset, m, theta } => {
                let p = match offset {
                    Some(o) => x.add(o)?,
                    None => x.clone(),
                };
                besov_norm(&IncrementField::new(&p), *m, *theta)
            }
            GridExpr::AreaLeft { y, offset, m, theta } => {
                let ii = IteratedIntegral::new(x, y)?;
                let f = ii.field();
                besov_norm(&OffsetField { base: &f, offset: offset.as_ref() }, *m, *theta)
            }
            GridExpr::AreaRight { y, offset, m, theta } => {
                let ii = IteratedIntegral::new(y, x)?;
                let f = ii.field();
                besov_norm(&OffsetField { base: &f, offset: offset.as_ref() }, *m, *theta)
            }
        }
    }
}

/// Constraints of U_N(z¹,…,z^l; ε): ‖w(N)‖_{m,θ′/2}, ‖C(w(N),z^i)‖_{m,θ},
/// ‖C(z^i,w(N))‖_{m,θ}, all below ε.
pub fn positivity_constraints(zs: &[SampledPath], p: &BesovParams, eps: f64) -> Vec<(GridExpr, f64)> {
    let mut out =
        vec![(GridExpr::Path { offset: None, m: p.m, theta: p.theta_prime / 2.0 }, eps)];
    for z in zs {
        out.push((
            GridExpr::AreaLeft { y: z.clone(), offset: None, m: p.m, theta: p.theta },
            eps,
        ));
        out.push((
            GridExpr::AreaRight { y: z.clone(), offset: None, m: p.m, theta: p.theta },
            eps,
        ));
    }
    out
}

/// Monte Carlo probability that a one-dimensional w(N) satisfies every
/// constraint `expr < bound`, with a Wilson interval. Paths are drawn at level
/// N (exact law of w(N)) and evaluated at `quad_level`; every path in the
/// constraint list must live on that level.
pub fn small_ball_estimate(
    constraints: &[(GridExpr, f64)],
    n_level: u32,
    quad_level: u32,
    n_seeds: usize,
    stream: &SeededStream,
) -> Result<EstimateCI> {
    if quad_level < n_level {
        return Err(Error::InvalidParams("quad_level must be at least N".into()));
    }
    for (e, _) in constraints {
        let lv = match e {
            GridExpr::Path { offset, .. } => offset.as_ref().map(|o| o.level()),
            GridExpr::AreaLeft { y, .. } | GridExpr::AreaRight { y, .. } => Some(y.level()),
        };
        if let Some(lv) = lv {
            if lv != quad_level {
                return Err(Error::LevelMismatch(lv, quad_level));
            }
        }
    }
    let hits: Vec<bool> = (0..n_seeds)
        .into_par_iter()
        .map(|i| -> Result<bool> {
            let w = brownian_from_rng(1, n_level, &mut stream.rng(i as u64)).upsample(quad_level)?;
            for (e, bound) in constraints {
                if e.eval(&w)? >= *bound {
                    return Ok(false);
                }
            }
            Ok(true)
        })
        .collect::<Result<_>>()?;
    let k = hits.iter().filter(|&&h| h).count();
    Ok(EstimateCI::wilson(k, n_seeds))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stream_is_deterministic() {
        let s = SeededStream::new(7, 3);
        assert_eq!(sample_brownian(2, 6, &s), sample_brownian(2, 6, &s));
        assert_ne!(sample_brownian(2, 6, &s), sample_brownian(2, 6, &s.child(1)));
    }

    #[test]
    fn layers_telescope() {
        let w = sample_brownian(2, 7, &SeededStream::new(1, 0));
        let mut acc = SampledPath::zeros(2, 7);
        for n in 1..=7 {
            acc = acc.add(&increment_layer(&w, n).unwrap()).unwrap();
        }
        for (a, b) in acc.values().iter().zip(w.values()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn layer_of_linear_is_zero() {
        let w = SampledPath::linear(6, &[1.5]);
        assert_eq!(increment_layer(&w, 1).unwrap(), w);
        for n in 2..=6 {
            assert!(increment_layer(&w, n).unwrap().sup_norm() < 1e-15);
        }
    }

    #[test]
    fn empty_constraints_accept_everything() {
        let e = small_ball_estimate(&[], 3, 6, 50, &SeededStream::new(1, 1)).unwrap();
        assert_eq!(e.mean, 1.0);
    }
}
