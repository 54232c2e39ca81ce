//! Paths on dyadic grids, dyadic polygonal approximation, and the
//! Besov / Hölder / Cameron–Martin norms.

use crate::error::{Error, Result};

/// Largest level at which a [`SimplexGrid`] is stored explicitly.
pub const MAX_GRID_LEVEL: u32 = 9;

/// Integrability parameters (m, θ, θ′) of the Besov norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesovParams {
    pub m: u32,
    pub theta: f64,
    pub theta_prime: f64,
}

impl Default for BesovParams {
    fn default() -> Self {
        BesovParams { m: 18, theta: 0.70, theta_prime: 0.75 }
    }
}

impl BesovParams {
    /// Checked constructor: m even, m ≥ 4, 2/3 < θ < θ′ < 1 and m(1−θ′) > 4.
    pub fn new(m: u32, theta: f64, theta_prime: f64) -> Result<Self> {
        Self::check_common(m, theta, theta_prime)?;
        if theta <= 2.0 / 3.0 {
            return Err(Error::InvalidParams(format!("theta={theta} must exceed 2/3")));
        }
        if f64::from(m) * (1.0 - theta_prime) <= 4.0 {
            return Err(Error::InvalidParams(format!(
                "m(1-theta')={} must exceed 4",
                f64::from(m) * (1.0 - theta_prime)
            )));
        }
        Ok(BesovParams { m, theta, theta_prime })
    }

    /// Relaxed constructor used on the convergence side: only m(1−θ) > 2.
    pub fn relaxed(m: u32, theta: f64, theta_prime: f64) -> Result<Self> {
        Self::check_common(m, theta, theta_prime)?;
        if f64::from(m) * (1.0 - theta) <= 2.0 {
            return Err(Error::InvalidParams(format!(
                "m(1-theta)={} must exceed 2",
                f64::from(m) * (1.0 - theta)
            )));
        }
        Ok(BesovParams { m, theta, theta_prime })
    }

    fn check_common(m: u32, theta: f64, theta_prime: f64) -> Result<()> {
        if m < 4 || !m.is_multiple_of(2) {
            return Err(Error::InvalidParams(format!("m={m} must be even and at least 4")));
        }
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::InvalidParams(format!("theta={theta} must lie in (0,1)")));
        }
        if !(theta_prime > theta && theta_prime < 1.0) {
            return Err(Error::InvalidParams(format!(
                "theta'={theta_prime} must lie in (theta,1)"
            )));
        }
        Ok(())
    }
}

/// A d-dimensional path sampled at the 2^M+1 dyadic times k/2^M,
/// read as piecewise linear in between. Always starts at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPath {
    dim: usize,
    level: u32,
    values: Vec<f64>,
}

impl SampledPath {
    pub fn new(dim: usize, level: u32, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParams("dimension must be positive".into()));
        }
        if values.len() != dim * ((1usize << level) + 1) {
            return Err(Error::BadLength { got: values.len(), dim });
        }
        if values[..dim].iter().any(|&v| v != 0.0) {
            return Err(Error::NonZeroStart);
        }
        Ok(SampledPath { dim, level, values })
    }

    pub fn zeros(dim: usize, level: u32) -> Self {
        SampledPath { dim, level, values: vec![0.0; dim * ((1usize << level) + 1)] }
    }

    /// Samples `f` on the grid. The result is re-based so that it starts at 0.
    pub fn from_fn(dim: usize, level: u32, f: impl Fn(f64, &mut [f64])) -> Self {
        let n = 1usize << level;
        let mut values = vec![0.0; dim * (n + 1)];
        for k in 0..=n {
            f(k as f64 / n as f64, &mut values[k * dim..(k + 1) * dim]);
        }
        let origin: Vec<f64> = values[..dim].to_vec();
        for k in 0..=n {
            for c in 0..dim {
                values[k * dim + c] -= origin[c];
            }
        }
        SampledPath { dim, level, values }
    }

    /// Cumulative sum of per-cell increments (2^M·d values).
    pub fn from_increments(dim: usize, level: u32, increments: &[f64]) -> Result<Self> {
        let n = 1usize << level;
        if increments.len() != n * dim {
            return Err(Error::BadLength { got: increments.len(), dim });
        }
        let mut values = vec![0.0; dim * (n + 1)];
        for k in 0..n {
            for c in 0..dim {
                values[(k + 1) * dim + c] = values[k * dim + c] + increments[k * dim + c];
            }
        }
        Ok(SampledPath { dim, level, values })
    }

    /// Linear path t ↦ t·v.
    pub fn linear(level: u32, v: &[f64]) -> Self {
        Self::from_fn(v.len(), level, |t, out| {
            for (o, vi) in out.iter_mut().zip(v) {
                *o = t * vi;
            }
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Number of grid cells, 2^M.
    pub fn cells(&self) -> usize {
        1usize << self.level
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 / self.cells() as f64
    }

    pub fn end(&self) -> &[f64] {
        self.point(self.cells())
    }

    pub fn component(&self, i: usize) -> SampledPath {
        let values = self.values.iter().skip(i).step_by(self.dim).copied().collect();
        SampledPath { dim: 1, level: self.level, values }
    }

    pub fn from_components(parts: &[SampledPath]) -> Result<Self> {
        let first = parts.first().ok_or(Error::EmptyGrid)?;
        let level = first.level;
        let mut dim = 0;
        for p in parts {
            if p.level != level {
                return Err(Error::LevelMismatch(level, p.level));
            }
            dim += p.dim;
        }
        let n = first.cells();
        let mut values = Vec::with_capacity(dim * (n + 1));
        for k in 0..=n {
            for p in parts {
                values.extend_from_slice(p.point(k));
            }
        }
        Ok(SampledPath { dim, level, values })
    }

    fn check_same(&self, other: &SampledPath) -> Result<()> {
        if self.level != other.level {
            return Err(Error::LevelMismatch(self.level, other.level));
        }
        if self.dim != other.dim {
            return Err(Error::DimMismatch(self.dim, other.dim));
        }
        Ok(())
    }

    /// a·self + b·other.
    pub fn lin_comb(&self, a: f64, other: &SampledPath, b: f64) -> Result<SampledPath> {
        self.check_same(other)?;
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        Ok(SampledPath { dim: self.dim, level: self.level, values })
    }

    pub fn add(&self, other: &SampledPath) -> Result<SampledPath> {
        self.check_same(other)?;
        let values = self.values.iter().zip(&other.values).map(|(x, y)| x + y).collect();
        Ok(SampledPath { dim: self.dim, level: self.level, values })
    }

    pub fn sub(&self, other: &SampledPath) -> Result<SampledPath> {
        self.check_same(other)?;
        let values = self.values.iter().zip(&other.values).map(|(x, y)| x - y).collect();
        Ok(SampledPath { dim: self.dim, level: self.level, values })
    }

    pub fn scaled(&self, c: f64) -> SampledPath {
        SampledPath {
            dim: self.dim,
            level: self.level,
            values: self.values.iter().map(|x| c * x).collect(),
        }
    }

    /// Exact re-sampling of the piecewise-linear interpolant on a finer grid.
    pub fn upsample(&self, level: u32) -> Result<SampledPath> {
        if level < self.level {
            return Err(Error::InvalidParams(format!(
                "cannot upsample level {} to {level}",
                self.level
            )));
        }
        let stride = 1usize << (level - self.level);
        let n = self.cells();
        let d = self.dim;
        let mut values = vec![0.0; d * (n * stride + 1)];
        for j in 0..n {
            let a = self.point(j);
            let b = self.point(j + 1);
            for r in 0..stride {
                let lam = r as f64 / stride as f64;
                for c in 0..d {
                    values[(j * stride + r) * d + c] = a[c] + lam * (b[c] - a[c]);
                }
            }
        }
        values[n * stride * d..].copy_from_slice(self.end());
        Ok(SampledPath { dim: d, level, values })
    }

    /// Value of the interpolant at time t ∈ [0,1].
    pub fn at(&self, t: f64) -> Vec<f64> {
        let n = self.cells();
        let x = t.clamp(0.0, 1.0) * n as f64;
        let k = (x.floor() as usize).min(n - 1);
        let lam = x - k as f64;
        let a = self.point(k);
        let b = self.point(k + 1);
        a.iter().zip(b).map(|(p, q)| p + lam * (q - p)).collect()
    }

    /// The grid values at the coarser `level` (every 2^(M−level)th point).
    pub fn restrict(&self, level: u32) -> Result<SampledPath> {
        if level > self.level {
            return Err(Error::BeyondResolution { requested: level, stored: self.level });
        }
        let stride = 1usize << (self.level - level);
        let d = self.dim;
        let mut v = Vec::with_capacity(((1usize << level) + 1) * d);
        for k in (0..=self.cells()).step_by(stride) {
            v.extend_from_slice(self.point(k));
        }
        SampledPath::new(d, level, v)
    }

    pub fn sup_norm(&self) -> f64 {
        (0..=self.cells())
            .map(|k| self.point(k).iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

/// w(N): interpolation of w at the times k/2^N, re-sampled on w's grid.
pub fn dyadic_approx(w: &SampledPath, n_level: u32) -> Result<SampledPath> {
    if n_level > w.level {
        return Err(Error::BeyondResolution { requested: n_level, stored: w.level });
    }
    let stride = 1usize << (w.level - n_level);
    let coarse = 1usize << n_level;
    let d = w.dim;
    let mut values = vec![0.0; w.values.len()];
    for j in 0..coarse {
        let a = w.point(j * stride);
        let b = w.point((j + 1) * stride);
        for r in 0..stride {
            let lam = r as f64 / stride as f64;
            for c in 0..d {
                values[(j * stride + r) * d + c] = a[c] + lam * (b[c] - a[c]);
            }
        }
    }
    values[coarse * stride * d..].copy_from_slice(w.end());
    Ok(SampledPath { dim: d, level: w.level, values })
}

/// w(N)^⊥ = w − w(N); vanishes at every k/2^N.
pub fn dyadic_complement(w: &SampledPath, n_level: u32) -> Result<SampledPath> {
    w.sub(&dyadic_approx(w, n_level)?)
}

/// Cameron–Martin norm of the piecewise-linear interpolant.
pub fn cm_norm(h: &SampledPath) -> f64 {
    let n = h.cells();
    let d = h.dim;
    let mut s = 0.0;
    for k in 0..n {
        for c in 0..d {
            let dx = h.values[(k + 1) * d + c] - h.values[k * d + c];
            s += dx * dx;
        }
    }
    (s * n as f64).sqrt()
}

/// Cameron–Martin inner product of two piecewise-linear paths.
pub fn cm_inner(a: &SampledPath, b: &SampledPath) -> Result<f64> {
    a.check_same(b)?;
    let n = a.cells();
    let d = a.dim;
    let mut s = 0.0;
    for k in 0..n {
        for c in 0..d {
            let da = a.values[(k + 1) * d + c] - a.values[k * d + c];
            let db = b.values[(k + 1) * d + c] - b.values[k * d + c];
            s += da * db;
        }
    }
    Ok(s * n as f64)
}

/// A (possibly vector-valued) function on the discrete simplex
/// {(k,l): 0 ≤ k < l ≤ 2^level}, produced one row at a time.
pub trait SimplexField: Sync {
    fn level(&self) -> u32;
    fn comps(&self) -> usize;
    /// Writes φ(k,l) at `out[l*comps..(l+1)*comps]` for every l ≤ 2^level.
    /// Entries with l ≤ k must be zero.
    fn row(&self, k: usize, out: &mut [f64]);
}

/// Explicitly stored simplex grid, packed as index l(l−1)/2 + k.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexGrid {
    level: u32,
    comps: usize,
    values: Vec<f64>,
}

impl SimplexGrid {
    pub fn zeros(level: u32, comps: usize) -> Result<Self> {
        if level > MAX_GRID_LEVEL {
            return Err(Error::GridTooLarge(level));
        }
        if comps == 0 {
            return Err(Error::EmptyGrid);
        }
        let n = 1usize << level;
        Ok(SimplexGrid { level, comps, values: vec![0.0; comps * n * (n + 1) / 2] })
    }

    pub fn from_fn(
        level: u32,
        comps: usize,
        f: impl Fn(usize, usize, &mut [f64]),
    ) -> Result<Self> {
        let mut g = Self::zeros(level, comps)?;
        let n = 1usize << level;
        for l in 1..=n {
            for k in 0..l {
                let i = g.index(k, l);
                f(k, l, &mut g.values[i..i + comps]);
            }
        }
        Ok(g)
    }

    /// Materializes any field whose level is small enough.
    pub fn from_field(field: &dyn SimplexField) -> Result<Self> {
        let level = field.level();
        let comps = field.comps();
        let mut g = Self::zeros(level, comps)?;
        let n = 1usize << level;
        let mut row = vec![0.0; (n + 1) * comps];
        for k in 0..n {
            field.row(k, &mut row);
            for l in k + 1..=n {
                let i = g.index(k, l);
                g.values[i..i + comps].copy_from_slice(&row[l * comps..(l + 1) * comps]);
            }
        }
        Ok(g)
    }

    fn index(&self, k: usize, l: usize) -> usize {
        (l * (l - 1) / 2 + k) * self.comps
    }

    pub fn get(&self, k: usize, l: usize) -> &[f64] {
        let i = self.index(k, l);
        &self.values[i..i + self.comps]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn scaled(&self, c: f64) -> SimplexGrid {
        SimplexGrid {
            level: self.level,
            comps: self.comps,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn lin_comb(&self, a: f64, other: &SimplexGrid, b: f64) -> Result<SimplexGrid> {
        if self.level != other.level {
            return Err(Error::LevelMismatch(self.level, other.level));
        }
        if self.comps != other.comps {
            return Err(Error::DimMismatch(self.comps, other.comps));
        }
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        Ok(SimplexGrid { level: self.level, comps: self.comps, values })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl SimplexField for SimplexGrid {
    fn level(&self) -> u32 {
        self.level
    }
    fn comps(&self) -> usize {
        self.comps
    }
    fn row(&self, k: usize, out: &mut [f64]) {
        let n = 1usize << self.level;
        let c = self.comps;
        out[..(k + 1) * c].fill(0.0);
        for l in k + 1..=n {
            out[l * c..(l + 1) * c].copy_from_slice(self.get(k, l));
        }
    }
}

/// Increment field x_t − x_s of a path, sampled at a (coarser or equal) level.
pub struct IncrementField<'a> {
    path: &'a SampledPath,
    level: u32,
}

impl<'a> IncrementField<'a> {
    pub fn new(path: &'a SampledPath) -> Self {
        IncrementField { path, level: path.level }
    }

    pub fn at_level(path: &'a SampledPath, level: u32) -> Result<Self> {
        if level > path.level {
            return Err(Error::BeyondResolution { requested: level, stored: path.level });
        }
        Ok(IncrementField { path, level })
    }
}

impl SimplexField for IncrementField<'_> {
    fn level(&self) -> u32 {
        self.level
    }
    fn comps(&self) -> usize {
        self.path.dim
    }
    fn row(&self, k: usize, out: &mut [f64]) {
        let n = 1usize << self.level;
        let stride = 1usize << (self.path.level - self.level);
        let d = self.path.dim;
        out[..(k + 1) * d].fill(0.0);
        let xs = self.path.point(k * stride);
        for l in k + 1..=n {
            let xt = self.path.point(l * stride);
            for c in 0..d {
                out[l * d + c] = xt[c] - xs[c];
            }
        }
    }
}

/// Products (x^i_t − x^i_s)(y^j_t − y^j_s) over a list of component pairs.
pub struct ProductField<'a> {
    x: &'a SampledPath,
    y: &'a SampledPath,
    pairs: Vec<(usize, usize)>,
    level: u32,
}

impl<'a> ProductField<'a> {
    pub fn new(
        x: &'a SampledPath,
        y: &'a SampledPath,
        pairs: Vec<(usize, usize)>,
        level: u32,
    ) -> Result<Self> {
        if x.level != y.level {
            return Err(Error::LevelMismatch(x.level, y.level));
        }
        if level > x.level {
            return Err(Error::BeyondResolution { requested: level, stored: x.level });
        }
        if pairs.is_empty() {
            return Err(Error::EmptyGrid);
        }
        for &(i, j) in &pairs {
            if i >= x.dim || j >= y.dim {
                return Err(Error::DimMismatch(i.max(j), x.dim.min(y.dim)));
            }
        }
        Ok(ProductField { x, y, pairs, level })
    }

    /// All d×d pairs (i,j), row-major.
    pub fn all(x: &'a SampledPath, y: &'a SampledPath, level: u32) -> Result<Self> {
        let pairs = (0..x.dim).flat_map(|i| (0..y.dim).map(move |j| (i, j))).collect();
        Self::new(x, y, pairs, level)
    }
}

impl SimplexField for ProductField<'_> {
    fn level(&self) -> u32 {
        self.level
    }
    fn comps(&self) -> usize {
        self.pairs.len()
    }
    fn row(&self, k: usize, out: &mut [f64]) {
        let n = 1usize << self.level;
        let stride = 1usize << (self.x.level - self.level);
        let c = self.pairs.len();
        out[..(k + 1) * c].fill(0.0);
        let xs = self.x.point(k * stride);
        let ys = self.y.point(k * stride);
        for l in k + 1..=n {
            let xt = self.x.point(l * stride);
            let yt = self.y.point(l * stride);
            for (p, &(i, j)) in self.pairs.iter().enumerate() {
                out[l * c + p] = (xt[i] - xs[i]) * (yt[j] - ys[j]);
            }
        }
    }
}

fn check_norm_args(comps: usize, m: u32, theta: f64) -> Result<()> {
    if comps == 0 {
        return Err(Error::EmptyGrid);
    }
    if m == 0 || !m.is_multiple_of(2) {
        return Err(Error::InvalidParams(format!("m={m} must be a positive even integer")));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidParams(format!("theta={theta} must lie in (0,1)")));
    }
    Ok(())
}

/// Running sum of w·|c|^m kept relative to the largest |c| seen so far.
struct ScaledPowerSum {
    scale2: f64,
    sum: f64,
}

#[inline(always)]
fn pow_int(mut x: f64, mut n: u32) -> f64 {
    let mut acc = 1.0;
    while n > 0 {
        if n & 1 == 1 {
            acc *= x;
        }
        x *= x;
        n >>= 1;
    }
    acc
}

fn weighted_powers<const H: u32>(c2: &[f64], w: &[f64], inv: f64) -> f64 {
    c2.iter().zip(w).map(|(&c, &w)| w * pow_int(c * inv, H)).sum()
}

/// Σ w_l (c2_l / max)^{half_m}; the exponent is a compile-time constant for common m.
fn row_power_sum(c2: &[f64], w: &[f64], inv: f64, half_m: u32) -> f64 {
    match half_m {
        2 => weighted_powers::<2>(c2, w, inv),
        3 => weighted_powers::<3>(c2, w, inv),
        4 => weighted_powers::<4>(c2, w, inv),
        5 => weighted_powers::<5>(c2, w, inv),
        6 => weighted_powers::<6>(c2, w, inv),
        7 => weighted_powers::<7>(c2, w, inv),
        8 => weighted_powers::<8>(c2, w, inv),
        9 => weighted_powers::<9>(c2, w, inv),
        10 => weighted_powers::<10>(c2, w, inv),
        12 => weighted_powers::<12>(c2, w, inv),
        16 => weighted_powers::<16>(c2, w, inv),
        _ => c2.iter().zip(w).map(|(&c, &w)| w * pow_int(c * inv, half_m)).sum(),
    }
}

impl ScaledPowerSum {
    fn new() -> Self {
        ScaledPowerSum { scale2: 0.0, sum: 0.0 }
    }

    /// Adds a block whose squared magnitudes are `c2` with weights `w`.
    fn push_block(&mut self, c2: &[f64], w: &[f64], half_m: u32) {
        let rmax = c2.iter().fold(0.0f64, |a, &b| a.max(b));
        if rmax == 0.0 {
            return;
        }
        let rsum = row_power_sum(c2, w, 1.0 / rmax, half_m);
        if rmax > self.scale2 {
            self.sum = self.sum * pow_int(self.scale2 / rmax, half_m) + rsum;
            self.scale2 = rmax;
        } else {
            self.sum += rsum * pow_int(rmax / self.scale2, half_m);
        }
    }

    fn finish(&self, m: u32) -> f64 {
        if self.scale2 == 0.0 {
            return 0.0;
        }
        self.scale2.sqrt() * self.sum.powf(1.0 / f64::from(m))
    }
}

/// Midpoint-rule Besov norm ‖φ‖_{m,θ} over the cells of the simplex grid.
///
/// Square cells use the bilinear value at the cell center; the diagonal
/// triangles use the value at their centroid, φ(k,k+1)/3 at gap h/3.
pub fn besov_norm(phi: &dyn SimplexField, m: u32, theta: f64) -> Result<f64> {
    let c = phi.comps();
    check_norm_args(c, m, theta)?;
    let n = 1usize << phi.level();
    let h = 1.0 / n as f64;
    let expo = 2.0 + f64::from(m) * theta;
    let weights: Vec<f64> = (0..=n)
        .map(|g| if g == 0 { 0.0 } else { h * h * (g as f64 * h).powf(-expo) })
        .collect();
    let diag_weight = 0.5 * h * h * (h / 3.0).powf(-expo);

    let half_m = m / 2;
    let mut acc = ScaledPowerSum::new();
    let mut row_a = vec![0.0; (n + 1) * c];
    let mut row_b = vec![0.0; (n + 1) * c];
    phi.row(0, &mut row_a);
    let mut col = vec![0.0; (n + 1) * c];
    let mut c2buf = vec![0.0; n + 1];
    for k in 0..n {
        if k + 1 < n {
            phi.row(k + 1, &mut row_b);
        } else {
            row_b.fill(0.0);
        }
        let v = &row_a[(k + 1) * c..(k + 2) * c];
        let d2 = v.iter().map(|x| x * x).sum::<f64>() / 9.0;
        acc.push_block(&[d2], &[diag_weight], half_m);
        for (s, (a, b)) in col[(k + 1) * c..]
            .iter_mut()
            .zip(row_a[(k + 1) * c..].iter().zip(&row_b[(k + 1) * c..]))
        {
            *s = a + b;
        }
        let len = n - k - 1;
        for (idx, l) in (k + 1..n).enumerate() {
            let mut s2 = 0.0;
            for p in 0..c {
                let cv = col[l * c + p] + col[(l + 1) * c + p];
                s2 += cv * cv;
            }
            c2buf[idx] = s2 * 0.0625;
        }
        acc.push_block(&c2buf[..len], &weights[1..=len], half_m);
        std::mem::swap(&mut row_a, &mut row_b);
    }
    Ok(acc.finish(m))
}

/// Discrete Hölder norm: max over grid pairs of |φ(s,t)|/(t−s)^θ.
pub fn hoelder_norm(phi: &dyn SimplexField, theta: f64) -> Result<f64> {
    let c = phi.comps();
    if c == 0 {
        return Err(Error::EmptyGrid);
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidParams(format!("theta={theta} must lie in (0,1)")));
    }
    let n = 1usize << phi.level();
    let h = 1.0 / n as f64;
    let inv: Vec<f64> =
        (0..=n).map(|g| if g == 0 { 0.0 } else { (g as f64 * h).powf(-theta) }).collect();
    let mut row = vec![0.0; (n + 1) * c];
    let mut best = 0.0f64;
    for k in 0..n {
        phi.row(k, &mut row);
        for l in k + 1..=n {
            let v = &row[l * c..(l + 1) * c];
            let a = v.iter().map(|x| x * x).sum::<f64>().sqrt() * inv[l - k];
            best = best.max(a);
        }
    }
    Ok(best)
}

/// ‖x‖_{m,θ} of the increment grid x̄_{s,t} = x_t − x_s (Euclidean norm per cell).
pub fn path_besov_norm(x: &SampledPath, m: u32, theta: f64) -> Result<f64> {
    besov_norm(&IncrementField::new(x), m, theta)
}

/// As [`path_besov_norm`], with the quadrature carried out at a coarser level.
pub fn path_besov_norm_at(x: &SampledPath, m: u32, theta: f64, level: u32) -> Result<f64> {
    besov_norm(&IncrementField::at_level(x, level)?, m, theta)
}

/// Hölder norm ‖x‖_{H,θ} of the increments.
pub fn path_hoelder_norm(x: &SampledPath, theta: f64) -> Result<f64> {
    hoelder_norm(&IncrementField::new(x), theta)
}

/// Grid of (x^i_t − x^i_s)(y^j_t − y^j_s).
pub fn pair_product_grid(
    x: &SampledPath,
    i: usize,
    y: &SampledPath,
    j: usize,
) -> Result<SimplexGrid> {
    let f = ProductField::new(x, y, vec![(i, j)], x.level)?;
    SimplexGrid::from_field(&f)
}

/// Largest observed ratio ‖x‖_{H,θ/2}/‖x‖_{m,θ/2} over a sample of scalar
/// paths: an empirical lower estimate of the supremum M_{m,θ}.
pub fn estimate_pair_constant(samples: &[SampledPath], m: u32, theta: f64) -> Result<f64> {
    let mut best = 0.0f64;
    for x in samples {
        let b = path_besov_norm(x, m, theta / 2.0)?;
        if b > 0.0 {
            best = best.max(path_hoelder_norm(x, theta / 2.0)? / b);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_reject_bad_values() {
        assert!(BesovParams::new(18, 0.70, 0.75).is_ok());
        assert!(BesovParams::new(17, 0.70, 0.75).is_err());
        assert!(BesovParams::new(18, 0.75, 0.70).is_err());
        assert!(BesovParams::new(8, 0.70, 0.75).is_err());
        assert!(BesovParams::relaxed(8, 0.70, 0.75).is_ok());
        assert!(BesovParams::new(18, 0.6, 0.75).is_err());
    }

    #[test]
    fn path_constructor_checks() {
        assert_eq!(SampledPath::new(1, 1, vec![1.0, 0.0, 0.0]), Err(Error::NonZeroStart));
        assert!(matches!(SampledPath::new(1, 1, vec![0.0, 0.0]), Err(Error::BadLength { .. })));
    }

    #[test]
    fn dyadic_approx_of_zigzag() {
        let w = SampledPath::new(1, 2, vec![0.0, 1.0, 0.0, 1.0, 0.0]).unwrap();
        let a = dyadic_approx(&w, 1).unwrap();
        assert_eq!(a.values(), &[0.0; 5]);
        assert!(dyadic_approx(&w, 3).is_err());
    }

    #[test]
    fn linear_path_is_fixed() {
        let w = SampledPath::linear(6, &[0.5, -2.0]);
        for n in 0..=6 {
            let a = dyadic_approx(&w, n).unwrap();
            for (x, y) in a.values().iter().zip(w.values()) {
                assert!((x - y).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn cm_norm_examples() {
        assert!((cm_norm(&SampledPath::linear(5, &[3.0, 0.0])) - 3.0).abs() < 1e-14);
        let tent = SampledPath::from_fn(1, 6, |t, o| o[0] = 0.5 - (t - 0.5).abs());
        assert!((cm_norm(&tent) - 1.0).abs() < 1e-14);
        assert_eq!(cm_norm(&SampledPath::zeros(2, 4)), 0.0);
    }

    #[test]
    fn hoelder_of_linear_increment() {
        let x = SampledPath::linear(6, &[1.0]);
        let v = path_hoelder_norm(&x, 0.35).unwrap();
        assert!((v - 1.0).abs() < 1e-14);
    }

    #[test]
    fn upsample_matches_interpolant() {
        let w = SampledPath::new(1, 1, vec![0.0, 2.0, -1.0]).unwrap();
        let u = w.upsample(3).unwrap();
        assert_eq!(u.values(), &[0.0, 0.5, 1.0, 1.5, 2.0, 1.25, 0.5, -0.25, -1.0]);
    }

    #[test]
    fn grid_level_limit() {
        assert_eq!(SimplexGrid::zeros(10, 1), Err(Error::GridTooLarge(10)));
    }

    #[test]
    fn norm_rejects_odd_m() {
        let g = SimplexGrid::zeros(2, 1).unwrap();
        assert!(besov_norm(&g, 7, 0.5).is_err());
        assert_eq!(besov_norm(&g, 8, 0.5).unwrap(), 0.0);
    }
}
