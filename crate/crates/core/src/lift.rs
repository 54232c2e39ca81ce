//! Level-2 iterated integrals of piecewise-linear paths.
//!
//! For piecewise-linear x, y the Stieltjes integral ∫ x dy over one cell is
//! exactly the trapezoid value (x_k + x_{k+1})/2 · Δy_k, so with the prefix
//! sums I(t) = ∫_0^t x dy we get C(x,y)_{s,t} = I(t) − I(s) − x_s (y_t − y_s).

use crate::error::{Error, Result};
use crate::paths::{
    besov_norm, hoelder_norm, BesovParams, IncrementField, SampledPath, SimplexField,
    SimplexGrid,
};

/// All component pairs C(x^i, y^j) of two paths on a common grid.
#[derive(Debug, Clone)]
pub struct IteratedIntegral {
    x: SampledPath,
    y: SampledPath,
    prefix: Vec<f64>,
}

impl IteratedIntegral {
    pub fn new(x: &SampledPath, y: &SampledPath) -> Result<Self> {
        if x.level() != y.level() {
            return Err(Error::LevelMismatch(x.level(), y.level()));
        }
        let (dx, dy) = (x.dim(), y.dim());
        let n = x.cells();
        let block = dx * dy;
        let mut prefix = vec![0.0; (n + 1) * block];
        for k in 0..n {
            let (x0, x1) = (x.point(k), x.point(k + 1));
            let (y0, y1) = (y.point(k), y.point(k + 1));
            for i in 0..dx {
                let xm = 0.5 * (x0[i] + x1[i]);
                for j in 0..dy {
                    prefix[(k + 1) * block + i * dy + j] =
                        prefix[k * block + i * dy + j] + xm * (y1[j] - y0[j]);
                }
            }
        }
        Ok(IteratedIntegral { x: x.clone(), y: y.clone(), prefix })
    }

    pub fn level(&self) -> u32 {
        self.x.level()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.x.dim(), self.y.dim())
    }

    pub fn x(&self) -> &SampledPath {
        &self.x
    }

    pub fn y(&self) -> &SampledPath {
        &self.y
    }

    /// C(x^i, y^j)_{k,l} for grid indices k ≤ l.
    #[inline]
    pub fn entry(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let (dx, dy) = self.dims();
        let block = dx * dy;
        let xs = self.x.values()[k * dx + i];
        let ys = self.y.values()[k * dy + j];
        let yt = self.y.values()[l * dy + j];
        self.prefix[l * block + i * dy + j] - self.prefix[k * block + i * dy + j] - xs * (yt - ys)
    }

    /// Adds coef·C(x^i,y^j)_{k·stride, l·stride} to `out[l*step]` for l in k+1..=n.
    #[allow(clippy::too_many_arguments)]
    fn accumulate_row(
        &self,
        coef: f64,
        i: usize,
        j: usize,
        k: usize,
        stride: usize,
        n: usize,
        out: &mut [f64],
        step: usize,
    ) {
        let (dx, dy) = self.dims();
        let block = dx * dy;
        let ks = k * stride;
        let xs = self.x.values()[ks * dx + i];
        let ys = self.y.values()[ks * dy + j];
        let base = self.prefix[ks * block + i * dy + j] - xs * ys;
        let yv = self.y.values();
        for l in k + 1..=n {
            let ls = l * stride;
            let v = self.prefix[ls * block + i * dy + j] - xs * yv[ls * dy + j] - base;
            out[l * step] += coef * v;
        }
    }

    /// Full dx×dy matrix (row-major) at the grid pair (k,l).
    pub fn area(&self, k: usize, l: usize) -> Vec<f64> {
        let (dx, dy) = self.dims();
        let mut out = vec![0.0; dx * dy];
        for i in 0..dx {
            for j in 0..dy {
                out[i * dy + j] = self.entry(i, j, k, l);
            }
        }
        out
    }

    /// Field view at the stored level.
    pub fn field(&self) -> AreaField<'_> {
        AreaField::new(vec![(1.0, self)], self.level()).expect("consistent single term")
    }
}

/// Materialized grid of all pairs C(x^i, y^j), component index i·dy + j.
pub fn iterated_integral(x: &SampledPath, y: &SampledPath) -> Result<SimplexGrid> {
    let ii = IteratedIntegral::new(x, y)?;
    SimplexGrid::from_field(&ii.field())
}

/// Linear combination Σ c_r C_r of iterated integrals with equal shapes,
/// restricted to a list of component pairs and sampled at a chosen level.
pub struct AreaField<'a> {
    terms: Vec<(f64, &'a IteratedIntegral)>,
    pairs: Vec<(usize, usize)>,
    level: u32,
}

impl<'a> AreaField<'a> {
    pub fn new(terms: Vec<(f64, &'a IteratedIntegral)>, level: u32) -> Result<Self> {
        let first = terms.first().ok_or(Error::EmptyGrid)?.1;
        let (dx, dy) = first.dims();
        let pairs = (0..dx).flat_map(|i| (0..dy).map(move |j| (i, j))).collect();
        Self::with_pairs(terms, pairs, level)
    }

    pub fn with_pairs(
        terms: Vec<(f64, &'a IteratedIntegral)>,
        pairs: Vec<(usize, usize)>,
        level: u32,
    ) -> Result<Self> {
        let first = terms.first().ok_or(Error::EmptyGrid)?.1;
        for (_, t) in &terms {
            if t.level() != first.level() {
                return Err(Error::LevelMismatch(first.level(), t.level()));
            }
            if t.dims() != first.dims() {
                return Err(Error::DimMismatch(t.dims().0, first.dims().0));
            }
        }
        if level > first.level() {
            return Err(Error::BeyondResolution { requested: level, stored: first.level() });
        }
        let (dx, dy) = first.dims();
        if pairs.is_empty() || pairs.iter().any(|&(i, j)| i >= dx || j >= dy) {
            return Err(Error::InvalidParams("bad component pair list".into()));
        }
        Ok(AreaField { terms, pairs, level })
    }
}

impl SimplexField for AreaField<'_> {
    fn level(&self) -> u32 {
        self.level
    }
    fn comps(&self) -> usize {
        self.pairs.len()
    }
    fn row(&self, k: usize, out: &mut [f64]) {
        let n = 1usize << self.level;
        let stride = 1usize << (self.terms[0].1.level() - self.level);
        let c = self.pairs.len();
        out.fill(0.0);
        for (p, &(i, j)) in self.pairs.iter().enumerate() {
            for (coef, t) in &self.terms {
                t.accumulate_row(*coef, i, j, k, stride, n, &mut out[p..], c);
            }
        }
    }
}

/// A path together with its level-2 iterated integrals C(w^i, w^j).
#[derive(Debug, Clone)]
pub struct Level2Lift {
    area: IteratedIntegral,
}

impl Level2Lift {
    pub fn path(&self) -> &SampledPath {
        self.area.x()
    }

    pub fn area(&self) -> &IteratedIntegral {
        &self.area
    }

    pub fn level(&self) -> u32 {
        self.area.level()
    }

    pub fn dim(&self) -> usize {
        self.area.dims().0
    }

    /// Materialized area grid (small levels only).
    pub fn area_grid(&self) -> Result<SimplexGrid> {
        SimplexGrid::from_field(&self.area.field())
    }
}

pub fn lift(w: &SampledPath) -> Level2Lift {
    Level2Lift { area: IteratedIntegral::new(w, w).expect("same path") }
}

/// C_{s,t} − C_{s,r} − C_{r,t} − (w_r − w_s)⊗(w_t − w_r) for grid indices s ≤ r ≤ t.
pub fn chen_defect(lift: &Level2Lift, s: usize, r: usize, t: usize) -> Result<Vec<f64>> {
    let n = lift.path().cells();
    if !(s <= r && r <= t && t <= n) {
        return Err(Error::InvalidParams(format!("need s<=r<=t<={n}, got ({s},{r},{t})")));
    }
    let d = lift.dim();
    let w = lift.path();
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            let a = lift.area.entry(i, j, s, t);
            let b = lift.area.entry(i, j, s, r);
            let c = lift.area.entry(i, j, r, t);
            let cross = (w.point(r)[i] - w.point(s)[i]) * (w.point(t)[j] - w.point(r)[j]);
            out[i * d + j] = a - b - c - cross;
        }
    }
    Ok(out)
}

/// max over all grid pairs and (i,j) of |C^{ij} + C^{ji} − w̄^i w̄^j|.
pub fn ibp_defect(lift: &Level2Lift) -> f64 {
    let n = lift.path().cells();
    let d = lift.dim();
    let w = lift.path();
    let mut worst = 0.0f64;
    for k in 0..n {
        for l in k + 1..=n {
            for i in 0..d {
                for j in i..d {
                    let sym = lift.area.entry(i, j, k, l) + lift.area.entry(j, i, k, l);
                    let prod =
                        (w.point(l)[i] - w.point(k)[i]) * (w.point(l)[j] - w.point(k)[j]);
                    worst = worst.max((sym - prod).abs());
                }
            }
        }
    }
    worst
}

/// d_Ω(a,b) evaluated at the lifts' own level.
pub fn omega_distance(a: &Level2Lift, b: &Level2Lift, p: &BesovParams) -> Result<f64> {
    omega_distance_at(a, b, p, a.level())
}

/// d_Ω(a,b) with the Hölder and Besov evaluations carried out at `level`.
pub fn omega_distance_at(
    a: &Level2Lift,
    b: &Level2Lift,
    p: &BesovParams,
    level: u32,
) -> Result<f64> {
    if a.level() != b.level() {
        return Err(Error::LevelMismatch(a.level(), b.level()));
    }
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch(a.dim(), b.dim()));
    }
    let d = a.dim();
    let mut best = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let f = AreaField::with_pairs(
                vec![(1.0, &a.area), (-1.0, &b.area)],
                vec![(i, j)],
                level,
            )?;
            best = best.max(hoelder_norm(&f, p.theta)?);
        }
    }
    let diff = a.path().sub(b.path())?;
    for i in 0..d {
        let comp = diff.component(i);
        let f = IncrementField::at_level(&comp, level)?;
        best = best.max(besov_norm(&f, p.m, p.theta_prime / 2.0)?);
    }
    Ok(best)
}

/// B(x,w)_{s,t} = ∫_s^t (x_u − x_s) dw_u for scalar paths.
pub fn wiener_integral_b(x: &SampledPath, w: &SampledPath) -> Result<SimplexGrid> {
    if x.dim() != 1 || w.dim() != 1 {
        return Err(Error::DimMismatch(x.dim(), 1));
    }
    iterated_integral(x, w)
}

/// B(w,x) = x̄·w̄ − B(x,w).
pub fn wiener_integral_b_rev(x: &SampledPath, w: &SampledPath) -> Result<SimplexGrid> {
    let b = wiener_integral_b(x, w)?;
    let prod = crate::paths::pair_product_grid(x, 0, w, 0)?;
    prod.lin_comb(1.0, &b, -1.0)
}

/// Largest observed ratio ‖C(x,y)‖_{H,θ}/(‖C(x,y)‖_{m,θ} + ‖x‖_{m,θ/2}‖y‖_{m,θ/2})
/// over sampled scalar pairs: an empirical lower estimate of N_{m,θ}.
pub fn estimate_area_constant(
    pairs: &[(SampledPath, SampledPath)],
    m: u32,
    theta: f64,
) -> Result<f64> {
    let mut best = 0.0f64;
    for (x, y) in pairs {
        let ii = IteratedIntegral::new(x, y)?;
        let f = ii.field();
        let den = besov_norm(&f, m, theta)?
            + crate::paths::path_besov_norm(x, m, theta / 2.0)?
                * crate::paths::path_besov_norm(y, m, theta / 2.0)?;
        if den > 0.0 {
            best = best.max(hoelder_norm(&f, theta)? / den);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_paths_give_half_square() {
        let x = SampledPath::linear(4, &[2.0]);
        let y = SampledPath::linear(4, &[-3.0]);
        let g = iterated_integral(&x, &y).unwrap();
        let n = 16usize;
        for l in 1..=n {
            for k in 0..l {
                let dt = (l - k) as f64 / n as f64;
                assert!((g.get(k, l)[0] + 3.0 * dt * dt).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn constant_integrator_gives_zero() {
        let x = SampledPath::from_fn(1, 4, |t, o| o[0] = (5.0 * t).sin());
        let y = SampledPath::zeros(1, 4);
        assert_eq!(iterated_integral(&x, &y).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn chen_degenerate_triple() {
        let w = SampledPath::from_fn(2, 4, |t, o| {
            o[0] = t.sin();
            o[1] = (3.0 * t).cos();
        });
        let l = lift(&w);
        assert!(chen_defect(&l, 3, 3, 9).unwrap().iter().all(|v| *v == 0.0));
        assert!(chen_defect(&l, 4, 3, 9).is_err());
    }

    #[test]
    fn wiener_b_pair_identity() {
        let x = SampledPath::from_fn(1, 5, |t, o| o[0] = t * t);
        let w = SampledPath::from_fn(1, 5, |t, o| o[0] = (7.0 * t).sin());
        let b = wiener_integral_b(&x, &w).unwrap();
        let br = wiener_integral_b_rev(&x, &w).unwrap();
        let prod = crate::paths::pair_product_grid(&x, 0, &w, 0).unwrap();
        let s = b.lin_comb(1.0, &br, 1.0).unwrap().lin_comb(1.0, &prod, -1.0).unwrap();
        assert!(s.max_abs() < 1e-15);
    }
}
