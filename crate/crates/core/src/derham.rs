//! Finite-dimensional de Rham tools: the fibrewise homotopy operator K,
//! primitives of closed 1-forms by peeling coordinate blocks, the product
//! Poincaré combiner, Gaussian Poincaré ratios on convex sets, and Stokes
//! checks along Cameron–Martin directions.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::paths::{cm_inner, SampledPath};
use crate::sampler::{standard_normal, SeededStream};
use crate::stats::Z95;

/// Gauss–Legendre rule on [0,1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// n-point rule, exact for polynomials of degree ≤ 2n − 1.
    pub fn new(n: usize) -> Self {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let p = if n == 0 { 1.0 } else if n == 1 { x } else { p1 };
                dp = n as f64 * (x * p - p0) / (x * x - 1.0);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = 0.5 * (1.0 - x);
            nodes[n - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&t, &w)| w * f(t)).sum()
    }
}

/// Sparse multivariate polynomial Σ c · z^e.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    pub nvars: usize,
    pub terms: Vec<(f64, Vec<u32>)>,
}

impl Polynomial {
    pub fn new(nvars: usize, terms: Vec<(f64, Vec<u32>)>) -> Result<Self> {
        if terms.iter().any(|(_, e)| e.len() != nvars) {
            return Err(Error::DimMismatch(terms.len(), nvars));
        }
        Ok(Polynomial { nvars, terms })
    }

    /// `n_terms` monomials of total degree ≤ `degree` with coefficients in [−1,1].
    pub fn random<R: Rng + ?Sized>(nvars: usize, degree: u32, n_terms: usize, rng: &mut R) -> Self {
        let terms = (0..n_terms)
            .map(|_| {
                let mut e = vec![0u32; nvars];
                let total = rng.random_range(0..=degree);
                for _ in 0..total {
                    e[rng.random_range(0..nvars)] += 1;
                }
                (rng.random_range(-1.0..1.0), e)
            })
            .collect();
        Polynomial { nvars, terms }
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|(_, e)| e.iter().sum::<u32>()).max().unwrap_or(0)
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, e)| c * e.iter().zip(z).map(|(&k, &x)| x.powi(k as i32)).product::<f64>())
            .sum()
    }

    pub fn grad(&self, z: &[f64], out: &mut [f64]) {
        out[..self.nvars].fill(0.0);
        for (c, e) in &self.terms {
            for v in 0..self.nvars {
                if e[v] == 0 {
                    continue;
                }
                let mut term = c * f64::from(e[v]);
                for (u, (&k, &x)) in e.iter().zip(z).enumerate() {
                    let k = if u == v { k - 1 } else { k };
                    term *= x.powi(k as i32);
                }
                out[v] += term;
            }
        }
    }
}

type CoeffFn<'a> = Box<dyn Fn(&[f64], &mut [f64]) + Send + Sync + 'a>;
type DomainFn<'a> = Box<dyn Fn(&[f64]) -> bool + Send + Sync + 'a>;

/// A 1-form Σβ_i dx^i + Σγ_j dy^j on a domain of ℝ^{n+m}; z = (x, y).
pub struct FiniteForm1<'a> {
    n: usize,
    m: usize,
    coeffs: CoeffFn<'a>,
    domain: DomainFn<'a>,
}

impl<'a> FiniteForm1<'a> {
    pub fn new(
        n: usize,
        m: usize,
        coeffs: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'a,
        domain: impl Fn(&[f64]) -> bool + Send + Sync + 'a,
    ) -> Self {
        FiniteForm1 { n, m, coeffs: Box::new(coeffs), domain: Box::new(domain) }
    }

    /// dP for a polynomial P on ℝ^{n+m}.
    pub fn exact(
        p: &'a Polynomial,
        n: usize,
        m: usize,
        domain: impl Fn(&[f64]) -> bool + Send + Sync + 'a,
    ) -> Result<Self> {
        if p.nvars != n + m {
            return Err(Error::DimMismatch(p.nvars, n + m));
        }
        Ok(FiniteForm1::new(n, m, move |z, out| p.grad(z, out), domain))
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n, self.m)
    }

    pub fn dim(&self) -> usize {
        self.n + self.m
    }

    pub fn contains(&self, z: &[f64]) -> bool {
        (self.domain)(z)
    }

    pub fn eval(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        (self.coeffs)(z, &mut out);
        out
    }

    fn eval_into(&self, z: &[f64], out: &mut [f64]) {
        (self.coeffs)(z, out);
    }

    /// max over probes and i < j of the central-difference curl |∂_iα_j − ∂_jα_i|.
    pub fn closedness_defect(&self, probes: &[Vec<f64>], step: f64) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        let mut zp = vec![0.0; d];
        let mut plus = vec![0.0; d];
        let mut minus = vec![0.0; d];
        for z in probes {
            // jac[i][j] = ∂_i α_j
            let mut jac = vec![0.0; d * d];
            for i in 0..d {
                zp.copy_from_slice(z);
                zp[i] += step;
                self.eval_into(&zp, &mut plus);
                zp[i] -= 2.0 * step;
                self.eval_into(&zp, &mut minus);
                for j in 0..d {
                    jac[i * d + j] = (plus[j] - minus[j]) / (2.0 * step);
                }
            }
            for i in 0..d {
                for j in i + 1..d {
                    worst = worst.max((jac[i * d + j] - jac[j * d + i]).abs());
                }
            }
        }
        worst
    }
}

/// Default number of Gauss–Legendre nodes for K.
pub const K_NODES: usize = 64;

/// (Kα)(z) = ∫₀¹ Σ_j γ_j(x, t y) y^j dt.
pub fn homotopy_k(alpha: &FiniteForm1, z: &[f64]) -> Result<f64> {
    homotopy_k_with(alpha, z, &GaussLegendre::new(K_NODES))
}

pub fn homotopy_k_with(alpha: &FiniteForm1, z: &[f64], gl: &GaussLegendre) -> Result<f64> {
    if z.len() != alpha.dim() {
        return Err(Error::DimMismatch(z.len(), alpha.dim()));
    }
    if !alpha.contains(z) {
        return Err(Error::OutsideDomain);
    }
    segment_integral(alpha, z, alpha.n, alpha.dim(), gl)
}

/// ∫₀¹ Σ_{j∈[lo,hi)} α_j(z_<lo, t z_[lo,hi), z_≥hi) z_j dt along the segment
/// that scales the coordinate block [lo,hi) from 0 to its value.
fn segment_integral(
    alpha: &FiniteForm1,
    z: &[f64],
    lo: usize,
    hi: usize,
    gl: &GaussLegendre,
) -> Result<f64> {
    if z[lo..hi].iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    let mut p = z.to_vec();
    let mut coef = vec![0.0; alpha.dim()];
    let mut acc = 0.0;
    for (&t, &w) in gl.nodes.iter().zip(&gl.weights) {
        for j in lo..hi {
            p[j] = t * z[j];
        }
        if !alpha.contains(&p) {
            return Err(Error::OutsideDomain);
        }
        alpha.eval_into(&p, &mut coef);
        acc += w * (lo..hi).map(|j| coef[j] * z[j]).sum::<f64>();
    }
    Ok(acc)
}

/// A primitive g of a closed form, normalized by g(base_point) = 0.
pub struct Primitive<'f, 'a> {
    alpha: &'f FiniteForm1<'a>,
    gl: GaussLegendre,
    offset: f64,
}

impl Primitive<'_, '_> {
    /// Peels the y-block with K, then the x-block one coordinate at a time,
    /// each time restricting the closed form to the zero section.
    fn raw(&self, z: &[f64]) -> Result<f64> {
        let a = self.alpha;
        if z.len() != a.dim() {
            return Err(Error::DimMismatch(z.len(), a.dim()));
        }
        if !a.contains(z) {
            return Err(Error::OutsideDomain);
        }
        let mut p = z.to_vec();
        let mut total = segment_integral(a, &p, a.n, a.dim(), &self.gl)?;
        p[a.n..].fill(0.0);
        for i in (0..a.n).rev() {
            total += segment_integral(a, &p, i, i + 1, &self.gl)?;
            p[i] = 0.0;
        }
        Ok(total)
    }

    pub fn eval(&self, z: &[f64]) -> Result<f64> {
        Ok(self.raw(z)? - self.offset)
    }

    /// Central-difference gradient of g.
    pub fn fd_gradient(&self, z: &[f64], step: f64) -> Result<Vec<f64>> {
        let mut p = z.to_vec();
        let mut out = vec![0.0; z.len()];
        for i in 0..z.len() {
            p[i] = z[i] + step;
            let gp = self.raw(&p)?;
            p[i] = z[i] - step;
            let gm = self.raw(&p)?;
            p[i] = z[i];
            out[i] = (gp - gm) / (2.0 * step);
        }
        Ok(out)
    }

    /// max over probes and components of |∇g − α| by central differences.
    pub fn gradient_defect(&self, probes: &[Vec<f64>], step: f64) -> Result<f64> {
        let mut worst = 0.0f64;
        for z in probes {
            let g = self.fd_gradient(z, step)?;
            let a = self.alpha.eval(z);
            for (x, y) in g.iter().zip(&a) {
                worst = worst.max((x - y).abs());
            }
        }
        Ok(worst)
    }
}

pub const CLOSEDNESS_TOL: f64 = 1e-8;
pub const FD_STEP: f64 = 1e-5;

/// Builds g with dg = α after gating on the finite-difference closedness of α
/// over `probes`.
pub fn primitive_of_closed<'f, 'a>(
    alpha: &'f FiniteForm1<'a>,
    base_point: &[f64],
    probes: &[Vec<f64>],
) -> Result<Primitive<'f, 'a>> {
    let defect = alpha.closedness_defect(probes, FD_STEP);
    if !(defect < CLOSEDNESS_TOL) {
        return Err(Error::NotClosed(defect));
    }
    let mut origin_section = vec![0.0; alpha.dim()];
    origin_section[..alpha.n].copy_from_slice(&base_point[..alpha.n]);
    if !alpha.contains(&origin_section) {
        return Err(Error::OutsideDomain);
    }
    let mut g = Primitive { alpha, gl: GaussLegendre::new(K_NODES), offset: 0.0 };
    g.offset = g.raw(base_point)?;
    Ok(g)
}

/// The two coefficient factors of the product-space Poincaré bound
/// Var(f;U) ≤ 3C₁/(δ m(U)²) ∫_U Γ_X f dm + 3C₂/(δ m(U)) ∫_U Γ_Y f dm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoincareCertificate {
    pub c1: f64,
    pub c2: f64,
    pub delta: f64,
    pub measure_of_u: f64,
    pub factor_x: f64,
    pub factor_y: f64,
}

impl PoincareCertificate {
    /// Right side of the bound given ∫_U Γ_X f dm and ∫_U Γ_Y f dm.
    pub fn bound(&self, int_gamma_x: f64, int_gamma_y: f64) -> f64 {
        self.factor_x * int_gamma_x + self.factor_y * int_gamma_y
    }
}

pub fn combine_poincare(c1: f64, c2: f64, delta: f64, m_u: f64) -> Result<PoincareCertificate> {
    if !(c1 > 0.0 && c2 > 0.0 && delta > 0.0 && m_u > 0.0) {
        return Err(Error::InvalidParams("C1, C2, delta and m(U) must be positive".into()));
    }
    Ok(PoincareCertificate {
        c1,
        c2,
        delta,
        measure_of_u: m_u,
        factor_x: 3.0 * c1 / (delta * m_u * m_u),
        factor_y: 3.0 * c2 / (delta * m_u),
    })
}

/// A test function with its analytic gradient.
pub struct TestFunction {
    pub name: &'static str,
    /// Smallest dimension the function makes sense in.
    pub min_dim: usize,
    pub f: fn(&[f64]) -> f64,
    pub grad: fn(&[f64], &mut [f64]),
}

/// Ten smooth test functions on ℝ^n (n ≥ 2).
pub fn default_battery() -> Vec<TestFunction> {
    fn zero(g: &mut [f64]) {
        g.fill(0.0);
    }
    vec![
        TestFunction { name: "x1", min_dim: 1, f: |x| x[0], grad: |_, g| {
            zero(g);
            g[0] = 1.0;
        } },
        TestFunction { name: "x1+x2", min_dim: 2, f: |x| x[0] + x[1], grad: |_, g| {
            zero(g);
            g[0] = 1.0;
            g[1] = 1.0;
        } },
        TestFunction { name: "x1^2", min_dim: 1, f: |x| x[0] * x[0], grad: |x, g| {
            zero(g);
            g[0] = 2.0 * x[0];
        } },
        TestFunction { name: "x1*x2", min_dim: 2, f: |x| x[0] * x[1], grad: |x, g| {
            zero(g);
            g[0] = x[1];
            g[1] = x[0];
        } },
        TestFunction { name: "sin(x1)", min_dim: 1, f: |x| x[0].sin(), grad: |x, g| {
            zero(g);
            g[0] = x[0].cos();
        } },
        TestFunction { name: "exp(x1/2)", min_dim: 1, f: |x| (0.5 * x[0]).exp(), grad: |x, g| {
            zero(g);
            g[0] = 0.5 * (0.5 * x[0]).exp();
        } },
        TestFunction { name: "|x|^2", min_dim: 1, f: |x| x.iter().map(|v| v * v).sum(), grad: |x, g| {
            for (gi, xi) in g.iter_mut().zip(x) {
                *gi = 2.0 * xi;
            }
        } },
        TestFunction { name: "cos(x1+x2)", min_dim: 2, f: |x| (x[0] + x[1]).cos(), grad: |x, g| {
            zero(g);
            let s = -(x[0] + x[1]).sin();
            g[0] = s;
            g[1] = s;
        } },
        TestFunction { name: "x1^3", min_dim: 1, f: |x| x[0].powi(3), grad: |x, g| {
            zero(g);
            g[0] = 3.0 * x[0] * x[0];
        } },
        TestFunction { name: "tanh(x1)+x2^2", min_dim: 2, f: |x| x[0].tanh() + x[1] * x[1], grad: |x, g| {
            zero(g);
            let c = x[0].cosh();
            g[0] = 1.0 / (c * c);
            g[1] = 2.0 * x[1];
        } },
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoincareRatio {
    pub name: String,
    pub variance: f64,
    pub energy: f64,
    pub ratio: f64,
    /// Delta-method standard error of the ratio.
    pub stderr: f64,
    /// ratio ≤ 1 + 3·stderr.
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct GaussianPoincareReport {
    pub dim: usize,
    pub n_samples: usize,
    pub acceptance: f64,
    pub ratios: Vec<PoincareRatio>,
}

/// Var(f)/E|∇f|² under the standard Gaussian on ℝ^n conditioned to `domain`,
/// from `n_samples` accepted rejection samples.
pub fn gaussian_convex_poincare_mc(
    dim: usize,
    domain: &(dyn Fn(&[f64]) -> bool + Sync),
    battery: &[TestFunction],
    n_samples: usize,
    stream: &SeededStream,
) -> Result<GaussianPoincareReport> {
    if n_samples < 2 {
        return Err(Error::InvalidParams("need at least two samples".into()));
    }
    let chunk = 4096usize;
    let mut samples: Vec<Vec<f64>> = Vec::with_capacity(n_samples);
    let mut tried = 0usize;
    let mut round = 0u64;
    while samples.len() < n_samples {
        let got: Vec<Option<Vec<f64>>> = (0..chunk)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream.rng(round * chunk as u64 + i as u64);
                let x: Vec<f64> = (0..dim).map(|_| standard_normal(&mut rng)).collect();
                domain(&x).then_some(x)
            })
            .collect();
        for g in got {
            if samples.len() == n_samples {
                break;
            }
            tried += 1;
            if let Some(x) = g {
                samples.push(x);
            }
        }
        round += 1;
        if tried > 10_000 * n_samples && samples.len() < n_samples / 100 + 1 {
            return Err(Error::InvalidParams("domain has negligible Gaussian mass".into()));
        }
    }
    let n = samples.len() as f64;
    let mut ratios = Vec::new();
    let mut grad = vec![0.0; dim];
    for tf in battery.iter().filter(|t| t.min_dim <= dim) {
        let mut fv = Vec::with_capacity(samples.len());
        let mut ev = Vec::with_capacity(samples.len());
        for x in &samples {
            fv.push((tf.f)(x));
            (tf.grad)(x, &mut grad);
            ev.push(grad.iter().map(|g| g * g).sum::<f64>());
        }
        let mf = fv.iter().sum::<f64>() / n;
        let var = fv.iter().map(|f| (f - mf) * (f - mf)).sum::<f64>() / n;
        let energy = ev.iter().sum::<f64>() / n;
        let (ratio, stderr) = if energy == 0.0 {
            (0.0, 0.0)
        } else {
            let r = var / energy;
            let infl: Vec<f64> = fv
                .iter()
                .zip(&ev)
                .map(|(f, e)| ((f - mf) * (f - mf) - var) / energy - r * (e - energy) / energy)
                .collect();
            let s2 = infl.iter().map(|v| v * v).sum::<f64>() / (n - 1.0);
            (r, (s2 / n).sqrt())
        };
        ratios.push(PoincareRatio {
            name: tf.name.to_string(),
            variance: var,
            energy,
            ratio,
            stderr,
            pass: ratio <= 1.0 + 3.0 * stderr,
        });
    }
    Ok(GaussianPoincareReport {
        dim,
        n_samples: samples.len(),
        acceptance: samples.len() as f64 / tried as f64,
        ratios,
    })
}

/// Upper end of the two-sided 95% interval of a ratio estimate.
pub fn ratio_upper(r: &PoincareRatio) -> f64 {
    r.ratio + Z95 * r.stderr
}

/// H-gradient Riesz representative from Euclidean partial derivatives with
/// respect to grid values (`grid_grad[k*d + c]` = ∂f/∂w^c(t_k), k ≥ 1 used):
/// Δg_j = 2^{−M} Σ_{k>j} grid_grad_k, so that ⟨g, h⟩_H = Σ_k grid_grad_k·h_k.
pub fn riesz_from_grid_gradient(dim: usize, level: u32, grid_grad: &[f64]) -> Result<SampledPath> {
    let n = 1usize << level;
    if grid_grad.len() != (n + 1) * dim {
        return Err(Error::BadLength { got: grid_grad.len(), dim });
    }
    let h = 1.0 / n as f64;
    let mut inc = vec![0.0; n * dim];
    let mut tail = vec![0.0; dim];
    for j in (0..n).rev() {
        for c in 0..dim {
            tail[c] += grid_grad[(j + 1) * dim + c];
            inc[j * dim + c] = h * tail[c];
        }
    }
    SampledPath::from_increments(dim, level, &inc)
}

/// Linear functional w ↦ Σ_k Σ_c weights[k*d+c] w^c(t_k) on grid values.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunctional {
    pub dim: usize,
    pub level: u32,
    pub weights: Vec<f64>,
}

impl GridFunctional {
    /// w^c(t_k).
    pub fn point(dim: usize, level: u32, k: usize, c: usize) -> Self {
        let mut weights = vec![0.0; ((1usize << level) + 1) * dim];
        weights[k * dim + c] = 1.0;
        GridFunctional { dim, level, weights }
    }

    /// Trapezoid rule for ∫₀¹ w^c_t dt.
    pub fn integral(dim: usize, level: u32, c: usize) -> Self {
        let n = 1usize << level;
        let h = 1.0 / n as f64;
        let mut weights = vec![0.0; (n + 1) * dim];
        for k in 0..=n {
            weights[k * dim + c] = if k == 0 || k == n { 0.5 * h } else { h };
        }
        GridFunctional { dim, level, weights }
    }

    pub fn apply(&self, w: &SampledPath) -> f64 {
        self.weights.iter().zip(w.values()).map(|(a, b)| a * b).sum()
    }
}

/// A scalar field on paths with an optional analytic H-gradient.
pub trait PathFunctional: Sync {
    fn value(&self, w: &SampledPath) -> f64;

    /// Riesz representative of Df(w) in H, when known in closed form.
    fn h_gradient(&self, _w: &SampledPath) -> Option<SampledPath> {
        None
    }
}

/// f(w) = P(ℓ₁(w), …, ℓ_k(w)) for a polynomial P and grid functionals ℓ_i.
#[derive(Debug, Clone)]
pub struct CylinderPolynomial {
    pub functionals: Vec<GridFunctional>,
    pub poly: Polynomial,
}

impl CylinderPolynomial {
    fn coords(&self, w: &SampledPath) -> Vec<f64> {
        self.functionals.iter().map(|l| l.apply(w)).collect()
    }
}

impl PathFunctional for CylinderPolynomial {
    fn value(&self, w: &SampledPath) -> f64 {
        self.poly.eval(&self.coords(w))
    }

    fn h_gradient(&self, w: &SampledPath) -> Option<SampledPath> {
        let u = self.coords(w);
        let mut dp = vec![0.0; u.len()];
        self.poly.grad(&u, &mut dp);
        let mut gg = vec![0.0; w.values().len()];
        for (l, c) in self.functionals.iter().zip(&dp) {
            for (g, a) in gg.iter_mut().zip(&l.weights) {
                *g += c * a;
            }
        }
        riesz_from_grid_gradient(w.dim(), w.level(), &gg).ok()
    }
}

/// Directional derivative Df(w)[v], analytic when available, otherwise a
/// central difference with step 1e-5.
pub fn directional_derivative(f: &dyn PathFunctional, w: &SampledPath, v: &SampledPath) -> Result<f64> {
    if let Some(g) = f.h_gradient(w) {
        return cm_inner(&g, v);
    }
    let s = FD_STEP;
    Ok((f.value(&w.lin_comb(1.0, v, s)?) - f.value(&w.lin_comb(1.0, v, -s)?)) / (2.0 * s))
}

/// A curve τ ↦ h(τ) in H with its velocity.
pub trait HCurve: Sync {
    fn at(&self, tau: f64) -> SampledPath;
    fn velocity(&self, tau: f64) -> SampledPath;
}

/// h(τ) = Σ_k τ^k c_k.
#[derive(Debug, Clone)]
pub struct PolynomialCurve {
    pub coeffs: Vec<SampledPath>,
}

impl HCurve for PolynomialCurve {
    fn at(&self, tau: f64) -> SampledPath {
        let mut out = self.coeffs[0].scaled(0.0);
        for (k, c) in self.coeffs.iter().enumerate() {
            out = out.lin_comb(1.0, c, tau.powi(k as i32)).expect("shared shape");
        }
        out
    }

    fn velocity(&self, tau: f64) -> SampledPath {
        let mut out = self.coeffs[0].scaled(0.0);
        for (k, c) in self.coeffs.iter().enumerate().skip(1) {
            out = out.lin_comb(1.0, c, k as f64 * tau.powi(k as i32 - 1)).expect("shared shape");
        }
        out
    }
}

/// Stokes in an H-direction: returns (f(w+h(1)) − f(w+h(0)), ∫₀¹ Df(w+h(τ))[h′(τ)] dτ)
/// with an n_quad-point Gauss–Legendre rule.
pub fn stokes_line(
    f: &dyn PathFunctional,
    w: &SampledPath,
    curve: &dyn HCurve,
    n_quad: usize,
) -> Result<(f64, f64)> {
    let lhs = f.value(&w.add(&curve.at(1.0))?) - f.value(&w.add(&curve.at(0.0))?);
    let gl = GaussLegendre::new(n_quad);
    let mut rhs = 0.0;
    for (&t, &wt) in gl.nodes.iter().zip(&gl.weights) {
        rhs += wt * directional_derivative(f, &w.add(&curve.at(t))?, &curve.velocity(t))?;
    }
    Ok((lhs, rhs))
}

/// A 1-form on paths given by its H-Riesz representative.
pub trait HOneForm: Sync {
    fn riesz(&self, w: &SampledPath) -> SampledPath;

    fn pair(&self, w: &SampledPath, v: &SampledPath) -> Result<f64> {
        cm_inner(&self.riesz(w), v)
    }
}

/// The exact form df.
pub struct Differential<'a>(pub &'a dyn PathFunctional);

impl HOneForm for Differential<'_> {
    fn riesz(&self, w: &SampledPath) -> SampledPath {
        self.0.h_gradient(w).expect("differential needs an analytic gradient")
    }
}

/// A two-parameter family ℋ(σ,τ) in H with its partial derivatives.
pub trait HSurface: Sync {
    fn at(&self, s: f64, t: f64) -> SampledPath;
    fn d_sigma(&self, s: f64, t: f64) -> SampledPath;
    fn d_tau(&self, s: f64, t: f64) -> SampledPath;
}

/// ℋ(σ,τ) = Σ_{i,j} σ^i τ^j c_{ij}.
#[derive(Debug, Clone)]
pub struct PolynomialSurface {
    pub coeffs: Vec<Vec<SampledPath>>,
}

impl PolynomialSurface {
    fn combine(&self, weight: impl Fn(usize, usize) -> f64) -> SampledPath {
        let mut out = self.coeffs[0][0].scaled(0.0);
        for (i, row) in self.coeffs.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                let a = weight(i, j);
                if a != 0.0 {
                    out = out.lin_comb(1.0, c, a).expect("shared shape");
                }
            }
        }
        out
    }
}

fn pw(x: f64, k: usize) -> f64 {
    x.powi(k as i32)
}

impl HSurface for PolynomialSurface {
    fn at(&self, s: f64, t: f64) -> SampledPath {
        self.combine(|i, j| pw(s, i) * pw(t, j))
    }
    fn d_sigma(&self, s: f64, t: f64) -> SampledPath {
        self.combine(|i, j| if i == 0 { 0.0 } else { i as f64 * pw(s, i - 1) * pw(t, j) })
    }
    fn d_tau(&self, s: f64, t: f64) -> SampledPath {
        self.combine(|i, j| if j == 0 { 0.0 } else { j as f64 * pw(s, i) * pw(t, j - 1) })
    }
}

/// dβ(u,v) at w by central differences of the Riesz representative.
pub fn exterior_derivative(
    beta: &dyn HOneForm,
    w: &SampledPath,
    u: &SampledPath,
    v: &SampledPath,
) -> Result<f64> {
    let s = FD_STEP;
    let du = beta.riesz(&w.lin_comb(1.0, u, s)?).lin_comb(1.0, &beta.riesz(&w.lin_comb(1.0, u, -s)?), -1.0)?;
    let dv = beta.riesz(&w.lin_comb(1.0, v, s)?).lin_comb(1.0, &beta.riesz(&w.lin_comb(1.0, v, -s)?), -1.0)?;
    Ok((cm_inner(&du, v)? - cm_inner(&dv, u)?) / (2.0 * s))
}

/// Surface Stokes in H-directions: returns (∮ over the boundary of the unit
/// square of β(w+ℋ)(dℋ), ∬ dβ(w+ℋ)(∂_σℋ, ∂_τℋ) dσdτ).
pub fn stokes_surface(
    beta: &dyn HOneForm,
    w: &SampledPath,
    homotopy: &dyn HSurface,
    n_quad: usize,
) -> Result<(f64, f64)> {
    let gl = GaussLegendre::new(n_quad);
    let mut boundary = 0.0;
    for (&t, &wt) in gl.nodes.iter().zip(&gl.weights) {
        // σ = 1 minus σ = 0 along τ; τ = 0 minus τ = 1 along σ.
        boundary += wt * beta.pair(&w.add(&homotopy.at(1.0, t))?, &homotopy.d_tau(1.0, t))?;
        boundary -= wt * beta.pair(&w.add(&homotopy.at(0.0, t))?, &homotopy.d_tau(0.0, t))?;
        boundary += wt * beta.pair(&w.add(&homotopy.at(t, 0.0))?, &homotopy.d_sigma(t, 0.0))?;
        boundary -= wt * beta.pair(&w.add(&homotopy.at(t, 1.0))?, &homotopy.d_sigma(t, 1.0))?;
    }
    let cells: Vec<(f64, f64, f64)> = gl
        .nodes
        .iter()
        .zip(&gl.weights)
        .flat_map(|(&s, &ws)| gl.nodes.iter().zip(&gl.weights).map(move |(&t, &wt)| (s, t, ws * wt)))
        .collect();
    let surface = cells
        .par_iter()
        .map(|&(s, t, wgt)| -> Result<f64> {
            let p = w.add(&homotopy.at(s, t))?;
            Ok(wgt * exterior_derivative(beta, &p, &homotopy.d_sigma(s, t), &homotopy.d_tau(s, t))?)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    Ok((boundary, surface))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let gl = GaussLegendre::new(8);
        assert!((gl.integrate(|t| t.powi(15)) - 1.0 / 16.0).abs() < 1e-15);
        assert!((gl.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let gl = GaussLegendre::new(64);
        assert!((gl.integrate(|t| t.powi(30)) - 1.0 / 31.0).abs() < 1e-15);
    }

    #[test]
    fn k_of_y_dx_plus_x_dy() {
        let a = FiniteForm1::new(1, 1, |z, o| {
            o[0] = z[1];
            o[1] = z[0];
        }, |z| z.iter().all(|v| v.abs() < 1.0));
        let k = homotopy_k(&a, &[0.3, -0.7]).unwrap();
        assert!((k - 0.3 * -0.7).abs() < 1e-15);
    }

    #[test]
    fn polynomial_gradient() {
        let p = Polynomial::new(2, vec![(2.0, vec![2, 1]), (-1.0, vec![0, 3])]).unwrap();
        let mut g = [0.0; 2];
        p.grad(&[0.5, 2.0], &mut g);
        assert!((g[0] - 4.0).abs() < 1e-15 && (g[1] - (0.5 - 12.0)).abs() < 1e-15);
    }

    #[test]
    fn certificate_plug_in() {
        let c = combine_poincare(1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!((c.factor_x, c.factor_y), (3.0, 3.0));
    }

    #[test]
    fn riesz_reproduces_point_evaluation() {
        let l = GridFunctional::point(1, 4, 5, 0);
        let g = riesz_from_grid_gradient(1, 4, &l.weights).unwrap();
        let h = SampledPath::from_fn(1, 4, |t, o| o[0] = (3.0 * t).sin());
        assert!((cm_inner(&g, &h).unwrap() - h.point(5)[0]).abs() < 1e-14);
    }
}
