//! Small statistics helpers: means with standard errors, Wilson intervals,
//! medians and least-squares slopes.

/// How an interval was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CiMethod {
    Normal,
    Wilson,
}

impl CiMethod {
    pub fn label(self) -> &'static str {
        match self {
            CiMethod::Normal => "normal",
            CiMethod::Wilson => "wilson",
        }
    }
}

/// A point estimate with its standard error and a 95% interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateCI {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
    pub lo: f64,
    pub hi: f64,
    pub method: CiMethod,
}

pub const Z95: f64 = 1.959_963_984_540_054;

impl EstimateCI {
    /// Sample mean with the normal-approximation interval.
    pub fn from_samples(xs: &[f64]) -> EstimateCI {
        let n = xs.len().max(1);
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = if xs.len() > 1 {
            xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (xs.len() - 1) as f64
        } else {
            0.0
        };
        let stderr = (var / n as f64).sqrt();
        EstimateCI {
            mean,
            stderr,
            n,
            lo: mean - Z95 * stderr,
            hi: mean + Z95 * stderr,
            method: CiMethod::Normal,
        }
    }

    /// Proportion estimate with the Wilson score interval at 95%.
    pub fn wilson(successes: usize, n: usize) -> EstimateCI {
        let n_eff = n.max(1);
        let (lo, hi) = wilson_interval(successes, n_eff, Z95);
        let p = successes as f64 / n_eff as f64;
        EstimateCI {
            mean: p,
            stderr: (p * (1.0 - p) / n_eff as f64).sqrt(),
            n: n_eff,
            lo,
            hi,
            method: CiMethod::Wilson,
        }
    }
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let den = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / den;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / den;
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Ordinary least-squares slope of y against x.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < v.len() {
        v[i] + frac * (v[i + 1] - v[i])
    } else {
        v[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn slope_of_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        assert!((ols_slope(&x, &y) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn wilson_bounds() {
        let (lo, hi) = wilson_interval(0, 100, Z95);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.05);
        let e = EstimateCI::wilson(10_000, 10_000);
        assert!(e.lo > 0.99 && e.hi == 1.0);
    }

    #[test]
    fn sample_mean_ci() {
        let e = EstimateCI::from_samples(&[1.0, 2.0, 3.0]);
        assert_eq!(e.mean, 2.0);
        assert!((e.stderr - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }
}
