//! Verdict statistics. Every function here is pure in its inputs.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Two-sided chi-square confidence interval for a variance estimated from `n` samples.
pub fn variance_ci(var: f64, n: usize, level: f64) -> [f64; 2] {
    if n < 2 || var <= 0.0 {
        return [0.0, 0.0];
    }
    let df = (n - 1) as f64;
    let chi = ChiSquared::new(df).expect("df > 0");
    let a = (1.0 - level) / 2.0;
    [df * var / chi.inverse_cdf(1.0 - a), df * var / chi.inverse_cdf(a)]
}

pub fn intervals_overlap(a: [f64; 2], b: [f64; 2]) -> bool {
    a[0] <= b[1] && b[0] <= a[1]
}

/// Probability that at least one of `cells` pairs of independent intervals misses at `level`.
pub fn family_level(cells: usize, level: f64) -> f64 {
    1.0 - level.powi(2 * cells as i32)
}

/// FLLN mean rule for one cell: `|mean - fluid| <= max(z * se, eps_grid)`.
pub fn mean_rule(diff: f64, se: f64, eps_grid: f64, z: f64) -> bool {
    diff.abs() <= (z * se).max(eps_grid)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 || x.len() != y.len() || y.iter().any(|v| *v <= 0.0) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Unbiased sample mean and variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let m = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (m, 0.0);
    }
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    (m, v)
}

/// Unbiased sample covariance.
pub fn covariance(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / (n - 1) as f64
}
