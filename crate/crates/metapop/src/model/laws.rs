//! Duration laws for exposed and infectious periods.

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma, LogNormal};
use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_lr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum DurationLaw {
    Exponential {
        rate: f64,
    },
    Gamma {
        shape: f64,
        rate: f64,
    },
    LogNormal {
        mu: f64,
        sigma: f64,
    },
    Uniform {
        low: f64,
        high: f64,
    },
    Deterministic {
        value: f64,
    },
    /// Discrete law on sorted distinct `values` with cumulative probabilities `cum`.
    Empirical {
        values: Vec<f64>,
        cum: Vec<f64>,
    },
    /// Stationary-excess law `∫_0^x (1 - F) / mean` of the base law.
    Equilibrium(Box<DurationLaw>),
}

fn bad(msg: impl Into<String>) -> Error {
    Error::InvalidLaw(msg.into())
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(bad(format!("{name} must be positive and finite, got {x}")))
    }
}

pub(crate) fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

impl DurationLaw {
    pub fn exponential(rate: f64) -> Result<Self> {
        positive("rate", rate)?;
        Ok(DurationLaw::Exponential { rate })
    }

    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        positive("shape", shape)?;
        positive("rate", rate)?;
        Ok(DurationLaw::Gamma { shape, rate })
    }

    pub fn lognormal(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(bad("mu must be finite"));
        }
        positive("sigma", sigma)?;
        Ok(DurationLaw::LogNormal { mu, sigma })
    }

    pub fn uniform(low: f64, high: f64) -> Result<Self> {
        if !(low >= 0.0 && high > low && high.is_finite()) {
            return Err(bad(format!(
                "uniform needs 0 <= low < high, got ({low}, {high})"
            )));
        }
        Ok(DurationLaw::Uniform { low, high })
    }

    pub fn deterministic(value: f64) -> Result<Self> {
        if !(value >= 0.0 && value.is_finite()) {
            return Err(bad(format!(
                "deterministic value must be >= 0, got {value}"
            )));
        }
        Ok(DurationLaw::Deterministic { value })
    }

    /// Discrete law from observations, optionally weighted.
    pub fn empirical(samples: &[f64], weights: Option<&[f64]>) -> Result<Self> {
        if samples.is_empty() {
            return Err(bad("empirical law needs at least one value"));
        }
        let w: Vec<f64> = match weights {
            Some(w) if w.len() != samples.len() => {
                return Err(bad("weights length differs from values"))
            }
            Some(w) => w.to_vec(),
            None => vec![1.0; samples.len()],
        };
        if samples.iter().any(|x| !(*x >= 0.0 && x.is_finite()))
            || w.iter().any(|x| !(*x >= 0.0 && x.is_finite()))
        {
            return Err(bad("empirical values and weights must be finite and >= 0"));
        }
        let total: f64 = w.iter().sum();
        if total <= 0.0 {
            return Err(bad("empirical weights sum to zero"));
        }
        let mut pairs: Vec<(f64, f64)> = samples.iter().copied().zip(w).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut values = Vec::new();
        let mut mass: Vec<f64> = Vec::new();
        for (x, p) in pairs {
            if values.last() == Some(&x) {
                *mass.last_mut().unwrap() += p;
            } else {
                values.push(x);
                mass.push(p);
            }
        }
        let mut acc = 0.0;
        let mut cum: Vec<f64> = mass
            .iter()
            .map(|m| {
                acc += m;
                acc / total
            })
            .collect();
        *cum.last_mut().unwrap() = 1.0;
        Ok(DurationLaw::Empirical { values, cum })
    }

    /// Equilibrium (stationary-excess) law. Closed forms exist for exponential,
    /// uniform, deterministic, gamma and lognormal bases; other families are rejected.
    pub fn equilibrium(base: &DurationLaw) -> Result<Self> {
        match base {
            DurationLaw::Exponential { .. } => Ok(base.clone()),
            DurationLaw::Deterministic { value } => DurationLaw::uniform(0.0, *value),
            DurationLaw::Uniform { .. } | DurationLaw::Gamma { .. } | DurationLaw::LogNormal { .. } => {
                Ok(DurationLaw::Equilibrium(Box::new(base.clone())))
            }
            other => Err(bad(format!(
                "no closed-form equilibrium law for {}",
                other.family()
            ))),
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            DurationLaw::Exponential { .. } => "exponential",
            DurationLaw::Gamma { .. } => "gamma",
            DurationLaw::LogNormal { .. } => "lognormal",
            DurationLaw::Uniform { .. } => "uniform",
            DurationLaw::Deterministic { .. } => "deterministic",
            DurationLaw::Empirical { .. } => "empirical",
            DurationLaw::Equilibrium(_) => "equilibrium",
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match self {
            DurationLaw::Exponential { rate } => -(-rate * t).exp_m1(),
            DurationLaw::Gamma { shape, rate } => {
                if t == 0.0 {
                    0.0
                } else {
                    gamma_lr(*shape, rate * t)
                }
            }
            DurationLaw::LogNormal { mu, sigma } => {
                if t == 0.0 {
                    0.0
                } else {
                    std_normal_cdf((t.ln() - mu) / sigma)
                }
            }
            DurationLaw::Uniform { low, high } => ((t - low) / (high - low)).clamp(0.0, 1.0),
            DurationLaw::Deterministic { value } => {
                if t >= *value {
                    1.0
                } else {
                    0.0
                }
            }
            DurationLaw::Empirical { values, cum } => {
                let j = values.partition_point(|v| *v <= t);
                if j == 0 {
                    0.0
                } else {
                    cum[j - 1]
                }
            }
            DurationLaw::Equilibrium(base) => base.integrated_survival(t) / base.mean(),
        }
    }

    /// `P(X < t)`; differs from `cdf` only at atoms.
    pub fn cdf_left(&self, t: f64) -> f64 {
        match self {
            DurationLaw::Deterministic { value } => {
                if t > *value {
                    1.0
                } else {
                    0.0
                }
            }
            DurationLaw::Empirical { values, cum } => {
                let j = values.partition_point(|v| *v < t);
                if j == 0 {
                    0.0
                } else {
                    cum[j - 1]
                }
            }
            _ => self.cdf(t),
        }
    }

    /// Point masses `(location, probability)`.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        match self {
            DurationLaw::Deterministic { value } => vec![(*value, 1.0)],
            DurationLaw::Empirical { values, cum } => values
                .iter()
                .enumerate()
                .map(|(j, v)| (*v, cum[j] - if j == 0 { 0.0 } else { cum[j - 1] }))
                .collect(),
            _ => Vec::new(),
        }
    }

    /// True when the law is purely atomic.
    pub fn is_atomic(&self) -> bool {
        matches!(
            self,
            DurationLaw::Deterministic { .. } | DurationLaw::Empirical { .. }
        )
    }

    pub fn mean(&self) -> f64 {
        match self {
            DurationLaw::Exponential { rate } => 1.0 / rate,
            DurationLaw::Gamma { shape, rate } => shape / rate,
            DurationLaw::LogNormal { mu, sigma } => (mu + 0.5 * sigma * sigma).exp(),
            DurationLaw::Uniform { low, high } => 0.5 * (low + high),
            DurationLaw::Deterministic { value } => *value,
            DurationLaw::Empirical { .. } => self.atoms().iter().map(|(v, p)| v * p).sum(),
            DurationLaw::Equilibrium(base) => base.second_moment() / (2.0 * base.mean()),
        }
    }

    fn second_moment(&self) -> f64 {
        match self {
            DurationLaw::Exponential { rate } => 2.0 / (rate * rate),
            DurationLaw::Gamma { shape, rate } => shape * (shape + 1.0) / (rate * rate),
            DurationLaw::LogNormal { mu, sigma } => (2.0 * mu + 2.0 * sigma * sigma).exp(),
            DurationLaw::Uniform { low, high } => (low * low + low * high + high * high) / 3.0,
            DurationLaw::Deterministic { value } => value * value,
            DurationLaw::Empirical { .. } => self.atoms().iter().map(|(v, p)| v * v * p).sum(),
            DurationLaw::Equilibrium(base) => base.third_moment() / (3.0 * base.mean()),
        }
    }

    fn third_moment(&self) -> f64 {
        match self {
            DurationLaw::Exponential { rate } => 6.0 / rate.powi(3),
            DurationLaw::Gamma { shape, rate } => {
                shape * (shape + 1.0) * (shape + 2.0) / rate.powi(3)
            }
            DurationLaw::Uniform { low, high } => {
                (high.powi(4) - low.powi(4)) / (4.0 * (high - low))
            }
            DurationLaw::Deterministic { value } => value.powi(3),
            DurationLaw::LogNormal { mu, sigma } => (3.0 * mu + 4.5 * sigma * sigma).exp(),
            _ => f64::NAN,
        }
    }

    /// `∫_0^x (1 - F(s)) ds`, closed form for the families that admit an equilibrium law.
    fn integrated_survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match self {
            DurationLaw::Exponential { rate } => -(-rate * x).exp_m1() / rate,
            DurationLaw::Uniform { low, high } => {
                if x <= *low {
                    x
                } else if x >= *high {
                    0.5 * (low + high)
                } else {
                    low + ((high - low).powi(2) - (high - x).powi(2)) / (2.0 * (high - low))
                }
            }
            DurationLaw::Deterministic { value } => x.min(*value),
            DurationLaw::Gamma { shape, rate } => {
                x * (1.0 - gamma_lr(*shape, rate * x))
                    + shape / rate * gamma_lr(shape + 1.0, rate * x)
            }
            // x P(X > x) + E[X; X <= x]
            DurationLaw::LogNormal { mu, sigma } => {
                x * (1.0 - self.cdf(x))
                    + (mu + 0.5 * sigma * sigma).exp() * std_normal_cdf((x.ln() - mu - sigma * sigma) / sigma)
            }
            _ => f64::NAN,
        }
    }

    /// Generalized inverse `inf { t : F(t) >= p }`.
    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        match self {
            DurationLaw::Exponential { rate } => -(-p).ln_1p() / rate,
            DurationLaw::Uniform { low, high } => low + p * (high - low),
            DurationLaw::Deterministic { value } => *value,
            DurationLaw::Empirical { values, cum } => {
                let j = cum.partition_point(|c| *c < p);
                values[j.min(values.len() - 1)]
            }
            DurationLaw::LogNormal { mu, sigma } => {
                if p <= 0.0 {
                    0.0
                } else if p >= 1.0 {
                    f64::INFINITY
                } else {
                    (mu + sigma * std_normal_quantile(p)).exp()
                }
            }
            _ => self.bisect_quantile(p),
        }
    }

    fn bisect_quantile(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return 0.0;
        }
        if p >= 1.0 {
            return f64::INFINITY;
        }
        let mut hi = self.mean().max(1e-12);
        while self.cdf(hi) < p {
            hi *= 2.0;
            if !hi.is_finite() {
                return f64::INFINITY;
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid) >= p {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            DurationLaw::Exponential { rate } => Exp::new(*rate).unwrap().sample(rng),
            DurationLaw::Gamma { shape, rate } => {
                Gamma::new(*shape, 1.0 / rate).unwrap().sample(rng)
            }
            DurationLaw::LogNormal { mu, sigma } => {
                LogNormal::new(*mu, *sigma).unwrap().sample(rng)
            }
            DurationLaw::Uniform { low, high } => low + (high - low) * rng.gen::<f64>(),
            DurationLaw::Deterministic { value } => *value,
            DurationLaw::Empirical { .. } => self.quantile(1.0 - rng.gen::<f64>()),
            // Equilibrium = U * (size-biased base).
            DurationLaw::Equilibrium(base) => {
                let u: f64 = rng.gen();
                let biased = match base.as_ref() {
                    DurationLaw::Gamma { shape, rate } => {
                        Gamma::new(shape + 1.0, 1.0 / rate).unwrap().sample(rng)
                    }
                    DurationLaw::Uniform { low, high } => {
                        let v: f64 = rng.gen();
                        (low * low + v * (high * high - low * low)).sqrt()
                    }
                    DurationLaw::Exponential { rate } => {
                        Gamma::new(2.0, 1.0 / rate).unwrap().sample(rng)
                    }
                    DurationLaw::Deterministic { value } => *value,
                    DurationLaw::LogNormal { mu, sigma } => {
                        LogNormal::new(mu + sigma * sigma, *sigma).unwrap().sample(rng)
                    }
                    other => other.sample(rng),
                };
                u * biased
            }
        }
    }
}

/// Acklam's rational approximation refined by one Halley step.
pub(crate) fn std_normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    const A: [f64; 6] = [
        -3.969683028665376e1,
        2.209460984245205e2,
        -2.759285104469687e2,
        1.383_577_518_672_69e2,
        -3.066479806614716e1,
        2.506628277459239,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e1,
        1.615858368580409e2,
        -1.556989798598866e2,
        6.680131188771972e1,
        -1.328068155288572e1,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-3,
        -3.223964580411365e-1,
        -2.400758277161838,
        -2.549732539343734,
        4.374664141464968,
        2.938163982698783,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-3,
        3.224671290700398e-1,
        2.445134137142996,
        3.754408661907416,
    ];
    let plow = 0.02425;
    let x = if p < plow {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - plow {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let e = std_normal_cdf(x) - p;
    let u = e * (2.0 * std::f64::consts::PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn deterministic_cdf_is_step() {
        let d = DurationLaw::deterministic(2.0).unwrap();
        assert_eq!(d.cdf(1.999), 0.0);
        assert_eq!(d.cdf(2.0), 1.0);
        assert_eq!(d.cdf_left(2.0), 0.0);
    }

    #[test]
    fn equilibrium_of_exponential_is_itself() {
        let e = DurationLaw::exponential(0.7).unwrap();
        assert_eq!(DurationLaw::equilibrium(&e).unwrap(), e);
    }

    #[test]
    fn equilibrium_of_deterministic_is_uniform() {
        let d = DurationLaw::deterministic(3.0).unwrap();
        assert_eq!(
            DurationLaw::equilibrium(&d).unwrap(),
            DurationLaw::Uniform {
                low: 0.0,
                high: 3.0
            }
        );
    }

    #[test]
    fn gamma_equilibrium_matches_numeric_integral() {
        let g = DurationLaw::gamma(2.0, 1.5).unwrap();
        let eq = DurationLaw::equilibrium(&g).unwrap();
        let x = 1.7;
        let n = 20_000;
        let h = x / n as f64;
        let mut acc = 0.0;
        for k in 0..n {
            let a = k as f64 * h;
            acc += 0.5 * h * ((1.0 - g.cdf(a)) + (1.0 - g.cdf(a + h)));
        }
        assert!((eq.cdf(x) - acc / g.mean()).abs() < 1e-8);
        assert!((eq.mean() - (2.0 * 3.0 / 2.25) / (2.0 * 2.0 / 1.5)).abs() < 1e-12);
    }

    #[test]
    fn lognormal_equilibrium_matches_numeric_integral() {
        let g = DurationLaw::lognormal(0.2, 0.6).unwrap();
        let eq = DurationLaw::equilibrium(&g).unwrap();
        for x in [0.3, 1.7, 6.0] {
            let n = 40_000;
            let h = x / n as f64;
            let acc: f64 = (0..n)
                .map(|k| {
                    let a = k as f64 * h;
                    0.5 * h * ((1.0 - g.cdf(a)) + (1.0 - g.cdf(a + h)))
                })
                .sum();
            assert!((eq.cdf(x) - acc / g.mean()).abs() < 1e-8);
        }
        // size-biased sampling reproduces the mean E[X^2] / 2E[X]
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let m: f64 = (0..200_000).map(|_| eq.sample(&mut rng)).sum::<f64>() / 200_000.0;
        assert!((m - eq.mean()).abs() < 0.01 * eq.mean());
    }

    #[test]
    fn quantiles_invert_cdfs() {
        let laws = [
            DurationLaw::gamma(2.0, 0.5).unwrap(),
            DurationLaw::lognormal(0.3, 0.6).unwrap(),
            DurationLaw::equilibrium(&DurationLaw::uniform(1.0, 3.0).unwrap()).unwrap(),
        ];
        for law in &laws {
            for p in [0.01, 0.3, 0.5, 0.9, 0.999] {
                assert!((law.cdf(law.quantile(p)) - p).abs() < 1e-9, "{law:?} {p}");
            }
        }
    }

    #[test]
    fn normal_quantile_accuracy() {
        for p in [1e-10, 0.001, 0.025, 0.5, 0.975, 0.999999] {
            assert!((std_normal_cdf(std_normal_quantile(p)) - p).abs() < 1e-14 + 1e-10 * p);
        }
    }

    #[test]
    fn empirical_merges_duplicates() {
        let e = DurationLaw::empirical(&[1.0, 2.0, 1.0, 4.0], None).unwrap();
        assert_eq!(e.atoms(), vec![(1.0, 0.5), (2.0, 0.25), (4.0, 0.25)]);
        assert_eq!(e.quantile(0.5), 1.0);
        assert_eq!(e.quantile(0.51), 2.0);
    }
}
