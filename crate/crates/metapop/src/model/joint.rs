//! Joint laws of (exposed, infectious) period pairs.

use rand::Rng;
use rand_distr::StandardNormal;

use super::laws::{std_normal_cdf, std_normal_quantile, DurationLaw};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum JointMode {
    Product,
    Comonotone,
    GaussianCopula {
        rho: f64,
    },
    /// Resampling of observed pairs; has no conditional CDF.
    EmpiricalPairs(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointDurationLaw {
    pub mode: JointMode,
    pub exposed: DurationLaw,
    pub infectious: DurationLaw,
}

impl JointDurationLaw {
    pub fn product(exposed: DurationLaw, infectious: DurationLaw) -> Self {
        JointDurationLaw {
            mode: JointMode::Product,
            exposed,
            infectious,
        }
    }

    pub fn comonotone(exposed: DurationLaw, infectious: DurationLaw) -> Self {
        JointDurationLaw {
            mode: JointMode::Comonotone,
            exposed,
            infectious,
        }
    }

    pub fn gaussian_copula(
        exposed: DurationLaw,
        infectious: DurationLaw,
        rho: f64,
    ) -> Result<Self> {
        if !(rho > -1.0 && rho < 1.0) {
            return Err(Error::InvalidLaw(format!(
                "copula correlation must lie in (-1, 1), got {rho}"
            )));
        }
        if rho == 0.0 {
            return Ok(Self::product(exposed, infectious));
        }
        Ok(JointDurationLaw {
            mode: JointMode::GaussianCopula { rho },
            exposed,
            infectious,
        })
    }

    pub fn from_pairs(pairs: Vec<(f64, f64)>) -> Result<Self> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
        let exposed = DurationLaw::empirical(&xs, None)?;
        let infectious = DurationLaw::empirical(&ys, None)?;
        Ok(JointDurationLaw {
            mode: JointMode::EmpiricalPairs(pairs),
            exposed,
            infectious,
        })
    }

    pub fn mode_name(&self) -> &'static str {
        match self.mode {
            JointMode::Product => "product",
            JointMode::Comonotone => "comonotone",
            JointMode::GaussianCopula { .. } => "gaussian-copula",
            JointMode::EmpiricalPairs(_) => "empirical-pairs",
        }
    }

    pub fn is_product(&self) -> bool {
        self.mode == JointMode::Product
    }

    /// Whether [`JointDurationLaw::conditional_cdf`] is available.
    pub fn has_conditional(&self) -> bool {
        match self.mode {
            JointMode::Product | JointMode::Comonotone => true,
            JointMode::GaussianCopula { .. } => self.exposed.atoms().is_empty(),
            JointMode::EmpiricalPairs(_) => false,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        match &self.mode {
            JointMode::Product => (self.exposed.sample(rng), self.infectious.sample(rng)),
            JointMode::Comonotone => {
                let u = 1.0 - rng.gen::<f64>();
                (self.exposed.quantile(u), self.infectious.quantile(u))
            }
            JointMode::GaussianCopula { rho } => {
                let z1: f64 = rng.sample(StandardNormal);
                let z2: f64 = rng.sample(StandardNormal);
                let w = rho * z1 + (1.0 - rho * rho).sqrt() * z2;
                (
                    self.exposed.quantile(std_normal_cdf(z1)),
                    self.infectious.quantile(std_normal_cdf(w)),
                )
            }
            JointMode::EmpiricalPairs(pairs) => pairs[rng.gen_range(0..pairs.len())],
        }
    }

    /// `P(ζ <= v | η = u)`, or `None` when the mode has no closed form.
    pub fn conditional_cdf(&self, v: f64, u: f64) -> Option<f64> {
        match &self.mode {
            JointMode::Product => Some(self.infectious.cdf(v)),
            JointMode::Comonotone => {
                let gu = self.exposed.cdf(u);
                let gl = self.exposed.cdf_left(u);
                let fv = self.infectious.cdf(v);
                if gu - gl > 1e-15 {
                    Some(((fv - gl) / (gu - gl)).clamp(0.0, 1.0))
                } else {
                    Some(if fv >= gu { 1.0 } else { 0.0 })
                }
            }
            JointMode::GaussianCopula { rho } => {
                if !self.exposed.atoms().is_empty() {
                    return None;
                }
                let fv = self.infectious.cdf(v);
                if fv <= 0.0 {
                    return Some(0.0);
                }
                if fv >= 1.0 {
                    return Some(1.0);
                }
                let gu = self.exposed.cdf(u).clamp(1e-300, 1.0 - 1e-16);
                let z = (std_normal_quantile(fv) - rho * std_normal_quantile(gu))
                    / (1.0 - rho * rho).sqrt();
                Some(std_normal_cdf(z))
            }
            JointMode::EmpiricalPairs(_) => None,
        }
    }
}

/// The six period laws of the model.
#[derive(Debug, Clone, PartialEq)]
pub struct LawSet {
    /// H: (η, ζ) for newly infected individuals.
    pub infection: JointDurationLaw,
    /// H0: (η⁰, ζ) for initially exposed individuals.
    pub initial_exposed: JointDurationLaw,
    /// F0: remaining infectious period of initially infectious individuals.
    pub initial_infectious: DurationLaw,
}

impl LawSet {
    pub fn new(
        infection: JointDurationLaw,
        initial_exposed: JointDurationLaw,
        initial_infectious: DurationLaw,
    ) -> Self {
        LawSet {
            infection,
            initial_exposed,
            initial_infectious,
        }
    }

    /// Independent periods with the given marginals (G, F, G0, F0).
    pub fn independent(g: DurationLaw, f: DurationLaw, g0: DurationLaw, f0: DurationLaw) -> Self {
        LawSet {
            infection: JointDurationLaw::product(g, f.clone()),
            initial_exposed: JointDurationLaw::product(g0, f),
            initial_infectious: f0,
        }
    }

    /// Laws for variants without a latent stage: the first stage lasts exactly 0.
    pub fn without_exposed(f: DurationLaw, f0: DurationLaw) -> Self {
        let zero = DurationLaw::Deterministic { value: 0.0 };
        Self::independent(zero.clone(), f, zero, f0)
    }

    /// Equilibrium initial laws G0 = G_e, F0 = F_e with independent periods.
    pub fn with_equilibrium_initial(g: DurationLaw, f: DurationLaw) -> Result<Self> {
        let g0 = DurationLaw::equilibrium(&g)?;
        let f0 = DurationLaw::equilibrium(&f)?;
        Ok(Self::independent(g, f, g0, f0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn comonotone_conditional_is_step_at_image() {
        let j = JointDurationLaw::comonotone(
            DurationLaw::exponential(1.0).unwrap(),
            DurationLaw::exponential(2.0).unwrap(),
        );
        // ζ = η / 2 under equal quantiles
        assert_eq!(j.conditional_cdf(0.49, 1.0), Some(0.0));
        assert_eq!(j.conditional_cdf(0.51, 1.0), Some(1.0));
    }

    #[test]
    fn comonotone_with_atomic_exposed_keeps_infectious_marginal() {
        let j = JointDurationLaw::comonotone(
            DurationLaw::deterministic(1.0).unwrap(),
            DurationLaw::exponential(2.0).unwrap(),
        );
        let f = DurationLaw::exponential(2.0).unwrap();
        for v in [0.1, 0.5, 2.0] {
            assert!((j.conditional_cdf(v, 1.0).unwrap() - f.cdf(v)).abs() < 1e-15);
        }
    }

    #[test]
    fn copula_conditional_integrates_to_marginal() {
        let g = DurationLaw::exponential(1.0).unwrap();
        let f = DurationLaw::gamma(2.0, 1.0).unwrap();
        let j = JointDurationLaw::gaussian_copula(g.clone(), f.clone(), 0.6).unwrap();
        // ∫ F(v|u) dG(u) = F(v), midpoint rule in the uniform scale
        let n = 4000;
        for v in [0.5, 2.0] {
            let mut acc = 0.0;
            for k in 0..n {
                let p = (k as f64 + 0.5) / n as f64;
                acc += j.conditional_cdf(v, g.quantile(p)).unwrap();
            }
            assert!((acc / n as f64 - f.cdf(v)).abs() < 2e-3);
        }
    }

    #[test]
    fn pairs_have_no_conditional() {
        let j = JointDurationLaw::from_pairs(vec![(1.0, 2.0), (0.5, 1.0)]).unwrap();
        assert!(!j.has_conditional());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (a, b) = j.sample(&mut rng);
        assert!((a, b) == (1.0, 2.0) || (a, b) == (0.5, 1.0));
    }
}
