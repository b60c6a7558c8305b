use crate::error::{Error, Result};
use crate::fluid::FluidTrajectory;
use crate::migration::Grid;
use crate::model::{ModelSpec, S};

/// Refuses the one parameter regime without a fluctuation limit: γ = 1 with infection at distance.
pub fn check_fclt_admissible(spec: &ModelSpec) -> Result<()> {
    if spec.gamma >= 1.0 && spec.has_distance_infection() {
        return Err(Error::FcltInadmissible(
            "gamma = 1 together with infection at distance has no fluctuation limit".into(),
        ));
    }
    Ok(())
}

/// `ψ(s, e, i, r, u) = s (x + u) / (s + e + i + r)^γ` with `x` the infectious slot and
/// `u` the distance pressure; `x` is an internal state vector.
pub fn infection_map(x: [f64; 4], distance: f64, gamma: f64, infectious_slot: usize) -> f64 {
    let u: f64 = x.iter().sum();
    if u <= 0.0 {
        return 0.0;
    }
    x[S] * (x[infectious_slot] + distance) / u.powf(gamma)
}

/// Partial derivatives of the infection functional along the fluid path.
///
/// `Υ̂_i = Σ_c slot[c] x̂_{i,c} + distance · Σ_{j≠i} κ_ij x̂_{j,inf}`.
#[derive(Debug, Clone)]
pub struct LinearizationField {
    pub grid: Grid,
    pub patches: usize,
    pub infectious_slot: usize,
    coefficients: Vec<([f64; 4], f64)>,
}

impl LinearizationField {
    /// Coefficients of the four internal slots of patch i at step k.
    pub fn slot(&self, k: usize, i: usize) -> [f64; 4] {
        self.coefficients[k * self.patches + i].0
    }

    /// Coefficient of `Σ_{j≠i} κ_ij x̂_{j,inf}`.
    pub fn distance(&self, k: usize, i: usize) -> f64 {
        self.coefficients[k * self.patches + i].1
    }
}

pub fn linearization(fluid: &FluidTrajectory, spec: &ModelSpec) -> Result<LinearizationField> {
    check_fclt_admissible(spec)?;
    let l = spec.patches;
    let g = spec.gamma;
    let inf = spec.variant.infectious_slot();
    let mut coefficients = Vec::with_capacity(fluid.len() * l);
    for k in 0..fluid.len() {
        for i in 0..l {
            let x = fluid.state(k, i);
            let u: f64 = x.iter().sum();
            if !(u > 0.0) {
                return Err(Error::FcltInadmissible(format!(
                    "patch {i} has no fluid mass at t = {}",
                    fluid.time(k)
                )));
            }
            let pressure: f64 = (0..l).map(|j| spec.kappa[i][j] * fluid.state(k, j)[inf]).sum();
            let ug = u.powf(g);
            let scaled = x[S] * pressure / (ug * u);
            let mut c = [-g * scaled; 4];
            c[S] = ((1.0 - g) * x[S] + (u - x[S])) * pressure / (ug * u);
            c[inf] += x[S] / ug;
            let dist = x[S] / ug;
            if c.iter().any(|v| !v.is_finite()) || !dist.is_finite() {
                return Err(Error::FcltInadmissible(format!("non-finite linearization at step {k}")));
            }
            coefficients.push((c, dist));
        }
    }
    Ok(LinearizationField { grid: fluid.grid, patches: l, infectious_slot: inf, coefficients })
}
