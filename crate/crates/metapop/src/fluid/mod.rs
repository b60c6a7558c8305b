//! Deterministic fluid limit: the Volterra system and its delay-equation special case.
//!
//! Both solvers share one time stepper. At step k every convolution is split into
//! a known history part and a local part proportional to Ā(t_k); the local
//! dependence on the state through Ῡ(t_k) and the trapezoidal migration terms is
//! resolved by Picard iteration.

mod delay;
mod volterra;

pub use delay::solve_fluid_delay;
pub use volterra::solve_fluid;
pub(crate) use volterra::ConvolutionWeights;

use crate::error::{Error, Result};
use crate::migration::Grid;
use crate::model::{ModelSpec, Variant, E, I, R, S};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PicardStart {
    /// Linear extrapolation from the two previous steps.
    Extrapolate,
    /// All-zero state.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluidOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub start: PicardStart,
}

impl Default for FluidOptions {
    fn default() -> Self {
        FluidOptions {
            tolerance: 1e-12,
            max_iterations: 50,
            start: PicardStart::Extrapolate,
        }
    }
}

/// Fluid fractions on the grid, indexed by internal slot.
#[derive(Debug, Clone)]
pub struct FluidTrajectory {
    pub grid: Grid,
    pub patches: usize,
    pub variant: Variant,
    state: Vec<[f64; 4]>,
    upsilon: Vec<f64>,
    cum_infection: Vec<f64>,
    /// Largest number of Picard iterations used by any step.
    pub max_picard_iterations: usize,
    /// Scheme warnings (lower-bound violations, clamped denominators).
    pub diagnostics: Vec<String>,
}

impl FluidTrajectory {
    pub fn len(&self) -> usize {
        self.grid.len
    }

    pub fn is_empty(&self) -> bool {
        self.grid.len == 0
    }

    pub fn time(&self, k: usize) -> f64 {
        self.grid.time(k)
    }

    #[inline]
    pub fn state(&self, k: usize, i: usize) -> [f64; 4] {
        self.state[k * self.patches + i]
    }

    /// Values in user-facing (S, E, I, R) order.
    pub fn user_state(&self, k: usize, i: usize) -> [f64; 4] {
        self.variant.to_user(self.state(k, i))
    }

    #[inline]
    pub fn upsilon(&self, k: usize, i: usize) -> f64 {
        self.upsilon[k * self.patches + i]
    }

    /// Ā_i(t_k) = ∫_0^{t_k} λ_i(s) Ῡ_i(s) ds.
    #[inline]
    pub fn cumulative_infection(&self, k: usize, i: usize) -> f64 {
        self.cum_infection[k * self.patches + i]
    }

    pub fn patch_mass(&self, k: usize, i: usize) -> f64 {
        self.state(k, i).iter().sum()
    }

    pub fn total_mass(&self, k: usize) -> f64 {
        (0..self.patches).map(|i| self.patch_mass(k, i)).sum()
    }

    /// Restriction to every `stride`-th grid point.
    pub fn subsample(&self, stride: usize) -> FluidTrajectory {
        let len = (self.grid.len - 1) / stride + 1;
        let mut state = Vec::with_capacity(len * self.patches);
        let mut upsilon = Vec::with_capacity(len * self.patches);
        let mut cum = Vec::with_capacity(len * self.patches);
        for k in 0..len {
            for i in 0..self.patches {
                state.push(self.state(k * stride, i));
                upsilon.push(self.upsilon(k * stride, i));
                cum.push(self.cumulative_infection(k * stride, i));
            }
        }
        FluidTrajectory {
            grid: Grid {
                dt: self.grid.dt * stride as f64,
                len,
            },
            patches: self.patches,
            variant: self.variant,
            state,
            upsilon,
            cum_infection: cum,
            max_picard_iterations: self.max_picard_iterations,
            diagnostics: self.diagnostics.clone(),
        }
    }
}

/// Checks initial fractions (internal slots) against the model's assumptions.
pub fn check_initial_fractions(spec: &ModelSpec, init: &[[f64; 4]]) -> Result<()> {
    if init.len() != spec.patches {
        return Err(Error::BadInit(format!(
            "{} patches given, model has {}",
            init.len(),
            spec.patches
        )));
    }
    let mut total = 0.0;
    for (i, x) in init.iter().enumerate() {
        for v in x {
            if !(v.is_finite() && *v >= 0.0) {
                return Err(Error::BadInit(format!(
                    "patch {i}: fractions must be finite and >= 0"
                )));
            }
            total += v;
        }
        if x[S] <= 0.0 {
            return Err(Error::BadInit(format!(
                "patch {i}: initial susceptible fraction must be positive"
            )));
        }
        if !spec.variant.uses_first_stage() && x[E] != 0.0 {
            return Err(Error::BadInit(format!(
                "patch {i}: exposed fraction must be 0 for {}",
                spec.variant.name()
            )));
        }
        if spec.variant.terminal_to_susceptible() && x[R] != 0.0 {
            return Err(Error::BadInit(format!(
                "patch {i}: no terminal compartment in {}",
                spec.variant.name()
            )));
        }
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::BadInit(format!(
            "fractions sum to {total}, expected 1"
        )));
    }
    Ok(())
}

/// Rich. estimate of the discretization error of the coarse solution: `(4/3) max |coarse - fine|`
/// over the coarse grid, with `fine` on the grid of half the step.
pub fn richardson_allowance(coarse: &FluidTrajectory, fine: &FluidTrajectory) -> Result<f64> {
    if fine.grid.len != 2 * (coarse.grid.len - 1) + 1 {
        return Err(Error::GridMismatch(
            "fine grid must halve the coarse step".into(),
        ));
    }
    let mut m: f64 = 0.0;
    for k in 0..coarse.len() {
        for i in 0..coarse.patches {
            let a = coarse.state(k, i);
            let b = fine.state(2 * k, i);
            for c in 0..4 {
                m = m.max((a[c] - b[c]).abs());
            }
        }
    }
    Ok(m * 4.0 / 3.0)
}

/// Per-step contributions that do not involve migration.
pub(crate) trait StepModel {
    /// Called once per step with Ā on steps `0..k` (`cum[l][j]`).
    fn prepare(&mut self, k: usize, cum: &[Vec<f64>]);
    /// Non-migration part of the state at step k given Ā(t_k).
    fn evaluate(&self, k: usize, cum_k: &[f64], out: &mut [[f64; 4]]);
}

struct Migration {
    rates: [Vec<Vec<f64>>; 4],
}

impl Migration {
    fn new(spec: &ModelSpec) -> Self {
        Migration {
            rates: [S, E, I, R].map(|c| spec.slot_rate_matrix(c)),
        }
    }

    fn flow(&self, x: &[[f64; 4]], out: &mut [[f64; 4]]) {
        let l = x.len();
        for i in 0..l {
            for c in 0..4 {
                let nu = &self.rates[c];
                let mut f = 0.0;
                for j in 0..l {
                    if j != i {
                        f += nu[j][i] * x[j][c] - nu[i][j] * x[i][c];
                    }
                }
                out[i][c] = f;
            }
        }
    }
}

fn upsilon_clamped(
    spec: &ModelSpec,
    x: &[[f64; 4]],
    floor: &[f64],
    clamped: &mut bool,
    out: &mut [f64],
) {
    let inf = spec.variant.infectious_slot();
    let g = spec.gamma;
    for i in 0..spec.patches {
        let pressure: f64 = (0..spec.patches)
            .map(|l| spec.kappa[i][l] * x[l][inf])
            .sum();
        let s = x[i][S];
        if s == 0.0 || pressure == 0.0 {
            out[i] = 0.0;
            continue;
        }
        let mut u: f64 = x[i].iter().sum();
        if g > 0.0 && u < floor[i] {
            u = floor[i];
            *clamped = true;
        }
        out[i] = if u > 0.0 {
            s * pressure / u.powf(g)
        } else {
            0.0
        };
    }
}

pub(crate) fn integrate<M: StepModel>(
    spec: &ModelSpec,
    grid: Grid,
    init: &[[f64; 4]],
    opts: &FluidOptions,
    model: &mut M,
) -> Result<FluidTrajectory> {
    let l = spec.patches;
    let len = grid.len;
    let dt = grid.dt;
    let horizon = grid.horizon();
    let mig = Migration::new(spec);
    let out_rate: Vec<f64> = (0..l).map(|i| spec.max_out_rate(i)).collect();
    let u0: Vec<f64> = init.iter().map(|x| x.iter().sum()).collect();
    let floor: Vec<f64> = (0..l)
        .map(|i| 0.5 * u0[i] * (-out_rate[i] * horizon).exp())
        .collect();

    let mut state = Vec::with_capacity(len * l);
    let mut ups = Vec::with_capacity(len * l);
    let mut cum_flat = Vec::with_capacity(len * l);
    let mut cum: Vec<Vec<f64>> = vec![Vec::with_capacity(len); l];
    let mut diagnostics = Vec::new();
    let mut clamped = false;

    let mut ups0 = vec![0.0; l];
    upsilon_clamped(spec, init, &floor, &mut clamped, &mut ups0);
    state.extend_from_slice(init);
    ups.extend_from_slice(&ups0);
    for c in cum.iter_mut() {
        c.push(0.0);
        cum_flat.push(0.0);
    }

    let mut mig_cum = vec![[0.0; 4]; l];
    let mut flow_prev = vec![[0.0; 4]; l];
    let mut flow_cur = vec![[0.0; 4]; l];
    mig.flow(init, &mut flow_prev);
    let mut base = vec![[0.0; 4]; l];
    let mut x = vec![[0.0; 4]; l];
    let mut x_new = vec![[0.0; 4]; l];
    let mut ups_k = vec![0.0; l];
    let mut cum_k = vec![0.0; l];
    let mut max_iter_used = 0;
    let mut bound_violations = 0usize;

    for k in 1..len {
        let t0 = grid.time(k - 1);
        let t1 = grid.time(k);
        let weights: Vec<(f64, f64)> = (0..l)
            .map(|i| spec.lambda[i].cell_weights(t0, t1))
            .collect();
        model.prepare(k, &cum);
        let prev = &state[(k - 1) * l..k * l];
        match opts.start {
            PicardStart::Extrapolate if k >= 2 => {
                let pp = &state[(k - 2) * l..(k - 1) * l];
                for i in 0..l {
                    for c in 0..4 {
                        x[i][c] = 2.0 * prev[i][c] - pp[i][c];
                    }
                }
            }
            PicardStart::Extrapolate => x.copy_from_slice(prev),
            PicardStart::Zero => x.iter_mut().for_each(|v| *v = [0.0; 4]),
        }
        let ups_prev = &ups[(k - 1) * l..k * l];
        let mut converged = false;
        let mut residual = f64::INFINITY;
        for it in 1..=opts.max_iterations {
            upsilon_clamped(spec, &x, &floor, &mut clamped, &mut ups_k);
            for i in 0..l {
                cum_k[i] = cum[i][k - 1] + weights[i].0 * ups_prev[i] + weights[i].1 * ups_k[i];
            }
            model.evaluate(k, &cum_k, &mut base);
            mig.flow(&x, &mut flow_cur);
            residual = 0.0;
            for i in 0..l {
                for c in 0..4 {
                    let m = mig_cum[i][c] + 0.5 * dt * (flow_prev[i][c] + flow_cur[i][c]);
                    x_new[i][c] = base[i][c] + m;
                    residual = residual.max((x_new[i][c] - x[i][c]).abs());
                }
            }
            std::mem::swap(&mut x, &mut x_new);
            if residual <= opts.tolerance {
                converged = true;
                max_iter_used = max_iter_used.max(it);
                break;
            }
        }
        if !converged {
            return Err(Error::NoConvergence { step: k, residual });
        }
        // final consistent evaluation at the converged state
        upsilon_clamped(spec, &x, &floor, &mut clamped, &mut ups_k);
        for i in 0..l {
            cum_k[i] = cum[i][k - 1] + weights[i].0 * ups_prev[i] + weights[i].1 * ups_k[i];
        }
        mig.flow(&x, &mut flow_cur);
        for i in 0..l {
            for c in 0..4 {
                mig_cum[i][c] += 0.5 * dt * (flow_prev[i][c] + flow_cur[i][c]);
            }
        }
        std::mem::swap(&mut flow_prev, &mut flow_cur);
        for i in 0..l {
            let u: f64 = x[i].iter().sum();
            if u < u0[i] * (-out_rate[i] * t1).exp() - 1e-9 {
                bound_violations += 1;
            }
            cum[i].push(cum_k[i]);
            cum_flat.push(cum_k[i]);
        }
        state.extend_from_slice(&x);
        ups.extend_from_slice(&ups_k);
    }
    if bound_violations > 0 {
        diagnostics.push(format!(
            "patch-mass lower bound violated at {bound_violations} grid points"
        ));
    }
    if clamped {
        diagnostics.push("infection denominator clamped at half the patch-mass lower bound".into());
    }
    Ok(FluidTrajectory {
        grid,
        patches: l,
        variant: spec.variant,
        state,
        upsilon: ups,
        cum_infection: cum_flat,
        max_picard_iterations: max_iter_used,
        diagnostics,
    })
}
