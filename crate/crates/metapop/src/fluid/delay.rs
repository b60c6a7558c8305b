use nalgebra::DMatrix;

use super::{check_initial_fractions, integrate, FluidOptions, FluidTrajectory, StepModel};
use crate::error::{Error, Result};
use crate::migration::{transition_matrices_on_grid, transition_matrix, GeneratorMatrix, Grid};
use crate::model::{ModelSpec, E, I, R, S};

struct DelayModel {
    l: usize,
    init: Vec<[f64; 4]>,
    terminal_to_s: bool,
    exposed_steps: usize,
    infectious_steps: usize,
    has_exposed: bool,
    /// p(t_e), and p(t_e) q(t_o).
    p_exit: DMatrix<f64>,
    pq_exit: DMatrix<f64>,
    /// Per step: (1/t_e) ∫_0^{t∧t_e} p, (1/t_o) ∫_0^{t∧t_o} q, (1/t_e) ∫_0^{(t-t_o)∧t_e} p ds q(t_o).
    e0_left: Vec<DMatrix<f64>>,
    i0_left: Vec<DMatrix<f64>>,
    e0_done: Vec<DMatrix<f64>>,
    lag_e: Vec<f64>,
    lag_eo: Vec<f64>,
    lag_e_idx: Option<usize>,
    lag_eo_idx: Option<usize>,
    k: usize,
}

impl DelayModel {
    fn lagged(&self, idx: Option<usize>, stored: f64, cum_k: f64) -> f64 {
        match idx {
            Some(j) if j == self.k => cum_k,
            Some(_) => stored,
            None => 0.0,
        }
    }
}

impl StepModel for DelayModel {
    fn prepare(&mut self, k: usize, cum: &[Vec<f64>]) {
        self.k = k;
        self.lag_e_idx = k.checked_sub(self.exposed_steps);
        self.lag_eo_idx = k.checked_sub(self.exposed_steps + self.infectious_steps);
        for a in 0..self.l {
            self.lag_e[a] = self.lag_e_idx.filter(|&j| j < k).map_or(0.0, |j| cum[a][j]);
            self.lag_eo[a] = self
                .lag_eo_idx
                .filter(|&j| j < k)
                .map_or(0.0, |j| cum[a][j]);
        }
    }

    fn evaluate(&self, k: usize, cum_k: &[f64], out: &mut [[f64; 4]]) {
        let l = self.l;
        for i in 0..l {
            let mut e = self.init[i][E] + cum_k[i];
            let mut inf = self.init[i][I];
            let mut done = 0.0;
            for a in 0..l {
                let ae = self.lagged(self.lag_e_idx, self.lag_e[a], cum_k[a]);
                let aeo = self.lagged(self.lag_eo_idx, self.lag_eo[a], cum_k[a]);
                let i0 = self.init[a][I];
                let i0_left = i0 * self.i0_left[k][(a, i)];
                let to_inf = self.p_exit[(a, i)] * ae;
                let to_done = self.pq_exit[(a, i)] * aeo;
                let (e0_left, e0_done) = if self.has_exposed {
                    let e0 = self.init[a][E];
                    (e0 * self.e0_left[k][(a, i)], e0 * self.e0_done[k][(a, i)])
                } else {
                    (0.0, 0.0)
                };
                e -= e0_left + to_inf;
                inf += -i0_left + e0_left - e0_done + to_inf - to_done;
                done += i0_left + e0_done + to_done;
            }
            let mut s = self.init[i][S] - cum_k[i];
            let mut r = self.init[i][R];
            if self.terminal_to_s {
                s += done;
            } else {
                r += done;
            }
            out[i] = [s, e, inf, r];
        }
    }
}

fn cumulative_trapezoid(m: &[DMatrix<f64>], dt: f64) -> Vec<DMatrix<f64>> {
    let mut out = Vec::with_capacity(m.len());
    let mut acc = DMatrix::zeros(m[0].nrows(), m[0].ncols());
    out.push(acc.clone());
    for w in m.windows(2) {
        acc += (&w[0] + &w[1]) * (0.5 * dt);
        out.push(acc.clone());
    }
    out
}

/// Fluid limit for deterministic exposed and infectious periods, solved as a
/// system of delay equations by the method of steps.
///
/// Initially exposed and infectious individuals are taken to be at equilibrium,
/// so their residual periods are uniform on `(0, t_e)` and `(0, t_o)`.
pub fn solve_fluid_delay(
    spec: &ModelSpec,
    exposed_period: f64,
    infectious_period: f64,
    init: &[[f64; 4]],
    dt: f64,
    horizon: f64,
    opts: &FluidOptions,
) -> Result<FluidTrajectory> {
    check_initial_fractions(spec, init)?;
    let has_exposed = spec.variant.uses_first_stage();
    let t_e = if has_exposed { exposed_period } else { 0.0 };
    if has_exposed && !(t_e > 0.0 && t_e.is_finite()) {
        return Err(Error::InvalidLaw(format!(
            "exposed period must be positive, got {exposed_period}"
        )));
    }
    if !(infectious_period > 0.0 && infectious_period.is_finite()) {
        return Err(Error::InvalidLaw(format!(
            "infectious period must be positive, got {infectious_period}"
        )));
    }
    let grid = Grid::new(dt, horizon)?;
    let n_e = grid.steps_of(t_e).ok_or(Error::DelayOffGrid(t_e))?;
    let n_o = grid
        .steps_of(infectious_period)
        .ok_or(Error::DelayOffGrid(infectious_period))?;

    let l = spec.patches;
    let gen_e = GeneratorMatrix::from_rates(&spec.slot_rate_matrix(E))?;
    let gen_i = GeneratorMatrix::from_rates(&spec.slot_rate_matrix(I))?;
    let p_exit = transition_matrix(&gen_e, t_e)?;
    let q_exit = transition_matrix(&gen_i, infectious_period)?;
    let pq_exit = &p_exit * &q_exit;

    // ∫ p and ∫ q up to each grid point within their periods
    let p_int = cumulative_trapezoid(&transition_matrices_on_grid(&gen_e, dt, n_e + 1)?, dt);
    let q_int = cumulative_trapezoid(&transition_matrices_on_grid(&gen_i, dt, n_o + 1)?, dt);
    let zero = DMatrix::zeros(l, l);
    let mut e0_left = Vec::with_capacity(grid.len);
    let mut i0_left = Vec::with_capacity(grid.len);
    let mut e0_done = Vec::with_capacity(grid.len);
    for k in 0..grid.len {
        if has_exposed {
            e0_left.push(&p_int[k.min(n_e)] / t_e);
            e0_done.push(match k.checked_sub(n_o) {
                Some(j) => &p_int[j.min(n_e)] * &q_exit / t_e,
                None => zero.clone(),
            });
        }
        i0_left.push(&q_int[k.min(n_o)] / infectious_period);
    }

    let mut model = DelayModel {
        l,
        init: init.to_vec(),
        terminal_to_s: spec.variant.terminal_to_susceptible(),
        exposed_steps: n_e,
        infectious_steps: n_o,
        has_exposed,
        p_exit,
        pq_exit,
        e0_left,
        i0_left,
        e0_done,
        lag_e: vec![0.0; l],
        lag_eo: vec![0.0; l],
        lag_e_idx: None,
        lag_eo_idx: None,
        k: 0,
    };
    integrate(spec, grid, init, opts, &mut model)
}
