//! Per-path solution of the linear fluctuation system.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::drivers::{Driver, DriverFamily, DriverPath, DriverSampler};
use super::linearization::LinearizationField;
use crate::error::{Error, Result};
use crate::fluid::ConvolutionWeights;
use crate::migration::{Grid, TransitionKernelTable};
use crate::model::{ModelSpec, Variant, E, I, R, S};

/// Checkpoint values, optional kept path, and the path residual.
type PathOutput = (Vec<f64>, Option<Vec<[f64; 5]>>, f64);
use crate::seed::{stream_rng, TAG_INIT_FLUCT};

/// Component index of `Υ̂` in path samples; slots 0..4 are the internal compartments.
pub const UPSILON: usize = 4;

/// Law of the initial fluctuations `(Ŝ(0), Ê(0), Î(0))`; `R̂(0)` is always 0.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialFluctuation {
    Zero,
    /// Independent centred Gaussians with the given variances, per patch and internal slot.
    Gaussian { variances: Vec<[f64; 4]> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FcltOptions {
    /// Read the initial-exposed term of the infectious and recovered equations as
    /// `Ê_i(0) Σ_l K_{l,i}` (true) or per origin `Σ_l Ê_l(0) K_{l,i}` (false).
    pub strict_paper_indices: bool,
    pub initial: InitialFluctuation,
    /// Grid indices at which samples are stored for every path.
    pub checkpoints: Vec<usize>,
    /// Number of leading paths stored on the full grid.
    pub keep_paths: usize,
}

impl Default for FcltOptions {
    fn default() -> Self {
        FcltOptions {
            strict_paper_indices: true,
            initial: InitialFluctuation::Zero,
            checkpoints: Vec::new(),
            keep_paths: 0,
        }
    }
}

/// The discretized linear system shared by every path.
pub struct FluctuationSystem<'a> {
    grid: Grid,
    l: usize,
    variant: Variant,
    table: &'a TransitionKernelTable,
    strict: bool,
    pg: ConvolutionWeights,
    phi: ConvolutionWeights,
    /// `Υ̂(t_k) = lin[k] x(t_k)`, an `L x 4L` matrix.
    lin: Vec<DMatrix<f64>>,
    weights: Vec<Vec<(f64, f64)>>,
    migration: DMatrix<f64>,
    /// Inverse step matrices and the step matrices themselves.
    inverse: Vec<DMatrix<f64>>,
    step: Vec<DMatrix<f64>>,
    local: DMatrix<f64>,
}

#[inline]
fn at(i: usize, c: usize) -> usize {
    4 * i + c
}

fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Largest step-matrix condition estimate accepted before reporting a singular step.
pub const MAX_CONDITION: f64 = 1e12;

impl<'a> FluctuationSystem<'a> {
    pub fn new(spec: &ModelSpec, field: &LinearizationField, table: &'a TransitionKernelTable, strict: bool) -> Result<Self> {
        let l = spec.patches;
        let grid = field.grid;
        if !grid.same_as(&table.grid) || field.patches != l || table.patches() != l {
            return Err(Error::GridMismatch("linearization field and kernel table disagree".into()));
        }
        let n = 4 * l;
        let inf = spec.variant.infectious_slot();
        let ts = spec.variant.terminal_to_susceptible();
        let pg = ConvolutionWeights::new(&table.pg);
        let phi = ConvolutionWeights::new(&table.phi);

        let lin: Vec<DMatrix<f64>> = (0..grid.len)
            .map(|k| {
                let mut m = DMatrix::zeros(l, n);
                for i in 0..l {
                    let c = field.slot(k, i);
                    for s in 0..4 {
                        m[(i, at(i, s))] += c[s];
                    }
                    let d = field.distance(k, i);
                    for j in 0..l {
                        if j != i {
                            m[(i, at(j, inf))] += d * spec.kappa[i][j];
                        }
                    }
                }
                m
            })
            .collect();
        let weights: Vec<Vec<(f64, f64)>> = (0..grid.len)
            .map(|k| {
                (0..l)
                    .map(|p| if k == 0 { (0.0, 0.0) } else { spec.lambda[p].cell_weights(grid.time(k - 1), grid.time(k)) })
                    .collect()
            })
            .collect();

        let mut migration = DMatrix::zeros(n, n);
        for c in 0..4 {
            let nu = spec.slot_rate_matrix(c);
            for i in 0..l {
                for j in 0..l {
                    if j != i {
                        migration[(at(i, c), at(j, c))] += nu[j][i];
                        migration[(at(i, c), at(i, c))] -= nu[i][j];
                    }
                }
            }
        }

        // d x(t_k) / d Ĉ_l(t_k) through the local convolution weights
        let mut local = DMatrix::zeros(n, l);
        for i in 0..l {
            for o in 0..l {
                let pgl = pg.local(o, i);
                let phl = phi.local(o, i);
                let own = if o == i { 1.0 } else { 0.0 };
                local[(at(i, S), o)] = -own + if ts { phl } else { 0.0 };
                local[(at(i, E), o)] = own - pgl;
                local[(at(i, I), o)] = pgl - phl;
                local[(at(i, R), o)] = if ts { 0.0 } else { phl };
            }
        }

        let mut inverse = Vec::with_capacity(grid.len);
        let mut step = Vec::with_capacity(grid.len);
        inverse.push(DMatrix::identity(n, n));
        step.push(DMatrix::identity(n, n));
        for k in 1..grid.len {
            let w1 = DMatrix::from_diagonal(&DVector::from_iterator(l, weights[k].iter().map(|w| w.1)));
            let a = DMatrix::identity(n, n) - &local * w1 * &lin[k] - &migration * (0.5 * grid.dt);
            let Some(inv) = a.clone().try_inverse() else {
                return Err(Error::SingularStep { step: k, condition: f64::INFINITY });
            };
            let condition = norm1(&a) * norm1(&inv);
            if !(condition <= MAX_CONDITION) {
                return Err(Error::SingularStep { step: k, condition });
            }
            inverse.push(inv);
            step.push(a);
        }
        Ok(FluctuationSystem {
            grid,
            l,
            variant: spec.variant,
            table,
            strict,
            pg,
            phi,
            lin,
            weights,
            migration,
            inverse,
            step,
            local,
        })
    }

    /// Additive driver terms of each equation at `t_k`, `[4 i + slot]`.
    pub fn forcing(&self, d: &DriverPath, k: usize, out: &mut [f64]) {
        use DriverFamily::*;
        let l = self.l;
        let ts = self.variant.terminal_to_susceptible();
        out.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..l {
            let ma = d.get(Driver::infection(i), k);
            let mut exits_e = 0.0;
            let mut exits_i = 0.0;
            for o in 0..l {
                exits_e += d.get(Driver::new(InitialExposed, o, i), k) + d.get(Driver::new(ExposedFlow, o, i), k);
                exits_i += d.get(Driver::new(InitialInfectious, o, i), k)
                    + d.get(Driver::new(InitialExposedInfectious, o, i), k)
                    + d.get(Driver::new(InfectiousFlow, o, i), k);
            }
            out[at(i, S)] = -ma + if ts { exits_i } else { 0.0 };
            out[at(i, E)] = ma - exits_e;
            out[at(i, I)] = exits_e - exits_i;
            out[at(i, R)] = if ts { 0.0 } else { exits_i };
            for (slot, fam) in [(S, MigrationS), (E, MigrationE), (I, MigrationI), (R, MigrationR)] {
                let mut m = 0.0;
                for j in 0..l {
                    if j != i {
                        m += d.get(Driver::new(fam, j, i), k) - d.get(Driver::new(fam, i, j), k);
                    }
                }
                out[at(i, slot)] += m;
            }
        }
    }

    /// Terms carried by the initial fluctuations at `t_k`.
    fn initial_terms(&self, x0: &[f64], k: usize, out: &mut [f64]) {
        let l = self.l;
        let t = self.table;
        let ts = self.variant.terminal_to_susceptible();
        for i in 0..l {
            let mut e = x0[at(i, E)];
            let mut inf = x0[at(i, I)];
            let mut done = 0.0;
            for o in 0..l {
                let pg0 = t.pg0.value(k, o, i);
                let phi0 = t.phi0.value(k, o, i);
                let qf0 = t.qf0.value(k, o, i);
                let e_src = if self.strict { x0[at(i, E)] } else { x0[at(o, E)] };
                e -= x0[at(o, E)] * pg0;
                inf += -x0[at(o, I)] * qf0 + e_src * (pg0 - phi0);
                done += x0[at(o, I)] * qf0 + e_src * phi0;
            }
            out[at(i, S)] = x0[at(i, S)] + if ts { done } else { 0.0 };
            out[at(i, E)] = e;
            out[at(i, I)] = inf;
            out[at(i, R)] = if ts { 0.0 } else { done };
        }
    }

    /// Solves one path. Returns the state `[k * 4L + 4 i + slot]`, `Υ̂` `[k * L + i]`
    /// and the largest step residual.
    pub fn solve(&self, drivers: &DriverPath, x0: &[f64]) -> PathSolution {
        let l = self.l;
        let n = 4 * l;
        let len = self.grid.len;
        let half_dt = 0.5 * self.grid.dt;
        let mut x = vec![0.0; len * n];
        let mut ups = vec![0.0; len * l];
        let mut cum: Vec<Vec<f64>> = vec![vec![0.0; len]; l];
        let mut mig = DVector::<f64>::zeros(n);
        let mut rhs = DVector::<f64>::zeros(n);
        let mut init = vec![0.0; n];
        let mut force = vec![0.0; n];
        let mut known_c = vec![0.0; l];
        let mut residual: f64 = 0.0;

        self.initial_terms(x0, 0, &mut init);
        self.forcing(drivers, 0, &mut force);
        for r in 0..n {
            x[r] = init[r] + force[r];
        }
        let x_prev0 = DVector::from_column_slice(&x[..n]);
        let u0 = &self.lin[0] * &x_prev0;
        ups[..l].copy_from_slice(u0.as_slice());
        let mut flow_prev = &self.migration * x_prev0;

        for k in 1..len {
            for o in 0..l {
                let (w0, _) = self.weights[k][o];
                known_c[o] = cum[o][k - 1] + w0 * ups[(k - 1) * l + o];
            }
            self.initial_terms(x0, k, &mut init);
            self.forcing(drivers, k, &mut force);
            let ts = self.variant.terminal_to_susceptible();
            for i in 0..l {
                let mut hist_pg = 0.0;
                let mut hist_phi = 0.0;
                for o in 0..l {
                    hist_pg += self.pg.history(o, i, k, &cum[o]);
                    hist_phi += self.phi.history(o, i, k, &cum[o]);
                }
                rhs[at(i, S)] = if ts { hist_phi } else { 0.0 };
                rhs[at(i, E)] = -hist_pg;
                rhs[at(i, I)] = hist_pg - hist_phi;
                rhs[at(i, R)] = if ts { 0.0 } else { hist_phi };
            }
            for r in 0..n {
                let mut v = rhs[r] + init[r] + force[r] + mig[r] + half_dt * flow_prev[r];
                for o in 0..l {
                    v += self.local[(r, o)] * known_c[o];
                }
                rhs[r] = v;
            }
            let xk = &self.inverse[k] * &rhs;
            let res = (&self.step[k] * &xk - &rhs).amax();
            residual = residual.max(res);
            let uk = &self.lin[k] * &xk;
            for o in 0..l {
                let (_, w1) = self.weights[k][o];
                cum[o][k] = known_c[o] + w1 * uk[o];
            }
            let flow = &self.migration * &xk;
            for r in 0..n {
                mig[r] += half_dt * (flow_prev[r] + flow[r]);
            }
            flow_prev = flow;
            x[k * n..(k + 1) * n].copy_from_slice(xk.as_slice());
            ups[k * l..(k + 1) * l].copy_from_slice(uk.as_slice());
        }
        PathSolution { l, state: x, upsilon: ups, residual }
    }
}

#[derive(Debug, Clone)]
pub struct PathSolution {
    l: usize,
    state: Vec<f64>,
    upsilon: Vec<f64>,
    pub residual: f64,
}

impl PathSolution {
    pub fn state(&self, k: usize, i: usize) -> [f64; 4] {
        let o = k * 4 * self.l + 4 * i;
        [self.state[o], self.state[o + 1], self.state[o + 2], self.state[o + 3]]
    }

    pub fn upsilon(&self, k: usize, i: usize) -> f64 {
        self.upsilon[k * self.l + i]
    }

    /// `(Ŝ, Ê, Î, R̂, Υ̂)` at `t_k`.
    pub fn components(&self, k: usize, i: usize) -> [f64; 5] {
        let s = self.state(k, i);
        [s[0], s[1], s[2], s[3], self.upsilon(k, i)]
    }
}

/// Sampled fluctuation paths stored at checkpoints, plus a few full paths.
#[derive(Debug, Clone)]
pub struct FluctuationEnsemble {
    pub grid: Grid,
    pub patches: usize,
    pub variant: Variant,
    pub checkpoints: Vec<usize>,
    pub paths: usize,
    samples: Vec<f64>,
    kept: Vec<Vec<[f64; 5]>>,
    /// Largest linear-system residual over all steps and paths.
    pub max_residual: f64,
}

impl FluctuationEnsemble {
    #[inline]
    pub fn sample(&self, p: usize, c: usize, i: usize, comp: usize) -> f64 {
        self.samples[((p * self.checkpoints.len() + c) * self.patches + i) * 5 + comp]
    }

    pub fn mean(&self, c: usize, i: usize, comp: usize) -> f64 {
        (0..self.paths).map(|p| self.sample(p, c, i, comp)).sum::<f64>() / self.paths as f64
    }

    /// Sample covariance across paths of two (checkpoint, patch, component) cells.
    pub fn covariance(&self, a: (usize, usize, usize), b: (usize, usize, usize)) -> f64 {
        let p = self.paths;
        if p < 2 {
            return 0.0;
        }
        let ma = self.mean(a.0, a.1, a.2);
        let mb = self.mean(b.0, b.1, b.2);
        (0..p)
            .map(|q| (self.sample(q, a.0, a.1, a.2) - ma) * (self.sample(q, b.0, b.1, b.2) - mb))
            .sum::<f64>()
            / (p - 1) as f64
    }

    pub fn variance(&self, c: usize, i: usize, comp: usize) -> f64 {
        self.covariance((c, i, comp), (c, i, comp))
    }

    /// Full-grid path `p` (only the first `keep_paths`), `[k * L + i]`.
    pub fn kept_path(&self, p: usize) -> Option<&[[f64; 5]]> {
        self.kept.get(p).map(|v| v.as_slice())
    }

    pub fn kept_paths(&self) -> usize {
        self.kept.len()
    }
}

fn draw_initial(policy: &InitialFluctuation, l: usize, seed: u64, p: u64) -> Result<Vec<f64>> {
    let mut x0 = vec![0.0; 4 * l];
    if let InitialFluctuation::Gaussian { variances } = policy {
        if variances.len() != l {
            return Err(Error::BadInit(format!("initial fluctuation variances for {} patches, model has {l}", variances.len())));
        }
        let mut rng = stream_rng(seed, TAG_INIT_FLUCT, p);
        for i in 0..l {
            for c in 0..4 {
                let v = variances[i][c];
                if !(v >= 0.0 && v.is_finite()) || (c == R && v != 0.0) {
                    return Err(Error::BadInit(format!("bad initial fluctuation variance {v} for patch {} slot {c}", i + 1)));
                }
                let g: f64 = rng.sample(StandardNormal);
                x0[at(i, c)] = v.sqrt() * g;
            }
        }
    }
    Ok(x0)
}

/// Draws `paths` driver samples, solves each, and keeps checkpoint values.
pub fn solve_fluctuations(
    spec: &ModelSpec,
    field: &LinearizationField,
    table: &TransitionKernelTable,
    sampler: &DriverSampler,
    opts: &FcltOptions,
    seed: u64,
    paths: usize,
) -> Result<FluctuationEnsemble> {
    if !sampler.grid.same_as(&field.grid) {
        return Err(Error::GridMismatch("driver grid differs from linearization grid".into()));
    }
    if let Some(&c) = opts.checkpoints.iter().find(|&&c| c >= field.grid.len) {
        return Err(Error::OffGrid(c as f64 * field.grid.dt));
    }
    let system = FluctuationSystem::new(spec, field, table, opts.strict_paper_indices)?;
    let l = spec.patches;
    let cps = &opts.checkpoints;
    let per_path: Vec<Result<PathOutput>> = (0..paths)
        .into_par_iter()
        .map(|p| {
            let x0 = draw_initial(&opts.initial, l, seed, p as u64)?;
            let drivers = sampler.sample(seed, p as u64);
            let sol = system.solve(&drivers, &x0);
            let mut vals = Vec::with_capacity(cps.len() * l * 5);
            for &k in cps {
                for i in 0..l {
                    vals.extend_from_slice(&sol.components(k, i));
                }
            }
            let full = (p < opts.keep_paths).then(|| {
                (0..field.grid.len).flat_map(|k| (0..l).map(move |i| (k, i))).map(|(k, i)| sol.components(k, i)).collect()
            });
            Ok((vals, full, sol.residual))
        })
        .collect();
    let mut samples = Vec::with_capacity(paths * cps.len() * l * 5);
    let mut kept = Vec::new();
    let mut max_residual: f64 = 0.0;
    for r in per_path {
        let (vals, full, res) = r?;
        samples.extend(vals);
        kept.extend(full);
        max_residual = max_residual.max(res);
    }
    Ok(FluctuationEnsemble {
        grid: field.grid,
        patches: l,
        variant: spec.variant,
        checkpoints: cps.clone(),
        paths,
        samples,
        kept,
        max_residual,
    })
}
