use super::{check_initial_fractions, integrate, FluidOptions, FluidTrajectory, StepModel};
use crate::error::{Error, Result};
use crate::migration::{Grid, KernelSeries, TransitionKernelTable};
use crate::model::{ModelSpec, E, I, R, S};

/// Discrete Stieltjes convolution weights of a kernel series.
///
/// With cumulative input `C` (`C[0] = 0`) the convolution at step k is
/// `w[0] C[k] + Σ_{j=1}^{k-1} w[k-j] C[j]`: point masses act exactly and
/// continuous cell masses use the trapezoid rule.
#[derive(Debug, Clone)]
pub(crate) struct ConvolutionWeights {
    l: usize,
    len: usize,
    w: Vec<f64>,
}

impl ConvolutionWeights {
    pub(crate) fn new(series: &KernelSeries) -> Self {
        let l = series.patches();
        let len = series.len();
        let mut w = vec![0.0; l * l * len];
        for a in 0..l {
            for b in 0..l {
                let base = (a * l + b) * len;
                for d in 0..len {
                    let c_here = series.continuous_increment(d, a, b);
                    let c_next = if d + 1 < len {
                        series.continuous_increment(d + 1, a, b)
                    } else {
                        0.0
                    };
                    w[base + d] = if d == 0 {
                        series.atom(0, a, b) + 0.5 * c_next
                    } else {
                        series.atom(d, a, b) + 0.5 * (c_here + c_next)
                    };
                }
            }
        }
        ConvolutionWeights { l, len, w }
    }

    #[inline]
    pub(crate) fn local(&self, a: usize, b: usize) -> f64 {
        self.w[(a * self.l + b) * self.len]
    }

    /// History part `Σ_{j=1}^{k-1} w[k-j] C[j]` for the pair (a, b).
    #[inline]
    pub(crate) fn history(&self, a: usize, b: usize, k: usize, c: &[f64]) -> f64 {
        let w = &self.w[(a * self.l + b) * self.len..(a * self.l + b + 1) * self.len];
        let mut acc = 0.0;
        for j in 1..k {
            acc += w[k - j] * c[j];
        }
        acc
    }
}

struct VolterraModel<'a> {
    l: usize,
    table: &'a TransitionKernelTable,
    init: Vec<[f64; 4]>,
    terminal_to_s: bool,
    pg: ConvolutionWeights,
    phi: ConvolutionWeights,
    hist_pg: Vec<f64>,
    hist_phi: Vec<f64>,
}

impl StepModel for VolterraModel<'_> {
    fn prepare(&mut self, k: usize, cum: &[Vec<f64>]) {
        let l = self.l;
        for a in 0..l {
            for b in 0..l {
                self.hist_pg[a * l + b] = self.pg.history(a, b, k, &cum[a]);
                self.hist_phi[a * l + b] = self.phi.history(a, b, k, &cum[a]);
            }
        }
    }

    fn evaluate(&self, k: usize, cum_k: &[f64], out: &mut [[f64; 4]]) {
        let l = self.l;
        let t = self.table;
        for i in 0..l {
            let mut e = self.init[i][E] + cum_k[i];
            let mut inf = self.init[i][I];
            let mut done = 0.0;
            for a in 0..l {
                let e0 = self.init[a][E];
                let i0 = self.init[a][I];
                let pg0 = t.pg0.value(k, a, i);
                let phi0 = t.phi0.value(k, a, i);
                let qf0 = t.qf0.value(k, a, i);
                let conv_pg = self.hist_pg[a * l + i] + self.pg.local(a, i) * cum_k[a];
                let conv_phi = self.hist_phi[a * l + i] + self.phi.local(a, i) * cum_k[a];
                e -= e0 * pg0 + conv_pg;
                inf += -i0 * qf0 + e0 * (pg0 - phi0) + conv_pg - conv_phi;
                done += i0 * qf0 + e0 * phi0 + conv_phi;
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

/// Solves the fluid Volterra system on `[0, horizon]` using the kernels in `table`.
///
/// `init` holds fractions by internal slot and must sum to one.
pub fn solve_fluid(
    spec: &ModelSpec,
    table: &TransitionKernelTable,
    init: &[[f64; 4]],
    horizon: f64,
    opts: &FluidOptions,
) -> Result<FluidTrajectory> {
    check_initial_fractions(spec, init)?;
    if table.patches() != spec.patches {
        return Err(Error::GridMismatch(format!(
            "kernel table has {} patches, model has {}",
            table.patches(),
            spec.patches
        )));
    }
    let grid = Grid::new(table.grid.dt, horizon)?;
    if grid.len > table.grid.len {
        return Err(Error::GridMismatch(format!(
            "horizon {horizon} exceeds the kernel table horizon {}",
            table.grid.horizon()
        )));
    }
    let l = spec.patches;
    let mut model = VolterraModel {
        l,
        table,
        init: init.to_vec(),
        terminal_to_s: spec.variant.terminal_to_susceptible(),
        pg: ConvolutionWeights::new(&table.pg),
        phi: ConvolutionWeights::new(&table.phi),
        hist_pg: vec![0.0; l * l],
        hist_phi: vec![0.0; l * l],
    };
    integrate(spec, grid, init, opts, &mut model)
}
