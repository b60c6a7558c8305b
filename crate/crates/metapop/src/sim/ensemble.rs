use rayon::prelude::*;

use super::engine::{simulate, SimOptions};
use super::panel::TrajectoryPanel;
use crate::error::{Error, Result};
use crate::migration::Grid;
use crate::model::{LawSet, ModelSpec, PopulationState};
use crate::seed;

/// One-pass (Welford) mean and variance of a fixed-length vector.
#[derive(Debug, Clone, PartialEq)]
pub struct RunningStats {
    count: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl RunningStats {
    pub fn new(dim: usize) -> Self {
        RunningStats { count: 0, mean: vec![0.0; dim], m2: vec![0.0; dim] }
    }

    pub fn push(&mut self, x: &[f64]) {
        self.count += 1;
        let n = self.count as f64;
        for ((m, s), v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let d = v - *m;
            *m += d / n;
            *s += d * (v - *m);
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self, j: usize) -> f64 {
        self.mean[j]
    }

    /// Unbiased sample variance; 0 with fewer than two observations.
    pub fn variance(&self, j: usize) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2[j] / (self.count - 1) as f64
        }
    }

    pub fn std_error(&self, j: usize) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        (self.variance(j) / self.count as f64).sqrt()
    }
}

/// Index of the cumulative-infection column in [`EnsembleStats`].
pub const INFECTIONS: usize = 4;

/// Ensemble mean and variance of the fractions (by internal slot) and of A/N, per grid time and patch.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub grid: Grid,
    pub patches: usize,
    stats: RunningStats,
}

impl EnsembleStats {
    fn new(grid: Grid, patches: usize) -> Self {
        EnsembleStats { grid, patches, stats: RunningStats::new(grid.len * patches * 5) }
    }

    fn push(&mut self, p: &TrajectoryPanel) {
        let n = p.total as f64;
        let mut row = Vec::with_capacity(self.grid.len * self.patches * 5);
        for k in 0..self.grid.len {
            for i in 0..self.patches {
                row.extend(p.fractions(k, i));
                row.push(p.cumulative_infections(k, i) as f64 / n);
            }
        }
        self.stats.push(&row);
    }

    #[inline]
    fn idx(&self, k: usize, i: usize, c: usize) -> usize {
        (k * self.patches + i) * 5 + c
    }

    pub fn replicates(&self) -> u64 {
        self.stats.count()
    }

    pub fn mean(&self, k: usize, i: usize, c: usize) -> f64 {
        self.stats.mean(self.idx(k, i, c))
    }

    pub fn variance(&self, k: usize, i: usize, c: usize) -> f64 {
        self.stats.variance(self.idx(k, i, c))
    }

    pub fn std_error(&self, k: usize, i: usize, c: usize) -> f64 {
        self.stats.std_error(self.idx(k, i, c))
    }
}

#[derive(Debug, Clone)]
pub struct Ensemble {
    pub stats: EnsembleStats,
    pub seeds: Vec<u64>,
    /// Per-replicate panels, kept on request.
    pub panels: Vec<TrajectoryPanel>,
}

/// Seed of replicate `r`: `stream_seed(base, TAG_REPLICATE, r)`.
pub fn replicate_seed(base: u64, r: usize) -> u64 {
    seed::stream_seed(base, seed::TAG_REPLICATE, r as u64)
}

/// Runs `replicates` independent simulations in parallel.
///
/// Results are reduced in replicate order, so the output does not depend on the
/// number of threads.
#[allow(clippy::too_many_arguments)]
pub fn run_replicates(
    spec: &ModelSpec,
    laws: &LawSet,
    init: &PopulationState,
    horizon: f64,
    base_seed: u64,
    replicates: usize,
    opts: &SimOptions,
    keep_panels: bool,
) -> Result<Ensemble> {
    if replicates == 0 {
        return Err(Error::BadInit("at least one replicate is required".into()));
    }
    let grid = Grid::new(opts.output_dt, horizon)?;
    let opts = SimOptions { record_log: false, ..*opts };
    let seeds: Vec<u64> = (0..replicates).map(|r| replicate_seed(base_seed, r)).collect();
    let panels: Vec<Result<TrajectoryPanel>> = seeds
        .par_iter()
        .enumerate()
        .map(|(r, &s)| {
            simulate(spec, laws, init, horizon, s, &opts)
                .map(|o| o.panel)
                .map_err(|e| Error::Replicate { index: r, source: Box::new(e) })
        })
        .collect();
    let mut stats = EnsembleStats::new(grid, spec.patches);
    let mut kept = Vec::new();
    for p in panels {
        let p = p?;
        stats.push(&p);
        if keep_panels {
            kept.push(p);
        }
    }
    Ok(Ensemble { stats, seeds, panels: kept })
}
