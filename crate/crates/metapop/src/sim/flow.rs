use std::collections::HashMap;

use super::log::{EventKind, EventLog};
use crate::error::{Error, Result};
use crate::migration::{Grid, TransitionKernelTable};

/// Flows of individuals infected in one patch, per unit of total population.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowPair {
    pub grid: Grid,
    /// First-stage completions.
    pub progress: Vec<f64>,
    /// Second-stage completions.
    pub terminal: Vec<f64>,
}

/// Expected cumulative flows given the logged infection epochs:
/// `N^{-1} Σ_j PG_{l,i}(t - τ_j)` and `N^{-1} Σ_j Φ_{l,i}(t - τ_j)` over infections in patch `l`.
///
/// Kernels are linearly interpolated between their grid points.
pub fn conditional_flow_estimate(
    log: &EventLog,
    table: &TransitionKernelTable,
    l: usize,
    i: usize,
    grid: &Grid,
) -> Result<FlowPair> {
    let tol = 1e-9 * grid.horizon().max(1.0);
    if grid.horizon() > table.grid.horizon() + tol || grid.horizon() > log.horizon + tol {
        return Err(Error::HorizonMismatch(format!(
            "output horizon {} exceeds the log ({}) or kernel table ({})",
            grid.horizon(),
            log.horizon,
            table.grid.horizon()
        )));
    }
    let patches = table.patches();
    if l >= patches || i >= patches || log.initial.patches() != patches {
        return Err(Error::GridMismatch("patch index out of range".into()));
    }
    let n = log.initial.total as f64;
    let epochs = log.infection_times(l);
    let dt = table.grid.dt;
    let mut progress = vec![0.0; grid.len];
    let mut terminal = vec![0.0; grid.len];
    for k in 0..grid.len {
        let t = grid.time(k);
        let (mut a, mut b) = (0.0, 0.0);
        for &tau in epochs.iter().take_while(|&&tau| tau <= t) {
            a += table.pg.interpolate(dt, t - tau, l, i);
            b += table.phi.interpolate(dt, t - tau, l, i);
        }
        progress[k] = a / n;
        terminal[k] = b / n;
    }
    Ok(FlowPair { grid: *grid, progress, terminal })
}

/// Counted flows from the log for individuals infected in patch `l` and completing a stage in patch `i`.
pub fn counted_flows(log: &EventLog, l: usize, i: usize, grid: &Grid) -> FlowPair {
    let n = log.initial.total as f64;
    let mut origin: HashMap<u32, u16> = HashMap::new();
    let mut progress = vec![0.0; grid.len];
    let mut terminal = vec![0.0; grid.len];
    let (mut a, mut b) = (0u64, 0u64);
    let mut k = 0;
    for ev in &log.events {
        while k < grid.len && grid.time(k) < ev.time {
            progress[k] = a as f64 / n;
            terminal[k] = b as f64 / n;
            k += 1;
        }
        match ev.kind {
            EventKind::Infect => {
                origin.insert(ev.id, ev.to);
            }
            EventKind::Progress => {
                if origin.get(&ev.id) == Some(&(l as u16)) && ev.from as usize == i {
                    a += 1;
                }
            }
            EventKind::Terminal => {
                if origin.remove(&ev.id) == Some(l as u16) && ev.from as usize == i {
                    b += 1;
                }
            }
            EventKind::Migrate => {}
        }
    }
    while k < grid.len {
        progress[k] = a as f64 / n;
        terminal[k] = b as f64 / n;
        k += 1;
    }
    FlowPair { grid: *grid, progress, terminal }
}
