use std::io::Write;

use crate::error::Result;
use crate::migration::Grid;
use crate::model::Variant;

/// Compartment counts, cumulative infections and cumulative stage flows on an output grid.
///
/// Flows are indexed by (infection patch ℓ, patch of the transition i) and only count
/// individuals infected after time 0.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPanel {
    pub grid: Grid,
    pub patches: usize,
    pub variant: Variant,
    pub total: u64,
    counts: Vec<[u64; 4]>,
    infections: Vec<u64>,
    progress: Vec<u64>,
    terminal: Vec<u64>,
}

impl TrajectoryPanel {
    pub(crate) fn with_capacity(grid: Grid, patches: usize, variant: Variant, total: u64) -> Self {
        TrajectoryPanel {
            grid,
            patches,
            variant,
            total,
            counts: Vec::with_capacity(grid.len * patches),
            infections: Vec::with_capacity(grid.len * patches),
            progress: Vec::with_capacity(grid.len * patches * patches),
            terminal: Vec::with_capacity(grid.len * patches * patches),
        }
    }

    pub(crate) fn push(&mut self, counts: &[[u64; 4]], infections: &[u64], progress: &[u64], terminal: &[u64]) {
        self.counts.extend_from_slice(counts);
        self.infections.extend_from_slice(infections);
        self.progress.extend_from_slice(progress);
        self.terminal.extend_from_slice(terminal);
    }

    pub(crate) fn recorded(&self) -> usize {
        self.counts.len() / self.patches
    }

    pub fn len(&self) -> usize {
        self.grid.len
    }

    pub fn is_empty(&self) -> bool {
        self.grid.len == 0
    }

    /// Counts by internal slot.
    pub fn counts(&self, k: usize, i: usize) -> [u64; 4] {
        self.counts[k * self.patches + i]
    }

    pub fn user_counts(&self, k: usize, i: usize) -> [u64; 4] {
        self.variant.to_user(self.counts(k, i))
    }

    /// Counts divided by N, by internal slot.
    pub fn fractions(&self, k: usize, i: usize) -> [f64; 4] {
        let n = self.total as f64;
        self.counts(k, i).map(|c| c as f64 / n)
    }

    pub fn cumulative_infections(&self, k: usize, i: usize) -> u64 {
        self.infections[k * self.patches + i]
    }

    /// First-stage completions in patch i by individuals infected in patch l.
    pub fn progress_flow(&self, k: usize, l: usize, i: usize) -> u64 {
        self.progress[(k * self.patches + l) * self.patches + i]
    }

    /// Second-stage completions in patch i by individuals infected in patch l.
    pub fn terminal_flow(&self, k: usize, l: usize, i: usize) -> u64 {
        self.terminal[(k * self.patches + l) * self.patches + i]
    }

    pub fn is_balanced(&self) -> bool {
        (0..self.grid.len).all(|k| {
            (0..self.patches).map(|i| self.counts(k, i).iter().sum::<u64>()).sum::<u64>() == self.total
        })
    }

    /// CSV with columns `time, patch, S, E, I, R, A`; patches are numbered from 1.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["time", "patch", "S", "E", "I", "R", "A"])?;
        for k in 0..self.grid.len {
            for i in 0..self.patches {
                let c = self.user_counts(k, i);
                out.write_record([
                    format!("{}", self.grid.time(k)),
                    (i + 1).to_string(),
                    c[0].to_string(),
                    c[1].to_string(),
                    c[2].to_string(),
                    c[3].to_string(),
                    self.cumulative_infections(k, i).to_string(),
                ])
                ?;
            }
        }
        Ok(out.flush()?)
    }
}
