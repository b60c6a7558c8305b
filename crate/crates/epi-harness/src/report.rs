//! Serializable report structures. Reports carry no timings, so identical inputs
//! give identical bytes.

use serde::Serialize;

use crate::config::{ExperimentSpec, Tolerances};

#[derive(Debug, Clone, Serialize)]
pub struct SeedRecord {
    pub label: String,
    pub value: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridRecord {
    pub dt: f64,
    pub horizon: f64,
    pub output_dt: f64,
    pub checkpoints: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Header {
    pub tool: &'static str,
    pub version: &'static str,
    pub mode: &'static str,
    pub variant: &'static str,
    pub patches: usize,
    pub config_sha256: String,
    pub base_seed: u64,
    pub seeds: Vec<SeedRecord>,
    pub grid: GridRecord,
    pub tolerances: Tolerances,
    pub defaults: Vec<String>,
    pub overrides: Vec<String>,
}

impl Header {
    pub fn new(spec: &ExperimentSpec, seeds: Vec<SeedRecord>) -> Self {
        Header {
            tool: "epi",
            version: env!("CARGO_PKG_VERSION"),
            mode: spec.mode.name(),
            variant: spec.model.variant.name(),
            patches: spec.model.patches,
            config_sha256: spec.config_hash.clone(),
            base_seed: spec.base_seed,
            seeds,
            grid: GridRecord {
                dt: spec.dt,
                horizon: spec.horizon,
                output_dt: spec.output_dt,
                checkpoints: spec.checkpoints.clone(),
            },
            tolerances: spec.tolerances.clone(),
            defaults: spec.defaults.clone(),
            overrides: spec.overrides.clone(),
        }
    }
}

/// One (checkpoint, patch, compartment) comparison of ensemble mean and fluid.
#[derive(Debug, Clone, Serialize)]
pub struct MeanCell {
    pub t: f64,
    pub patch: usize,
    pub compartment: &'static str,
    pub fluid: f64,
    pub mean: f64,
    pub std_error: f64,
    /// `None` when the standard error is zero.
    pub z: Option<f64>,
    pub allowed: f64,
    pub judged: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SizeReport {
    pub n: u64,
    pub seed: u64,
    pub replicates: usize,
    /// Discretization allowance of the fluid at this N.
    pub eps_grid: f64,
    /// Mean over replicates of the largest |fraction - fluid| over all cells.
    pub mean_sup_error: f64,
    pub max_abs_z: Option<f64>,
    pub cells: Vec<MeanCell>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SlopeReport {
    pub value: Option<f64>,
    pub window: [f64; 2],
    pub pass: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FllnReport {
    pub header: Header,
    pub decision_rule: String,
    pub sizes: Vec<SizeReport>,
    pub slope: SlopeReport,
    pub failed_cells: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Interval {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VarianceCell {
    pub t: f64,
    pub patch: usize,
    pub compartment: &'static str,
    pub simulation: Interval,
    pub limit: Interval,
    pub degenerate: bool,
    pub overlap: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LagCell {
    pub t: f64,
    pub t2: f64,
    pub patch: usize,
    pub compartment: &'static str,
    pub simulation: f64,
    pub limit: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockRecord {
    pub name: String,
    pub dimension: usize,
    pub trace: f64,
    pub jitter: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitRecord {
    pub infection_noise: &'static str,
    pub migration_noise: &'static str,
    pub migration_note: Option<String>,
    pub strict_paper_indices: bool,
    pub paths: usize,
    pub max_residual: f64,
    pub blocks: Vec<BlockRecord>,
    pub fluid_diagnostics: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FcltVerifyReport {
    pub header: Header,
    pub decision_rule: String,
    pub n: u64,
    pub replicates: usize,
    pub limit: LimitRecord,
    /// Probability of at least one miss among the judged cells if all were independent.
    pub family_miss_probability: f64,
    pub cells: Vec<VarianceCell>,
    pub lag_covariances: Vec<LagCell>,
    pub degenerate_cells: usize,
    pub failed_cells: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub header: Header,
    pub files: Vec<String>,
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limit: Option<LimitRecord>,
}
