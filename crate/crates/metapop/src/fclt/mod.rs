//! Gaussian fluctuation limit around the fluid path.
//!
//! The drivers are Gaussian processes with analytic covariances. Mutually
//! independent groups are factorized once and sampled per path; each path then
//! solves a linear Volterra system whose infection term is the derivative of the
//! infection functional along the fluid trajectory.

mod cohort;
mod drivers;
mod linearization;
mod solve;

pub use drivers::{
    min_eigenvalue, sample_drivers, BlockInfo, Driver, DriverFamily, DriverPanel, DriverPath,
    DriverSampler, InfectionNoise, MigrationNoise, NoiseModel, Block,
};
pub use linearization::{check_fclt_admissible, infection_map, linearization, LinearizationField};
pub use solve::{
    solve_fluctuations, FcltOptions, FluctuationEnsemble, FluctuationSystem, InitialFluctuation,
    PathSolution, MAX_CONDITION, UPSILON,
};
