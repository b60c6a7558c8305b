//! Exact stochastic simulation of the N-individual model and replicate ensembles.

mod engine;
mod ensemble;
mod flow;
mod log;
mod panel;

pub use engine::{simulate, SimOptions, SimOutput};
pub use ensemble::{replicate_seed, run_replicates, Ensemble, EnsembleStats, RunningStats, INFECTIONS};
pub use flow::{conditional_flow_estimate, counted_flows, FlowPair};
pub use log::{Event, EventKind, EventLog};
pub use panel::TrajectoryPanel;
