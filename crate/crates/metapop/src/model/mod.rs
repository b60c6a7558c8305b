//! Model parameters, duration laws, integer state and the infection functional.

mod joint;
mod laws;
mod spec;
mod state;

pub use joint::{JointDurationLaw, JointMode, LawSet};
pub use laws::DurationLaw;
pub use spec::{
    upsilon_bound, validate_spec, ModelSpec, RateSchedule, Variant, E, I, R, S, SLOT_NAMES,
};
pub use state::{upsilon, upsilon_values, PopulationState};
