//! Deterioration and inspection models.
//!
//! Transition tables are regenerated from the fatigue crack growth law by
//! Monte Carlo simulation and stored in a small binary container (see
//! [`io`]).

pub mod discretization;
pub mod fatigue;
pub mod inspection;
pub mod io;
pub mod transition;

pub use discretization::Discretization;
pub use fatigue::{crack_growth_step, expected_stress_owf, FatigueParams, StressModel, FAILED_CRACK};
pub use inspection::{pod_eddy_current, pod_exponential, InspectionModel, Outcome, PodCurve};
pub use io::{decode_model, encode_model, load_model, save_model};
pub use transition::{
    generate_component, generate_transition_model, ComponentKind, ModelMetadata, TransitionModel, DEFAULT_SAMPLES,
    MIN_SAMPLES,
};
