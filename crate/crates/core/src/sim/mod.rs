//! Monte-Carlo simulation of noisy diffusion LMS.

pub mod data;
pub mod monte_carlo;
pub mod rng;
pub mod step;

pub use data::{perturb_exchange, sample_data, DataModel, IterationData, LinkStreams, Payloads};
pub use monte_carlo::{
    run_monte_carlo, steady_state_window, to_db, ComplexEstimate, LearningCurve, SimOptions,
    WindowStats, DIVERGENCE_THRESHOLD,
};
pub use step::{diffusion_step, DiffusionState, StepKind, StepPlan};
