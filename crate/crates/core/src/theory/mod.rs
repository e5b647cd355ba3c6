//! Closed-form mean and mean-square analysis.

pub mod moments;
pub mod norms;
pub mod report;
pub mod steady;

pub use moments::{
    assemble_mean_dynamics, assemble_noise_moments, bias, neighborhood_covariances, numerator,
    numerator_without_sharing, regressor_covariance, spectral_bound, step_size_bounds, MeanDynamics,
    NoiseMoments, StepSizeBound,
};
pub use norms::{
    block_max_norm_matrix, block_max_norm_vector, stability_report, BlockNorm, NormMethod,
    StabilityReport,
};
pub use report::{analyze, TheoryReport};
pub use steady::{
    network_emse, network_msd, series_emse, series_metric, series_msd, standard_weightings,
    steady_state_metric, tracking_metrics, SolveMethod, SteadyStateSolver,
};
