//! Synthetic markets with known correlation paths and the Monte Carlo harness that
//! scores the estimators against them.

mod scenario;
mod study;

pub use scenario::{
    theoretical_similarity_matrix, true_correlation, BlockParameters, ParameterGroup, ScenarioKind,
    ScenarioSpec,
};
pub use study::{
    evaluate_panel, mean_and_std, repetition_rng, run_study, simulate_returns, EstimatorKind,
    EstimatorSettings, GroupEstimate, RepetitionRecord, SimulationReport, StudyConfig, StudyRow,
};
