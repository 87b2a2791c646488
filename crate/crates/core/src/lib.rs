//! Similarity-weighted estimation of correlation and covariance matrices.
//!
//! Probe correlation matrices estimated on short rolling windows are compared by the
//! spectral norm of their difference. Past probes that resemble the present market
//! structure receive high weight in the estimate; dissimilar history is suppressed.
//!
//! The crate also carries a Monte Carlo scenario harness for validating the
//! estimators against known correlation paths, and a mean-variance portfolio
//! backtester that compares them by realised volatility.

pub mod error;
pub mod estimators;
pub mod matrix;
pub mod panel;
pub mod portfolio;
pub mod similarity;
pub mod simulation;

pub use error::{Error, Result};
pub use estimators::{
    mean_pairwise_correlation, pearson_correlation, sample_covariance, spearman_correlation,
    CorrelationFlavor,
};
pub use matrix::{spectral_norm, sym_eigenvalues, CorrelationMatrix, CovarianceMatrix, SymMatrix};
pub use panel::{ReturnPanel, Window};
pub use similarity::{
    exponential_correlation, exponential_weights, restrict_top_s, similarity, similarity_matrix,
    similarity_profile, similarity_weights, weight_scheme, weighted_correlation,
    weighted_covariance, ProbeSeries, SimilarityProfile, WeightScheme,
};
