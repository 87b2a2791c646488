//! Mean-variance portfolios and the rebalancing backtest that compares covariance
//! estimators by realised volatility.

mod backtest;
mod optimize;

pub use backtest::{
    draw_constellations, portfolio_returns, run_backtest, run_backtest_with, trailing_mean,
    BacktestConfig, BacktestRecord, BacktestReport, CovarianceEstimator, Diagnostic, RebalanceMode,
    SeriesPoint, Strategy, SummaryRow,
};
pub use optimize::{
    gamma_for_target, minimum_variance_portfolio, naive_portfolio, realized_return,
    realized_volatility, target_return_portfolio, PortfolioWeights, SpdSolver,
};
