use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::optimize::{
    minimum_variance_portfolio, naive_portfolio, realized_return, realized_volatility,
    target_return_portfolio, PortfolioWeights,
};
use crate::error::{Error, Result};
use crate::estimators::{sample_covariance_of, CorrelationFlavor};
use crate::matrix::CovarianceMatrix;
use crate::panel::{ReturnPanel, Window};
use crate::similarity::{
    exponential_covariance_of, similarity_weights, weighted_covariance_of, ProbeSeries,
    WeightScheme,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Mvp,
    Trp,
    Naive,
}

impl Strategy {
    pub fn label(&self) -> &'static str {
        match self {
            Strategy::Mvp => "mvp",
            Strategy::Trp => "trp",
            Strategy::Naive => "naive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovarianceEstimator {
    Similarity,
    Unweighted,
    Exponential,
}

impl CovarianceEstimator {
    pub fn label(&self) -> &'static str {
        match self {
            CovarianceEstimator::Similarity => "similarity",
            CovarianceEstimator::Unweighted => "unweighted",
            CovarianceEstimator::Exponential => "exponential",
        }
    }
}

/// How rebalance dates are spaced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum RebalanceMode {
    /// Every `step` rows; evaluation windows of different dates may overlap.
    Rolling { step: usize },
    /// Back-to-back, non-overlapping evaluation windows per horizon.
    Disjoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestConfig {
    pub strategies: Vec<Strategy>,
    pub estimators: Vec<CovarianceEstimator>,
    pub probe_window: usize,
    pub top_s: usize,
    pub flavor: CorrelationFlavor,
    pub unweighted_window: usize,
    pub lambda: f64,
    pub exponential_window: usize,
    pub mu_window: usize,
    /// Added to the mean expected return to form the target of the target-return portfolio.
    pub target_margin: f64,
    pub horizons: Vec<usize>,
    pub constellations: usize,
    pub constellation_size: usize,
    pub rebalance: RebalanceMode,
    /// First rebalance row; defaults to the earliest row every estimator can serve.
    pub first_row: Option<usize>,
    /// Last rebalance row; defaults to the last row leaving room for the longest horizon.
    pub last_row: Option<usize>,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        Self {
            strategies: vec![Strategy::Mvp, Strategy::Trp, Strategy::Naive],
            estimators: vec![
                CovarianceEstimator::Similarity,
                CovarianceEstimator::Unweighted,
            ],
            probe_window: 50,
            top_s: 300,
            flavor: CorrelationFlavor::Pearson,
            unweighted_window: 300,
            lambda: 0.94,
            exponential_window: 300,
            mu_window: 14,
            target_margin: 0.05,
            horizons: vec![14, 28, 56],
            constellations: 10,
            constellation_size: 100,
            rebalance: RebalanceMode::Rolling { step: 1 },
            first_row: None,
            last_row: None,
        }
    }
}

impl BacktestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.strategies.is_empty() {
            return Err(Error::InvalidParameter("no strategies selected".into()));
        }
        let optimised = self.strategies.iter().any(|s| *s != Strategy::Naive);
        if optimised && self.estimators.is_empty() {
            return Err(Error::InvalidParameter(
                "optimised strategies need at least one estimator".into(),
            ));
        }
        if self.horizons.is_empty() || self.horizons.contains(&0) {
            return Err(Error::InvalidParameter("horizons must be positive".into()));
        }
        if self.mu_window < 2 {
            return Err(Error::InvalidParameter(
                "mu_window must be at least 2".into(),
            ));
        }
        if self.probe_window < 2 || self.unweighted_window < 2 || self.exponential_window < 2 {
            return Err(Error::InvalidWindow(
                "estimator windows must span at least 2 returns".into(),
            ));
        }
        if self.top_s == 0 {
            return Err(Error::InvalidParameter("top_s must be positive".into()));
        }
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda = {} must lie in (0, 1)",
                self.lambda
            )));
        }
        if !self.target_margin.is_finite() {
            return Err(Error::InvalidParameter(
                "target_margin must be finite".into(),
            ));
        }
        if self.constellations == 0 || self.constellation_size == 0 {
            return Err(Error::InvalidParameter(
                "need at least one constellation of at least one asset".into(),
            ));
        }
        if let RebalanceMode::Rolling { step: 0 } = self.rebalance {
            return Err(Error::InvalidParameter(
                "rebalance step must be positive".into(),
            ));
        }
        Ok(())
    }

    fn uses(&self, e: CovarianceEstimator) -> bool {
        self.estimators.contains(&e) && self.strategies.iter().any(|s| *s != Strategy::Naive)
    }

    /// Earliest row at which every configured estimator has enough history.
    pub fn min_row(&self) -> usize {
        let mut need = self.mu_window;
        if self.uses(CovarianceEstimator::Unweighted) {
            need = need.max(self.unweighted_window);
        }
        if self.uses(CovarianceEstimator::Exponential) {
            need = need.max(self.exponential_window);
        }
        if self.uses(CovarianceEstimator::Similarity) {
            // the reference probe needs more than L earlier probes and at least s candidates
            need = need.max(self.probe_window + self.top_s.max(self.probe_window + 1));
        }
        need - 1
    }

    fn max_horizon(&self) -> usize {
        self.horizons.iter().copied().max().unwrap_or(0)
    }

    /// Rebalance rows for each horizon.
    pub fn schedule(&self, n_rows: usize) -> Result<BTreeMap<usize, Vec<usize>>> {
        let first = self.first_row.unwrap_or_else(|| self.min_row());
        if first < self.min_row() {
            return Err(Error::InvalidParameter(format!(
                "first rebalance row {first} precedes the minimum lookback row {}",
                self.min_row()
            )));
        }
        let mut out = BTreeMap::new();
        for &h in &self.horizons {
            let limit = match self.rebalance {
                RebalanceMode::Rolling { .. } => n_rows.checked_sub(1 + self.max_horizon()),
                RebalanceMode::Disjoint => n_rows.checked_sub(1 + h),
            };
            let last = match (limit, self.last_row) {
                (Some(l), Some(user)) => Some(l.min(user)),
                (l, _) => l,
            };
            let step = match self.rebalance {
                RebalanceMode::Rolling { step } => step,
                RebalanceMode::Disjoint => h,
            };
            let rows: Vec<usize> = match last {
                Some(last) if last >= first => (first..=last).step_by(step).collect(),
                _ => Vec::new(),
            };
            if rows.is_empty() {
                return Err(Error::InvalidParameter(format!(
                    "panel of {n_rows} rows leaves no rebalance date for horizon {h} (first row {first})"
                )));
            }
            out.insert(h, rows);
        }
        Ok(out)
    }
}

/// Result for one constellation, date, strategy, estimator and horizon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BacktestRecord {
    pub time: i64,
    pub row: usize,
    pub constellation: usize,
    pub strategy: Strategy,
    /// `None` for the estimator-free naive strategy.
    pub estimator: Option<CovarianceEstimator>,
    pub horizon: usize,
    pub realized_volatility: f64,
    pub realized_return: f64,
    pub weights: PortfolioWeights,
}

/// A skipped computation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub time: i64,
    pub constellation: Option<usize>,
    pub strategy: Option<Strategy>,
    pub estimator: Option<CovarianceEstimator>,
    pub horizon: Option<usize>,
    pub message: String,
}

/// Average over constellations at one date.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesPoint {
    pub time: i64,
    pub strategy: Strategy,
    pub estimator: Option<CovarianceEstimator>,
    pub horizon: usize,
    pub realized_volatility: f64,
    pub realized_return: f64,
    pub count: usize,
}

/// Average over dates and constellations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub strategy: Strategy,
    pub estimator: Option<CovarianceEstimator>,
    pub horizon: usize,
    pub realized_volatility: f64,
    pub realized_return: f64,
    pub count: usize,
    pub regularized: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BacktestReport {
    pub config: BacktestConfig,
    pub seed: u64,
    /// Asset indices of each constellation, in panel order.
    pub constellations: Vec<Vec<usize>>,
    pub records: Vec<BacktestRecord>,
    pub series: Vec<SeriesPoint>,
    pub summary: Vec<SummaryRow>,
    pub diagnostics: Vec<Diagnostic>,
}

impl BacktestReport {
    pub fn summary_for(
        &self,
        strategy: Strategy,
        estimator: Option<CovarianceEstimator>,
        horizon: usize,
    ) -> Option<&SummaryRow> {
        self.summary
            .iter()
            .find(|r| r.strategy == strategy && r.estimator == estimator && r.horizon == horizon)
    }
}

/// Draws `count` sorted subsets of `size` distinct assets out of `n`.
pub fn draw_constellations(
    n: usize,
    count: usize,
    size: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    if size > n {
        return Err(Error::InvalidParameter(format!(
            "constellation size {size} exceeds the {n} available assets"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| {
            let mut idx = rand::seq::index::sample(&mut rng, n, size).into_vec();
            idx.sort_unstable();
            idx
        })
        .collect())
}

/// Daily returns of a fixed-weight portfolio over `rows`.
pub fn portfolio_returns(
    panel: &ReturnPanel,
    rows: std::ops::RangeInclusive<usize>,
    assets: &[usize],
    w: &[f64],
) -> Vec<f64> {
    rows.map(|r| {
        let row = panel.row(r);
        assets.iter().zip(w).map(|(&a, wi)| wi * row[a]).sum()
    })
    .collect()
}

/// Trailing mean daily return of each asset over `window` rows ending at `last`.
pub fn trailing_mean(
    panel: &ReturnPanel,
    last: usize,
    window: usize,
    assets: &[usize],
) -> Result<Vec<f64>> {
    let w = Window::trailing(last, window)?;
    let mut mean = vec![0.0; assets.len()];
    for r in w.rows() {
        let row = panel.row(r);
        for (m, &a) in mean.iter_mut().zip(assets) {
            *m += row[a];
        }
    }
    Ok(mean.into_iter().map(|m| m / window as f64).collect())
}

struct DateContext<'a> {
    panel: &'a ReturnPanel,
    config: &'a BacktestConfig,
    probes: Option<&'a ProbeSeries>,
}

struct DateOutput {
    records: Vec<BacktestRecord>,
    diagnostics: Vec<Diagnostic>,
}

impl DateContext<'_> {
    fn covariance(
        &self,
        estimator: CovarianceEstimator,
        row: usize,
        assets: &[usize],
        sim: Option<&WeightScheme>,
    ) -> Result<CovarianceMatrix> {
        let c = self.config;
        match estimator {
            CovarianceEstimator::Unweighted => sample_covariance_of(
                self.panel,
                Window::trailing(row, c.unweighted_window)?,
                assets,
            ),
            CovarianceEstimator::Exponential => {
                exponential_covariance_of(self.panel, row, c.exponential_window, c.lambda, assets)
            }
            CovarianceEstimator::Similarity => {
                let probes = self
                    .probes
                    .expect("probes built when the similarity estimator is used");
                weighted_covariance_of(probes, sim.expect("similarity weights computed"), assets)
            }
        }
    }

    fn run(&self, row: usize, horizons: &[usize], constellations: &[Vec<usize>]) -> DateOutput {
        let c = self.config;
        let time = self.panel.times()[row];
        let mut out = DateOutput {
            records: Vec::new(),
            diagnostics: Vec::new(),
        };
        let diag = |constellation, strategy, estimator, horizon, e: Error| Diagnostic {
            time,
            constellation,
            strategy,
            estimator,
            horizon,
            message: e.to_string(),
        };
        let mut sim = None;
        if c.uses(CovarianceEstimator::Similarity) {
            let probes = self
                .probes
                .expect("probes built when the similarity estimator is used");
            match similarity_weights(probes, time, Some(c.top_s)) {
                Ok(w) => sim = Some(w),
                Err(e) => out.diagnostics.push(diag(
                    None,
                    None,
                    Some(CovarianceEstimator::Similarity),
                    None,
                    e,
                )),
            }
        }
        for (ci, assets) in constellations.iter().enumerate() {
            let mu_daily = match trailing_mean(self.panel, row, c.mu_window, assets) {
                Ok(m) => m,
                Err(e) => {
                    out.diagnostics.push(diag(Some(ci), None, None, None, e));
                    continue;
                }
            };
            // (strategy, estimator, horizon-specific?) -> weights
            let mut plans: Vec<(
                Strategy,
                Option<CovarianceEstimator>,
                usize,
                PortfolioWeights,
            )> = Vec::new();
            for &strategy in &c.strategies {
                if strategy == Strategy::Naive {
                    let w = naive_portfolio(assets.len()).expect("constellations are non-empty");
                    for &h in horizons {
                        plans.push((strategy, None, h, w.clone()));
                    }
                    continue;
                }
                for &estimator in &c.estimators {
                    if estimator == CovarianceEstimator::Similarity && sim.is_none() {
                        continue;
                    }
                    let sigma = match self.covariance(estimator, row, assets, sim.as_ref()) {
                        Ok(s) => s,
                        Err(e) => {
                            out.diagnostics.push(diag(
                                Some(ci),
                                Some(strategy),
                                Some(estimator),
                                None,
                                e,
                            ));
                            continue;
                        }
                    };
                    match strategy {
                        Strategy::Mvp => match minimum_variance_portfolio(&sigma) {
                            Ok(w) => horizons.iter().for_each(|&h| {
                                plans.push((strategy, Some(estimator), h, w.clone()))
                            }),
                            Err(e) => out.diagnostics.push(diag(
                                Some(ci),
                                Some(strategy),
                                Some(estimator),
                                None,
                                e,
                            )),
                        },
                        Strategy::Trp => {
                            for &h in horizons {
                                let mu: Vec<f64> = mu_daily.iter().map(|m| m * h as f64).collect();
                                let target =
                                    mu.iter().sum::<f64>() / mu.len() as f64 + c.target_margin;
                                match target_return_portfolio(&sigma, &mu, target) {
                                    Ok(w) => plans.push((strategy, Some(estimator), h, w)),
                                    Err(e) => out.diagnostics.push(diag(
                                        Some(ci),
                                        Some(strategy),
                                        Some(estimator),
                                        Some(h),
                                        e,
                                    )),
                                }
                            }
                        }
                        Strategy::Naive => unreachable!(),
                    }
                }
            }
            for (strategy, estimator, h, weights) in plans {
                let returns =
                    portfolio_returns(self.panel, row + 1..=row + h, assets, &weights.weights);
                out.records.push(BacktestRecord {
                    time,
                    row,
                    constellation: ci,
                    strategy,
                    estimator,
                    horizon: h,
                    realized_volatility: realized_volatility(&returns),
                    realized_return: realized_return(&returns),
                    weights,
                });
            }
        }
        out
    }
}

/// Runs the rebalancing backtest.
///
/// At every rebalance row each constellation gets a covariance estimate per
/// estimator, weights per strategy, and is held with fixed weights over each
/// horizon. Similarity weights come from probes of the full panel and are shared by
/// all constellations. Failures are recorded as diagnostics and skipped.
pub fn run_backtest(
    panel: &ReturnPanel,
    config: &BacktestConfig,
    seed: u64,
) -> Result<BacktestReport> {
    config.validate()?;
    let constellations = draw_constellations(
        panel.n_assets(),
        config.constellations,
        config.constellation_size,
        seed,
    )?;
    run_backtest_with(panel, config, seed, constellations)
}

/// As [`run_backtest`] with caller-supplied constellations.
pub fn run_backtest_with(
    panel: &ReturnPanel,
    config: &BacktestConfig,
    seed: u64,
    constellations: Vec<Vec<usize>>,
) -> Result<BacktestReport> {
    config.validate()?;
    if let Some(bad) = constellations
        .iter()
        .flatten()
        .find(|&&a| a >= panel.n_assets())
    {
        return Err(Error::InvalidInput(format!(
            "constellation asset {bad} out of range"
        )));
    }
    let schedule = config.schedule(panel.len())?;
    let probes = if config.uses(CovarianceEstimator::Similarity) {
        Some(ProbeSeries::build(
            panel,
            config.probe_window,
            config.flavor,
        )?)
    } else {
        None
    };
    let mut by_row: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (&h, rows) in &schedule {
        for &r in rows {
            by_row.entry(r).or_default().push(h);
        }
    }
    let ctx = DateContext {
        panel,
        config,
        probes: probes.as_ref(),
    };
    let dates: Vec<(usize, Vec<usize>)> = by_row.into_iter().collect();
    let outputs: Vec<DateOutput> = dates
        .par_iter()
        .map(|(row, horizons)| ctx.run(*row, horizons, &constellations))
        .collect();
    let mut records = Vec::new();
    let mut diagnostics = Vec::new();
    for o in outputs {
        records.extend(o.records);
        diagnostics.extend(o.diagnostics);
    }
    let series = series_of(&records);
    let summary = summarise(&records);
    Ok(BacktestReport {
        config: config.clone(),
        seed,
        constellations,
        records,
        series,
        summary,
        diagnostics,
    })
}

type Key = (Strategy, Option<CovarianceEstimator>, usize);

fn series_of(records: &[BacktestRecord]) -> Vec<SeriesPoint> {
    let mut acc: BTreeMap<(Key, i64), (f64, f64, usize)> = BTreeMap::new();
    for r in records {
        let e = acc
            .entry(((r.strategy, r.estimator, r.horizon), r.time))
            .or_insert((0.0, 0.0, 0));
        e.0 += r.realized_volatility;
        e.1 += r.realized_return;
        e.2 += 1;
    }
    acc.into_iter()
        .map(
            |(((strategy, estimator, horizon), time), (rv, ret, n))| SeriesPoint {
                time,
                strategy,
                estimator,
                horizon,
                realized_volatility: rv / n as f64,
                realized_return: ret / n as f64,
                count: n,
            },
        )
        .collect()
}

fn summarise(records: &[BacktestRecord]) -> Vec<SummaryRow> {
    let mut acc: BTreeMap<Key, (f64, f64, usize, usize)> = BTreeMap::new();
    for r in records {
        let e = acc
            .entry((r.strategy, r.estimator, r.horizon))
            .or_insert((0.0, 0.0, 0, 0));
        e.0 += r.realized_volatility;
        e.1 += r.realized_return;
        e.2 += 1;
        e.3 += r.weights.regularized as usize;
    }
    acc.into_iter()
        .map(
            |((strategy, estimator, horizon), (rv, ret, n, reg))| SummaryRow {
                strategy,
                estimator,
                horizon,
                realized_volatility: rv / n as f64,
                realized_return: ret / n as f64,
                count: n,
                regularized: reg,
            },
        )
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::{simulate_returns, ScenarioSpec};

    fn small_config() -> BacktestConfig {
        BacktestConfig {
            estimators: vec![
                CovarianceEstimator::Similarity,
                CovarianceEstimator::Unweighted,
                CovarianceEstimator::Exponential,
            ],
            probe_window: 20,
            top_s: 40,
            unweighted_window: 60,
            exponential_window: 60,
            horizons: vec![5, 10],
            constellations: 3,
            constellation_size: 6,
            rebalance: RebalanceMode::Rolling { step: 7 },
            ..BacktestConfig::default()
        }
    }

    fn market(days: usize, seed: u64) -> ReturnPanel {
        let vols: Vec<f64> = (0..16).map(|i| 0.01 * (1.0 + 0.1 * i as f64)).collect();
        simulate_returns(
            &ScenarioSpec::scenario2(days)
                .with_volatilities(vols)
                .unwrap(),
            seed,
        )
        .unwrap()
    }

    #[test]
    fn schedule_respects_lookback_and_horizon() {
        let c = small_config();
        assert_eq!(c.min_row(), 60 - 1);
        let s = c.schedule(100).unwrap();
        assert_eq!(s[&5], vec![59, 66, 73, 80, 87]);
        assert_eq!(s[&10], s[&5]);
        let d = BacktestConfig {
            rebalance: RebalanceMode::Disjoint,
            ..c.clone()
        };
        let s = d.schedule(100).unwrap();
        assert_eq!(s[&5], (59..=94).step_by(5).collect::<Vec<_>>());
        assert_eq!(s[&10], vec![59, 69, 79, 89]);
        assert!(c.schedule(60).is_err());
        assert!(BacktestConfig {
            first_row: Some(10),
            ..c
        }
        .schedule(100)
        .is_err());
    }

    #[test]
    fn deterministic_and_complete() {
        let p = market(200, 3);
        let c = small_config();
        let a = run_backtest(&p, &c, 8).unwrap();
        let b = run_backtest(&p, &c, 8).unwrap();
        assert_eq!(a, b);
        assert!(a.diagnostics.is_empty(), "{:?}", a.diagnostics);
        let dates = c.schedule(200).unwrap()[&5].len();
        // per constellation and date: 3 estimators x 2 optimised strategies + naive, for each horizon
        assert_eq!(a.records.len(), dates * 3 * 7 * 2);
        for r in &a.records {
            assert!(r.realized_volatility >= 0.0);
            assert!((r.weights.sum() - 1.0).abs() < 1e-10);
        }
        assert_eq!(a.summary.len(), 7 * 2);
    }

    #[test]
    fn naive_matches_equal_weight_series() {
        let p = market(200, 5);
        let c = BacktestConfig {
            strategies: vec![Strategy::Naive],
            ..small_config()
        };
        let report = run_backtest(&p, &c, 1).unwrap();
        for r in &report.records {
            assert_eq!(r.weights.weights, vec![1.0 / 6.0; 6]);
            let assets = &report.constellations[r.constellation];
            let ew: Vec<f64> = (r.row + 1..=r.row + r.horizon)
                .map(|t| assets.iter().map(|&a| p.value(t, a)).sum::<f64>() / 6.0)
                .collect();
            let rv: f64 = ew.iter().map(|x| x * x).sum();
            assert!((r.realized_volatility - rv).abs() < 1e-15);
        }
    }

    #[test]
    fn one_date_two_asset_walkthrough() {
        let rows = vec![
            vec![0.01, 0.02],
            vec![-0.02, 0.01],
            vec![0.03, -0.01],
            vec![0.00, 0.02],
            vec![0.01, 0.00],
            vec![-0.01, 0.03],
        ];
        let p = ReturnPanel::from_rows(vec!["A".into(), "B".into()], &rows).unwrap();
        let c = BacktestConfig {
            strategies: vec![Strategy::Mvp, Strategy::Trp],
            estimators: vec![CovarianceEstimator::Unweighted],
            unweighted_window: 4,
            mu_window: 4,
            target_margin: 0.01,
            horizons: vec![2],
            constellations: 1,
            constellation_size: 2,
            rebalance: RebalanceMode::Disjoint,
            last_row: Some(3),
            ..BacktestConfig::default()
        };
        let report = run_backtest(&p, &c, 0).unwrap();
        assert_eq!(report.records.len(), 2);

        // hand computation on rows 0..=3
        let x = [0.01, -0.02, 0.03, 0.0];
        let y = [0.02, 0.01, -0.01, 0.02];
        let mx = x.iter().sum::<f64>() / 4.0;
        let my = y.iter().sum::<f64>() / 4.0;
        let sxx = x.iter().map(|v| (v - mx).powi(2)).sum::<f64>() / 3.0;
        let syy = y.iter().map(|v| (v - my).powi(2)).sum::<f64>() / 3.0;
        let sxy = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (a - mx) * (b - my))
            .sum::<f64>()
            / 3.0;
        let w1 = (syy - sxy) / (sxx + syy - 2.0 * sxy);
        let mvp = &report
            .records
            .iter()
            .find(|r| r.strategy == Strategy::Mvp)
            .unwrap();
        assert_eq!(mvp.row, 3);
        assert!((mvp.weights.weights[0] - w1).abs() < 1e-12);
        let r4 = w1 * 0.01 + (1.0 - w1) * 0.0;
        let r5 = w1 * -0.01 + (1.0 - w1) * 0.03;
        assert!((mvp.realized_volatility - (r4 * r4 + r5 * r5)).abs() < 1e-15);
        assert!((mvp.realized_return - ((1.0 + r4) * (1.0 + r5) - 1.0)).abs() < 1e-15);

        // two assets: the budget and target constraints alone pin the weights
        let mu = [2.0 * mx, 2.0 * my];
        let target = (mu[0] + mu[1]) / 2.0 + 0.01;
        let t1 = (target - mu[1]) / (mu[0] - mu[1]);
        let trp = &report
            .records
            .iter()
            .find(|r| r.strategy == Strategy::Trp)
            .unwrap();
        assert!((trp.weights.weights[0] - t1).abs() < 1e-10);
    }

    #[test]
    fn errors_become_diagnostics() {
        // three constant assets give a zero covariance that no ridge can rescue
        let mut p = market(200, 2);
        let n = p.n_assets();
        let mut values = p.values().to_vec();
        for r in 0..p.len() {
            values[r * n..r * n + 3].fill(0.0);
        }
        p = ReturnPanel::new(p.times().to_vec(), p.assets().to_vec(), values).unwrap();
        let c = BacktestConfig {
            strategies: vec![Strategy::Mvp, Strategy::Naive],
            estimators: vec![CovarianceEstimator::Unweighted],
            ..small_config()
        };
        let report = run_backtest_with(&p, &c, 0, vec![vec![0, 1, 2], vec![3, 4, 5]]).unwrap();
        assert!(!report.diagnostics.is_empty());
        assert!(report
            .diagnostics
            .iter()
            .all(|d| d.constellation == Some(0)));
        assert!(report
            .records
            .iter()
            .any(|r| r.constellation == 0 && r.strategy == Strategy::Naive));
        assert!(report
            .records
            .iter()
            .any(|r| r.constellation == 1 && r.strategy == Strategy::Mvp));

        // a single constant asset is rescued by the ridge and flagged
        let report = run_backtest_with(&p, &c, 0, vec![vec![0, 4, 5]]).unwrap();
        assert!(report.diagnostics.is_empty());
        let mvp: Vec<_> = report
            .records
            .iter()
            .filter(|r| r.strategy == Strategy::Mvp)
            .collect();
        assert!(!mvp.is_empty() && mvp.iter().all(|r| r.weights.regularized));
        assert!(report.summary.iter().any(|s| s.regularized > 0));
    }

    #[test]
    fn constellations_are_distinct_sorted_subsets() {
        let c = draw_constellations(30, 4, 10, 9).unwrap();
        assert_eq!(c, draw_constellations(30, 4, 10, 9).unwrap());
        for s in &c {
            assert_eq!(s.len(), 10);
            assert!(s.windows(2).all(|p| p[0] < p[1]));
            assert!(*s.last().unwrap() < 30);
        }
        assert!(draw_constellations(5, 1, 6, 0).is_err());
    }
}
