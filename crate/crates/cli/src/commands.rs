//! Command drivers. Each writes its files plus `manifest.json` and returns an
//! [`Outcome`] whose `error_records` decides the exit status.

use std::path::Path;

use serde::Serialize;
use simweight::portfolio::{
    run_backtest, BacktestConfig, BacktestReport, CovarianceEstimator, RebalanceMode,
};
use simweight::simulation::{
    run_study, simulate_returns, EstimatorSettings, ScenarioKind, ScenarioSpec, StudyConfig,
};
use simweight::{
    similarity_matrix, similarity_profile, weight_scheme, CorrelationFlavor, ProbeSeries,
    ReturnPanel,
};

use crate::config::RunConfig;
use crate::ingest::{ingest_returns, time_to_date, write_returns, IngestOptions};
use crate::output::{fixed4, num, render_text_table, sci4, OutputDir};
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// Files written, relative to the output directory.
    pub files: Vec<String>,
    /// Skipped computations; a nonzero count means a nonzero exit status.
    pub error_records: usize,
    /// Human-readable report for the terminal.
    pub text: String,
}

fn flavor(cfg: &RunConfig) -> CorrelationFlavor {
    if RunConfig::flag(cfg.spearman) {
        CorrelationFlavor::Spearman
    } else {
        CorrelationFlavor::Pearson
    }
}

fn date_label(t: i64) -> String {
    time_to_date(t).map_or_else(|| t.to_string(), |d| d.format("%Y-%m-%d").to_string())
}

fn scenario_from(cfg: &RunConfig, default_horizon: usize) -> Result<ScenarioSpec, CliError> {
    let mut spec = ScenarioSpec::builtin(
        cfg.scenario.unwrap_or(1),
        cfg.horizon.unwrap_or(default_horizon),
    )?;
    if let Some(len) = cfg.regime_length {
        match &mut spec.kind {
            ScenarioKind::RegimeSwitching { regime_length, .. } => *regime_length = len,
            _ => {
                return Err(CliError::Config(
                    "regime_length applies to scenario 2 only".into(),
                ))
            }
        }
    }
    if let Some(n) = cfg.n_assets {
        spec = spec.with_assets(n)?;
    }
    if let Some(v) = &cfg.volatilities {
        spec = spec.with_volatilities(v.clone())?;
    }
    spec.validate()?;
    Ok(spec)
}

fn load_panel(cfg: &RunConfig) -> Result<(ReturnPanel, usize), CliError> {
    let input = cfg
        .input
        .as_ref()
        .ok_or_else(|| CliError::Config("an input table is required".into()))?;
    let options = IngestOptions {
        prices: RunConfig::flag(cfg.prices),
        forward_fill: RunConfig::flag(cfg.forward_fill),
    };
    let ingested = ingest_returns(input, options)?;
    Ok((ingested.panel, ingested.filled))
}

#[derive(Serialize)]
struct SimulationSettings<'a> {
    scenario: &'a ScenarioSpec,
    study: &'a StudyConfig,
    raw: bool,
}

/// Runs the Monte Carlo study and writes `table.csv`, `table.txt`, `failures.csv`
/// and, with `raw`, `repetitions.json`.
pub fn run_simulation_command(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let eval_days = cfg
        .eval_days
        .clone()
        .unwrap_or_else(|| vec![1000, 2500, 5000]);
    let max_day = eval_days.iter().copied().max().unwrap_or(0);
    let spec = scenario_from(cfg, max_day)?;
    let defaults = EstimatorSettings::default();
    let estimators = EstimatorSettings {
        probe_window: cfg.probe_window.unwrap_or(defaults.probe_window),
        top_s: cfg.top_s.unwrap_or(defaults.top_s),
        unweighted_window: cfg.unweighted_window.unwrap_or(defaults.unweighted_window),
        lambda: cfg.lambda.unwrap_or(defaults.lambda),
        exponential_window: cfg
            .exponential_window
            .unwrap_or(defaults.exponential_window),
        flavor: flavor(cfg),
    };
    let study = StudyConfig {
        eval_days,
        repetitions: cfg.repetitions.unwrap_or(400),
        seed: cfg.seed(),
        estimators,
    };
    let report = run_study(&spec, &study)?;

    let mut dir = OutputDir::create(out)?;
    let header = [
        "day",
        "parameter",
        "true_value",
        "estimator",
        "mean",
        "std_dev",
        "count",
    ];
    let machine: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.day.to_string(),
                r.group.label().into(),
                num(r.true_value),
                r.estimator.label().into(),
                num(r.mean),
                num(r.std_dev),
                r.count.to_string(),
            ]
        })
        .collect();
    dir.table("table.csv", &header, &machine)?;
    let human: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.day.to_string(),
                r.group.label().into(),
                fixed4(r.true_value),
                r.estimator.label().into(),
                fixed4(r.mean),
                fixed4(r.std_dev),
            ]
        })
        .collect();
    let text = render_text_table(
        &["day", "parameter", "rho", "estimator", "mean", "std"],
        &human,
    );
    dir.write("table.txt", text.as_bytes())?;
    let failures: Vec<Vec<String>> = report
        .failures()
        .map(|f| {
            vec![
                f.repetition.to_string(),
                f.error.clone().unwrap_or_default(),
            ]
        })
        .collect();
    dir.table("failures.csv", &["repetition", "message"], &failures)?;
    let raw = RunConfig::flag(cfg.raw);
    if raw {
        dir.json("repetitions.json", &report.repetitions)?;
    }
    let settings = SimulationSettings {
        scenario: &spec,
        study: &study,
        raw,
    };
    let files = dir.manifest("simulate", study.seed, &settings)?;
    Ok(Outcome {
        files,
        error_records: failures.len(),
        text,
    })
}

#[derive(Serialize)]
struct BacktestSettings<'a> {
    input: String,
    prices: bool,
    forward_fill: bool,
    filled_cells: usize,
    rows: usize,
    assets: usize,
    backtest: &'a BacktestConfig,
    raw: bool,
}

fn backtest_config(cfg: &RunConfig) -> Result<BacktestConfig, CliError> {
    let d = BacktestConfig::default();
    let rebalance = match cfg.rebalance.as_deref() {
        None | Some("rolling") => RebalanceMode::Rolling {
            step: cfg.rebalance_step.unwrap_or(1),
        },
        Some("disjoint") => {
            if cfg.rebalance_step.is_some() {
                return Err(CliError::Config(
                    "rebalance_step applies to rolling rebalancing only".into(),
                ));
            }
            RebalanceMode::Disjoint
        }
        Some(other) => {
            return Err(CliError::Config(format!(
                "rebalance must be `rolling` or `disjoint`, not `{other}`"
            )))
        }
    };
    let c = BacktestConfig {
        strategies: cfg.strategies.clone().unwrap_or(d.strategies),
        estimators: cfg.estimators.clone().unwrap_or(d.estimators),
        probe_window: cfg.probe_window.unwrap_or(d.probe_window),
        top_s: cfg.top_s.unwrap_or(d.top_s),
        flavor: flavor(cfg),
        unweighted_window: cfg.unweighted_window.unwrap_or(d.unweighted_window),
        lambda: cfg.lambda.unwrap_or(d.lambda),
        exponential_window: cfg.exponential_window.unwrap_or(d.exponential_window),
        mu_window: cfg.mu_window.unwrap_or(d.mu_window),
        target_margin: cfg.target_margin.unwrap_or(d.target_margin),
        horizons: cfg.horizons.clone().unwrap_or(d.horizons),
        constellations: cfg.constellations.unwrap_or(d.constellations),
        constellation_size: cfg.constellation_size.unwrap_or(d.constellation_size),
        rebalance,
        first_row: cfg.first_row,
        last_row: cfg.last_row,
    };
    c.validate()?;
    Ok(c)
}

fn estimator_label(e: Option<CovarianceEstimator>) -> &'static str {
    e.map_or("none", |e| e.label())
}

fn write_backtest(
    dir: &mut OutputDir,
    panel: &ReturnPanel,
    report: &BacktestReport,
    raw: bool,
) -> Result<String, CliError> {
    let summary: Vec<Vec<String>> = report
        .summary
        .iter()
        .map(|s| {
            vec![
                s.horizon.to_string(),
                s.strategy.label().into(),
                estimator_label(s.estimator).into(),
                num(s.realized_volatility),
                num(s.realized_return),
                s.count.to_string(),
                s.regularized.to_string(),
            ]
        })
        .collect();
    dir.table(
        "summary.csv",
        &[
            "horizon",
            "strategy",
            "estimator",
            "realized_volatility",
            "realized_return",
            "count",
            "regularized",
        ],
        &summary,
    )?;
    let human: Vec<Vec<String>> = report
        .summary
        .iter()
        .map(|s| {
            vec![
                format!("{} day", s.horizon),
                s.strategy.label().into(),
                estimator_label(s.estimator).into(),
                sci4(s.realized_volatility),
                sci4(s.realized_return),
            ]
        })
        .collect();
    let text = render_text_table(
        &["horizon", "strategy", "estimator", "risk", "return"],
        &human,
    );
    dir.write("summary.txt", text.as_bytes())?;

    let groups = crate::output::group_by(report.series.iter(), |p| {
        (p.strategy, p.estimator, p.horizon)
    });
    for ((strategy, estimator, horizon), points) in groups {
        let mut cumulative = 1.0;
        let rows: Vec<Vec<String>> = points
            .iter()
            .map(|p| {
                cumulative *= 1.0 + p.realized_return;
                vec![
                    date_label(p.time),
                    num(p.realized_volatility),
                    num(p.realized_return),
                    num(cumulative - 1.0),
                    p.count.to_string(),
                ]
            })
            .collect();
        let name = format!(
            "series/{}_{}_h{}.csv",
            strategy.label(),
            estimator_label(estimator),
            horizon
        );
        dir.table(
            &name,
            &[
                "date",
                "realized_volatility",
                "realized_return",
                "cumulative_return",
                "count",
            ],
            &rows,
        )?;
    }

    let diagnostics: Vec<Vec<String>> = report
        .diagnostics
        .iter()
        .map(|d| {
            vec![
                date_label(d.time),
                d.constellation.map_or(String::new(), |c| c.to_string()),
                d.strategy.map_or("", |s| s.label()).into(),
                d.estimator.map_or("", |e| e.label()).into(),
                d.horizon.map_or(String::new(), |h| h.to_string()),
                d.message.clone(),
            ]
        })
        .collect();
    dir.table(
        "diagnostics.csv",
        &[
            "date",
            "constellation",
            "strategy",
            "estimator",
            "horizon",
            "message",
        ],
        &diagnostics,
    )?;

    let members: Vec<Vec<String>> = report
        .constellations
        .iter()
        .enumerate()
        .flat_map(|(c, assets)| {
            assets
                .iter()
                .map(move |&a| vec![c.to_string(), panel.assets()[a].clone()])
        })
        .collect();
    dir.table("constellations.csv", &["constellation", "asset"], &members)?;

    if raw {
        let records: Vec<Vec<String>> = report
            .records
            .iter()
            .map(|r| {
                vec![
                    date_label(r.time),
                    r.constellation.to_string(),
                    r.strategy.label().into(),
                    estimator_label(r.estimator).into(),
                    r.horizon.to_string(),
                    num(r.realized_volatility),
                    num(r.realized_return),
                    r.weights.regularized.to_string(),
                ]
            })
            .collect();
        dir.table(
            "records.csv",
            &[
                "date",
                "constellation",
                "strategy",
                "estimator",
                "horizon",
                "realized_volatility",
                "realized_return",
                "regularized",
            ],
            &records,
        )?;
        let weights: Vec<Vec<String>> = report
            .records
            .iter()
            .flat_map(|r| {
                let assets = &report.constellations[r.constellation];
                assets.iter().zip(&r.weights.weights).map(move |(&a, w)| {
                    vec![
                        date_label(r.time),
                        r.constellation.to_string(),
                        r.strategy.label().into(),
                        estimator_label(r.estimator).into(),
                        r.horizon.to_string(),
                        panel.assets()[a].clone(),
                        num(*w),
                    ]
                })
            })
            .collect();
        dir.table(
            "weights.csv",
            &[
                "date",
                "constellation",
                "strategy",
                "estimator",
                "horizon",
                "asset",
                "weight",
            ],
            &weights,
        )?;
    }
    Ok(text)
}

/// Runs the portfolio backtest on an ingested panel.
pub fn run_backtest_command(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let (panel, filled) = load_panel(cfg)?;
    let bc = backtest_config(cfg)?;
    let report = run_backtest(&panel, &bc, cfg.seed())?;
    let raw = RunConfig::flag(cfg.raw);
    let mut dir = OutputDir::create(out)?;
    let mut text = write_backtest(&mut dir, &panel, &report, raw)?;
    if filled > 0 {
        text += &format!("forward-filled cells: {filled}\n");
    }
    let settings = BacktestSettings {
        input: cfg
            .input
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_default(),
        prices: RunConfig::flag(cfg.prices),
        forward_fill: RunConfig::flag(cfg.forward_fill),
        filled_cells: filled,
        rows: panel.len(),
        assets: panel.n_assets(),
        backtest: &bc,
        raw,
    };
    let files = dir.manifest("backtest", cfg.seed(), &settings)?;
    Ok(Outcome {
        files,
        error_records: report.diagnostics.len(),
        text,
    })
}

#[derive(Serialize)]
struct SimilaritySettings {
    input: String,
    prices: bool,
    forward_fill: bool,
    filled_cells: usize,
    probe_window: usize,
    flavor: CorrelationFlavor,
}

/// Writes the probe-by-probe similarity grid, the mean pairwise correlation series
/// and the similarity profile of the latest probe.
pub fn run_similarity_command(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let (panel, filled) = load_panel(cfg)?;
    let window = cfg.probe_window.unwrap_or(50);
    if window >= panel.len() {
        return Err(CliError::Config(format!(
            "probe window {window} must be shorter than the panel's {} rows",
            panel.len()
        )));
    }
    let probes = ProbeSeries::build(&panel, window, flavor(cfg))?;
    let grid = similarity_matrix(&probes)?;
    let mut dir = OutputDir::create(out)?;

    let dates: Vec<String> = probes.times().iter().map(|&t| date_label(t)).collect();
    let mut header = vec!["date"];
    header.extend(dates.iter().map(String::as_str));
    let rows: Vec<Vec<String>> = (0..grid.dim())
        .map(|a| {
            std::iter::once(dates[a].clone())
                .chain((0..grid.dim()).map(|b| num(grid.get(a, b))))
                .collect()
        })
        .collect();
    dir.table("similarity.csv", &header, &rows)?;

    let mean: Vec<Vec<String>> = probes
        .correlations()
        .iter()
        .zip(&dates)
        .map(|(c, d)| vec![d.clone(), num(c.mean_off_diagonal())])
        .collect();
    dir.table("mean_correlation.csv", &["date", "mean_correlation"], &mean)?;

    let mut text = format!(
        "{} probes of length {window} over {} assets\n",
        probes.len(),
        panel.n_assets()
    );
    let last = probes.len() - 1;
    if last > window {
        let t0 = probes.times()[last];
        let profile = similarity_profile(&probes, t0, last)?;
        let weights = weight_scheme(&profile)?;
        let rows: Vec<Vec<String>> = (0..profile.len())
            .map(|k| {
                vec![
                    date_label(profile.times[k]),
                    num(profile.zeta[k]),
                    num(profile.zeta_tilde[k]),
                    num(profile.zeta_star[k]),
                    num(weights.weights[k]),
                ]
            })
            .collect();
        dir.table(
            "profile.csv",
            &["date", "zeta", "zeta_tilde", "zeta_star", "weight"],
            &rows,
        )?;
        text += &format!(
            "profile at {}: {} clamped values\n",
            date_label(t0),
            profile.clamped
        );
    }
    if filled > 0 {
        text += &format!("forward-filled cells: {filled}\n");
    }
    let settings = SimilaritySettings {
        input: cfg
            .input
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_default(),
        prices: RunConfig::flag(cfg.prices),
        forward_fill: RunConfig::flag(cfg.forward_fill),
        filled_cells: filled,
        probe_window: window,
        flavor: flavor(cfg),
    };
    let files = dir.manifest("similarity", cfg.seed(), &settings)?;
    Ok(Outcome {
        files,
        error_records: 0,
        text,
    })
}

#[derive(Serialize)]
struct GenerateSettings<'a> {
    scenario: &'a ScenarioSpec,
}

/// Writes a simulated scenario panel as `returns.csv`; day `t` is dated `1970-01-01 + t`.
pub fn run_generate_command(cfg: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    let spec = scenario_from(cfg, 1000)?;
    let panel = simulate_returns(&spec, cfg.seed())?;
    let mut buf = Vec::new();
    write_returns(&panel, &mut buf)?;
    let mut dir = OutputDir::create(out)?;
    dir.write("returns.csv", &buf)?;
    let files = dir.manifest(
        "generate",
        cfg.seed(),
        &GenerateSettings { scenario: &spec },
    )?;
    let text = format!("{} days of {} assets\n", panel.len(), panel.n_assets());
    Ok(Outcome {
        files,
        error_records: 0,
        text,
    })
}
