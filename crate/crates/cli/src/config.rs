//! Flat key-value run configuration (TOML syntax).
//!
//! Every key is optional; command-line flags override file values and unset keys
//! fall back to the defaults of the command.
//!
//! ```toml
//! seed = 42
//! scenario = 2
//! eval_days = [1000, 2500, 5000]
//! repetitions = 100
//! L = 50          # probe window
//! s = 300         # top-s restriction
//! window = 300    # unweighted estimator window
//! lambda = 0.94
//! n = 300         # exponential estimator window
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use simweight::portfolio::{CovarianceEstimator, Strategy};

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    /// Input table; relative paths resolve against the config file's directory.
    pub input: Option<PathBuf>,
    pub prices: Option<bool>,
    pub forward_fill: Option<bool>,
    pub spearman: Option<bool>,
    pub raw: Option<bool>,

    /// Built-in scenario: 1, 2 or 3.
    pub scenario: Option<u8>,
    pub n_assets: Option<usize>,
    pub horizon: Option<usize>,
    pub regime_length: Option<usize>,
    pub volatilities: Option<Vec<f64>>,
    pub eval_days: Option<Vec<usize>>,
    pub repetitions: Option<usize>,

    #[serde(alias = "L")]
    pub probe_window: Option<usize>,
    #[serde(alias = "s")]
    pub top_s: Option<usize>,
    #[serde(alias = "window")]
    pub unweighted_window: Option<usize>,
    pub lambda: Option<f64>,
    #[serde(alias = "n")]
    pub exponential_window: Option<usize>,

    pub strategies: Option<Vec<Strategy>>,
    pub estimators: Option<Vec<CovarianceEstimator>>,
    pub mu_window: Option<usize>,
    pub target_margin: Option<f64>,
    pub horizons: Option<Vec<usize>>,
    pub constellations: Option<usize>,
    pub constellation_size: Option<usize>,
    /// `rolling` or `disjoint`.
    pub rebalance: Option<String>,
    pub rebalance_step: Option<usize>,
    pub first_row: Option<usize>,
    pub last_row: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg =
            Self::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if let (Some(input), Some(dir)) = (&cfg.input, path.parent()) {
            if input.is_relative() {
                cfg.input = Some(dir.join(input));
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// Values set in `over` replace those in `self`.
    pub fn overlay(self, over: RunConfig) -> RunConfig {
        macro_rules! pick {
            ($($f:ident),*) => { RunConfig { $($f: over.$f.or(self.$f)),* } };
        }
        pick!(
            seed,
            input,
            prices,
            forward_fill,
            spearman,
            raw,
            scenario,
            n_assets,
            horizon,
            regime_length,
            volatilities,
            eval_days,
            repetitions,
            probe_window,
            top_s,
            unweighted_window,
            lambda,
            exponential_window,
            strategies,
            estimators,
            mu_window,
            target_margin,
            horizons,
            constellations,
            constellation_size,
            rebalance,
            rebalance_step,
            first_row,
            last_row
        )
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn flag(v: Option<bool>) -> bool {
        v.unwrap_or(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_aliases_and_lists() {
        let c = RunConfig::parse("L = 30\ns = 120\nlambda = 0.9\nn = 200\nwindow = 250\nstrategies = [\"mvp\", \"naive\"]\n").unwrap();
        assert_eq!(c.probe_window, Some(30));
        assert_eq!(c.top_s, Some(120));
        assert_eq!(c.exponential_window, Some(200));
        assert_eq!(c.unweighted_window, Some(250));
        assert_eq!(c.strategies, Some(vec![Strategy::Mvp, Strategy::Naive]));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::parse("probewindow = 3\n").is_err());
        assert!(RunConfig::parse("seed = \"x\"\n").is_err());
    }

    #[test]
    fn overlay_prefers_override() {
        let base = RunConfig {
            seed: Some(1),
            lambda: Some(0.9),
            ..Default::default()
        };
        let over = RunConfig {
            seed: Some(2),
            ..Default::default()
        };
        let c = base.overlay(over);
        assert_eq!(c.seed, Some(2));
        assert_eq!(c.lambda, Some(0.9));
    }
}
