//! Exponentially weighted (RiskMetrics-style) benchmark estimators.

use super::weights::WeightScheme;
use crate::error::{Error, Result};
use crate::matrix::{normalize_to_correlation, CorrelationMatrix, CovarianceMatrix, SymMatrix};
use crate::panel::{ReturnPanel, Window};

/// Geometric weights `w_j = lambda^(j-1) (1 - lambda) / (1 - lambda^n)`, `j = 1` most recent.
///
/// The scheme's times are lags relative to the reference: `0, -1, ..., -(n-1)`.
pub fn exponential_weights(n: usize, lambda: f64) -> Result<WeightScheme> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "exponential weights need n >= 1".into(),
        ));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "decay lambda = {lambda} must lie in (0, 1)"
        )));
    }
    let mut weights = Vec::with_capacity(n);
    let mut power = 1.0;
    for _ in 0..n {
        weights.push(power);
        power *= lambda;
    }
    // the direct sum equals (1 - lambda^n) / (1 - lambda) without its cancellation near lambda = 1
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    WeightScheme::new(0, (0..n as i64).map(|j| -j).collect(), weights)
}

/// Weighted second moments about the weighted mean for the `n` rows ending at `last_row`.
fn weighted_moments(
    panel: &ReturnPanel,
    last_row: usize,
    n: usize,
    lambda: f64,
    assets: &[usize],
) -> Result<SymMatrix> {
    let weights = exponential_weights(n, lambda)?.weights;
    let window = Window::trailing(last_row, n)?;
    if window.last >= panel.len() {
        return Err(Error::InvalidWindow(format!(
            "row {last_row} beyond the panel's {} rows",
            panel.len()
        )));
    }
    let k = assets.len();
    let mut mean = vec![0.0; k];
    for (j, &w) in weights.iter().enumerate() {
        let row = panel.row(last_row - j);
        for (m, &a) in mean.iter_mut().zip(assets) {
            *m += w * row[a];
        }
    }
    let mut packed = vec![0.0; k * (k + 1) / 2];
    let mut centered = vec![0.0; k];
    for (j, &w) in weights.iter().enumerate() {
        let row = panel.row(last_row - j);
        for (c, (&a, m)) in centered.iter_mut().zip(assets.iter().zip(&mean)) {
            *c = row[a] - m;
        }
        let mut idx = 0;
        for b in 0..k {
            let wb = w * centered[b];
            for a in 0..=b {
                packed[idx] += centered[a] * wb;
                idx += 1;
            }
        }
    }
    Ok(SymMatrix::from_packed_unchecked(k, packed))
}

/// Exponentially weighted correlation over the `n` returns ending at `last_row`.
pub fn exponential_correlation(
    panel: &ReturnPanel,
    last_row: usize,
    n: usize,
    lambda: f64,
) -> Result<CorrelationMatrix> {
    if n < 2 {
        return Err(Error::InvalidWindow(
            "exponential correlation needs at least 2 returns".into(),
        ));
    }
    let all: Vec<usize> = (0..panel.n_assets()).collect();
    let m = weighted_moments(panel, last_row, n, lambda, &all)?;
    let sd: Vec<f64> = m.diagonal().iter().map(|v| v.sqrt()).collect();
    if let Some(k) = sd.iter().position(|&s| s <= 0.0) {
        return Err(Error::DegenerateColumn {
            asset: panel.assets()[k].clone(),
        });
    }
    Ok(CorrelationMatrix::from_sym_unchecked(
        normalize_to_correlation(&m, &sd),
    ))
}

/// Exponentially weighted covariance of a subset of assets.
pub fn exponential_covariance_of(
    panel: &ReturnPanel,
    last_row: usize,
    n: usize,
    lambda: f64,
    assets: &[usize],
) -> Result<CovarianceMatrix> {
    if n < 2 {
        return Err(Error::InvalidWindow(
            "exponential covariance needs at least 2 returns".into(),
        ));
    }
    if let Some(&bad) = assets.iter().find(|&&i| i >= panel.n_assets()) {
        return Err(Error::InvalidInput(format!(
            "asset index {bad} out of range"
        )));
    }
    Ok(CovarianceMatrix::from_sym_unchecked(weighted_moments(
        panel, last_row, n, lambda, assets,
    )?))
}
