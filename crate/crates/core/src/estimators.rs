//! Window estimators: Pearson and Spearman correlation, sample covariance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{normalize_to_correlation, CorrelationMatrix, CovarianceMatrix, SymMatrix};
use crate::panel::{ReturnPanel, Window};

/// Which product-moment flavour a correlation probe uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationFlavor {
    #[default]
    Pearson,
    Spearman,
}

fn require_rows(window: &Window, panel: &ReturnPanel) -> Result<()> {
    window.check_within(panel)?;
    if window.len() < 2 {
        return Err(Error::InvalidWindow(format!(
            "window has {} row(s); at least 2 required",
            window.len()
        )));
    }
    Ok(())
}

/// Centered cross-product sums over a row-major block (`rows * n`).
fn scatter(data: &[f64], rows: usize, n: usize) -> SymMatrix {
    let mut mean = vec![0.0; n];
    for r in 0..rows {
        for (m, v) in mean.iter_mut().zip(&data[r * n..(r + 1) * n]) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= rows as f64;
    }
    let mut centered = vec![0.0; rows * n];
    for r in 0..rows {
        for k in 0..n {
            centered[r * n + k] = data[r * n + k] - mean[k];
        }
    }
    let mut packed = vec![0.0; n * (n + 1) / 2];
    for r in 0..rows {
        let row = &centered[r * n..(r + 1) * n];
        let mut k = 0;
        for j in 0..n {
            let xj = row[j];
            for i in 0..=j {
                packed[k] += row[i] * xj;
                k += 1;
            }
        }
    }
    SymMatrix::from_packed_unchecked(n, packed)
}

fn gather(panel: &ReturnPanel, window: &Window, idx: Option<&[usize]>) -> (Vec<f64>, usize) {
    match idx {
        None => (
            panel.values()[window.first * panel.n_assets()..(window.last + 1) * panel.n_assets()]
                .to_vec(),
            panel.n_assets(),
        ),
        Some(idx) => {
            let mut out = Vec::with_capacity(window.len() * idx.len());
            for r in window.rows() {
                let row = panel.row(r);
                out.extend(idx.iter().map(|&i| row[i]));
            }
            (out, idx.len())
        }
    }
}

fn correlation_from_scatter(s: &SymMatrix, assets: &[String]) -> Result<CorrelationMatrix> {
    let sd: Vec<f64> = s.diagonal().iter().map(|v| v.sqrt()).collect();
    if let Some(k) = sd.iter().position(|&v| v <= 0.0) {
        return Err(Error::DegenerateColumn {
            asset: assets[k].clone(),
        });
    }
    Ok(CorrelationMatrix::from_sym_unchecked(
        normalize_to_correlation(s, &sd),
    ))
}

/// Product-moment correlation of the rows in `window`.
pub fn pearson_correlation(panel: &ReturnPanel, window: Window) -> Result<CorrelationMatrix> {
    require_rows(&window, panel)?;
    let (data, n) = gather(panel, &window, None);
    correlation_from_scatter(&scatter(&data, window.len(), n), panel.assets())
}

/// Average ranks (1-based), ties sharing the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = rank;
        }
        start = end;
    }
    ranks
}

fn ranked_block(panel: &ReturnPanel, window: &Window) -> Vec<f64> {
    let n = panel.n_assets();
    let rows = window.len();
    let mut out = vec![0.0; rows * n];
    let mut column = vec![0.0; rows];
    for k in 0..n {
        for (i, r) in window.rows().enumerate() {
            column[i] = panel.value(r, k);
        }
        for (i, rank) in average_ranks(&column).into_iter().enumerate() {
            out[i * n + k] = rank;
        }
    }
    out
}

/// Spearman rank correlation: Pearson correlation of within-window average ranks.
pub fn spearman_correlation(panel: &ReturnPanel, window: Window) -> Result<CorrelationMatrix> {
    require_rows(&window, panel)?;
    let data = ranked_block(panel, &window);
    correlation_from_scatter(
        &scatter(&data, window.len(), panel.n_assets()),
        panel.assets(),
    )
}

pub fn correlation(
    panel: &ReturnPanel,
    window: Window,
    flavor: CorrelationFlavor,
) -> Result<CorrelationMatrix> {
    match flavor {
        CorrelationFlavor::Pearson => pearson_correlation(panel, window),
        CorrelationFlavor::Spearman => spearman_correlation(panel, window),
    }
}

/// Unbiased sample covariance (denominator `len - 1`).
pub fn sample_covariance(panel: &ReturnPanel, window: Window) -> Result<CovarianceMatrix> {
    require_rows(&window, panel)?;
    let (data, n) = gather(panel, &window, None);
    Ok(covariance_from_scatter(
        scatter(&data, window.len(), n),
        window.len(),
    ))
}

/// Sample covariance of a subset of asset columns.
pub fn sample_covariance_of(
    panel: &ReturnPanel,
    window: Window,
    assets: &[usize],
) -> Result<CovarianceMatrix> {
    require_rows(&window, panel)?;
    if let Some(&bad) = assets.iter().find(|&&i| i >= panel.n_assets()) {
        return Err(Error::InvalidInput(format!(
            "asset index {bad} out of range"
        )));
    }
    let (data, n) = gather(panel, &window, Some(assets));
    Ok(covariance_from_scatter(
        scatter(&data, window.len(), n),
        window.len(),
    ))
}

fn covariance_from_scatter(s: SymMatrix, rows: usize) -> CovarianceMatrix {
    CovarianceMatrix::from_sym_unchecked(s.scaled(1.0 / (rows - 1) as f64))
}

/// Pearson correlation and unbiased covariance from one pass over the window.
pub(crate) fn pearson_and_covariance(
    panel: &ReturnPanel,
    window: Window,
) -> Result<(CorrelationMatrix, CovarianceMatrix)> {
    require_rows(&window, panel)?;
    let (data, n) = gather(panel, &window, None);
    let s = scatter(&data, window.len(), n);
    let corr = correlation_from_scatter(&s, panel.assets())?;
    Ok((corr, covariance_from_scatter(s, window.len())))
}

/// Mean off-diagonal Spearman correlation over each trailing window of `window_length` rows.
///
/// Element `k` corresponds to the window ending at row `window_length - 1 + k`.
pub fn mean_pairwise_correlation(panel: &ReturnPanel, window_length: usize) -> Result<Vec<f64>> {
    if window_length < 2 {
        return Err(Error::InvalidWindow(
            "window length must be at least 2".into(),
        ));
    }
    if panel.len() < window_length {
        return Err(Error::InvalidWindow(format!(
            "panel has {} rows, fewer than the window length {window_length}",
            panel.len()
        )));
    }
    (window_length - 1..panel.len())
        .map(|t| {
            let c = spearman_correlation(panel, Window::trailing(t, window_length)?)?;
            Ok(c.mean_off_diagonal())
        })
        .collect()
}
