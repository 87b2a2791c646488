use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{
    pearson_and_covariance, sample_covariance, spearman_correlation, CorrelationFlavor,
};
use crate::matrix::{CorrelationMatrix, CovarianceMatrix};
use crate::panel::{ReturnPanel, Window};

/// Backward-looking probe estimates on a rolling window of `L` rows.
///
/// Probe `k` is estimated from panel rows `[k, k + L - 1]` and is stamped with the
/// time of its last row. Built once per panel and then shared read-only.
#[derive(Debug, Clone)]
pub struct ProbeSeries {
    window_length: usize,
    flavor: CorrelationFlavor,
    first_row: usize,
    times: Vec<i64>,
    assets: Vec<String>,
    corr: Vec<CorrelationMatrix>,
    cov: Vec<CovarianceMatrix>,
}

impl ProbeSeries {
    pub fn build(
        panel: &ReturnPanel,
        window_length: usize,
        flavor: CorrelationFlavor,
    ) -> Result<Self> {
        if window_length < 2 {
            return Err(Error::InvalidParameter(format!(
                "probe window must be at least 2, got {window_length}"
            )));
        }
        if panel.len() < window_length {
            return Err(Error::InvalidWindow(format!(
                "panel has {} rows, fewer than the probe window {window_length}",
                panel.len()
            )));
        }
        let first_row = window_length - 1;
        let pairs: Vec<(CorrelationMatrix, CovarianceMatrix)> = (first_row..panel.len())
            .into_par_iter()
            .map(|last| {
                let w = Window::trailing(last, window_length)?;
                match flavor {
                    CorrelationFlavor::Pearson => pearson_and_covariance(panel, w),
                    CorrelationFlavor::Spearman => Ok((
                        spearman_correlation(panel, w)?,
                        sample_covariance(panel, w)?,
                    )),
                }
            })
            .collect::<Result<_>>()?;
        let (corr, cov) = pairs.into_iter().unzip();
        Ok(Self {
            window_length,
            flavor,
            first_row,
            times: panel.times()[first_row..].to_vec(),
            assets: panel.assets().to_vec(),
            corr,
            cov,
        })
    }

    /// Assembles a series from precomputed probes (mainly for tests and tools).
    pub fn from_parts(
        window_length: usize,
        times: Vec<i64>,
        corr: Vec<CorrelationMatrix>,
        cov: Vec<CovarianceMatrix>,
    ) -> Result<Self> {
        if corr.len() != times.len() || cov.len() != times.len() {
            return Err(Error::InvalidInput(
                "probe lists must align with times".into(),
            ));
        }
        if let Some(w) = times.windows(2).find(|w| w[1] != w[0] + 1) {
            return Err(Error::InvalidInput(format!(
                "probe times not contiguous at {} -> {}",
                w[0], w[1]
            )));
        }
        let dim = corr.first().map(|c| c.dim()).unwrap_or(0);
        if corr.iter().any(|c| c.dim() != dim) || cov.iter().any(|c| c.dim() != dim) {
            return Err(Error::InvalidInput("probe dimensions differ".into()));
        }
        Ok(Self {
            window_length,
            flavor: CorrelationFlavor::Pearson,
            first_row: 0,
            times,
            assets: (0..dim).map(|i| format!("#{i}")).collect(),
            corr,
            cov,
        })
    }

    pub fn window_length(&self) -> usize {
        self.window_length
    }

    pub fn flavor(&self) -> CorrelationFlavor {
        self.flavor
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Matrix dimension (number of assets in each probe).
    pub fn dim(&self) -> usize {
        self.corr.first().map(|c| c.dim()).unwrap_or(0)
    }

    pub fn assets(&self) -> &[String] {
        &self.assets
    }

    pub fn times(&self) -> &[i64] {
        &self.times
    }

    /// Panel row of the first probe.
    pub fn first_row(&self) -> usize {
        self.first_row
    }

    /// Probe index for a panel row, if that row has a probe.
    pub fn index_of_row(&self, row: usize) -> Option<usize> {
        row.checked_sub(self.first_row).filter(|&k| k < self.len())
    }

    pub fn index_of_time(&self, t: i64) -> Option<usize> {
        self.times.binary_search(&t).ok()
    }

    pub fn correlation(&self, k: usize) -> &CorrelationMatrix {
        &self.corr[k]
    }

    pub fn covariance(&self, k: usize) -> &CovarianceMatrix {
        &self.cov[k]
    }

    pub fn correlations(&self) -> &[CorrelationMatrix] {
        &self.corr
    }

    pub fn covariances(&self) -> &[CovarianceMatrix] {
        &self.cov
    }
}
