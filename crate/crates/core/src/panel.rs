use std::collections::HashSet;

use crate::error::{Error, Result};

/// T x N panel of simple daily returns.
///
/// Rows are indexed by strictly increasing integer time steps; every value is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPanel {
    times: Vec<i64>,
    assets: Vec<String>,
    /// Row-major, `times.len() * assets.len()`.
    values: Vec<f64>,
}

impl ReturnPanel {
    pub fn new(times: Vec<i64>, assets: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let n = assets.len();
        if n == 0 {
            return Err(Error::InvalidInput("panel has no assets".into()));
        }
        if values.len() != times.len() * n {
            return Err(Error::DimensionMismatch {
                expected: times.len() * n,
                actual: values.len(),
            });
        }
        if let Some(w) = times.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(format!(
                "times must be strictly increasing ({} followed by {})",
                w[0], w[1]
            )));
        }
        let mut seen = HashSet::with_capacity(n);
        for a in &assets {
            if !seen.insert(a.as_str()) {
                return Err(Error::InvalidInput(format!(
                    "duplicate asset identifier `{a}`"
                )));
            }
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite return at time {} for asset `{}`",
                times[k / n],
                assets[k % n]
            )));
        }
        Ok(Self {
            times,
            assets,
            values,
        })
    }

    /// Builds from rows, time steps `0..rows.len()`.
    pub fn from_rows(assets: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let n = assets.len();
        let mut values = Vec::with_capacity(rows.len() * n);
        for (t, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidInput(format!(
                    "row {t} has {} values, expected {n}",
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        Self::new((0..rows.len() as i64).collect(), assets, values)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn n_assets(&self) -> usize {
        self.assets.len()
    }

    pub fn times(&self) -> &[i64] {
        &self.times
    }

    pub fn assets(&self) -> &[String] {
        &self.assets
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        let n = self.assets.len();
        &self.values[r * n..(r + 1) * n]
    }

    #[inline]
    pub fn value(&self, r: usize, asset: usize) -> f64 {
        self.values[r * self.assets.len() + asset]
    }

    pub fn column(&self, asset: usize) -> Vec<f64> {
        (0..self.len()).map(|r| self.value(r, asset)).collect()
    }

    pub fn row_of_time(&self, t: i64) -> Option<usize> {
        self.times.binary_search(&t).ok()
    }

    /// Row window covering the time steps `[t_start, t_end]`.
    pub fn window_by_time(&self, t_start: i64, t_end: i64) -> Result<Window> {
        let first = self.times.partition_point(|&t| t < t_start);
        let past_end = self.times.partition_point(|&t| t <= t_end);
        if past_end <= first {
            return Err(Error::InvalidWindow(format!(
                "no rows in [{t_start}, {t_end}]"
            )));
        }
        Window::new(first, past_end - 1)
    }

    /// Panel restricted to the given asset columns (in the given order).
    pub fn select_assets(&self, idx: &[usize]) -> Result<Self> {
        let assets = idx.iter().map(|&i| self.assets[i].clone()).collect();
        let mut values = Vec::with_capacity(self.len() * idx.len());
        for r in 0..self.len() {
            let row = self.row(r);
            values.extend(idx.iter().map(|&i| row[i]));
        }
        Self::new(self.times.clone(), assets, values)
    }
}

/// Inclusive range of panel rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub first: usize,
    pub last: usize,
}

impl Window {
    pub fn new(first: usize, last: usize) -> Result<Self> {
        if last < first {
            return Err(Error::InvalidWindow(format!(
                "window end {last} precedes start {first}"
            )));
        }
        Ok(Self { first, last })
    }

    /// The `len` rows ending at `last` (inclusive).
    pub fn trailing(last: usize, len: usize) -> Result<Self> {
        if len == 0 || len > last + 1 {
            return Err(Error::InvalidWindow(format!(
                "cannot take {len} rows ending at row {last}"
            )));
        }
        Ok(Self {
            first: last + 1 - len,
            last,
        })
    }

    pub fn len(&self) -> usize {
        self.last - self.first + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn rows(&self) -> std::ops::RangeInclusive<usize> {
        self.first..=self.last
    }

    pub(crate) fn check_within(&self, panel: &ReturnPanel) -> Result<()> {
        if self.last >= panel.len() {
            return Err(Error::InvalidWindow(format!(
                "window ends at row {} but the panel has {} rows",
                self.last,
                panel.len()
            )));
        }
        Ok(())
    }
}
