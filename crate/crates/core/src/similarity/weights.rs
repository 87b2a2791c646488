use super::probes::ProbeSeries;
use super::profile::SimilarityProfile;
use crate::error::{Error, Result};
use crate::matrix::{CorrelationMatrix, CovarianceMatrix, SymMatrix};

const SUM_TOLERANCE: f64 = 1e-12;

/// Normalised nonnegative weights over a run of time steps.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightScheme {
    pub t0: i64,
    pub times: Vec<i64>,
    pub weights: Vec<f64>,
}

impl WeightScheme {
    pub fn new(t0: i64, times: Vec<i64>, weights: Vec<f64>) -> Result<Self> {
        if times.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                actual: weights.len(),
            });
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidInput(format!(
                "weight {w} is not a nonnegative finite number"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidInput(format!("weights sum to {sum}, not 1")));
        }
        Ok(Self { t0, times, weights })
    }

    /// All mass on the single time `t`.
    pub fn point_mass(t0: i64, times: Vec<i64>, t: i64) -> Result<Self> {
        let weights = times
            .iter()
            .map(|&s| if s == t { 1.0 } else { 0.0 })
            .collect();
        Self::new(t0, times, weights)
    }

    pub fn uniform(t0: i64, times: Vec<i64>) -> Result<Self> {
        let n = times.len();
        Self::new(t0, times, vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn positive_count(&self) -> usize {
        self.weights.iter().filter(|&&w| w > 0.0).count()
    }

    /// Effective number of observations, `1 / sum w^2`.
    pub fn effective_size(&self) -> f64 {
        1.0 / self.weights.iter().map(|w| w * w).sum::<f64>()
    }
}

fn normalize(values: &[f64]) -> Option<Vec<f64>> {
    let total: f64 = values.iter().sum();
    if total <= 0.0 {
        return None;
    }
    Some(values.iter().map(|v| v / total).collect())
}

/// `w(t) = zeta_star(t) / sum zeta_star`.
pub fn weight_scheme(profile: &SimilarityProfile) -> Result<WeightScheme> {
    if profile.zeta_star.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::InvalidInput(
            "corrected similarity values must be nonnegative".into(),
        ));
    }
    let weights = normalize(&profile.zeta_star).ok_or(Error::DegenerateSimilarity)?;
    WeightScheme::new(profile.t0, profile.times.clone(), weights)
}

/// Keeps only the surplus over the `s`-th largest weight, renormalised.
///
/// Entries equal to the threshold (including ties) get exactly zero weight.
pub fn restrict_top_s(w: &WeightScheme, s: usize) -> Result<WeightScheme> {
    if s == 0 || s > w.len() {
        return Err(Error::InvalidParameter(format!(
            "s = {s} must lie in 1..={}",
            w.len()
        )));
    }
    let mut sorted = w.weights.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let threshold = sorted[s - 1];
    let surplus: Vec<f64> = w
        .weights
        .iter()
        .map(|&v| (v - threshold).max(0.0))
        .collect();
    let weights = normalize(&surplus).ok_or(Error::DegenerateRestriction { s })?;
    WeightScheme::new(w.t0, w.times.clone(), weights)
}

/// Offset of `w`'s first time inside the probe series, after checking alignment.
fn aligned_offset(probes: &ProbeSeries, w: &WeightScheme) -> Result<usize> {
    let first = *w
        .times
        .first()
        .ok_or_else(|| Error::InvalidInput("empty weight scheme".into()))?;
    let offset = probes
        .index_of_time(first)
        .ok_or_else(|| Error::InvalidInput(format!("no probe at weight time {first}")))?;
    let span = probes.times().get(offset..offset + w.len());
    if span != Some(&w.times[..]) {
        return Err(Error::InvalidInput(
            "weight times are not aligned with probe times".into(),
        ));
    }
    Ok(offset)
}

fn accumulate<'a>(dim: usize, terms: impl Iterator<Item = (f64, &'a SymMatrix)>) -> Vec<f64> {
    let mut acc = vec![0.0; dim * (dim + 1) / 2];
    for (weight, m) in terms {
        for (a, v) in acc.iter_mut().zip(m.packed()) {
            *a += weight * v;
        }
    }
    acc
}

/// `sum_t w(t) C^L(t)`.
pub fn weighted_correlation(probes: &ProbeSeries, w: &WeightScheme) -> Result<CorrelationMatrix> {
    let offset = aligned_offset(probes, w)?;
    let dim = probes.dim();
    let terms = w
        .weights
        .iter()
        .enumerate()
        .filter(|(_, &wt)| wt > 0.0)
        .map(|(i, &wt)| (wt, probes.correlation(offset + i).as_sym()));
    let mut packed = accumulate(dim, terms);
    // convex combinations of unit diagonals; pin them against rounding
    let mut k = 0;
    for j in 0..dim {
        for i in 0..=j {
            packed[k] = if i == j {
                1.0
            } else {
                packed[k].clamp(-1.0, 1.0)
            };
            k += 1;
        }
    }
    Ok(CorrelationMatrix::from_sym_unchecked(
        SymMatrix::from_packed_unchecked(dim, packed),
    ))
}

/// `sum_t w(t) Sigma^L(t)`.
pub fn weighted_covariance(probes: &ProbeSeries, w: &WeightScheme) -> Result<CovarianceMatrix> {
    let offset = aligned_offset(probes, w)?;
    let terms = w
        .weights
        .iter()
        .enumerate()
        .filter(|(_, &wt)| wt > 0.0)
        .map(|(i, &wt)| (wt, probes.covariance(offset + i).as_sym()));
    let dim = probes.dim();
    Ok(CovarianceMatrix::from_sym_unchecked(
        SymMatrix::from_packed_unchecked(dim, accumulate(dim, terms)),
    ))
}

/// Weighted covariance restricted to a subset of assets; avoids materialising full probes.
pub fn weighted_covariance_of(
    probes: &ProbeSeries,
    w: &WeightScheme,
    assets: &[usize],
) -> Result<CovarianceMatrix> {
    let offset = aligned_offset(probes, w)?;
    if let Some(&bad) = assets.iter().find(|&&i| i >= probes.dim()) {
        return Err(Error::InvalidInput(format!(
            "asset index {bad} out of range"
        )));
    }
    let n = assets.len();
    let mut acc = vec![0.0; n * (n + 1) / 2];
    for (i, &wt) in w.weights.iter().enumerate() {
        if wt <= 0.0 {
            continue;
        }
        let m = probes.covariance(offset + i);
        let mut k = 0;
        for b in 0..n {
            for a in 0..=b {
                acc[k] += wt * m.get(assets[a], assets[b]);
                k += 1;
            }
        }
    }
    Ok(CovarianceMatrix::from_sym_unchecked(
        SymMatrix::from_packed_unchecked(n, acc),
    ))
}
