use rayon::prelude::*;

use super::probes::ProbeSeries;
use crate::error::{Error, Result};
use crate::matrix::EigenWorkspace;

/// Similarity of every probe in `[t0 - T, t0]` to the probe at `t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityProfile {
    pub t0: i64,
    pub horizon: usize,
    pub window_length: usize,
    /// Probe times `t0 - T ..= t0`.
    pub times: Vec<i64>,
    /// Raw spectral-norm distance to the reference probe.
    pub zeta: Vec<f64>,
    /// `1 - zeta / (2 (K - 1))`, clamped to `[0, 1]`.
    pub zeta_tilde: Vec<f64>,
    /// `zeta_tilde` with the window-overlap region `[t0 - L, t0]` replaced by the
    /// maximum over `t < t0 - L`.
    pub zeta_star: Vec<f64>,
    /// Number of `zeta_tilde` values clamped at 0.
    pub clamped: usize,
}

impl SimilarityProfile {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Raw similarity `zeta(t, t0)` for probe indices `first..=reference`.
pub fn raw_similarities(probes: &ProbeSeries, reference: usize, first: usize) -> Result<Vec<f64>> {
    let c0 = probes.correlation(reference).as_sym();
    (first..=reference)
        .into_par_iter()
        .map_init(EigenWorkspace::new, |ws, k| {
            ws.spectral_norm_of_difference(probes.correlation(k).as_sym(), c0)
        })
        .collect()
}

/// Builds the adapted and corrected similarity profile at reference time `t0` over
/// the `horizon` preceding probe steps.
pub fn similarity_profile(
    probes: &ProbeSeries,
    t0: i64,
    horizon: usize,
) -> Result<SimilarityProfile> {
    let window = probes.window_length();
    if horizon <= window {
        return Err(Error::InvalidHorizon { horizon, window });
    }
    let dim = probes.dim();
    if dim < 2 {
        return Err(Error::InvalidInput(format!(
            "similarity needs at least 2 assets, probes have {dim}"
        )));
    }
    let reference = probes
        .index_of_time(t0)
        .ok_or_else(|| Error::InvalidInput(format!("no probe at reference time {t0}")))?;
    let first = reference.checked_sub(horizon).ok_or_else(|| {
        Error::InvalidInput(format!(
            "probes start {reference} steps before {t0}, horizon {horizon} requested"
        ))
    })?;

    let zeta = raw_similarities(probes, reference, first)?;
    let max_zeta = 2.0 * (dim - 1) as f64;
    let mut clamped = 0;
    let zeta_tilde: Vec<f64> = zeta
        .iter()
        .map(|z| {
            let v = 1.0 - z / max_zeta;
            if v < 0.0 {
                clamped += 1;
                0.0
            } else {
                v.min(1.0)
            }
        })
        .collect();

    // local index of t0 - L; everything at or after it is the overlap region
    let split = horizon - window;
    let reliable_max = zeta_tilde[..split]
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let zeta_star = zeta_tilde
        .iter()
        .enumerate()
        .map(|(i, &v)| if i >= split { reliable_max } else { v })
        .collect();

    Ok(SimilarityProfile {
        t0,
        horizon,
        window_length: window,
        times: probes.times()[first..=reference].to_vec(),
        zeta,
        zeta_tilde,
        zeta_star,
        clamped,
    })
}
