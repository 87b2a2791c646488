//! Similarity of market correlation structure and the estimators weighted by it.
//!
//! Two probe correlation matrices are compared by the spectral norm of their
//! difference. Normalised and corrected, these distances become weights over the
//! history of probe estimates; the weighted sum of probes is the estimator.

mod exponential;
mod probes;
mod profile;
mod weights;

pub use exponential::{exponential_correlation, exponential_covariance_of, exponential_weights};
pub use probes::ProbeSeries;
pub use profile::{raw_similarities, similarity_profile, SimilarityProfile};
pub use weights::{
    restrict_top_s, weight_scheme, weighted_correlation, weighted_covariance,
    weighted_covariance_of, WeightScheme,
};

use crate::error::{Error, Result};
use crate::matrix::{CorrelationMatrix, EigenWorkspace, SymMatrix};

/// `||c1 - c2||_2`.
pub fn similarity(c1: &CorrelationMatrix, c2: &CorrelationMatrix) -> Result<f64> {
    if c1.dim() != c2.dim() {
        return Err(Error::DimensionMismatch {
            expected: c1.dim(),
            actual: c2.dim(),
        });
    }
    EigenWorkspace::new().spectral_norm_of_difference(c1.as_sym(), c2.as_sym())
}

/// Raw similarity `zeta` between every pair of probes; entry `(a, b)` compares probes `a` and `b`.
pub fn similarity_matrix(probes: &ProbeSeries) -> Result<SymMatrix> {
    use rayon::prelude::*;
    let n = probes.len();
    let columns: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map_init(EigenWorkspace::new, |ws, b| {
            (0..b)
                .map(|a| {
                    ws.spectral_norm_of_difference(
                        probes.correlation(a).as_sym(),
                        probes.correlation(b).as_sym(),
                    )
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Ok(SymMatrix::from_fn_unchecked(n, |a, b| {
        if a == b {
            0.0
        } else {
            columns[b][a]
        }
    }))
}

/// Similarity weights at `t0` over all available history, optionally restricted to the top `s`.
pub fn similarity_weights(
    probes: &ProbeSeries,
    t0: i64,
    top_s: Option<usize>,
) -> Result<WeightScheme> {
    let reference = probes
        .index_of_time(t0)
        .ok_or_else(|| Error::InvalidInput(format!("no probe at reference time {t0}")))?;
    let profile = similarity_profile(probes, t0, reference)?;
    let w = weight_scheme(&profile)?;
    match top_s {
        Some(s) => restrict_top_s(&w, s),
        None => Ok(w),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identical_matrices() {
        let c = CorrelationMatrix::equicorrelation(5, 0.3).unwrap();
        assert_eq!(similarity(&c, &c).unwrap(), 0.0);
    }

    #[test]
    fn two_by_two_equicorrelation() {
        let a = CorrelationMatrix::equicorrelation(2, 0.9).unwrap();
        let b = CorrelationMatrix::equicorrelation(2, 0.1).unwrap();
        assert!((similarity(&a, &b).unwrap() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn ones_versus_identity_is_k_minus_one() {
        for k in [2usize, 5, 16, 40] {
            let ones = CorrelationMatrix::equicorrelation(k, 1.0).unwrap();
            let id = CorrelationMatrix::equicorrelation(k, 0.0).unwrap();
            assert!((similarity(&ones, &id).unwrap() - (k - 1) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let a = CorrelationMatrix::equicorrelation(2, 0.9).unwrap();
        let b = CorrelationMatrix::equicorrelation(3, 0.1).unwrap();
        assert!(matches!(
            similarity(&a, &b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn similarity_grid_matches_pairwise() {
        use crate::estimators::CorrelationFlavor;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let p =
            crate::panel::ReturnPanel::from_rows((0..4).map(|i| format!("A{i}")).collect(), &rows)
                .unwrap();
        let probes = ProbeSeries::build(&p, 10, CorrelationFlavor::Pearson).unwrap();
        let grid = similarity_matrix(&probes).unwrap();
        assert_eq!(grid.dim(), 31);
        for a in 0..31 {
            assert_eq!(grid.get(a, a), 0.0);
            for b in (0..31).step_by(5) {
                let z = similarity(probes.correlation(a), probes.correlation(b)).unwrap();
                assert_eq!(grid.get(a, b), z);
            }
        }
    }

    fn random_correlation(n: usize, rng: &mut ChaCha8Rng) -> CorrelationMatrix {
        // normalised Gram matrix of random factor loadings
        let loadings: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let gram = SymMatrix::from_fn(n, |i, j| {
            loadings[i]
                .iter()
                .zip(&loadings[j])
                .map(|(a, b)| a * b)
                .sum()
        })
        .unwrap();
        let sd: Vec<f64> = gram.diagonal().iter().map(|v| v.sqrt()).collect();
        CorrelationMatrix::new(crate::matrix::normalize_to_correlation(&gram, &sd)).unwrap()
    }

    proptest! {
        #[test]
        fn pseudometric_on_random_triples(seed in any::<u64>(), n in 2usize..8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_correlation(n, &mut rng);
            let b = random_correlation(n, &mut rng);
            let c = random_correlation(n, &mut rng);
            let ab = similarity(&a, &b).unwrap();
            let ba = similarity(&b, &a).unwrap();
            let bc = similarity(&b, &c).unwrap();
            let ac = similarity(&a, &c).unwrap();
            prop_assert!(ab >= 0.0);
            prop_assert!((ab - ba).abs() < 1e-10);
            prop_assert!(ac <= ab + bc + 1e-10);
            prop_assert!(ab <= 2.0 * (n - 1) as f64 + 1e-10);
        }
    }
}
