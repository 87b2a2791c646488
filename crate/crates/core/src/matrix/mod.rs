//! Dense symmetric matrices and the correlation/covariance refinements built on them.
//!
//! Storage is packed upper-triangular, so `get(i, j) == get(j, i)` holds bit-for-bit
//! by construction.

mod cholesky;
mod eigen;

pub use cholesky::Cholesky;
pub use eigen::{jacobi_eigenvalues, spectral_norm, sym_eigenvalues, EigenWorkspace};

use crate::error::{Error, Result};

#[inline]
fn packed_index(i: usize, j: usize) -> usize {
    let (r, c) = if i <= j { (i, j) } else { (j, i) };
    c * (c + 1) / 2 + r
}

#[inline]
fn packed_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Dense real symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    packed: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            packed: vec![0.0; packed_len(dim)],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.packed[packed_index(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.packed[packed_index(i, i)] = d;
        }
        m.ensure_finite()?;
        Ok(m)
    }

    /// Builds a matrix by evaluating `f(i, j)` on the upper triangle (`i <= j`).
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let m = Self::from_fn_unchecked(dim, &mut f);
        m.ensure_finite()?;
        Ok(m)
    }

    pub(crate) fn from_fn_unchecked(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut packed = Vec::with_capacity(packed_len(dim));
        for j in 0..dim {
            for i in 0..=j {
                packed.push(f(i, j));
            }
        }
        Self { dim, packed }
    }

    /// Builds from nested rows; the input must already be exactly symmetric.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: row.len(),
                });
            }
            for j in 0..i {
                if rows[i][j] != rows[j][i] {
                    return Err(Error::InvalidInput(format!(
                        "matrix is not symmetric at ({i}, {j}): {} vs {}",
                        rows[i][j], rows[j][i]
                    )));
                }
            }
        }
        Self::from_fn(dim, |i, j| rows[i][j])
    }

    pub(crate) fn from_packed_unchecked(dim: usize, packed: Vec<f64>) -> Self {
        debug_assert_eq!(packed.len(), packed_len(dim));
        Self { dim, packed }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.packed[packed_index(i, j)]
    }

    /// Upper triangle, column by column.
    pub fn packed(&self) -> &[f64] {
        &self.packed
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut acc = 0.0;
        for j in 0..self.dim {
            for i in 0..=j {
                let v = self.get(i, j);
                acc += if i == j { v * v } else { 2.0 * v * v };
            }
        }
        acc.sqrt()
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; n * n];
        self.write_dense(&mut out);
        out
    }

    pub(crate) fn write_dense(&self, out: &mut [f64]) {
        let n = self.dim;
        let mut k = 0;
        for j in 0..n {
            for i in 0..=j {
                let v = self.packed[k];
                out[i * n + j] = v;
                out[j * n + i] = v;
                k += 1;
            }
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn checked_sub(&self, other: &SymMatrix) -> Result<SymMatrix> {
        self.same_dim(other)?;
        let packed = self
            .packed
            .iter()
            .zip(&other.packed)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self::from_packed_unchecked(self.dim, packed))
    }

    pub fn checked_add(&self, other: &SymMatrix) -> Result<SymMatrix> {
        self.same_dim(other)?;
        let packed = self
            .packed
            .iter()
            .zip(&other.packed)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self::from_packed_unchecked(self.dim, packed))
    }

    pub fn scaled(&self, c: f64) -> SymMatrix {
        Self::from_packed_unchecked(self.dim, self.packed.iter().map(|v| v * c).collect())
    }

    /// Principal submatrix on the given indices (in the given order).
    pub fn submatrix(&self, idx: &[usize]) -> SymMatrix {
        Self::from_fn_unchecked(idx.len(), |i, j| self.get(idx[i], idx[j]))
    }

    /// Quadratic form `x' M x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim);
        let mut acc = 0.0;
        for j in 0..self.dim {
            for i in 0..j {
                acc += 2.0 * x[i] * self.get(i, j) * x[j];
            }
            acc += x[j] * self.get(j, j) * x[j];
        }
        acc
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim);
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(sym_eigenvalues(self)?.last().copied().unwrap_or(0.0))
    }

    fn same_dim(&self, other: &SymMatrix) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: other.dim,
            });
        }
        Ok(())
    }

    fn ensure_finite(&self) -> Result<()> {
        if let Some(v) = self.packed.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite matrix entry {v}")));
        }
        Ok(())
    }
}

/// Correlation matrix: unit diagonal, entries in `[-1, 1]`, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix(SymMatrix);

impl CorrelationMatrix {
    pub const DIAGONAL_TOLERANCE: f64 = 1e-12;

    /// Validates every invariant, including a full eigenvalue PSD check.
    pub fn new(m: SymMatrix) -> Result<Self> {
        check_correlation(&m)?;
        Ok(Self(m))
    }

    /// Equicorrelation matrix with off-diagonal `rho`.
    pub fn equicorrelation(dim: usize, rho: f64) -> Result<Self> {
        Self::new(SymMatrix::from_fn(
            dim,
            |i, j| if i == j { 1.0 } else { rho },
        )?)
    }

    pub(crate) fn from_sym_unchecked(m: SymMatrix) -> Self {
        Self(m)
    }

    pub fn as_sym(&self) -> &SymMatrix {
        &self.0
    }

    pub fn into_sym(self) -> SymMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }

    pub fn check_invariants(&self) -> Result<()> {
        check_correlation(&self.0)
    }

    /// Mean of the strictly upper-triangular entries.
    pub fn mean_off_diagonal(&self) -> f64 {
        let n = self.dim();
        if n < 2 {
            return 0.0;
        }
        let mut acc = 0.0;
        for j in 1..n {
            for i in 0..j {
                acc += self.get(i, j);
            }
        }
        acc / (n * (n - 1) / 2) as f64
    }
}

/// Covariance matrix: nonnegative diagonal, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix(SymMatrix);

impl CovarianceMatrix {
    pub fn new(m: SymMatrix) -> Result<Self> {
        check_covariance(&m)?;
        Ok(Self(m))
    }

    pub(crate) fn from_sym_unchecked(m: SymMatrix) -> Self {
        Self(m)
    }

    pub fn as_sym(&self) -> &SymMatrix {
        &self.0
    }

    pub fn into_sym(self) -> SymMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }

    pub fn check_invariants(&self) -> Result<()> {
        check_covariance(&self.0)
    }

    pub fn submatrix(&self, idx: &[usize]) -> CovarianceMatrix {
        Self(self.0.submatrix(idx))
    }

    /// Correlation implied by this covariance; fails on a zero-variance asset.
    pub fn to_correlation(&self, assets: &[String]) -> Result<CorrelationMatrix> {
        let sd: Vec<f64> = self.0.diagonal().iter().map(|v| v.sqrt()).collect();
        if let Some(k) = sd.iter().position(|&s| s <= 0.0 || !s.is_finite()) {
            let asset = assets.get(k).cloned().unwrap_or_else(|| format!("#{k}"));
            return Err(Error::DegenerateColumn { asset });
        }
        Ok(CorrelationMatrix(normalize_to_correlation(&self.0, &sd)))
    }
}

pub(crate) fn normalize_to_correlation(cov: &SymMatrix, sd: &[f64]) -> SymMatrix {
    SymMatrix::from_fn_unchecked(cov.dim(), |i, j| {
        if i == j {
            1.0
        } else {
            (cov.get(i, j) / (sd[i] * sd[j])).clamp(-1.0, 1.0)
        }
    })
}

fn check_correlation(m: &SymMatrix) -> Result<()> {
    m.ensure_finite()?;
    let n = m.dim();
    for i in 0..n {
        let d = m.get(i, i);
        if (d - 1.0).abs() > CorrelationMatrix::DIAGONAL_TOLERANCE {
            return Err(Error::InvariantViolation(format!(
                "diagonal entry {i} is {d}, not 1"
            )));
        }
        for j in 0..i {
            let v = m.get(i, j);
            if !(-1.0..=1.0).contains(&v) {
                return Err(Error::InvariantViolation(format!(
                    "entry ({i}, {j}) = {v} outside [-1, 1]"
                )));
            }
        }
    }
    let tolerance = 1e-8 * n as f64;
    let min_eigenvalue = m.min_eigenvalue()?;
    if min_eigenvalue < -tolerance {
        return Err(Error::NotPositiveSemidefinite {
            min_eigenvalue,
            tolerance,
        });
    }
    Ok(())
}

fn check_covariance(m: &SymMatrix) -> Result<()> {
    m.ensure_finite()?;
    for i in 0..m.dim() {
        if m.get(i, i) < 0.0 {
            return Err(Error::InvariantViolation(format!(
                "negative variance on diagonal entry {i}"
            )));
        }
    }
    let tolerance = 1e-8 * m.trace();
    let min_eigenvalue = m.min_eigenvalue()?;
    if min_eigenvalue < -tolerance {
        return Err(Error::NotPositiveSemidefinite {
            min_eigenvalue,
            tolerance,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packed_storage_is_symmetric() {
        let m = SymMatrix::from_fn(4, |i, j| (i * 10 + j) as f64).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(m.get(i, j), m.get(j, i));
            }
        }
        assert_eq!(m.get(1, 3), 13.0);
    }

    #[test]
    fn from_rows_rejects_asymmetry_and_nan() {
        assert!(SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.5, 1.0]]).is_err());
        assert!(SymMatrix::from_rows(&[vec![1.0, f64::NAN], vec![f64::NAN, 1.0]]).is_err());
        assert!(SymMatrix::from_rows(&[vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn correlation_invariants() {
        assert!(CorrelationMatrix::equicorrelation(5, 0.3).is_ok());
        // -0.5 equicorrelation in 4 dims has eigenvalue 1 - 3 * 0.5 < 0
        assert!(matches!(
            CorrelationMatrix::equicorrelation(4, -0.5),
            Err(Error::NotPositiveSemidefinite { .. })
        ));
        let bad_diag = SymMatrix::from_fn(2, |i, j| if i == j { 1.1 } else { 0.0 }).unwrap();
        assert!(CorrelationMatrix::new(bad_diag).is_err());
    }

    #[test]
    fn covariance_rejects_negative_variance() {
        let m = SymMatrix::from_diagonal(&[1.0, -0.1]).unwrap();
        assert!(CovarianceMatrix::new(m).is_err());
    }

    #[test]
    fn quadratic_form_matches_dense_product() {
        let m = SymMatrix::from_rows(&[
            vec![2.0, 0.5, -1.0],
            vec![0.5, 3.0, 0.2],
            vec![-1.0, 0.2, 1.5],
        ])
        .unwrap();
        let x = [0.3, -0.7, 1.1];
        let mx = m.mul_vec(&x);
        let direct: f64 = x.iter().zip(&mx).map(|(a, b)| a * b).sum();
        assert!((m.quadratic_form(&x) - direct).abs() < 1e-14);
    }
}
