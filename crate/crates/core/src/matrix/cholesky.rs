use super::SymMatrix;
use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor `M = L L'`, stored row-major.
#[derive(Debug, Clone)]
pub struct Cholesky {
    dim: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    /// Factorises a symmetric positive-definite matrix. Fails on a non-positive pivot.
    pub fn new(m: &SymMatrix) -> Result<Self> {
        let n = m.dim();
        let mut lower = vec![0.0; n * n];
        for j in 0..n {
            let mut d = m.get(j, j);
            for k in 0..j {
                d -= lower[j * n + k] * lower[j * n + k];
            }
            if !(d > 0.0) {
                return Err(Error::NotPositiveSemidefinite {
                    min_eigenvalue: d,
                    tolerance: 0.0,
                });
            }
            let d = d.sqrt();
            lower[j * n + j] = d;
            for i in j + 1..n {
                let mut s = m.get(i, j);
                for k in 0..j {
                    s -= lower[i * n + k] * lower[j * n + k];
                }
                lower[i * n + j] = s / d;
            }
        }
        Ok(Self { dim: n, lower })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.lower[i * self.dim + j]
    }

    /// Squared ratio of the largest to smallest pivot; a cheap lower bound on the
    /// 2-norm condition number.
    pub fn condition_estimate(&self) -> f64 {
        let pivots = (0..self.dim).map(|i| self.get(i, i));
        let (lo, hi) = pivots.fold((f64::INFINITY, 0.0_f64), |(lo, hi), p| {
            (lo.min(p), hi.max(p))
        });
        (hi / lo).powi(2)
    }

    /// `L z`.
    pub fn mul_lower(&self, z: &[f64], out: &mut [f64]) {
        let n = self.dim;
        for i in 0..n {
            let row = &self.lower[i * n..i * n + i + 1];
            out[i] = row.iter().zip(z).map(|(a, b)| a * b).sum();
        }
    }

    /// Solves `M x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim;
        assert_eq!(b.len(), n);
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.get(i, k) * y[k];
            }
            y[i] = s / self.get(i, i);
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.get(k, i) * y[k];
            }
            y[i] = s / self.get(i, i);
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reconstructs_and_solves() {
        let m = SymMatrix::from_rows(&[
            vec![4.0, 2.0, 0.4],
            vec![2.0, 5.0, 1.0],
            vec![0.4, 1.0, 3.0],
        ])
        .unwrap();
        let c = Cholesky::new(&m).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| c.get(i, k) * c.get(j, k)).sum();
                assert!((v - m.get(i, j)).abs() < 1e-14);
            }
        }
        let b = [1.0, -2.0, 0.5];
        let x = c.solve(&b);
        let mx = m.mul_vec(&x);
        for (a, b) in mx.iter().zip(b) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_indefinite() {
        let m = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(Cholesky::new(&m).is_err());
        assert!(Cholesky::new(&SymMatrix::zeros(2)).is_err());
    }

    #[test]
    fn condition_of_diagonal() {
        let m = SymMatrix::from_diagonal(&[100.0, 1.0]).unwrap();
        assert!((Cholesky::new(&m).unwrap().condition_estimate() - 100.0).abs() < 1e-12);
    }
}
