//! Eigenvalues of real symmetric matrices.
//!
//! The production route is Householder reduction to tridiagonal form followed by
//! implicit-shift QL iteration. A cyclic Jacobi solver is kept as an independent
//! second route for cross-checks.

use super::SymMatrix;
use crate::error::{Error, Result};

const QL_MAX_ITERATIONS: usize = 60;
const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_RELATIVE_TOLERANCE: f64 = 1e-12;

/// Scratch buffers reused across repeated eigenvalue solves of the same dimension.
#[derive(Debug, Default, Clone)]
pub struct EigenWorkspace {
    dense: Vec<f64>,
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl EigenWorkspace {
    pub fn new() -> Self {
        Self::default()
    }

    fn prepare(&mut self, n: usize) {
        self.dense.resize(n * n, 0.0);
        self.diag.resize(n, 0.0);
        self.off.resize(n, 0.0);
    }

    /// Eigenvalues (unordered) of `m`, left in the workspace's diagonal buffer.
    fn solve(&mut self, m: &SymMatrix) -> Result<&[f64]> {
        let n = m.dim();
        self.prepare(n);
        m.write_dense(&mut self.dense);
        self.solve_dense(n)
    }

    /// Like `solve`, on the difference `a - b` without materialising it.
    fn solve_difference(&mut self, a: &SymMatrix, b: &SymMatrix) -> Result<&[f64]> {
        let n = a.dim();
        self.prepare(n);
        let mut k = 0;
        let (pa, pb) = (a.packed(), b.packed());
        for j in 0..n {
            for i in 0..=j {
                let v = pa[k] - pb[k];
                self.dense[i * n + j] = v;
                self.dense[j * n + i] = v;
                k += 1;
            }
        }
        self.solve_dense(n)
    }

    fn solve_dense(&mut self, n: usize) -> Result<&[f64]> {
        if n == 0 {
            return Ok(&self.diag[..0]);
        }
        if self.dense[..n * n].iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite matrix entry".into()));
        }
        tridiagonalize(&mut self.dense, n, &mut self.diag, &mut self.off);
        tridiagonal_ql(&mut self.diag[..n], &mut self.off[..n])?;
        Ok(&self.diag[..n])
    }

    /// Largest absolute eigenvalue of `a - b`.
    pub fn spectral_norm_of_difference(&mut self, a: &SymMatrix, b: &SymMatrix) -> Result<f64> {
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                actual: b.dim(),
            });
        }
        let ev = self.solve_difference(a, b)?;
        Ok(max_abs(ev))
    }

    pub fn spectral_norm(&mut self, m: &SymMatrix) -> Result<f64> {
        let ev = self.solve(m)?;
        Ok(max_abs(ev))
    }
}

fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

fn sort_descending(mut values: Vec<f64>) -> Vec<f64> {
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

/// All eigenvalues of `m`, in descending order.
pub fn sym_eigenvalues(m: &SymMatrix) -> Result<Vec<f64>> {
    let mut ws = EigenWorkspace::new();
    let ev = ws.solve(m)?.to_vec();
    Ok(sort_descending(ev))
}

/// Induced 2-norm of a symmetric matrix: the largest absolute eigenvalue.
pub fn spectral_norm(m: &SymMatrix) -> Result<f64> {
    let ev = sym_eigenvalues(m)?;
    Ok(max_abs(&ev))
}

/// Eigenvalues by cyclic Jacobi rotations, descending.
///
/// Stops once the off-diagonal Frobenius norm falls to `1e-12 * ||m||_F`.
pub fn jacobi_eigenvalues(m: &SymMatrix) -> Result<Vec<f64>> {
    let n = m.dim();
    let mut a = m.to_dense();
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite matrix entry".into()));
    }
    let threshold = JACOBI_RELATIVE_TOLERANCE * m.frobenius_norm();
    let off_norm = |a: &[f64]| -> f64 {
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    acc += a[i * n + j] * a[i * n + j];
                }
            }
        }
        acc.sqrt()
    };

    let mut converged = off_norm(&a) <= threshold;
    let mut sweeps = 0;
    while !converged && sweeps < JACOBI_MAX_SWEEPS {
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
        sweeps += 1;
        converged = off_norm(&a) <= threshold;
    }
    if !converged {
        return Err(Error::NoConvergence);
    }
    Ok(sort_descending((0..n).map(|i| a[i * n + i]).collect()))
}

/// Householder reduction of the dense symmetric `a` (row-major, lower triangle used).
/// On return `diag` holds the tridiagonal diagonal and `off[i]` the sub-diagonal
/// element coupling rows `i - 1` and `i` (`off[0] = 0`).
fn tridiagonalize(a: &mut [f64], n: usize, diag: &mut [f64], off: &mut [f64]) {
    let idx = |i: usize, j: usize| i * n + j;
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let scale: f64 = (0..=l).map(|k| a[idx(i, k)].abs()).sum();
            if scale == 0.0 {
                off[i] = a[idx(i, l)];
            } else {
                for k in 0..=l {
                    a[idx(i, k)] /= scale;
                    h += a[idx(i, k)] * a[idx(i, k)];
                }
                let f = a[idx(i, l)];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                off[i] = scale * g;
                h -= f * g;
                a[idx(i, l)] = f - g;
                let mut f = 0.0;
                for j in 0..=l {
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += a[idx(j, k)] * a[idx(i, k)];
                    }
                    for k in j + 1..=l {
                        g += a[idx(k, j)] * a[idx(i, k)];
                    }
                    off[j] = g / h;
                    f += off[j] * a[idx(i, j)];
                }
                let hh = f / (h + h);
                for j in 0..=l {
                    let f = a[idx(i, j)];
                    let g = off[j] - hh * f;
                    off[j] = g;
                    for k in 0..=j {
                        a[idx(j, k)] -= f * off[k] + g * a[idx(i, k)];
                    }
                }
            }
        } else {
            off[i] = a[idx(i, l)];
        }
    }
    off[0] = 0.0;
    for i in 0..n {
        diag[i] = a[idx(i, i)];
    }
}

/// Implicit-shift QL on a symmetric tridiagonal matrix; eigenvalues land in `d`.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > QL_MAX_ITERATIONS {
                return Err(Error::NoConvergence);
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(n: usize, rng: &mut impl Rng) -> SymMatrix {
        SymMatrix::from_fn(n, |_, _| rng.random_range(-1.0..1.0)).unwrap()
    }

    #[test]
    fn identity_and_diagonal() {
        assert_eq!(
            sym_eigenvalues(&SymMatrix::identity(3)).unwrap(),
            vec![1.0, 1.0, 1.0]
        );
        let d = SymMatrix::from_diagonal(&[1.0, -2.0, 4.0]).unwrap();
        assert_eq!(sym_eigenvalues(&d).unwrap(), vec![4.0, 1.0, -2.0]);
    }

    #[test]
    fn spectral_norm_small_cases() {
        assert_eq!(spectral_norm(&SymMatrix::zeros(3)).unwrap(), 0.0);
        let d = SymMatrix::from_diagonal(&[-3.0, 2.0]).unwrap();
        assert_eq!(spectral_norm(&d).unwrap(), 3.0);
        let a = 0.7;
        let m = SymMatrix::from_rows(&[vec![0.0, a], vec![a, 0.0]]).unwrap();
        assert!((spectral_norm(&m).unwrap() - a).abs() < 1e-15);
    }

    #[test]
    fn empty_and_one_by_one() {
        assert!(sym_eigenvalues(&SymMatrix::zeros(0)).unwrap().is_empty());
        let m = SymMatrix::from_diagonal(&[-5.5]).unwrap();
        assert_eq!(sym_eigenvalues(&m).unwrap(), vec![-5.5]);
        assert_eq!(spectral_norm(&m).unwrap(), 5.5);
    }

    #[test]
    fn rejects_non_finite() {
        let m = SymMatrix::from_packed_unchecked(2, vec![1.0, f64::NAN, 1.0]);
        assert!(matches!(sym_eigenvalues(&m), Err(Error::InvalidInput(_))));
        assert!(jacobi_eigenvalues(&m).is_err());
    }

    #[test]
    fn ql_agrees_with_jacobi() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [2, 3, 5, 16, 40] {
            for _ in 0..5 {
                let m = random_sym(n, &mut rng);
                let a = sym_eigenvalues(&m).unwrap();
                let b = jacobi_eigenvalues(&m).unwrap();
                for (x, y) in a.iter().zip(&b) {
                    assert!((x - y).abs() < 1e-11, "n={n}: {x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn trace_and_frobenius_preserved() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = random_sym(30, &mut rng);
        let ev = sym_eigenvalues(&m).unwrap();
        let sum: f64 = ev.iter().sum();
        let sq: f64 = ev.iter().map(|v| v * v).sum();
        assert!((sum - m.trace()).abs() < 1e-11);
        assert!((sq.sqrt() - m.frobenius_norm()).abs() < 1e-11);
    }

    #[test]
    fn repeated_eigenvalues() {
        // all-ones 6x6: eigenvalues 6, 0 x5
        let m = SymMatrix::from_fn(6, |_, _| 1.0).unwrap();
        let ev = sym_eigenvalues(&m).unwrap();
        assert!((ev[0] - 6.0).abs() < 1e-13);
        assert!(ev[1..].iter().all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn workspace_difference_matches_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_sym(12, &mut rng);
        let b = random_sym(12, &mut rng);
        let mut ws = EigenWorkspace::new();
        let via_ws = ws.spectral_norm_of_difference(&a, &b).unwrap();
        let direct = spectral_norm(&a.checked_sub(&b).unwrap()).unwrap();
        assert_eq!(via_ws, direct);
    }
}
