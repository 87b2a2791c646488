use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{Cholesky, CovarianceMatrix, SymMatrix};

/// Budget-constrained portfolio weights; short positions allowed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PortfolioWeights {
    pub weights: Vec<f64>,
    /// The covariance needed a ridge before it could be inverted.
    pub regularized: bool,
}

impl PortfolioWeights {
    pub const BUDGET_TOLERANCE: f64 = 1e-10;

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn variance(&self, sigma: &CovarianceMatrix) -> f64 {
        sigma.as_sym().quadratic_form(&self.weights)
    }

    pub fn expected_return(&self, mu: &[f64]) -> f64 {
        self.weights.iter().zip(mu).map(|(w, m)| w * m).sum()
    }

    fn checked(weights: Vec<f64>, regularized: bool) -> Result<Self> {
        let p = Self {
            weights,
            regularized,
        };
        if p.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvariantViolation(
                "non-finite portfolio weight".into(),
            ));
        }
        if (p.sum() - 1.0).abs() > Self::BUDGET_TOLERANCE {
            return Err(Error::InvariantViolation(format!(
                "weights sum to {}",
                p.sum()
            )));
        }
        Ok(p)
    }
}

/// Symmetric positive-definite solver with a single ridge retry.
#[derive(Debug, Clone)]
pub struct SpdSolver {
    factor: Cholesky,
    regularized: bool,
}

impl SpdSolver {
    pub const MAX_CONDITION: f64 = 1e12;
    pub const RIDGE_SCALE: f64 = 1e-8;

    pub fn new(sigma: &SymMatrix) -> Result<Self> {
        let k = sigma.dim();
        if k == 0 {
            return Err(Error::InvalidInput("empty covariance matrix".into()));
        }
        let ridge = Self::RIDGE_SCALE * sigma.trace() / k as f64;
        match Self::factor(sigma) {
            Ok(factor) => Ok(Self {
                factor,
                regularized: false,
            }),
            Err(reason) => {
                let ridged = sigma.checked_add(&SymMatrix::identity(k).scaled(ridge))?;
                match Self::factor(&ridged) {
                    Ok(factor) => Ok(Self {
                        factor,
                        regularized: true,
                    }),
                    Err(again) => Err(Error::SingularCovariance {
                        reason: format!("{reason}; after ridge {ridge:e}: {again}"),
                        ridge_hint: ridge,
                    }),
                }
            }
        }
    }

    fn factor(m: &SymMatrix) -> std::result::Result<Cholesky, String> {
        let c = Cholesky::new(m).map_err(|_| "factorisation failed".to_string())?;
        let cond = c.condition_estimate();
        if !(cond <= Self::MAX_CONDITION) {
            return Err(format!(
                "condition estimate {cond:e} exceeds {:e}",
                Self::MAX_CONDITION
            ));
        }
        Ok(c)
    }

    pub fn regularized(&self) -> bool {
        self.regularized
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.factor.solve(b)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimum-variance portfolio `Sigma^-1 1 / (1' Sigma^-1 1)`.
pub fn minimum_variance_portfolio(sigma: &CovarianceMatrix) -> Result<PortfolioWeights> {
    let solver = SpdSolver::new(sigma.as_sym())?;
    let x = solver.solve(&vec![1.0; sigma.dim()]);
    let beta: f64 = x.iter().sum();
    PortfolioWeights::checked(x.iter().map(|v| v / beta).collect(), solver.regularized())
}

struct Frontier {
    a: Vec<f64>,
    b: Vec<f64>,
    alpha: f64,
    beta: f64,
    gamma: f64,
    regularized: bool,
}

fn frontier(sigma: &CovarianceMatrix, mu: &[f64], target: f64) -> Result<Frontier> {
    let k = sigma.dim();
    if mu.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            actual: mu.len(),
        });
    }
    if !target.is_finite() || mu.iter().any(|m| !m.is_finite()) {
        return Err(Error::InvalidInput(
            "non-finite expected return or target".into(),
        ));
    }
    let solver = SpdSolver::new(sigma.as_sym())?;
    let a = solver.solve(mu);
    let b = solver.solve(&vec![1.0; k]);
    let alpha: f64 = b.iter().zip(mu).map(|(x, m)| x * m).sum();
    let beta: f64 = b.iter().sum();
    let q = dot(mu, &a);
    let denom = q - alpha * alpha / beta;
    if denom.abs() < 1e-12 * dot(mu, mu) || denom == 0.0 {
        return Err(Error::DegenerateFrontier);
    }
    let gamma = (target - alpha / beta) / denom;
    Ok(Frontier {
        a,
        b,
        alpha,
        beta,
        gamma,
        regularized: solver.regularized(),
    })
}

/// Risk tolerance `gamma` whose optimal portfolio earns exactly `target`.
pub fn gamma_for_target(sigma: &CovarianceMatrix, mu: &[f64], target: f64) -> Result<f64> {
    Ok(frontier(sigma, mu, target)?.gamma)
}

/// Minimum-variance portfolio subject to `w' mu = target`.
pub fn target_return_portfolio(
    sigma: &CovarianceMatrix,
    mu: &[f64],
    target: f64,
) -> Result<PortfolioWeights> {
    let f = frontier(sigma, mu, target)?;
    let nu = (1.0 - f.gamma * f.alpha) / f.beta;
    let w =
        f.a.iter()
            .zip(&f.b)
            .map(|(a, b)| f.gamma * a + nu * b)
            .collect();
    PortfolioWeights::checked(w, f.regularized)
}

/// Equal weights `1/K`.
pub fn naive_portfolio(k: usize) -> Result<PortfolioWeights> {
    if k == 0 {
        return Err(Error::InvalidParameter(
            "naive portfolio needs at least one asset".into(),
        ));
    }
    Ok(PortfolioWeights {
        weights: vec![1.0 / k as f64; k],
        regularized: false,
    })
}

/// Sum of squared daily portfolio returns.
pub fn realized_volatility(returns: &[f64]) -> f64 {
    returns.iter().map(|r| r * r).sum()
}

/// Compounded simple return of a daily return series.
pub fn realized_return(returns: &[f64]) -> f64 {
    returns.iter().fold(1.0, |v, r| v * (1.0 + r)) - 1.0
}
