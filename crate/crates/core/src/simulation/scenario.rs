use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{CorrelationMatrix, SymMatrix};

/// Correlation dynamics of a synthetic market.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScenarioKind {
    /// Every pair correlated at `rho`.
    Equicorrelation { rho: f64 },
    /// Two blocks whose within-block correlations cycle through `regimes`,
    /// each regime lasting `regime_length` days.
    RegimeSwitching {
        regimes: Vec<(f64, f64)>,
        regime_length: usize,
        cross: f64,
    },
    /// Two blocks with `offset + amplitude * sin(2 pi (t - shift) / period)` within each
    /// block; the second block is shifted by half a period.
    Sinusoidal {
        offset: f64,
        amplitude: f64,
        period: usize,
        cross: f64,
    },
}

/// Correlation parameters in force on one day.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockParameters {
    pub first: f64,
    pub cross: f64,
    pub second: f64,
}

impl BlockParameters {
    fn key(&self) -> [u64; 3] {
        [
            self.first.to_bits(),
            self.cross.to_bits(),
            self.second.to_bits(),
        ]
    }
}

/// Entries of the correlation matrix sharing one true parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParameterGroup {
    /// All off-diagonal pairs (single-block scenarios).
    All,
    /// Pairs within the first block.
    First,
    /// Pairs straddling the two blocks.
    Cross,
    /// Pairs within the second block.
    Second,
}

impl ParameterGroup {
    pub fn label(&self) -> &'static str {
        match self {
            ParameterGroup::All => "rho",
            ParameterGroup::First => "rho1",
            ParameterGroup::Cross => "rho2",
            ParameterGroup::Second => "rho3",
        }
    }

    pub fn value(&self, p: &BlockParameters) -> f64 {
        match self {
            ParameterGroup::All | ParameterGroup::First => p.first,
            ParameterGroup::Cross => p.cross,
            ParameterGroup::Second => p.second,
        }
    }
}

/// A synthetic market: correlation dynamics, dimension, length and per-asset volatilities.
///
/// Days run from 1 to `horizon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub n_assets: usize,
    pub horizon: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub volatilities: Option<Vec<f64>>,
}

impl ScenarioSpec {
    /// Validates the spec, including positive definiteness of every distinct true matrix.
    pub fn new(kind: ScenarioKind, n_assets: usize, horizon: usize) -> Result<Self> {
        let spec = Self {
            kind,
            n_assets,
            horizon,
            volatilities: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Constant equicorrelation 0.7 over 16 assets.
    pub fn scenario1(horizon: usize) -> Self {
        Self::new(ScenarioKind::Equicorrelation { rho: 0.7 }, 16, horizon)
            .expect("valid built-in scenario")
    }

    /// Two 8-asset blocks cycling through (0.7, 0.3), (0.5, 0.5), (0.3, 0.7) every 100 days.
    pub fn scenario2(horizon: usize) -> Self {
        let kind = ScenarioKind::RegimeSwitching {
            regimes: vec![(0.7, 0.3), (0.5, 0.5), (0.3, 0.7)],
            regime_length: 100,
            cross: 0.2,
        };
        Self::new(kind, 16, horizon).expect("valid built-in scenario")
    }

    /// Two 8-asset blocks with sinusoidal within-block correlation of period 600.
    pub fn scenario3(horizon: usize) -> Self {
        let kind = ScenarioKind::Sinusoidal {
            offset: 0.4,
            amplitude: 0.3,
            period: 600,
            cross: 0.2,
        };
        Self::new(kind, 16, horizon).expect("valid built-in scenario")
    }

    /// Built-in scenario by number (1, 2 or 3).
    pub fn builtin(number: u8, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be positive".into()));
        }
        match number {
            1 => Ok(Self::scenario1(horizon)),
            2 => Ok(Self::scenario2(horizon)),
            3 => Ok(Self::scenario3(horizon)),
            _ => Err(Error::InvalidParameter(format!(
                "unknown scenario {number}; expected 1, 2 or 3"
            ))),
        }
    }

    pub fn with_assets(mut self, n_assets: usize) -> Result<Self> {
        self.n_assets = n_assets;
        self.validate()?;
        Ok(self)
    }

    pub fn with_volatilities(mut self, volatilities: Vec<f64>) -> Result<Self> {
        self.volatilities = Some(volatilities);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_assets < 2 {
            return Err(Error::InvalidParameter(
                "a scenario needs at least 2 assets".into(),
            ));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be positive".into()));
        }
        if self.is_blocked() && self.n_assets < 4 {
            return Err(Error::InvalidParameter(
                "a two-block scenario needs at least 4 assets".into(),
            ));
        }
        if let Some(v) = &self.volatilities {
            if v.len() != self.n_assets {
                return Err(Error::DimensionMismatch {
                    expected: self.n_assets,
                    actual: v.len(),
                });
            }
            if let Some(bad) = v.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
                return Err(Error::InvalidParameter(format!(
                    "volatility {bad} must be positive"
                )));
            }
        }
        match &self.kind {
            ScenarioKind::Equicorrelation { .. } => {}
            ScenarioKind::RegimeSwitching {
                regimes,
                regime_length,
                ..
            } => {
                if regimes.is_empty() || *regime_length == 0 {
                    return Err(Error::InvalidParameter(
                        "regime table and regime length must be non-empty".into(),
                    ));
                }
            }
            ScenarioKind::Sinusoidal { period, .. } => {
                if *period == 0 {
                    return Err(Error::InvalidParameter("period must be positive".into()));
                }
            }
        }
        for p in self.distinct_parameters() {
            for v in [p.first, p.cross, p.second] {
                if !(v.is_finite() && (-1.0..=1.0).contains(&v)) {
                    return Err(Error::InvalidParameter(format!(
                        "correlation parameter {v} outside [-1, 1]"
                    )));
                }
            }
            let m = self.matrix_for(&p);
            let min = m.min_eigenvalue()?;
            if min <= 0.0 {
                return Err(Error::NotPositiveSemidefinite {
                    min_eigenvalue: min,
                    tolerance: 0.0,
                });
            }
        }
        Ok(())
    }

    pub fn is_blocked(&self) -> bool {
        !matches!(self.kind, ScenarioKind::Equicorrelation { .. })
    }

    /// Size of the first block.
    pub fn split(&self) -> usize {
        if self.is_blocked() {
            self.n_assets / 2
        } else {
            self.n_assets
        }
    }

    /// Days after which the correlation path repeats exactly, if it changes at all.
    pub fn period(&self) -> Option<usize> {
        match &self.kind {
            ScenarioKind::Equicorrelation { .. } => None,
            ScenarioKind::RegimeSwitching {
                regimes,
                regime_length,
                ..
            } => Some(regimes.len() * regime_length),
            ScenarioKind::Sinusoidal { period, .. } => Some(*period),
        }
    }

    /// Parameters in force on day `t` (no range check).
    pub fn parameters_at(&self, t: usize) -> BlockParameters {
        match &self.kind {
            ScenarioKind::Equicorrelation { rho } => BlockParameters {
                first: *rho,
                cross: *rho,
                second: *rho,
            },
            ScenarioKind::RegimeSwitching {
                regimes,
                regime_length,
                cross,
            } => {
                let (first, second) =
                    regimes[(t.saturating_sub(1) / regime_length) % regimes.len()];
                BlockParameters {
                    first,
                    cross: *cross,
                    second,
                }
            }
            ScenarioKind::Sinusoidal {
                offset,
                amplitude,
                period,
                cross,
            } => {
                let phase = |shift: usize| {
                    let k = (t + period - shift % period) % period;
                    offset + amplitude * (2.0 * PI * k as f64 / *period as f64).sin()
                };
                BlockParameters {
                    first: phase(0),
                    cross: *cross,
                    second: phase(period / 2),
                }
            }
        }
    }

    /// Parameters on day `t`, which must lie in `1..=horizon`.
    pub fn parameters(&self, t: usize) -> Result<BlockParameters> {
        self.check_day(t)?;
        Ok(self.parameters_at(t))
    }

    fn check_day(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.horizon {
            return Err(Error::InvalidParameter(format!(
                "day {t} outside 1..={}",
                self.horizon
            )));
        }
        Ok(())
    }

    fn distinct_parameters(&self) -> Vec<BlockParameters> {
        let days = self.period().unwrap_or(1).min(self.horizon).max(1);
        let mut seen = std::collections::HashSet::new();
        (1..=days)
            .map(|t| self.parameters_at(t))
            .filter(|p| seen.insert(p.key()))
            .collect()
    }

    /// Parameter group of the pair `(i, j)`, `i != j`.
    pub fn group_of(&self, i: usize, j: usize) -> ParameterGroup {
        if !self.is_blocked() {
            return ParameterGroup::All;
        }
        let split = self.split();
        match (i < split, j < split) {
            (true, true) => ParameterGroup::First,
            (false, false) => ParameterGroup::Second,
            _ => ParameterGroup::Cross,
        }
    }

    /// Groups present in this scenario, in report order.
    pub fn groups(&self) -> Vec<ParameterGroup> {
        if self.is_blocked() {
            vec![
                ParameterGroup::First,
                ParameterGroup::Cross,
                ParameterGroup::Second,
            ]
        } else {
            vec![ParameterGroup::All]
        }
    }

    pub(crate) fn matrix_for(&self, p: &BlockParameters) -> SymMatrix {
        SymMatrix::from_fn_unchecked(self.n_assets, |i, j| {
            if i == j {
                1.0
            } else {
                self.group_of(i, j).value(p)
            }
        })
    }

    /// True correlation matrix on day `t`.
    pub fn true_correlation(&self, t: usize) -> Result<CorrelationMatrix> {
        let p = self.parameters(t)?;
        Ok(CorrelationMatrix::from_sym_unchecked(self.matrix_for(&p)))
    }
}

/// Free-function form of [`ScenarioSpec::true_correlation`].
pub fn true_correlation(spec: &ScenarioSpec, t: usize) -> Result<CorrelationMatrix> {
    spec.true_correlation(t)
}

/// Pairwise similarity of the true correlation matrices on days `1..=up_to`.
///
/// Entry `(t1 - 1, t2 - 1)` holds the similarity of days `t1` and `t2`. Distinct
/// parameter sets are compared once and the results broadcast.
pub fn theoretical_similarity_matrix(spec: &ScenarioSpec, up_to: usize) -> Result<SymMatrix> {
    if up_to > spec.horizon {
        return Err(Error::InvalidParameter(format!(
            "up_to = {up_to} exceeds horizon {}",
            spec.horizon
        )));
    }
    let mut index = std::collections::HashMap::new();
    let mut distinct: Vec<SymMatrix> = Vec::new();
    let class: Vec<usize> = (1..=up_to)
        .map(|t| {
            let p = spec.parameters_at(t);
            *index.entry(p.key()).or_insert_with(|| {
                distinct.push(spec.matrix_for(&p));
                distinct.len() - 1
            })
        })
        .collect();
    let k = distinct.len();
    let mut ws = crate::matrix::EigenWorkspace::new();
    let mut table = vec![0.0; k * k];
    for a in 0..k {
        for b in a + 1..k {
            let z = ws.spectral_norm_of_difference(&distinct[a], &distinct[b])?;
            table[a * k + b] = z;
            table[b * k + a] = z;
        }
    }
    Ok(SymMatrix::from_fn_unchecked(up_to, |i, j| {
        table[class[i] * k + class[j]]
    }))
}
