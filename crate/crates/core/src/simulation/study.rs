use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scenario::{ParameterGroup, ScenarioSpec};
use crate::error::{Error, Result};
use crate::estimators::{correlation, CorrelationFlavor};
use crate::matrix::{Cholesky, CorrelationMatrix};
use crate::panel::{ReturnPanel, Window};
use crate::similarity::{
    exponential_correlation, similarity_weights, weighted_correlation, ProbeSeries,
};

/// Draws a return panel from the scenario; panel times are the days `1..=horizon`.
///
/// Day `t` is a zero-mean normal vector with correlation `true_correlation(t)` and
/// standard deviations `volatilities` (unit by default).
pub fn simulate_returns(spec: &ScenarioSpec, seed: u64) -> Result<ReturnPanel> {
    simulate_with_rng(spec, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub(crate) fn simulate_with_rng(spec: &ScenarioSpec, rng: &mut ChaCha8Rng) -> Result<ReturnPanel> {
    spec.validate()?;
    let n = spec.n_assets;
    let mut values = Vec::with_capacity(n * spec.horizon);
    let mut z = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut cached: Option<(super::scenario::BlockParameters, Cholesky)> = None;
    for t in 1..=spec.horizon {
        let p = spec.parameters_at(t);
        if cached.as_ref().is_none_or(|(q, _)| *q != p) {
            cached = Some((p, Cholesky::new(&spec.matrix_for(&p))?));
        }
        let chol = &cached.as_ref().expect("factor cached").1;
        for zi in z.iter_mut() {
            *zi = StandardNormal.sample(rng);
        }
        chol.mul_lower(&z, &mut x);
        if let Some(vol) = &spec.volatilities {
            for (xi, s) in x.iter_mut().zip(vol) {
                *xi *= s;
            }
        }
        values.extend_from_slice(&x);
    }
    let assets = (1..=n).map(|i| format!("S{i:03}")).collect();
    ReturnPanel::new((1..=spec.horizon as i64).collect(), assets, values)
}

/// Settings for the three estimators compared in the study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSettings {
    /// Probe window length `L`.
    pub probe_window: usize,
    /// Top-`s` restriction of the similarity weights.
    pub top_s: usize,
    /// Trailing window of the unweighted estimator.
    pub unweighted_window: usize,
    /// Decay of the exponential estimator.
    pub lambda: f64,
    /// Number of returns in the exponential estimator.
    pub exponential_window: usize,
    /// Probe correlation flavour.
    pub flavor: CorrelationFlavor,
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        Self {
            probe_window: 50,
            top_s: 300,
            unweighted_window: 300,
            lambda: 0.94,
            exponential_window: 300,
            flavor: CorrelationFlavor::Pearson,
        }
    }
}

impl EstimatorSettings {
    pub fn validate(&self) -> Result<()> {
        if self.probe_window < 2 || self.unweighted_window < 2 || self.exponential_window < 2 {
            return Err(Error::InvalidWindow(
                "estimator windows must span at least 2 returns".into(),
            ));
        }
        if self.top_s == 0 {
            return Err(Error::InvalidParameter("top_s must be positive".into()));
        }
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda = {} must lie in (0, 1)",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// Monte Carlo study configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub eval_days: Vec<usize>,
    pub repetitions: usize,
    pub seed: u64,
    #[serde(default)]
    pub estimators: EstimatorSettings,
}

impl StudyConfig {
    pub fn new(eval_days: Vec<usize>, repetitions: usize, seed: u64) -> Self {
        Self {
            eval_days,
            repetitions,
            seed,
            estimators: EstimatorSettings::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Similarity,
    Unweighted,
    Exponential,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 3] = [
        EstimatorKind::Similarity,
        EstimatorKind::Unweighted,
        EstimatorKind::Exponential,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            EstimatorKind::Similarity => "similarity",
            EstimatorKind::Unweighted => "unweighted",
            EstimatorKind::Exponential => "exponential",
        }
    }
}

/// Estimates from one repetition at one day: the estimated entries of one group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupEstimate {
    pub day: usize,
    pub estimator: EstimatorKind,
    pub group: ParameterGroup,
    /// Upper-triangle entries of the group, in row-major order.
    pub entries: Vec<f64>,
}

impl GroupEstimate {
    pub fn mean(&self) -> f64 {
        self.entries.iter().sum::<f64>() / self.entries.len() as f64
    }
}

/// Outcome of one repetition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepetitionRecord {
    pub repetition: usize,
    pub estimates: Vec<GroupEstimate>,
    /// Set when an estimator failed; the repetition then contributes no estimates.
    pub error: Option<String>,
}

/// Pooled statistics for one (day, group, estimator) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRow {
    pub day: usize,
    pub group: ParameterGroup,
    pub true_value: f64,
    pub estimator: EstimatorKind,
    pub mean: f64,
    pub std_dev: f64,
    /// Number of pooled values (repetitions times group entries).
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub scenario: ScenarioSpec,
    pub config: StudyConfig,
    pub rows: Vec<StudyRow>,
    pub repetitions: Vec<RepetitionRecord>,
}

impl SimulationReport {
    pub fn completed(&self) -> usize {
        self.repetitions
            .iter()
            .filter(|r| r.error.is_none())
            .count()
    }

    pub fn failures(&self) -> impl Iterator<Item = &RepetitionRecord> {
        self.repetitions.iter().filter(|r| r.error.is_some())
    }

    pub fn row(
        &self,
        day: usize,
        group: ParameterGroup,
        estimator: EstimatorKind,
    ) -> Option<&StudyRow> {
        self.rows
            .iter()
            .find(|r| r.day == day && r.group == group && r.estimator == estimator)
    }
}

/// Random stream for repetition `rep`: the master seed with the stream set to `rep`.
pub fn repetition_rng(master: u64, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(rep as u64);
    rng
}

fn group_entries(spec: &ScenarioSpec, c: &CorrelationMatrix, group: ParameterGroup) -> Vec<f64> {
    let n = spec.n_assets;
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if spec.group_of(i, j) == group {
                out.push(c.get(i, j));
            }
        }
    }
    out
}

/// Evaluates the three estimators on one panel at the given days.
pub fn evaluate_panel(
    spec: &ScenarioSpec,
    panel: &ReturnPanel,
    eval_days: &[usize],
    settings: &EstimatorSettings,
) -> Result<Vec<GroupEstimate>> {
    let probes = ProbeSeries::build(panel, settings.probe_window, settings.flavor)?;
    let mut out = Vec::new();
    for &day in eval_days {
        let row = panel
            .row_of_time(day as i64)
            .ok_or_else(|| Error::InvalidParameter(format!("day {day} not in the panel")))?;
        let weights = similarity_weights(&probes, day as i64, Some(settings.top_s))?;
        let sim = weighted_correlation(&probes, &weights)?;
        let unw = correlation(
            panel,
            Window::trailing(row, settings.unweighted_window)?,
            CorrelationFlavor::Pearson,
        )?;
        let exp =
            exponential_correlation(panel, row, settings.exponential_window, settings.lambda)?;
        for (kind, c) in EstimatorKind::ALL.iter().zip([&sim, &unw, &exp]) {
            for group in spec.groups() {
                out.push(GroupEstimate {
                    day,
                    estimator: *kind,
                    group,
                    entries: group_entries(spec, c, group),
                });
            }
        }
    }
    Ok(out)
}

fn run_repetition(spec: &ScenarioSpec, config: &StudyConfig, rep: usize) -> RepetitionRecord {
    let result = simulate_with_rng(spec, &mut repetition_rng(config.seed, rep))
        .and_then(|panel| evaluate_panel(spec, &panel, &config.eval_days, &config.estimators));
    match result {
        Ok(estimates) => RepetitionRecord {
            repetition: rep,
            estimates,
            error: None,
        },
        Err(e) => RepetitionRecord {
            repetition: rep,
            estimates: Vec::new(),
            error: Some(e.to_string()),
        },
    }
}

/// Runs the Monte Carlo study: each repetition simulates a fresh panel and evaluates
/// the similarity-weighted, unweighted and exponential estimators at every eval day.
///
/// Repetitions run in parallel; aggregation follows repetition order, so the report
/// depends only on the configuration.
pub fn run_study(spec: &ScenarioSpec, config: &StudyConfig) -> Result<SimulationReport> {
    spec.validate()?;
    config.estimators.validate()?;
    if config.repetitions < 2 {
        return Err(Error::InvalidParameter(
            "a study needs at least 2 repetitions".into(),
        ));
    }
    if config.eval_days.is_empty() {
        return Err(Error::InvalidParameter("no evaluation days".into()));
    }
    if let Some(&d) = config
        .eval_days
        .iter()
        .find(|&&d| d == 0 || d > spec.horizon)
    {
        return Err(Error::InvalidParameter(format!(
            "eval day {d} outside 1..={}",
            spec.horizon
        )));
    }
    let repetitions: Vec<RepetitionRecord> = (0..config.repetitions)
        .into_par_iter()
        .map(|rep| run_repetition(spec, config, rep))
        .collect();
    let rows = aggregate(spec, config, &repetitions);
    Ok(SimulationReport {
        scenario: spec.clone(),
        config: config.clone(),
        rows,
        repetitions,
    })
}

fn aggregate(
    spec: &ScenarioSpec,
    config: &StudyConfig,
    reps: &[RepetitionRecord],
) -> Vec<StudyRow> {
    let mut rows = Vec::new();
    for &day in &config.eval_days {
        let truth = spec.parameters_at(day);
        for group in spec.groups() {
            for estimator in EstimatorKind::ALL {
                let values: Vec<f64> = reps
                    .iter()
                    .flat_map(|r| r.estimates.iter())
                    .filter(|e| e.day == day && e.group == group && e.estimator == estimator)
                    .flat_map(|e| e.entries.iter().copied())
                    .collect();
                let (mean, std_dev) = mean_and_std(&values);
                rows.push(StudyRow {
                    day,
                    group,
                    true_value: group.value(&truth),
                    estimator,
                    mean,
                    std_dev,
                    count: values.len(),
                });
            }
        }
    }
    rows
}

/// Mean and sample standard deviation (denominator `n - 1`); NaN where undefined.
pub fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, f64::NAN);
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{pearson_correlation, sample_covariance};

    #[test]
    fn identical_seeds_identical_panels() {
        let s = ScenarioSpec::scenario3(400);
        assert_eq!(
            simulate_returns(&s, 9).unwrap(),
            simulate_returns(&s, 9).unwrap()
        );
        assert_ne!(
            simulate_returns(&s, 9).unwrap(),
            simulate_returns(&s, 10).unwrap()
        );
        let p = simulate_returns(&s, 9).unwrap();
        assert_eq!(p.times()[0], 1);
        assert_eq!(p.len(), 400);
    }

    #[test]
    fn scenario1_sample_correlation_is_consistent() {
        let n_days = 20_000;
        let p = simulate_returns(&ScenarioSpec::scenario1(n_days), 3).unwrap();
        let c = pearson_correlation(&p, Window::new(0, n_days - 1).unwrap()).unwrap();
        // asymptotic standard error of a sample correlation: (1 - rho^2) / sqrt(n)
        let se = (1.0 - 0.49) / (n_days as f64).sqrt();
        for i in 0..16 {
            for j in i + 1..16 {
                assert!(
                    (c.get(i, j) - 0.7).abs() < 4.0 * se,
                    "({i}, {j}) = {}",
                    c.get(i, j)
                );
            }
        }
        let cov = sample_covariance(&p, Window::new(0, n_days - 1).unwrap()).unwrap();
        let se_var = (2.0 / n_days as f64).sqrt();
        for v in cov.as_sym().diagonal() {
            assert!((v - 1.0).abs() < 4.0 * se_var);
        }
    }

    #[test]
    fn volatilities_scale_returns() {
        let vols: Vec<f64> = (0..16).map(|i| 0.01 * (1 + i) as f64).collect();
        let s = ScenarioSpec::scenario1(10)
            .with_volatilities(vols.clone())
            .unwrap();
        let a = simulate_returns(&s, 4).unwrap();
        let b = simulate_returns(&ScenarioSpec::scenario1(10), 4).unwrap();
        for r in 0..10 {
            for k in 0..16 {
                assert!((a.value(r, k) - b.value(r, k) * vols[k]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn mean_and_std_small_cases() {
        assert_eq!(mean_and_std(&[1.0, 3.0]), (2.0, 2f64.sqrt()));
        assert!(mean_and_std(&[]).0.is_nan());
        assert!(mean_and_std(&[1.0]).1.is_nan());
    }

    #[test]
    fn study_validates_configuration() {
        let s = ScenarioSpec::scenario1(600);
        assert!(run_study(&s, &StudyConfig::new(vec![500], 1, 0)).is_err());
        assert!(run_study(&s, &StudyConfig::new(vec![700], 2, 0)).is_err());
        assert!(run_study(&s, &StudyConfig::new(vec![], 2, 0)).is_err());
        let mut c = StudyConfig::new(vec![500], 2, 0);
        c.estimators.lambda = 1.0;
        assert!(run_study(&s, &c).is_err());
    }

    #[test]
    fn small_study_is_deterministic_and_complete() {
        let s = ScenarioSpec::scenario2(450);
        let c = StudyConfig::new(vec![400, 450], 3, 11);
        let a = run_study(&s, &c).unwrap();
        let b = run_study(&s, &c).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.repetitions.len(), 3);
        assert_eq!(a.completed(), 3, "{:?}", a.failures().next());
        assert_eq!(a.rows.len(), 2 * 3 * 3);
        for row in &a.rows {
            assert!(row.std_dev >= 0.0);
            let per_rep = if row.group == ParameterGroup::Cross {
                64
            } else {
                28
            };
            assert_eq!(row.count, 3 * per_rep);
        }
        let r = a
            .row(400, ParameterGroup::First, EstimatorKind::Unweighted)
            .unwrap();
        assert_eq!(r.true_value, 0.7);
    }

    #[test]
    fn too_short_history_is_reported_per_repetition() {
        // 300 returns are needed by the unweighted estimator; day 200 cannot supply them
        let s = ScenarioSpec::scenario1(400);
        let report = run_study(&s, &StudyConfig::new(vec![200], 2, 1)).unwrap();
        assert_eq!(report.completed(), 0);
        assert_eq!(report.failures().count(), 2);
        assert!(report.rows.iter().all(|r| r.count == 0 && r.mean.is_nan()));
    }

    #[test]
    fn repetition_streams_differ() {
        use rand::Rng;
        let a: u64 = repetition_rng(1, 0).random();
        let b: u64 = repetition_rng(1, 1).random();
        let c: u64 = repetition_rng(1, 0).random();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }
}
