use proptest::prelude::*;
use simweight::portfolio::{
    minimum_variance_portfolio, naive_portfolio, run_backtest, BacktestConfig, RebalanceMode,
};
use simweight::simulation::{
    simulate_returns, theoretical_similarity_matrix, true_correlation, ParameterGroup, ScenarioSpec,
};
use simweight::{
    restrict_top_s, similarity, similarity_profile, similarity_weights, weight_scheme,
    weighted_correlation, CorrelationFlavor, CorrelationMatrix, ProbeSeries,
};

#[test]
fn similarity_weights_favour_the_current_regime() {
    let spec = ScenarioSpec::scenario2(1000);
    let panel = simulate_returns(&spec, 11).unwrap();
    let probes = ProbeSeries::build(&panel, 50, CorrelationFlavor::Pearson).unwrap();
    // eval day 1000 uses rows up to day 999, inside the first regime (days 901..=1000)
    let t0 = 999;
    let w = similarity_weights(&probes, t0, Some(300)).unwrap();
    let regime = |t: i64| ((t - 1) / 100) % 3;
    let (mut same, mut other) = (0.0, 0.0);
    for (t, v) in w.times.iter().zip(&w.weights) {
        // skip probes whose window straddles a regime change
        if regime(*t) != regime(*t - 49) || *t > t0 - 50 {
            continue;
        }
        if regime(*t) == regime(t0) {
            same += v;
        } else {
            other += v;
        }
    }
    assert!(same > 2.0 * other, "same-regime mass {same}, other {other}");

    let c = weighted_correlation(&probes, &w).unwrap();
    let truth = true_correlation(&spec, 1000).unwrap();
    let first = spec.split();
    let mean_first: f64 = (0..first)
        .flat_map(|i| (0..i).map(move |j| (i, j)))
        .map(|(i, j)| c.get(i, j))
        .sum::<f64>()
        / (first * (first - 1) / 2) as f64;
    assert!((mean_first - truth.get(0, 1)).abs() < 0.1, "{mean_first}");
}

#[test]
fn empirical_similarity_tracks_the_theoretical_grid() {
    let spec = ScenarioSpec::scenario2(600);
    let theory = theoretical_similarity_matrix(&spec, 600).unwrap();
    // identical regimes are at distance zero, regimes one and three the furthest apart
    assert_eq!(theory.get(49, 349), 0.0);
    assert!(theory.get(49, 249) > theory.get(49, 149));

    let panel = simulate_returns(&spec.clone().with_assets(16).unwrap(), 5).unwrap();
    let probes = ProbeSeries::build(&panel, 80, CorrelationFlavor::Pearson).unwrap();
    let at = |day: i64| probes.correlation(probes.index_of_time(day).unwrap());
    let near = similarity(at(100), at(400)).unwrap();
    let mid = similarity(at(100), at(200)).unwrap();
    let far = similarity(at(100), at(300)).unwrap();
    assert!(near < mid && mid < far, "{near} {mid} {far}");
}

#[test]
fn group_labels_cover_blocked_matrices() {
    let spec = ScenarioSpec::scenario3(700);
    let groups = spec.groups();
    assert_eq!(
        groups,
        vec![
            ParameterGroup::First,
            ParameterGroup::Cross,
            ParameterGroup::Second
        ]
    );
    let c = true_correlation(&spec, 700).unwrap();
    let p = spec.parameters(700).unwrap();
    for i in 0..16 {
        for j in 0..16 {
            if i != j {
                assert_eq!(c.get(i, j), spec.group_of(i, j).value(&p));
            }
        }
    }
}

#[test]
fn backtest_mvp_weights_solve_the_budget_problem() {
    let spec = ScenarioSpec::scenario2(520).with_assets(12).unwrap();
    let panel = simulate_returns(&spec, 3).unwrap();
    let cfg = BacktestConfig {
        constellations: 2,
        constellation_size: 6,
        rebalance: RebalanceMode::Disjoint,
        horizons: vec![28],
        ..Default::default()
    };
    let report = run_backtest(&panel, &cfg, 9).unwrap();
    assert!(report.diagnostics.is_empty());
    assert!(!report.records.is_empty());
    for r in &report.records {
        assert!((r.weights.sum() - 1.0).abs() < 1e-10);
        assert!(r.realized_volatility >= 0.0);
    }
    let naive = naive_portfolio(6).unwrap();
    assert!(naive.weights.iter().all(|w| *w == 1.0 / 6.0));
}

#[test]
fn single_probe_history_is_rejected() {
    let spec = ScenarioSpec::scenario1(80);
    let panel = simulate_returns(&spec, 1).unwrap();
    let probes = ProbeSeries::build(&panel, 50, CorrelationFlavor::Pearson).unwrap();
    let t0 = *probes.times().last().unwrap();
    assert!(similarity_profile(&probes, t0, 50).is_err());
    assert!(similarity_weights(&probes, t0, Some(10)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn weights_are_a_distribution_and_estimates_are_correlations(seed in 0u64..1000, k in 2usize..7, s_extra in 0usize..40) {
        let spec = ScenarioSpec::scenario1(220).with_assets(k).unwrap();
        let panel = simulate_returns(&spec, seed).unwrap();
        let probes = ProbeSeries::build(&panel, 20, CorrelationFlavor::Spearman).unwrap();
        let t0 = *probes.times().last().unwrap();
        let profile = similarity_profile(&probes, t0, probes.len() - 1).unwrap();
        prop_assert!(profile.zeta_tilde.iter().all(|v| (0.0..=1.0).contains(v)));
        let w = weight_scheme(&profile).unwrap();
        let s = (23 + s_extra).min(w.len());
        let top = restrict_top_s(&w, s).unwrap();
        for scheme in [&w, &top] {
            prop_assert!((scheme.sum() - 1.0).abs() <= 1e-12);
            prop_assert!(scheme.weights.iter().all(|v| *v >= 0.0));
        }
        prop_assert!(top.positive_count() < s);
        let c = weighted_correlation(&probes, &top).unwrap();
        prop_assert!(CorrelationMatrix::new(c.as_sym().clone()).is_ok());
        let sigma = simweight::weighted_covariance(&probes, &top).unwrap();
        let mvp = minimum_variance_portfolio(&sigma).unwrap();
        prop_assert!((mvp.sum() - 1.0).abs() < 1e-10);
    }
}
