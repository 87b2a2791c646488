use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use simweight_cli::ingest::write_returns;
use simweight_cli::{ingest_returns, IngestOptions};

fn simweight(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simweight"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path_arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_table(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .unwrap();
    r.records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect()
}

fn generate(dir: &Path, scenario: &str, horizon: &str, seed: &str) -> PathBuf {
    let out = dir.join(format!("gen_{scenario}_{horizon}_{seed}"));
    let o = simweight(&[
        "generate",
        "--scenario",
        scenario,
        "--horizon",
        horizon,
        "--seed",
        seed,
        "--out",
        path_arg(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out.join("returns.csv")
}

#[test]
fn malformed_input_is_fatal_and_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "date,A,B\n2020-01-01,0.1,0.2\n2020-01-02,0.1\n").unwrap();
    let o = simweight(&[
        "similarity",
        path_arg(&bad),
        "--out",
        path_arg(&dir.path().join("o")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn generated_table_round_trips_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let file = generate(dir.path(), "3", "120", "4");
    let ingested = ingest_returns(&file, IngestOptions::default()).unwrap();
    assert_eq!(ingested.panel.len(), 120);
    assert_eq!(ingested.panel.n_assets(), 16);
    let mut buf = Vec::new();
    write_returns(&ingested.panel, &mut buf).unwrap();
    assert_eq!(buf, std::fs::read(&file).unwrap());
}

#[test]
fn simulation_table_has_one_row_per_day_group_estimator() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s2");
    let o = simweight(&[
        "simulate",
        "--scenario",
        "2",
        "--eval-days",
        "400,500,600",
        "--repetitions",
        "3",
        "--out",
        path_arg(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_table(&out.join("table.csv"));
    assert_eq!(
        rows[0],
        [
            "day",
            "parameter",
            "true_value",
            "estimator",
            "mean",
            "std_dev",
            "count"
        ]
    );
    assert_eq!(rows.len(), 1 + 3 * 3 * 3);
    // day 400 lies in the first regime: rho1 = 0.7
    let first = rows
        .iter()
        .find(|r| r[0] == "400" && r[1] == "rho1")
        .unwrap();
    assert_eq!(first[2].parse::<f64>().unwrap(), 0.7);

    let out1 = dir.path().join("s1");
    let o = simweight(&[
        "simulate",
        "--eval-days",
        "360",
        "--repetitions",
        "2",
        "--out",
        path_arg(&out1),
    ]);
    assert!(o.status.success());
    assert_eq!(read_table(&out1.join("table.csv")).len(), 1 + 3);

    // day 300 has too little history for L + s = 350: every repetition fails, exit status 1
    let early = dir.path().join("early");
    let o = simweight(&[
        "simulate",
        "--eval-days",
        "300",
        "--repetitions",
        "2",
        "--out",
        path_arg(&early),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(read_table(&early.join("failures.csv")).len(), 1 + 2);
}

#[test]
fn similarity_grid_is_a_distance_table() {
    let dir = tempfile::tempdir().unwrap();
    let file = generate(dir.path(), "2", "450", "8");
    let out = dir.path().join("sim");
    let o = simweight(&["similarity", path_arg(&file), "--out", path_arg(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let grid = read_table(&out.join("similarity.csv"));
    let n = grid.len() - 1;
    assert_eq!(n, 450 - 50 + 1);
    let value = |a: usize, b: usize| grid[a + 1][b + 1].parse::<f64>().unwrap();
    for a in (0..n).step_by(37) {
        assert_eq!(value(a, a), 0.0);
        for b in (0..n).step_by(29) {
            assert_eq!(value(a, b), value(b, a));
        }
    }
    let index = |date: &str| grid[0].iter().position(|d| d == date).unwrap() - 1;
    // probes ending on days 100, 400 (first regime) and 300 (third regime)
    let (d100, d300, d400) = (
        index("1970-04-11"),
        index("1970-10-28"),
        index("1971-02-05"),
    );
    assert!(value(d100, d400) < value(d100, d300));
    assert!(out.join("profile.csv").exists());
    assert_eq!(read_table(&out.join("mean_correlation.csv")).len(), n + 1);
}

#[test]
fn backtest_on_prices_with_gaps() {
    let dir = tempfile::tempdir().unwrap();
    let returns = ingest_returns(
        &generate(dir.path(), "1", "480", "2"),
        IngestOptions::default(),
    )
    .unwrap()
    .panel;
    let mut text = String::from("date");
    for a in returns.assets() {
        text += &format!(",{a}");
    }
    text += "\n";
    let mut prices = vec![100.0; returns.n_assets()];
    for (r, &t) in returns.times().iter().enumerate() {
        text += &simweight_cli::ingest::time_to_date(t).unwrap().to_string();
        for (i, p) in prices.iter_mut().enumerate() {
            *p *= 1.0 + 0.01 * returns.row(r)[i];
            if r == 200 && i == 3 {
                text += ",";
            } else {
                text += &format!(",{p}");
            }
        }
        text += "\n";
    }
    let file = dir.path().join("prices.csv");
    std::fs::write(&file, text).unwrap();

    let strict = simweight(&[
        "backtest",
        path_arg(&file),
        "--prices",
        "--out",
        path_arg(&dir.path().join("x")),
    ]);
    assert_eq!(strict.status.code(), Some(2));

    let out = dir.path().join("bt");
    let o = simweight(&[
        "backtest",
        path_arg(&file),
        "--prices",
        "--forward-fill",
        "--constellations",
        "2",
        "--constellation-size",
        "5",
        "--rebalance-step",
        "7",
        "--raw",
        "--out",
        path_arg(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("forward-filled cells: 1"));
    let summary = read_table(&out.join("summary.csv"));
    assert_eq!(summary.len(), 1 + 3 * 5);
    assert_eq!(read_table(&out.join("constellations.csv")).len(), 1 + 2 * 5);
    assert!(out.join("series/naive_none_h56.csv").exists());
    assert!(out.join("weights.csv").exists());
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["settings"]["filled_cells"], 1);
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "seed = 17\nscenario = 3\neval_days = [350]\nrepetitions = 2\nL = 40\ns = 200\n",
    )
    .unwrap();
    let out = dir.path().join("o");
    let o = simweight(&[
        "simulate",
        "--config",
        path_arg(&cfg),
        "--seed",
        "18",
        "--out",
        path_arg(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 18);
    assert_eq!(
        manifest["settings"]["study"]["estimators"]["probe_window"],
        40
    );
    assert_eq!(
        manifest["settings"]["scenario"]["kind"]["kind"],
        "sinusoidal"
    );

    std::fs::write(&cfg, "probewindow = 3\n").unwrap();
    let o = simweight(&[
        "simulate",
        "--config",
        path_arg(&cfg),
        "--out",
        path_arg(&out),
    ]);
    assert_eq!(o.status.code(), Some(2));
}
