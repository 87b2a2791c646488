use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use simweight_cli::{
    run_backtest_command, run_generate_command, run_similarity_command, run_simulation_command,
    CliError, Outcome, RunConfig,
};

/// Similarity-weighted correlation estimation, scenario studies and portfolio backtests.
#[derive(Parser)]
#[command(name = "simweight", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo study of the estimators on a built-in scenario.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Comma-separated evaluation days.
        #[arg(long, value_delimiter = ',')]
        eval_days: Option<Vec<usize>>,
        #[arg(long)]
        repetitions: Option<usize>,
    },
    /// Portfolio backtest on a return or price table.
    Backtest {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        input: InputArgs,
        /// Comma-separated holding horizons in days.
        #[arg(long, value_delimiter = ',')]
        horizons: Option<Vec<usize>>,
        #[arg(long)]
        constellations: Option<usize>,
        #[arg(long)]
        constellation_size: Option<usize>,
        /// `rolling` or `disjoint`.
        #[arg(long)]
        rebalance: Option<String>,
        #[arg(long)]
        rebalance_step: Option<usize>,
    },
    /// Similarity grid and profile of a return or price table.
    Similarity {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        input: InputArgs,
    },
    /// Writes a simulated scenario panel as a return table.
    Generate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Also write per-repetition or per-constellation records.
    #[arg(long)]
    raw: bool,
    /// Use Spearman rank correlation instead of Pearson.
    #[arg(long)]
    spearman: bool,
    /// Probe window length.
    #[arg(long)]
    probe_window: Option<usize>,
}

#[derive(Args)]
struct InputArgs {
    /// Delimited table: a date column followed by one column per asset.
    input: Option<PathBuf>,
    /// The table holds prices; returns are formed as p_t / p_{t-1} - 1.
    #[arg(long)]
    prices: bool,
    /// Replace empty cells with the previous value in the same column.
    #[arg(long)]
    forward_fill: bool,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Built-in scenario: 1, 2 or 3.
    #[arg(long)]
    scenario: Option<u8>,
    /// Number of simulated days.
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    n_assets: Option<usize>,
    #[arg(long)]
    regime_length: Option<usize>,
}

fn some(flag: bool) -> Option<bool> {
    flag.then_some(true)
}

impl Common {
    fn flags(&self) -> RunConfig {
        RunConfig {
            seed: self.seed,
            raw: some(self.raw),
            spearman: some(self.spearman),
            probe_window: self.probe_window,
            ..Default::default()
        }
    }

    fn base(&self) -> Result<RunConfig, CliError> {
        match &self.config {
            Some(p) => RunConfig::load(p),
            None => Ok(RunConfig::default()),
        }
    }
}

impl InputArgs {
    fn apply(self, cfg: RunConfig) -> RunConfig {
        RunConfig {
            input: self.input.or(cfg.input),
            ..cfg
        }
        .overlay(RunConfig {
            prices: some(self.prices),
            forward_fill: some(self.forward_fill),
            ..Default::default()
        })
    }
}

impl ScenarioArgs {
    fn flags(&self) -> RunConfig {
        RunConfig {
            scenario: self.scenario,
            horizon: self.horizon,
            n_assets: self.n_assets,
            regime_length: self.regime_length,
            ..Default::default()
        }
    }
}

type Driver = fn(&RunConfig, &Path) -> Result<Outcome, CliError>;

fn prepare(cli: Cli) -> Result<(RunConfig, PathBuf, Driver), CliError> {
    Ok(match cli.command {
        Command::Simulate {
            common,
            scenario,
            eval_days,
            repetitions,
        } => {
            let cfg = common
                .base()?
                .overlay(common.flags())
                .overlay(scenario.flags())
                .overlay(RunConfig {
                    eval_days,
                    repetitions,
                    ..Default::default()
                });
            (cfg, common.out, run_simulation_command)
        }
        Command::Backtest {
            common,
            input,
            horizons,
            constellations,
            constellation_size,
            rebalance,
            rebalance_step,
        } => {
            let cfg = common.base()?.overlay(common.flags()).overlay(RunConfig {
                horizons,
                constellations,
                constellation_size,
                rebalance,
                rebalance_step,
                ..Default::default()
            });
            (input.apply(cfg), common.out, run_backtest_command)
        }
        Command::Similarity { common, input } => {
            let cfg = common.base()?.overlay(common.flags());
            (input.apply(cfg), common.out, run_similarity_command)
        }
        Command::Generate { common, scenario } => {
            let cfg = common
                .base()?
                .overlay(common.flags())
                .overlay(scenario.flags());
            (cfg, common.out, run_generate_command)
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = prepare(cli).and_then(|(cfg, out, run)| run(&cfg, &out).map(|o| (o, out)));
    match result {
        Ok((outcome, out)) => {
            print!("{}", outcome.text);
            println!("wrote {} files to {}", outcome.files.len(), out.display());
            if outcome.error_records > 0 {
                eprintln!(
                    "{} computations skipped; see the diagnostics or failures file",
                    outcome.error_records
                );
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
