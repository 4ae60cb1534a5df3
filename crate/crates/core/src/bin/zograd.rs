use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use zograd::harness::{
    complexity_table, run_experiment, run_lemma, sweep, CliOverrides, ExperimentConfig, Kind, LEMMA_NAMES,
};

#[derive(Debug, Parser)]
#[command(name = "zograd", version, about = "Zeroth-order descent experiments")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// TOML experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed. Falls back to the config file, then ZOGRAD_SEED, then 0.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[arg(long, global = true)]
    trials: Option<u64>,

    #[arg(long, global = true)]
    eps: Option<f64>,

    #[arg(long, global = true)]
    delta: Option<f64>,

    /// JSONL output file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Also write a CSV of the summary next to the JSONL file.
    #[arg(long, global = true)]
    csv: bool,

    #[arg(long, global = true)]
    parallelism: Option<usize>,

    #[arg(long = "c-alpha", global = true)]
    c_alpha: Option<f64>,

    #[arg(long = "c-T", global = true)]
    c_t: Option<f64>,
}

impl GlobalArgs {
    fn overrides(&self) -> CliOverrides {
        CliOverrides {
            seed: self.seed,
            trials: self.trials,
            eps: self.eps,
            delta: self.delta,
            out: self.out.clone(),
            csv: self.csv,
            parallelism: self.parallelism,
            c_alpha: self.c_alpha,
            c_t: self.c_t,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Two-point zeroth-order gradient descent on a quadratic.
    RunGd,
    /// Two-point zeroth-order SGD on a finite-sum quadratic.
    RunSgd,
    /// Monte Carlo check of one concentration lemma.
    ValidateLemma {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(LEMMA_NAMES))]
        name: String,
    },
    /// One experiment per value of a config axis.
    Sweep {
        /// One of T, d, eps, sigma.
        #[arg(long)]
        axis: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Run sgd instead of gd (ignored when the config sets a kind).
        #[arg(long)]
        sgd: bool,
    },
    /// Planned iteration counts and smoothing radii over a parameter grid.
    ComplexityTable {
        #[arg(long, value_delimiter = ',', default_values_t = [10usize, 100, 1000])]
        d: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [10.0, 100.0])]
        kappa: Vec<f64>,
        #[arg(long = "eps-grid", value_delimiter = ',', default_values_t = [1e-3, 1e-6])]
        eps_grid: Vec<f64>,
        #[arg(long = "delta-grid", value_delimiter = ',', default_values_t = [0.05])]
        delta_grid: Vec<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn load(global: &GlobalArgs, kind: Option<Kind>) -> zograd::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::resolve(global.config.as_deref(), &global.overrides())?;
    if let Some(kind) = kind {
        cfg.kind = kind;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> zograd::Result<()> {
    match cli.command {
        Command::RunGd | Command::RunSgd => {
            let kind = if matches!(cli.command, Command::RunGd) { Kind::Gd } else { Kind::Sgd };
            let cfg = load(&cli.global, Some(kind))?;
            let summary = run_experiment(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::ValidateLemma { name } => {
            let cfg = load(&cli.global, Some(Kind::Lemma))?;
            let record = run_lemma(&cfg, Some(&name))?;
            println!("{}", serde_json::to_string_pretty(&record)?);
            if !record.report.passes() {
                eprintln!(
                    "{}: violation rate {:.4} exceeds {:.4} + slack",
                    name, record.report.empirical_rate, record.report.claimed_delta
                );
            }
        }
        Command::Sweep { axis, values, sgd } => {
            let mut cfg = load(&cli.global, None)?;
            if cli.global.config.is_none() && sgd {
                cfg.kind = Kind::Sgd;
            }
            let result = sweep(&cfg, &axis, &values)?;
            for s in &result.summaries {
                println!(
                    "d={} T={} alpha={:.3e} failure_rate={:.4} median={:.3e}",
                    s.d, s.iterations, s.alpha, s.empirical_failure_rate, s.quantiles.p50
                );
            }
            if let Some(slope) = result.loglog_slope {
                println!("loglog_slope={slope:.4}");
            }
            if let Some(fit) = result.iterations_fit {
                println!("T ~ {:.4} * {} + {:.4}  (r2={:.6})", fit.slope, axis, fit.intercept, fit.r_squared);
            }
        }
        Command::ComplexityTable { d, kappa, eps_grid, delta_grid } => {
            let cfg = load(&cli.global, None)?;
            let rows = complexity_table(&d, &kappa, &eps_grid, &delta_grid, cfg.c_alpha(), cfg.c_t())?;
            println!(
                "{:>6} {:>8} {:>9} {:>7} {:>12} {:>11} {:>14} {:>11} {:>11}",
                "d", "kappa", "eps", "delta", "gd_T", "gd_alpha", "sgd_T", "sgd_T0", "sgd_alpha"
            );
            for r in rows {
                println!(
                    "{:>6} {:>8} {:>9.1e} {:>7} {:>12} {:>11.3e} {:>14} {:>11} {:>11.3e}",
                    r.d, r.kappa, r.eps, r.delta, r.gd_iterations, r.gd_alpha, r.sgd_iterations, r.sgd_warmup,
                    r.sgd_alpha
                );
            }
        }
    }
    Ok(())
}
