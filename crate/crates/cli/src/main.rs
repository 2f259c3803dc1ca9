use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use ofdma_twr::channel::realize;
use ofdma_twr::dual::write_history_csv;
use ofdma_twr::harness::{
    emit_results, run_experiment, ConfigFile, ExperimentResult, ExperimentSpec, Manifest, Scheme,
};
use ofdma_twr::oracle::exhaustive_optimum;
use ofdma_twr::{solve, NetworkConfig};

#[derive(Parser)]
#[command(
    name = "ofdma-twr",
    version,
    about = "Resource allocation for OFDMA two-way AF relay networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo experiment and write CSV/JSON results.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated subset of proposed,epa,rra,dual_bound.
        #[arg(long, value_delimiter = ',')]
        scheme: Option<Vec<String>>,
        #[arg(long)]
        realizations: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated relay power levels in dB per node.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        power_sweep_db: Option<Vec<f64>>,
        /// fixed_weights or proportional.
        #[arg(long)]
        fairness: Option<String>,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Re-run the experiment recorded in a manifest.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print one channel realization as JSON.
    DumpChannels {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: u64,
    },
    /// Solve one realization with the dual algorithm.
    Solve {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: u64,
        /// Write the iteration history here as CSV.
        #[arg(long)]
        history: Option<PathBuf>,
    },
    /// Compare the dual algorithm with exhaustive search on a tiny instance.
    Oracle {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: u64,
        /// Grid steps per relay budget.
        #[arg(long, default_value_t = 200)]
        steps: usize,
    },
}

fn load_config(path: Option<&Path>) -> Result<ConfigFile> {
    match path {
        Some(p) => Ok(ConfigFile::load(p)?),
        None => Ok(ConfigFile::default()),
    }
}

fn print_summary(result: &ExperimentResult) {
    println!(
        "{:>9}  {:<11} {:>12} {:>10} {:>6}",
        "power_db", "scheme", "mean_rate", "stderr", "n"
    );
    for row in &result.summary {
        println!(
            "{:>9}  {:<11} {:>12.4} {:>10.4} {:>6}",
            row.power_db, row.scheme, row.mean_rate, row.stderr, row.n
        );
    }
}

fn run_and_emit(spec: &ExperimentSpec, out: &Path) -> Result<()> {
    let result = run_experiment(spec).context("experiment failed")?;
    let files = emit_results(&result, out)?;
    print_summary(&result);
    for f in files {
        eprintln!("wrote {}", f.display());
    }
    Ok(())
}

fn network_for(cfg: &ConfigFile) -> Result<NetworkConfig> {
    Ok(cfg.network()?)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            scheme,
            realizations,
            seed,
            power_sweep_db,
            fairness,
            out,
        } => {
            let mut file = load_config(config.as_deref())?;
            if let Some(s) = scheme {
                file.schemes = Some(s);
            }
            if realizations.is_some() {
                file.realizations = realizations;
            }
            if seed.is_some() {
                file.seed = seed;
            }
            if power_sweep_db.is_some() {
                file.power_sweep_db = power_sweep_db;
            }
            if fairness.is_some() {
                file.fairness_mode = fairness;
            }
            let mut spec = file.experiment()?;
            spec.output_path = Some(out.clone());
            run_and_emit(&spec, &out)
        }
        Command::Replay { manifest, out } => {
            let manifest = Manifest::load(&manifest)?;
            let mut spec = manifest.spec;
            spec.output_path = Some(out.clone());
            run_and_emit(&spec, &out)
        }
        Command::DumpChannels { config, seed } => {
            let network = network_for(&load_config(config.as_deref())?)?;
            let channels = realize(&network, seed);
            println!("{}", serde_json::to_string_pretty(&channels)?);
            Ok(())
        }
        Command::Solve {
            config,
            seed,
            history,
        } => {
            let file = load_config(config.as_deref())?;
            let network = network_for(&file)?;
            let mut options = file.solver()?;
            options.track_primal |= history.is_some();
            let channels = realize(&network, seed);
            let report = solve(&channels, &network, &options)?;
            let out = serde_json::json!({
                "seed": seed,
                "primal_value": report.primal_value,
                "sum_rate": report.sum_rate,
                "dual_value": report.dual_value,
                "gap": report.gap,
                "iterations": report.iterations,
                "converged": report.converged,
                "lambda": report.lambda,
                "allocation": report.allocation,
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
            if let Some(path) = history {
                let f = fs::File::create(&path)
                    .with_context(|| format!("creating {}", path.display()))?;
                write_history_csv(&report.history, f)?;
            }
            Ok(())
        }
        Command::Oracle {
            config,
            seed,
            steps,
        } => {
            let file = load_config(config.as_deref())?;
            let network = network_for(&file)?;
            let channels = realize(&network, seed);
            let oracle = exhaustive_optimum(&channels.power_gains(), &network, steps)?;
            let report = solve(&channels, &network, &file.solver()?)?;
            if !report.weak_duality_holds() {
                bail!("weak duality violated on seed {seed}");
            }
            let out = serde_json::json!({
                "seed": seed,
                "oracle_value": oracle.value,
                "oracle_allocation": oracle.allocation,
                "solver_primal": report.primal_value,
                "solver_dual": report.dual_value,
                "ratio": report.primal_value / oracle.value,
                "scheme": Scheme::Proposed.name(),
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
