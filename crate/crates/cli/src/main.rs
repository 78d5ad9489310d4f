use anyhow::{anyhow, Result};
use clap::{Parser, Subcommand};
use reachtrack_cli::{artifacts, config, plot_artifacts, runners};
use reachtrack_core::scheme::{validate_admissible, Discretization};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "reachtrack",
    about = "Reachable sets of differential inclusions via boundary tracking on adaptive space-time grids"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute reachable sets and write boundary.csv / report.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Algorithm: ba (adaptive boundary), bu (uniform boundary),
        /// eu (uniform full-set).
        #[arg(long)]
        algo: String,
        /// Comma-separated decreasing thresholds; overrides the config.
        #[arg(long, value_delimiter = ',')]
        eps_ladder: Option<Vec<f64>>,
        /// Output directory; overrides the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also render the SVG figures.
        #[arg(long)]
        plot: bool,
    },
    /// Check a configuration and the admissibility of its initial
    /// discretization.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run several algorithms at one matched threshold and write
    /// compare.json.
    Compare {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated subset of ba,bu,eu.
        #[arg(long, value_delimiter = ',')]
        algos: Vec<String>,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render SVG figures from existing run artifacts.
    Plot {
        /// Directory containing boundary.csv and report.json.
        #[arg(long)]
        run_dir: PathBuf,
    },
}

fn init_thread_pool() {
    if let Ok(value) = std::env::var("REACHTRACK_THREADS") {
        match value.parse::<usize>() {
            Ok(n) if n >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("ignoring REACHTRACK_THREADS={value}: expected a positive integer"),
        }
    }
}

fn main() -> ExitCode {
    init_thread_pool();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn load(path: &Path) -> Result<config::LoadedConfig> {
    config::load_config(path).map_err(|diags| {
        for d in &diags {
            eprintln!("config error: {d}");
        }
        anyhow!("invalid configuration ({} problem(s))", diags.len())
    })
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Run {
            config,
            algo,
            eps_ladder,
            out,
            plot,
        } => {
            let loaded = load(&config)?;
            let ladder = eps_ladder.unwrap_or_else(|| loaded.eps_ladder.clone());
            let out_dir = out
                .or(loaded.out_dir.clone())
                .unwrap_or_else(|| PathBuf::from("out"));
            let output = runners::run_algo(&loaded.problem, &algo, &ladder)?;
            artifacts::write_run_artifacts(&out_dir, &output, &loaded.hash)?;
            println!(
                "{}: n = {}, E = {:.6}, total cF = {}",
                algo,
                output.report.delta.n(),
                output.report.e_value,
                output
                    .report
                    .counters
                    .iter()
                    .map(|c| c.c_f)
                    .sum::<u64>()
            );
            if plot {
                let written = plot_artifacts(&out_dir, false)?;
                println!("figures: {}", written.join(", "));
            }
            println!("artifacts written to {}", out_dir.display());
            Ok(())
        }
        Command::Validate { config } => {
            let loaded = load(&config)?;
            let problem = &loaded.problem;
            let delta = Discretization::uniform_initial(
                problem.rhs.lipschitz(),
                problem.rhs.bound(),
                problem.horizon,
            )?;
            let report = validate_admissible(
                &delta,
                problem.rhs.lipschitz(),
                problem.rhs.bound(),
                problem.horizon,
            );
            if report.is_admissible() {
                println!(
                    "configuration valid; initial discretization (n = {}) is admissible",
                    delta.n()
                );
                Ok(())
            } else {
                for v in &report.violations {
                    eprintln!("admissibility: {v}");
                }
                Err(anyhow!(
                    "initial discretization violates {} condition(s)",
                    report.violations.len()
                ))
            }
        }
        Command::Compare {
            config,
            algos,
            eps,
            out,
        } => {
            let loaded = load(&config)?;
            let comparison = runners::compare(&loaded.problem, &algos, eps);
            let out_dir = out
                .or(loaded.out_dir.clone())
                .unwrap_or_else(|| PathBuf::from("out"));
            std::fs::create_dir_all(&out_dir)?;

            let mut entries = serde_json::Map::new();
            let mut failed = 0usize;
            for entry in &comparison.entries {
                let value = match &entry.outcome {
                    Ok(output) => json!({
                        "n": output.report.delta.n(),
                        "E": output.report.e_value,
                        "total_cF": output.report.counters.iter().map(|c| c.c_f).sum::<u64>(),
                        "total_cR": output.report.counters.iter().map(|c| c.c_r).sum::<u64>(),
                    }),
                    Err(e) => {
                        failed += 1;
                        json!({ "error": format!("{e:#}") })
                    }
                };
                entries.insert(entry.algo.clone(), value);
            }
            let report = json!({
                "config_hash": loaded.hash,
                "eps": eps,
                "algos": entries,
                "ordering_holds": comparison.ordering_holds(),
            });
            artifacts::write_atomic(
                &out_dir.join("compare.json"),
                (serde_json::to_string_pretty(&report)? + "\n").as_bytes(),
            )?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            if failed > 0 {
                Err(anyhow!("{failed} algorithm run(s) failed"))
            } else {
                Ok(())
            }
        }
        Command::Plot { run_dir } => {
            let written = plot_artifacts(&run_dir, true)?;
            println!("figures: {}", written.join(", "));
            Ok(())
        }
    }
}
