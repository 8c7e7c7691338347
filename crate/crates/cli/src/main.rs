//! `oaml` command line: run experiments, compare methods, validate configs.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use oaml_cli::config::{preset_names, ExperimentConfig, Source};
use oaml_cli::{runner, CliError};

#[derive(Parser)]
#[command(name = "oaml", version, about = "Online AutoML experiments on drifting streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct ConfigArg {
    /// Experiment TOML file, or the name of a preset.
    #[arg(long)]
    config: Option<String>,
    /// Built-in preset.
    #[arg(long)]
    preset: Option<String>,
}

impl ConfigArg {
    fn load(&self) -> Result<ExperimentConfig, CliError> {
        match (&self.config, &self.preset) {
            (Some(c), _) => Source::locate(c)?.parse(),
            (None, Some(p)) => Source::preset(p)?.parse(),
            (None, None) => unreachable!("clap requires one of the two"),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write trace.csv, events.csv, search_log.csv
    /// and summary.json.
    Run {
        #[command(flatten)]
        source: ConfigArg,
        #[arg(long)]
        seed: Option<u64>,
        /// Search worker threads.
        #[arg(long)]
        workers: Option<usize>,
        /// Output directory. Defaults to the config's `out_dir`, then
        /// $OAML_OUT_DIR, then `oaml-out`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run several configs on the same stream realization and write a merged
    /// comparison.csv.
    Compare {
        /// Comma-separated config files or preset names.
        #[arg(long, value_delimiter = ',', required = true)]
        configs: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print every problem with a config; exits 2 when there are any.
    Validate {
        #[command(flatten)]
        source: ConfigArg,
    },
    /// List the built-in presets.
    Presets,
}

fn out_dir(flag: Option<PathBuf>, config: Option<&ExperimentConfig>) -> PathBuf {
    flag.or_else(|| config.and_then(|c| c.out_dir.clone()))
        .or_else(|| std::env::var_os("OAML_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("oaml-out"))
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            source,
            seed,
            workers,
            out,
        } => {
            let mut config = source.load()?;
            if let Some(seed) = seed {
                config.set_seed(seed);
            }
            if let Some(w) = workers {
                config.oaml.workers = w;
            }
            let dir = out_dir(out, Some(&config));
            let (report, _) = runner::run_experiment(&config, &dir)?;
            println!(
                "{}: {} online samples, accuracy {:.4} (last 1000: {:.4}), {} drifts, {} switches, {:.1}s -> {}",
                report.summary.method,
                report.summary.online_samples,
                report.summary.final_acc_cum,
                report.summary.final_acc_win,
                report.summary.drifts,
                report.summary.model_switches,
                report.summary.wall_clock_secs,
                dir.display()
            );
        }
        Command::Compare { configs, seed, out } => {
            let mut loaded = configs
                .iter()
                .map(|c| Source::locate(c)?.parse())
                .collect::<Result<Vec<_>, _>>()?;
            let dir = out_dir(out, None);
            let reports = runner::compare(&mut loaded, seed, &dir)?;
            println!("{:<20} {:>10} {:>10} {:>7} {:>9}", "method", "acc_cum", "acc_win", "drifts", "switches");
            for r in reports {
                let s = r.summary;
                println!(
                    "{:<20} {:>10.4} {:>10.4} {:>7} {:>9}",
                    s.method, s.final_acc_cum, s.final_acc_win, s.drifts, s.model_switches
                );
            }
            println!("comparison written to {}", dir.join("comparison.csv").display());
        }
        Command::Validate { source } => {
            let config = source.load()?;
            let violations = config.violations();
            if !violations.is_empty() {
                for v in &violations {
                    println!("{v}");
                }
                return Err(CliError::Config(format!("{} violation(s)", violations.len())));
            }
            println!("ok");
        }
        Command::Presets => {
            for name in preset_names() {
                println!("{name}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("oaml: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
