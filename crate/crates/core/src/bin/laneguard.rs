//! Command-line driver for the experiment pipeline. Every subcommand reads one
//! JSON config and works inside one output directory.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use laneguard::experiment::{self, ExperimentConfig};
use laneguard::Error;

#[derive(Parser)]
#[command(name = "laneguard", version, about = "Anomaly monitor and safety guards for a simulated lane keeper")]
struct Cli {
    /// Experiment config (JSON); built-in defaults when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory of the experiment.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Print nothing but errors.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render the nominal training and calibration corpus.
    Generate,
    /// Train the autoencoder on the generated corpus.
    Train,
    /// Fit the error distribution and derive thresholds.
    Calibrate,
    /// Run the configured closed-loop episodes.
    Simulate,
    /// Compute detection and prevention metrics.
    Evaluate {
        /// Episode logs or directories of logs; the output's logs by default.
        logs: Vec<PathBuf>,
        /// CSV of labelled confusion counts (label,tp,fp,tn,fn) instead of logs.
        #[arg(long, conflicts_with = "logs")]
        counts: Option<PathBuf>,
    },
    /// Render SVG plots from the output's artifacts.
    Report,
    /// Print the effective config and exit.
    Config,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    let out: &Path = &cli.out;
    let say = |msg: String| {
        if !cli.quiet {
            println!("{msg}");
        }
    };
    if !matches!(cli.command, Command::Config) {
        std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        cfg.echo(out)?;
    }
    match &cli.command {
        Command::Generate => {
            let m = experiment::generate(&cfg, out)?;
            say(format!(
                "wrote {} training and {} calibration frames over {} tracks",
                m.total_train,
                m.total_calibration,
                m.tracks.len()
            ));
        }
        Command::Train => {
            let outcome = experiment::train_command(&cfg, out)?;
            say(format!(
                "trained {} for {} epochs, final loss {:.6}",
                cfg.model.variant.name(),
                outcome.loss_history.len(),
                outcome.loss_history.last().copied().unwrap_or(f64::NAN)
            ));
        }
        Command::Calibrate => {
            let c = experiment::calibrate_command(&cfg, out)?;
            let t = c.thresholds;
            say(format!(
                "gamma shape {:.4} scale {:.6}; theta {:.6}, bands {:.6} / {:.6}",
                c.fit.params.shape, c.fit.params.scale, t.theta, t.band1, t.band2
            ));
        }
        Command::Simulate => {
            let paths = experiment::simulate_command(&cfg, out)?;
            say(format!("wrote {} episode logs", paths.len()));
        }
        Command::Evaluate { logs, counts } => {
            if let Some(csv) = counts {
                for row in experiment::evaluate_counts(csv, out)? {
                    let r = row.rates;
                    say(format!(
                        "{}: tpr {} fpr {} f1 {} precision {}",
                        row.label,
                        fmt(r.tpr),
                        fmt(r.fpr),
                        fmt(r.f1),
                        fmt(r.precision)
                    ));
                }
                return Ok(());
            }
            let logs = if logs.is_empty() {
                experiment::load_logs(&out.join(experiment::LOGS_DIR))?
            } else {
                experiment::load_log_paths(logs)?
            };
            let ev = experiment::evaluate_into(&logs, out, cfg.evaluation.unit())?;
            for row in ev.rows.iter().filter(|r| r.label.starts_with("pooled")) {
                say(format!(
                    "{}: tpr {} fpr {} precision {} f1 {}",
                    row.label,
                    fmt(row.rates.tpr),
                    fmt(row.rates.fpr),
                    fmt(row.rates.precision),
                    fmt(row.rates.f1)
                ));
            }
            say(format!("auc-prc {} at prevalence {}", fmt(ev.auc_prc), fmt(ev.prevalence)));
            if let Some(p) = ev.prevention {
                say(format!(
                    "prevention {:.4} ({} predicted, {} remaining)",
                    p.rate, p.predicted_off, p.remaining_on
                ));
            }
        }
        Command::Report => {
            let written = experiment::report(out)?;
            say(format!("wrote {} plots", written.len()));
        }
        Command::Config => println!("{}", cfg.to_json()),
    }
    Ok(())
}

fn fmt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.4}")).unwrap_or_else(|| "undefined".into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<Error>().map_or(1, Error::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
