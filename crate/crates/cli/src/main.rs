use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use uqc_cli::{commands, exit_code, ExperimentConfig, ModelName, OptimizerName, RunDir};

#[derive(Parser)]
#[command(name = "uqc", version, about = "Variational quantum classifier experiments")]
struct Cli {
    /// JSON experiment config; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the master seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Base output directory; each config gets a subdirectory named by its hash.
    #[arg(long, global = true, default_value = "runs")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split and preprocess the dataset.
    Prep,
    /// Train one model and write its weights and history.
    Train {
        #[arg(long, value_enum, default_value = "m2")]
        model: ModelName,
        #[arg(long, value_enum)]
        optimizer: Option<OptimizerName>,
    },
    /// Evaluate all configured models, training any that are missing.
    Eval,
    /// Write the closed-form theory sweep.
    Theory {
        /// Add Monte Carlo estimates of the unambiguous loop.
        #[arg(long)]
        mc: bool,
    },
    /// Compare simulated shot statistics with their closed forms.
    McCheck,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let mut dir = RunDir::open(&cli.out, &cfg)?;
    let name = match cli.command {
        Command::Prep => {
            let p = commands::prep(&cfg, &mut dir)?;
            println!("train {} rows, test {} rows", p.train.len(), p.test.len());
            for w in &p.plan.warnings {
                eprintln!("warning: {w}");
            }
            "prep"
        }
        Command::Train { model, optimizer } => {
            let data = commands::prep(&cfg, &mut dir)?;
            let optimizer = optimizer.unwrap_or(match model {
                ModelName::M3 => OptimizerName::Spsa,
                _ => cfg.training.optimizer,
            });
            let (_, outcome) = commands::train_model(&cfg, &mut dir, &data, model, optimizer)?;
            let last = outcome.history.last().expect("history has epoch 0");
            println!(
                "{} epochs, final cost {:.6}, best epoch {}, {} executions",
                last.epoch,
                last.cost,
                outcome.best_epoch,
                outcome.total_executions()
            );
            "train"
        }
        Command::Eval => {
            let report = commands::eval(&cfg, &mut dir)?;
            println!("Model  Noise  Avg.exec      ACC     PRE     REC     F1");
            for c in &report.cells {
                println!(
                    "{:<6} {:<6} {:>9.3} {:>8.4} {:>7.4} {:>7.4} {:>7.4}",
                    c.model,
                    if c.noisy { "yes" } else { "no" },
                    c.avg_executions,
                    c.accuracy,
                    c.precision,
                    c.recall,
                    c.f1
                );
            }
            "eval"
        }
        Command::Theory { mc } => {
            let rows = commands::theory(&cfg, &mut dir, mc)?;
            println!("{} theory rows", rows.len());
            "theory"
        }
        Command::McCheck => {
            let check = commands::mc_check(&cfg, &mut dir)?;
            for c in &check.comparisons {
                println!(
                    "{:<40} theory {:.6} estimate {:.6} z {:+.2}",
                    c.name, c.theory, c.estimate, c.z_score
                );
            }
            dir.write_manifest("mc-check", cfg.seed)?;
            if !check.passed() {
                return Err(uqc_core::Error::Numeric("Monte Carlo estimate outside 3 sigma".into()).into());
            }
            println!("outputs in {}", dir.root().display());
            return Ok(());
        }
    };
    dir.write_manifest(name, cfg.seed)?;
    println!("outputs in {}", dir.root().display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}

