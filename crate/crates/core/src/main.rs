use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use optogest::cli;
use optogest::config::Config;
use optogest::frame::Mode;
use optogest::optics::SweepKind;
use optogest::Error;

/// Dual-mode optical gesture sensor pipeline and scene simulator.
#[derive(Parser)]
#[command(name = "optogest", version)]
struct Args {
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled synthetic dataset (CSV).
    GenDataset {
        #[arg(long, default_value = "passive")]
        mode: Mode,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a pose network on a dataset and report held-out accuracy.
    Train {
        dataset: PathBuf,
        /// Must match the dataset's mode when given.
        #[arg(long)]
        mode: Option<Mode>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a model on every row of a dataset.
    Eval {
        dataset: PathBuf,
        #[arg(long)]
        model: PathBuf,
    },
    /// Run a phi, theta or distance sweep of the configured scene.
    Sweep {
        #[arg(long)]
        kind: SweepKind,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep the light threshold over labeled frame maxima, or score raw counts.
    Roc {
        /// Score CSV with rawmax and light labels.
        #[arg(long, required_unless_present = "counts", conflicts_with = "counts")]
        scores: Option<PathBuf>,
        /// Confusion counts tp,fn,fp,tn.
        #[arg(long, value_parser = parse_counts)]
        counts: Option<[u64; 4]>,
        #[arg(long, required_unless_present = "counts")]
        out: Option<PathBuf>,
    },
    /// Collect labeled frame maxima from sweeps scored by a passive model.
    GenScores {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the photodiode power budget (CSV).
    Power {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render one frame of the configured scene.
    Render {
        #[arg(long, default_value = "passive")]
        mode: Mode,
    },
}

fn parse_counts(s: &str) -> Result<[u64; 4], String> {
    let v: Vec<u64> = s
        .split(',')
        .map(|x| x.trim().parse::<u64>().map_err(|e| format!("{x:?}: {e}")))
        .collect::<Result<_, _>>()?;
    v.try_into()
        .map_err(|v: Vec<u64>| format!("expected 4 counts, got {}", v.len()))
}

fn run(args: Args) -> Result<String, Error> {
    let config = Config::load(args.config.as_deref())?;
    let seed = args.seed;
    match args.command {
        Command::GenDataset { mode, out } => cli::cmd_gen_dataset(&config, mode, seed, &out),
        Command::Train { dataset, mode, out } => {
            cli::cmd_train(&config, &dataset, mode, seed, &out).map(|o| o.summary())
        }
        Command::Eval { dataset, model } => {
            cli::cmd_eval(&config, &dataset, &model).map(|r| cli::eval_summary(&r))
        }
        Command::Sweep { kind, model, out } => cli::cmd_sweep(&config, kind, &model, seed, &out),
        Command::Roc {
            scores,
            counts,
            out,
        } => match (scores, counts) {
            (_, Some(c)) => cli::cmd_metrics(c),
            (Some(s), None) => {
                let out = out.expect("clap enforces --out with --scores");
                cli::cmd_roc(&s, &out).map(|o| o.summary())
            }
            (None, None) => unreachable!("clap requires one of --scores/--counts"),
        },
        Command::GenScores { model, out } => cli::cmd_gen_scores(&config, &model, seed, &out),
        Command::Power { out } => cli::cmd_power(&config, out.as_deref()).map(|(_, text)| text),
        Command::Render { mode } => cli::cmd_render(&config, mode, seed),
    }
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
