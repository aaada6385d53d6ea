use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hm_expcli::{dry_run, emit_report, run, with_threads, ExpError, ExperimentConfig, ExperimentKind};

#[derive(Parser)]
#[command(name = "hm-exp", version, about = "Helmholtz machine experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Logistic-regression probes of recognition activations.
    Probe(Common),
    /// Replicate small train sets with deep and shallow machines.
    Replicate(Common),
    /// Ten per-class machines, generated-data 1-NN, ADM and novelty.
    TenMachine(Common),
    /// Generated-data 1-NN accuracy against the train-set baseline as G grows.
    Transcend(Common),
    /// Accuracy improvement factor across datasets.
    MultiDataset(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `output.dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Check the config and data, then stop.
    #[arg(long)]
    dry_run: bool,
}

fn execute(kind: ExperimentKind, args: Common) -> Result<(), ExpError> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = Some(seed);
    }
    if let Some(out) = args.out {
        cfg.output.dir = out;
    }
    let dry = args.dry_run;
    let result = with_threads(args.threads, || if dry { dry_run(kind, &cfg) } else { run(kind, &cfg) })
        .map_err(|e| ExpError::config("--threads", e))?;
    let report = result?;
    if dry {
        println!("{}: config and data OK", kind.name());
        return Ok(());
    }
    for path in emit_report(&report, &cfg.output.dir)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Probe(a) => (ExperimentKind::Probe, a),
        Command::Replicate(a) => (ExperimentKind::Replicate, a),
        Command::TenMachine(a) => (ExperimentKind::TenMachine, a),
        Command::Transcend(a) => (ExperimentKind::Transcend, a),
        Command::MultiDataset(a) => (ExperimentKind::MultiDataset, a),
    };
    match execute(kind, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hm-exp: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
