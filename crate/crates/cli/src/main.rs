use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tsuae_core::experiment::{
    load_model, run_experiment, run_sweep, score_csv, scored_summary, write_benchmark,
    write_scored_series, ExperimentConfig, RunManifest,
};
use tsuae_core::{Error, Result};

/// Teacher-student fault detection experiments.
#[derive(Parser)]
#[command(name = "tsuae", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the training and fault series of a generated benchmark as CSV.
    Generate(Common),
    /// Train every configured method, fit control limits and evaluate the faults.
    Run(Common),
    /// Score a CSV with a saved model and write its monitoring series.
    Score(ScoreArgs),
    /// Negative-feedback rate sweep of the TSSAE baseline.
    SweepNf(SweepArgs),
}

#[derive(Args)]
struct Common {
    /// Experiment file (TOML); the numerical example when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the seed of the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScoreArgs {
    /// A `.model` file written by `run`.
    #[arg(long)]
    model: PathBuf,
    /// CSV with the model's process columns (quality columns optional).
    #[arg(long)]
    data: PathBuf,
    /// 1-based index of the first faulty sample; all samples are normal when omitted.
    #[arg(long)]
    fault_start: Option<usize>,
    /// Series file to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated feedback rates; the config's grid when omitted.
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<f64>>,
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::numerical_example(0),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_file(dir: &Path, rel: &str) -> Result<()> {
    let path = dir.join(rel);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    print!("{text}");
    Ok(())
}

fn report_manifest(manifest: &RunManifest, out: &Path) {
    eprintln!(
        "wrote {} files to {} (inputs {})",
        manifest.files.len() + 1,
        out.display(),
        &manifest.input_hash[..12]
    );
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(common) => {
            let cfg = load_config(&common)?;
            write_benchmark(&cfg, &common.out)?;
            eprintln!(
                "wrote benchmark series and experiment.toml to {}",
                common.out.display()
            );
        }
        Command::Run(common) => {
            let cfg = load_config(&common)?;
            let manifest = run_experiment(&cfg, &common.out)?;
            print_file(&common.out, "table.txt")?;
            report_manifest(&manifest, &common.out);
        }
        Command::Score(args) => {
            let saved = load_model(&args.model)?;
            let scored = score_csv(&saved, &args.data, args.fault_start)?;
            write_scored_series(&saved, &scored, &args.out)?;
            print!("{}", scored_summary(&scored));
        }
        Command::SweepNf(args) => {
            let cfg = load_config(&args.common)?;
            let manifest = run_sweep(&cfg, args.k.as_deref(), &args.common.out)?;
            print_file(&args.common.out, "sweep_table.txt")?;
            report_manifest(&manifest, &args.common.out);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
