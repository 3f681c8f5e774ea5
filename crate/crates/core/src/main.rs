use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sweepstakes::experiment::{
    self, compare_curves, read_curve, write_csv, ExperimentConfig, ExperimentOutput, Kind,
};
use sweepstakes::Error;

#[derive(Parser)]
#[command(name = "sweepstakes", version, about = "Gene genealogies under sweepstakes reproduction")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_name = "M")]
    reps: Option<u64>,
    /// Output CSV; standard output when absent.
    #[arg(long, global = true, value_name = "CSV")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_name = "K")]
    threads: Option<usize>,
    /// Overrides one configuration key, e.g. `--set alpha=1.5`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Dump the merger rates of the configured coalescent.
    Rates,
    /// Exact expected branch lengths of a Λ-coalescent.
    ExactSfs,
    /// Simulate the configured Λ- or Ξ-coalescent.
    SimCoalescent,
    /// Simulate the annealed Cannings ancestral process.
    SimAncestral,
    /// Simulate sample trees from realised population ancestries.
    SimQuenched,
    /// Estimate c_N over a list of population sizes.
    CnScaling,
    /// Class-by-class comparison of two spectrum CSVs.
    Compare { a: PathBuf, b: PathBuf },
}

fn load(global: &Global) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &global.config {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::default(),
    };
    for kv in &global.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected KEY=VALUE, got `{kv}`")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(s) = global.seed {
        cfg.seed = s;
    }
    if let Some(m) = global.reps {
        cfg.reps = m;
    }
    if let Some(o) = &global.out {
        cfg.out = Some(o.clone());
    }
    if let Some(t) = global.threads {
        cfg.threads = t;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Error> {
    let mut cfg = load(&cli.global)?;
    let out = cfg.out.clone();
    let kind = match &cli.command {
        Command::Rates => {
            return write_csv(&experiment::rate_records(&cfg)?, out.as_deref());
        }
        Command::Compare { a, b } => {
            let rows = compare_curves(&read_curve(a)?, &read_curve(b)?)?;
            return write_csv(&rows, out.as_deref());
        }
        Command::ExactSfs => Kind::Exact,
        Command::SimCoalescent if cfg.model.is_xi() => Kind::CoalescentXi,
        Command::SimCoalescent => Kind::CoalescentLambda,
        Command::SimAncestral => Kind::Annealed,
        Command::SimQuenched => Kind::Quenched,
        Command::CnScaling => Kind::CnScaling,
    };
    cfg.kind = kind;
    let output: ExperimentOutput = experiment::run_experiment(&cfg)?;
    output.write(out.as_deref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) | Error::Domain(_) | Error::Schedule { .. } | Error::CapExceeded { .. } => 2,
                Error::AbortThreshold { .. } => 3,
                _ => 1,
            })
        }
    }
}
