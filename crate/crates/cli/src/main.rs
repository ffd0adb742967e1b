//! `specmerge` command-line tool.
//!
//! Every subcommand writes into `--out-dir` (or `$SPECMERGE_OUT`, or the
//! current directory). Outputs are assembled in memory and only written once
//! the whole computation has succeeded.

mod commands;
mod config;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "specmerge", version, about = "Spectral clustering of time series by merging spectra")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
pub struct GlobalArgs {
    /// Directory for output files.
    #[arg(long, global = true, env = "SPECMERGE_OUT")]
    pub out_dir: Option<PathBuf>,
    /// `key = value` file supplying defaults for any long option.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Overwrite existing output files.
    #[arg(long, global = true)]
    pub force: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a design and write the series as CSV columns.
    Simulate(commands::SimulateArgs),
    /// Cluster the series in a CSV file.
    Cluster(commands::ClusterArgs),
    /// Estimate the number of clusters.
    Nclusters(commands::NclustersArgs),
    /// Monte Carlo comparison of clustering methods.
    Experiment(commands::ExperimentArgs),
    /// Collapse a label column into contiguous segments.
    Segments(commands::SegmentsArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = match &cli.global.config {
        Some(p) => config::ConfigFile::load(p)?,
        None => config::ConfigFile::default(),
    };
    if let Some(n) = cfg.pick(cli.global.threads, "threads")? {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let out_dir: PathBuf = cfg.or(cli.global.out_dir.clone(), "out-dir", PathBuf::from("."))?;
    let force = cli.global.force || cfg.or(None, "force", false)?;
    let out = io::Outputs::new(&out_dir, force);
    let written = match cli.command {
        Command::Simulate(a) => commands::simulate(a, &cfg, out)?,
        Command::Cluster(a) => commands::cluster(a, &cfg, out)?,
        Command::Nclusters(a) => commands::nclusters(a, &cfg, out)?,
        Command::Experiment(a) => commands::experiment(a, &cfg, out)?,
        Command::Segments(a) => commands::segments(a, &cfg, out)?,
    };
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}
