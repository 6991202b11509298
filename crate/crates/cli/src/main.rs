//! `polariton run spec.inp`: batch driver for polaritonic SCF, CC, Λ densities
//! and EOM states, with parameter scans.

mod run;
mod spec;

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use run::{run, RunOptions};
use spec::RunSpec;

#[derive(Parser)]
#[command(name = "polariton", version, about = "Molecules in optical cavities: QED-HF, QED-CC and EOM-CC")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the calculation described by an input file.
    Run {
        spec: PathBuf,
        /// Cross-check against the brute-force oracle where it fits in memory.
        #[arg(long)]
        validate: bool,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Output directory; overrides `output` in the input file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run { spec, validate, threads, out } => {
            if let Some(n) = threads {
                rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
            }
            let text = std::fs::read_to_string(&spec).with_context(|| format!("reading {}", spec.display()))?;
            let parsed = RunSpec::parse(&text).with_context(|| format!("{}", spec.display()))?;
            for t in &parsed.added_tasks {
                log::info!("task {} added as a prerequisite", t.name());
            }
            let out = out.or_else(|| parsed.output.clone()).unwrap_or_else(|| PathBuf::from("out"));
            let summary = run(&parsed, &RunOptions { out, validate: validate || parsed.validate })?;
            for line in &summary.lines {
                println!("{line}");
            }
            println!("{} point(s), {} failed", summary.points, summary.failed);
            for f in &summary.files {
                println!("wrote {}", f.display());
            }
        }
    }
    Ok(())
}
