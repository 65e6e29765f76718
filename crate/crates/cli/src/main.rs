use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lieflow::Preset;
use lieflow_cli::{run_file, Overrides};

/// Stochastically forced geodesic flows on Lie groups.
#[derive(Parser)]
#[command(name = "lieflow", version)]
struct Cli {
    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for path ensembles.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Decide ranks in exact rational arithmetic.
    #[arg(long, global = true)]
    exact: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a config file. Exit status: 0 pass, 1 test failure, 2 input error, 3 inconclusive.
    Run {
        config: PathBuf,
        /// Output directory (default: $LIEFLOW_OUTPUT_ROOT/<config name>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in algebras.
    Presets,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Presets => {
            for p in Preset::catalog() {
                println!("{p}\tdim {}", p.dim());
            }
            ExitCode::SUCCESS
        }
        Command::Run { config, out } => {
            let overrides = Overrides { seed: cli.seed, threads: cli.threads, exact: cli.exact, out };
            match run_file(&config, &overrides) {
                Ok(o) => {
                    println!("{}: {}", o.status_label(), o.summary);
                    println!("results in {}", o.output_dir.display());
                    ExitCode::from(o.status.exit_code() as u8)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
    }
}
