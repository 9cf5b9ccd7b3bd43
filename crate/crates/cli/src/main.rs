use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nlskdv_core::continuation::Branch;
use nlskdv_lab::output::csv_bytes;
use nlskdv_lab::{experiments, run, RunOptions};

#[derive(Parser)]
#[command(name = "nlskdv-lab", version, about = "Numerical experiments for the periodic NLS-KdV system")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Worker threads for sweeps and ensembles.
        #[arg(long)]
        jobs: Option<usize>,
        /// Output directory, overriding the config.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Seed, overriding the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the regularity thresholds of one branch as CSV.
    Thresholds {
        #[arg(long, value_enum)]
        branch: BranchArg,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum BranchArg {
    Resonant,
    Nonresonant,
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or("NLSKDV_LAB_LOG", "error");
    env_logger::Builder::from_env(env).format_timestamp(None).init();
}

fn main() -> ExitCode {
    init_logging();
    match Cli::parse().command {
        Command::Run { config, jobs, output, seed } => {
            let outcome = run(&RunOptions { config_path: config, jobs, output, seed });
            if let Some(msg) = &outcome.manifest.message {
                eprintln!("nlskdv-lab: {msg}");
            }
            eprintln!("nlskdv-lab: wrote {}", outcome.output_dir.display());
            ExitCode::from(outcome.exit_code as u8)
        }
        Command::Thresholds { branch } => {
            let branch = match branch {
                BranchArg::Resonant => Branch::Resonant,
                BranchArg::Nonresonant => Branch::Nonresonant,
            };
            let out = match experiments::thresholds(branch) {
                Ok(out) => out,
                Err(e) => {
                    eprintln!("nlskdv-lab: {e}");
                    return ExitCode::from(e.exit_code() as u8);
                }
            };
            let bytes = csv_bytes(&out.table).expect("in-memory CSV cannot fail");
            print!("{}", String::from_utf8_lossy(&bytes));
            for note in out.notes {
                eprintln!("note: {note}");
            }
            ExitCode::SUCCESS
        }
    }
}
