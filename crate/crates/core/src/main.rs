use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use birthgrowth::cli::{self, RunOptions, VerifyOptions};

#[derive(Parser)]
#[command(name = "birthgrowth", version, about = "Birth-growth seed model simulator")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the campaign described by a configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `seed` in the file.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: available parallelism).
        #[arg(long)]
        threads: Option<usize>,
        /// Overrides `output.dir` in the file.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print analytic values only.
        #[arg(long)]
        dry_run: bool,
    },
    /// Run the built-in check battery.
    Verify {
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn main() -> ExitCode {
    match Args::parse().command {
        Command::Run {
            config,
            seed,
            threads,
            out,
            dry_run,
        } => {
            let opts = RunOptions {
                seed,
                threads,
                out,
                dry_run,
            };
            match cli::parse_config(&config).and_then(|c| cli::cmd_run(&c, &opts)) {
                Ok(outcome) => {
                    print!("{}", outcome.message);
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
        Command::Verify { threads } => {
            let opts = VerifyOptions {
                threads,
                ..VerifyOptions::default()
            };
            match cli::cmd_verify(&opts) {
                Ok(report) => {
                    print!("{}", report.render());
                    if report.all_passed() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::FAILURE
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
    }
}
