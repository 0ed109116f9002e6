use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mather_lp_cli::{run_config, Overrides, WORKERS_ENV};

#[derive(Parser)]
#[command(name = "mather-lp", version, about = "Minimizing measures of Tonelli Lagrangians on the torus")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Execute the command described by a JSON config.
    #[command(after_help = format!(
        "Exit codes: 0 success, 2 config error, 3 solver failure, 4 output IO error.\n\
         Worker count falls back to ${WORKERS_ENV} when neither --workers nor the config set it."
    ))]
    Run {
        config: PathBuf,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    let Cmd::Run {
        config,
        output_dir,
        workers,
        seed,
    } = Cli::parse().command;
    let overrides = Overrides {
        output_dir,
        workers,
        seed,
    };
    match run_config(&config, &overrides) {
        Ok(summary) => {
            let m = &summary.manifest;
            println!(
                "{}: wrote {} to {} in {:.3}s",
                m.command,
                m.files.join(", "),
                summary.output_dir.display(),
                m.wall_time_s
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
