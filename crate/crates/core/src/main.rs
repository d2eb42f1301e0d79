use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ssc_core::cli;

#[derive(Parser)]
#[command(name = "ssc", version, about = "Dual-norm growth and second-order checks for bang-bang control")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed for every random family; overrides the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List experiments and fixtures.
    List,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { cli::EXIT_CONFIG as u8 } else { 0 });
        }
    };
    match args.command {
        Command::List => {
            print!("{}", cli::listing());
            ExitCode::SUCCESS
        }
        Command::Run { config, out, seed } => {
            let code = cli::run_command(&config, out.as_deref(), seed, &mut std::io::stderr());
            ExitCode::from(code as u8)
        }
    }
}
