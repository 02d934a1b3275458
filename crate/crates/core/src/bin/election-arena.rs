use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use election_arena::cli;

/// Simulate Bully-style leader elections and compare message counts.
#[derive(Parser)]
#[command(name = "election-arena", version)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file to quiescence and print a summary.
    Run {
        file: PathBuf,
        /// Write the full event trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Worst-case message counts per cluster size, simulated and closed form.
    Table {
        /// Comma-separated cluster sizes.
        #[arg(long, default_value = "5,10,15,20,25")]
        sizes: String,
        /// Write CSV rows here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Check a single-detector scenario against its closed-form count.
    Verify { file: PathBuf },
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mut out = io::stdout().lock();
    let mut err = io::stderr().lock();
    let code = match args.command {
        Command::Run { file, trace } => cli::cmd_run(&file, trace.as_deref(), &mut out, &mut err),
        Command::Table { sizes, csv } => cli::cmd_table(&sizes, csv.as_deref(), &mut out, &mut err),
        Command::Verify { file } => cli::cmd_verify(&file, &mut out, &mut err),
    };
    ExitCode::from(code as u8)
}
