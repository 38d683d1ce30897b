use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use irs_phase_noise::experiment;

/// Rate simulations for IRS-assisted links with oscillator phase noise.
#[derive(Parser)]
#[command(name = "irsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named experiment and write CSV plus a manifest next to it.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        experiment: String,
        #[arg(long)]
        out: PathBuf,
        /// Override a config field or run option (trials, workers, t_samples,
        /// modes, fidelities).
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// List available experiments.
    List {
        /// One JSON record per line.
        #[arg(long)]
        json: bool,
    },
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
    match cli.command {
        Command::List { json } => {
            let text = if json { experiment::list_records() } else { experiment::list_text() };
            print!("{text}");
            ExitCode::SUCCESS
        }
        Command::Run {
            config,
            experiment: name,
            out,
            overrides,
        } => match experiment::run(&config, &name, &out, &overrides) {
            Ok(m) => {
                eprintln!("wrote {} rows to {} (output {})", m.rows, out.display(), &m.output_hash[..12]);
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
    }
}
