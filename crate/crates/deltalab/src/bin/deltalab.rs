use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "deltalab", version, about = "point-interaction laboratory on the radial line")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Tune a potential to its zero-energy resonance
    Bs {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Point-interaction spectrum and resolvent data
    Pi {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run an ε sweep (local, free or nonlocal) and write reports
    Converge {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Reconstruct the resonance profile and certify its tail
    Resonance {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let code = match cli.command {
        Cmd::Bs { config, out } => deltalab::cli::cmd_bs(&config, &out),
        Cmd::Pi { config, out } => deltalab::cli::cmd_pi(&config, &out),
        Cmd::Converge { config, out } => deltalab::cli::cmd_converge(&config, &out),
        Cmd::Resonance { config, out } => deltalab::cli::cmd_resonance_profile(&config, &out),
    };
    ExitCode::from(code as u8)
}
