//! `evshell`: validate, compile and consult Dempster-Shafer knowledge bases.

mod commands;
mod consult;
mod protocol;
mod serve;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Dot,
}

#[derive(Debug, Parser)]
#[command(name = "evshell", version, about = "Dempster-Shafer diagnostic expert-system shell")]
pub struct Cli {
    /// Output format. `compile` defaults to dot, everything else to text.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Exit threshold for a definite conclusion, overriding the knowledge base.
    #[arg(long, global = true, env = "EVSHELL_THRESHOLD")]
    pub threshold: Option<f64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a knowledge base and list its diagnostics.
    Validate { kb: PathBuf },
    /// Write one rule-network graph per partition.
    Compile {
        kb: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Run an interactive consultation on the terminal.
    Consult { kb: PathBuf },
    /// Replay an answer script and print the consultation report.
    Batch { kb: PathBuf, script: PathBuf },
    /// Serve the JSON session protocol over HTTP.
    Serve {
        kb: PathBuf,
        #[arg(long, default_value = "127.0.0.1:7878")]
        listen: SocketAddr,
    },
    /// Add a rule through the rule editor dialogue and save the knowledge base.
    Edit { kb: PathBuf },
}

/// A failure with the exit status it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }

    pub fn environment(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate { kb } => commands::validate(&cli, kb),
        Command::Compile { kb, out_dir } => commands::compile(&cli, kb, out_dir),
        Command::Consult { kb } => consult::run(&cli, kb),
        Command::Batch { kb, script } => commands::batch(&cli, kb, script),
        Command::Serve { kb, listen } => serve::run(&cli, kb, *listen),
        Command::Edit { kb } => commands::edit(kb),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("evshell: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}
