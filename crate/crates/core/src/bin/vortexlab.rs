use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use vortexlab::experiment::{run, Command, Invocation};

/// Batch experiments for the self-dual abelian Higgs model.
#[derive(Parser, Debug)]
#[command(name = "vortexlab", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,

    /// JSON config for the command.
    #[arg(long)]
    config: PathBuf,

    /// Worker threads; falls back to VORTEXLAB_THREADS.
    #[arg(long)]
    threads: Option<usize>,

    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let inv = Invocation { command: args.command, config_path: &args.config, threads: args.threads, out: args.out };
    match run(inv) {
        Ok(outcome) => {
            for line in &outcome.messages {
                println!("{line}");
            }
            println!("wrote {} files to {}", outcome.manifest.outputs.len(), outcome.out.display());
            ExitCode::SUCCESS
        }
        Err((e, _)) => {
            eprintln!("{}", serde_json::to_string_pretty(&e.to_json()).unwrap_or_else(|_| e.to_string()));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
