use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use infsup::cli;

#[derive(Parser)]
#[command(name = "infsup", version, about = "Certified inf-sup bounds by natural-norm SCM")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the greedy and write bounds.csv, registry.json and report.json.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Check a saved registry against brute-force inf-sup values.
    Validate {
        #[arg(long)]
        registry: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Render heatmaps and the gap histogram from a bounds table.
    Plot {
        #[arg(long)]
        bounds: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn configure_threads() {
    let Ok(v) = std::env::var("INFSUP_THREADS") else {
        return;
    };
    match v.parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("warning: could not size thread pool: {e}");
            }
        }
        _ => eprintln!("warning: ignoring INFSUP_THREADS={v:?}"),
    }
}

fn main() -> ExitCode {
    let args = Cli::parse();
    configure_threads();
    let code = match args.command {
        Command::Run { config } => cli::cmd_run(&config),
        Command::Validate {
            registry,
            config,
            samples,
            seed,
        } => cli::cmd_validate(&registry, &config, samples, seed),
        Command::Plot { bounds, out } => cli::cmd_plot(&bounds, out.as_deref()),
    };
    ExitCode::from(code as u8)
}
