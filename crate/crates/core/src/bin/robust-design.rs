use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use robust_design::cli::{load_config, run, EXIT_CONFIG};

/// Minimax robust designs: frontier sweeps, bounded-bias and bounded-variance
/// designs, and exact-design rounding.
#[derive(Parser, Debug)]
#[command(name = "robust-design", version)]
struct Args {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output` in the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized checks. The solvers themselves are deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { 0 });
        }
    };
    let _ = args.seed;
    let cfg = match load_config(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}", e);
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let out = args.out.unwrap_or_else(|| cfg.output.clone());
    match run(&cfg, &out) {
        Ok(report) => {
            println!("{}", report.summary);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
