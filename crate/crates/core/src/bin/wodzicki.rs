use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wodzicki::config::RunConfig;
use wodzicki::verify::{run_all, run_suite_with, SuiteReport, VerifyOptions, SUITES};
use wodzicki::Error;

#[derive(Parser)]
#[command(name = "wodzicki", about = "Spectral functionals on (noncommutative) tori")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the functional described by a TOML run configuration.
    Compute {
        #[arg(long)]
        config: std::path::PathBuf,
        /// Minimum number of tracked orders for inverse powers.
        #[arg(long)]
        depth: Option<u32>,
        /// Residual target for coefficient inversion.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Run a verification suite, or `all`.
    Verify {
        suite: String,
        #[arg(long)]
        json: bool,
    },
}

fn exit_for(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(if e.is_numerical() { 3 } else { 2 })
}

fn print_suites(reports: &[SuiteReport], json: bool) -> ExitCode {
    if json {
        println!("{}", serde_json::to_string_pretty(reports).expect("reports serialize"));
    } else {
        for r in reports {
            println!("{}", r.summary_line());
            print!("{}", r.table());
        }
    }
    if reports.iter().all(SuiteReport::pass) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn compute(path: &std::path::Path, depth: Option<u32>, tol: Option<f64>) -> Result<String, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut cfg = RunConfig::from_toml(&text)?;
    if depth.is_some() {
        cfg.depth = depth;
    }
    if let Some(t) = tol {
        cfg.tolerances.inversion = t;
    }
    let report = cfg.execute()?;
    for name in &cfg.suites {
        let r = run_suite_with(name, &VerifyOptions::default())?;
        eprintln!("{}", r.summary_line());
    }
    report.to_json()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("WODZICKI_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match cli.command {
        Command::Compute { config, depth, tol } => match compute(&config, depth, tol) {
            Ok(json) => {
                println!("{json}");
                ExitCode::SUCCESS
            }
            Err(e) => exit_for(&e),
        },
        Command::Verify { suite, json } => {
            let opts = VerifyOptions::default();
            if suite == "all" {
                return print_suites(&run_all(&opts), json);
            }
            match run_suite_with(&suite, &opts) {
                Ok(r) => print_suites(&[r], json),
                Err(e) => {
                    eprintln!("known suites: all, {}", SUITES.join(", "));
                    exit_for(&e)
                }
            }
        }
    }
}
