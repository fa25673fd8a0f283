//! Command-line front end: `villus-homog <module> --config <path> [--out <dir>]`.
//!
//! Exit codes: 0 success, 1 numeric/pipeline failure, 2 usage or
//! configuration error. The output directory resolves in order: `--out`,
//! the `VILLUS_HOMOG_OUT` environment variable, the config's `out_dir`.

use clap::Parser;
use std::path::PathBuf;
use std::process::ExitCode;
use villus_homog::config::{parse_config, ModuleKind};
use villus_homog::runner::{run_experiment, RunError};

#[derive(Parser)]
#[command(
    name = "villus-homog",
    version,
    about = "Multiscale peristaltic-transport and villous-absorption simulations"
)]
struct Cli {
    /// Pipeline to run: ode-sim | ode-converge | geometry | homogenize |
    /// cell-solve | macro-solve | micro-verify | compare
    module: String,
    /// Experiment configuration file
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides VILLUS_HOMOG_OUT and the config)
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Machine-readable record on stderr: `code = ...` then one `error = ...`
/// line per problem.
fn usage_error(code: &str, problems: &[String]) -> ExitCode {
    eprintln!("code = {code}");
    for p in problems {
        eprintln!("error = {p}");
    }
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(module) = ModuleKind::from_str(&cli.module) else {
        return usage_error(
            "usage-error",
            &[format!(
                "unknown module '{}'; expected one of {}",
                cli.module,
                ModuleKind::all().map(|m| m.as_str()).join(", ")
            )],
        );
    };
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            return usage_error(
                "usage-error",
                &[format!("cannot read {}: {e}", cli.config.display())],
            )
        }
    };
    let cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(errors) => {
            return usage_error(
                "config-error",
                &errors.iter().map(|e| e.to_string()).collect::<Vec<_>>(),
            );
        }
    };
    if cfg.module != module {
        return usage_error(
            "usage-error",
            &[format!(
                "the command line selects '{}' but the config declares '{}'",
                module.as_str(),
                cfg.module.as_str()
            )],
        );
    }
    let out_dir = cli
        .out
        .or_else(|| std::env::var_os("VILLUS_HOMOG_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(&cfg.out_dir));
    let config_dir = cli.config.parent().map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."));
    match run_experiment(&cfg, &out_dir, &config_dir) {
        Ok(summary) => {
            println!("wrote {} artifacts to {}", summary.artifacts.len(), summary.out_dir.display());
            for n in &summary.notes {
                println!("  {n}");
            }
            ExitCode::SUCCESS
        }
        Err(RunError::Config(errors)) => {
            usage_error("config-error", &errors.iter().map(|e| e.to_string()).collect::<Vec<_>>())
        }
        Err(e) => {
            eprintln!("code = numeric-failure");
            eprintln!("error = {e}");
            ExitCode::from(1)
        }
    }
}
