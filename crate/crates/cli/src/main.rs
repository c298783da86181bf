mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use commands::{execute, Command};
use config::ExperimentConfig;

/// Topology of optical-flow patches.
///
/// Exit status: 0 when every check passes, 1 on a failed check or stage,
/// 2 on usage or configuration errors.
#[derive(Debug, Parser)]
#[command(name = "flowtopo", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Flat JSON config; defaults apply to missing keys
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// `key=value` config overrides (value parsed as JSON, else a string)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Further `key=value` overrides
    #[arg(value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn resolve(cli: &Cli) -> Result<ExperimentConfig, config::ConfigError> {
    let overrides: Vec<String> = cli.set.iter().chain(&cli.overrides).cloned().collect();
    let mut cfg = ExperimentConfig::load(cli.config.as_deref())?.with_overrides(&overrides)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.display().to_string();
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match resolve(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("flowtopo: {e}");
            return ExitCode::from(2);
        }
    };
    match execute(cli.command, &cfg) {
        Ok(outcome) => {
            let verdict = if outcome.passed { "PASS" } else { "FAIL" };
            println!("{} {verdict}: {}", cli.command.name(), outcome.summary);
            println!("report: {}", outcome.report.display());
            ExitCode::from(u8::from(!outcome.passed))
        }
        Err(e) => {
            eprintln!("flowtopo {}: {e}", cli.command.name());
            ExitCode::from(e.exit_code())
        }
    }
}
