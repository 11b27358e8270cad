use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use oam_bench::{parse_config_with_overrides, run_scenario, ConfigError, OUT_DIR_ENV};

/// Run a splitter simulation scenario and write its CSV and summary files.
#[derive(Parser, Debug)]
#[command(name = "oam-bench", version)]
struct Cli {
    /// Scenario file (`key = value` lines in sections).
    scenario_file: PathBuf,
    /// Output directory. Falls back to `out_dir` in the file, then to
    /// $OAM_BENCH_OUT, then to the current directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed for Monte-Carlo draws; overrides `seed` in the file.
    #[arg(long)]
    seed: Option<u64>,
    /// Override one config key, e.g. `--set tbs.theta2=30`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };

    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));

    match run_scenario(&cfg, &out) {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            println!("{}: {}", cfg.scenario, outcome.headline);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn load(cli: &Cli) -> anyhow::Result<oam_bench::ScenarioConfig> {
    let text = std::fs::read_to_string(&cli.scenario_file)
        .with_context(|| format!("reading {}", cli.scenario_file.display()))?;
    let mut overrides = cli.set.clone();
    if let Some(seed) = cli.seed {
        overrides.push(format!("seed={seed}"));
    }
    parse_config_with_overrides(&text, &overrides).map_err(|e: ConfigError| anyhow::Error::new(e))
}
