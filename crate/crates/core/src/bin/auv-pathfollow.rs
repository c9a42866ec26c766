//! Command-line front end for the closed-loop simulator.
//!
//! Exit codes: 0 success, 1 usage, configuration or I/O error, 2 run aborted,
//! 3 run finished without reaching the destination.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use auv_pathfollow::harness::{
    run_simulation, sweep_rho_c, write_log, HarnessError, LogFormat, ScenarioConfig,
};
use clap::{Parser, Subcommand};

const EXIT_CONFIG: u8 = 1;
const EXIT_ABORTED: u8 = 2;
const EXIT_INCOMPLETE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "auv-pathfollow",
    version,
    about = "LOS guidance with minimax MPC for a 6-DOF AUV"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one closed-loop simulation and write its log and metrics.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, default_value = "csv")]
        format: LogFormat,
    },
    /// Repeat the scenario for several circle-of-acceptance radii.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "rho-c", value_delimiter = ',', required = true)]
        rho_c: Vec<f64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Parse and validate a scenario without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the built-in reference scenario as JSON.
    Reference,
}

fn load(path: &Path) -> Result<ScenarioConfig, ExitCode> {
    ScenarioConfig::load(path)
        .and_then(|c| c.validate().map(|_| c))
        .map_err(|e| {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        })
}

fn write_file(path: &Path, contents: &str) -> Result<(), ExitCode> {
    fs::write(path, contents).map_err(|e| {
        eprintln!("error: writing {}: {e}", path.display());
        ExitCode::from(EXIT_CONFIG)
    })
}

fn run(
    config: &Path,
    seed: Option<u64>,
    out: &Path,
    format: LogFormat,
) -> Result<ExitCode, ExitCode> {
    let mut cfg = load(config)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    fs::create_dir_all(out).map_err(|e| {
        eprintln!("error: creating {}: {e}", out.display());
        ExitCode::from(EXIT_CONFIG)
    })?;
    let (log, metrics, aborted) = match run_simulation(&cfg) {
        Ok(res) => (res.log, res.metrics, None),
        Err(HarnessError::Aborted { time, reason, log }) => {
            let metrics = auv_pathfollow::harness::compute_metrics(&log, &cfg.plan());
            (
                *log,
                metrics,
                Some(format!("run aborted at t = {time} s: {reason}")),
            )
        }
        Err(e) => {
            eprintln!("error: {e}");
            return Err(ExitCode::from(EXIT_CONFIG));
        }
    };
    let log_path = out.join(format!("log.{}", format.extension()));
    write_log(&log, &log_path, format).map_err(|e| {
        eprintln!("error: writing {}: {e}", log_path.display());
        ExitCode::from(EXIT_CONFIG)
    })?;
    let json = serde_json::to_string_pretty(&metrics).expect("metrics serialize");
    write_file(&out.join("metrics.json"), &json)?;
    println!("{json}");
    if let Some(msg) = aborted {
        eprintln!("error: {msg}");
        return Ok(ExitCode::from(EXIT_ABORTED));
    }
    if !metrics.completed {
        eprintln!("destination not reached within {} s", cfg.max_sim_time);
        return Ok(ExitCode::from(EXIT_INCOMPLETE));
    }
    Ok(ExitCode::SUCCESS)
}

fn sweep(config: &Path, values: &[f64], out: &Path) -> Result<ExitCode, ExitCode> {
    let cfg = load(config)?;
    let table = sweep_rho_c(&cfg, values).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_CONFIG)
    })?;
    fs::create_dir_all(out).map_err(|e| {
        eprintln!("error: creating {}: {e}", out.display());
        ExitCode::from(EXIT_CONFIG)
    })?;
    let csv = table.to_csv_string();
    write_file(&out.join("sweep.csv"), &csv)?;
    print!("{csv}");
    if !table.comparable() {
        eprintln!("warning: not every run completed; surge values are not comparable");
        return Ok(ExitCode::from(EXIT_INCOMPLETE));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    // clap's own usage exit code (2) would collide with the abort code
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Run {
            config,
            seed,
            out,
            format,
        } => run(&config, seed, &out, format),
        Command::Sweep { config, rho_c, out } => sweep(&config, &rho_c, &out),
        Command::Validate { config } => load(&config).map(|_| {
            println!("ok");
            ExitCode::SUCCESS
        }),
        Command::Reference => {
            println!("{}", ScenarioConfig::reference().to_json());
            Ok(ExitCode::SUCCESS)
        }
    };
    result.unwrap_or_else(|code| code)
}
