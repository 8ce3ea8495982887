//! `sharptrace run <config.json>` and `sharptrace list [--json]`.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 violated
//! hypothesis, 3 numerical non-convergence. `SHARPTRACE_THREADS` sets the
//! worker count (default: all cores).

mod config;
mod run;

use clap::{Parser, Subcommand};
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use config::{ExperimentConfig, KINDS};
use sharptrace::verify::write_csv;
use sharptrace::Error;

const THREADS_VAR: &str = "SHARPTRACE_THREADS";

#[derive(Parser)]
#[command(name = "sharptrace", version, about = "Batch experiments on trace inequalities for homogeneous symbols")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run { config: PathBuf },
    /// List the experiment kinds.
    List {
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Failure {
    Config = 1,
    Hypothesis = 2,
    NonConvergence = 3,
}

fn classify(e: &Error) -> Failure {
    match e {
        Error::Hypothesis(_) | Error::DivergentAtOrigin(_) => Failure::Hypothesis,
        Error::NoConvergence { .. } | Error::NonFinite(_) => Failure::NonConvergence,
        _ => Failure::Config,
    }
}

#[derive(Serialize)]
struct Report<'a> {
    name: &'a str,
    kind: &'a str,
    version: &'a str,
    status: &'a str,
    config: &'a ExperimentConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    diagnostics: Option<String>,
    /// Kept last: the only field that differs between identical runs.
    wall_clock_seconds: f64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(Failure::Config as u8);
    }
    match cli.command {
        Command::List { json } => list(json),
        Command::Run { config } => run(&config),
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let threads: usize = v.trim().parse().map_err(|_| format!("{THREADS_VAR}={v:?} is not a positive integer"))?;
    if threads == 0 {
        return Err(format!("{THREADS_VAR} must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().map_err(|e| e.to_string())
}

fn list(json: bool) -> ExitCode {
    if json {
        let items: Vec<_> = KINDS.iter().map(|(k, d)| serde_json::json!({ "kind": k, "description": d })).collect();
        println!("{}", serde_json::to_string_pretty(&items).expect("static listing serializes"));
    } else {
        for (k, d) in KINDS {
            println!("{k:<16} {d}");
        }
    }
    ExitCode::SUCCESS
}

fn run(path: &Path) -> ExitCode {
    let cfg = match ExperimentConfig::load(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(Failure::Config as u8);
        }
    };
    let start = Instant::now();
    let outcome = run::execute(&cfg);
    let elapsed = start.elapsed().as_secs_f64();
    let kind = cfg.experiment.kind();
    let version = env!("CARGO_PKG_VERSION");
    let (report, csv, code) = match outcome {
        Ok(o) => (
            Report { name: &cfg.name, kind, version, status: "ok", config: &cfg, result: Some(o.result), diagnostics: None, wall_clock_seconds: elapsed },
            Some(o.csv),
            0,
        ),
        Err(e) => match classify(&e) {
            Failure::NonConvergence => {
                eprintln!("error: {e}");
                (
                    Report {
                        name: &cfg.name,
                        kind,
                        version,
                        status: "non-convergence",
                        config: &cfg,
                        result: None,
                        diagnostics: Some(e.to_string()),
                        wall_clock_seconds: elapsed,
                    },
                    None,
                    Failure::NonConvergence as u8,
                )
            }
            f => {
                eprintln!("error: {e}");
                return ExitCode::from(f as u8);
            }
        },
    };
    match write_outputs(&cfg, &report, csv.as_deref()) {
        Ok(()) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(Failure::Config as u8)
        }
    }
}

/// Writes `<name>.report.json` and `<name>.csv` through temporary files so a
/// failed write leaves no partial output behind.
fn write_outputs(cfg: &ExperimentConfig, report: &Report, csv: Option<&[sharptrace::verify::CsvRow]>) -> anyhow::Result<()> {
    std::fs::create_dir_all(&cfg.output_dir)?;
    let json_path = cfg.output_dir.join(format!("{}.report.json", cfg.name));
    let csv_path = cfg.output_dir.join(format!("{}.csv", cfg.name));
    let mut json = serde_json::to_vec_pretty(report)?;
    json.push(b'\n');
    let mut files = vec![(json_path, json)];
    if let Some(rows) = csv {
        let mut buf = Vec::new();
        write_csv(rows, &mut buf)?;
        files.push((csv_path, buf));
    }
    let mut staged = Vec::new();
    for (dest, bytes) in files {
        match stage(&dest, &bytes) {
            Ok(tmp) => staged.push((tmp, dest)),
            Err(e) => {
                for (tmp, _) in staged {
                    let _ = std::fs::remove_file(tmp);
                }
                return Err(e);
            }
        }
    }
    for (tmp, dest) in staged {
        std::fs::rename(tmp, dest)?;
    }
    Ok(())
}

fn stage(dest: &Path, bytes: &[u8]) -> anyhow::Result<PathBuf> {
    let tmp = dest.with_extension("tmp");
    let mut f = std::fs::File::create(&tmp)?;
    f.write_all(bytes)?;
    f.sync_all()?;
    Ok(tmp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_map_to_exit_codes() {
        assert_eq!(classify(&Error::Hypothesis("x".into())), Failure::Hypothesis);
        assert_eq!(classify(&Error::NoConvergence { iterations: 3, residual: 1.0 }), Failure::NonConvergence);
        assert_eq!(classify(&Error::InvalidParameter("x".into())), Failure::Config);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
