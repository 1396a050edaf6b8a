use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use copsslite::config::{load_config, ConfigError};
use copsslite::suite;
use copsslite::traffic::Distribution;

#[derive(Parser)]
#[command(name = "copsslite", version, about = "COPSS-lite pub/sub forwarding simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every scenario of an experiment config and write the reports.
    Run {
        config: PathBuf,
        /// Output directory; COPSSLITE_OUT, when set, takes precedence.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Use seeds 1..=N instead of the configured list.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        seeds: Option<u64>,
        /// Recompute the aggregate report from the per-seed rows and check it.
        #[arg(long)]
        verify: bool,
        /// Also write one trace CSV per run.
        #[arg(long)]
        traces: bool,
    },
    /// Check a config and list every problem found.
    Validate { config: PathBuf },
    /// Print a popularity table over ranks 1..=K.
    Pmf {
        /// zipf, geometric, uniform or binomial
        dist: String,
        /// Distribution parameter; `-` for none.
        #[arg(allow_hyphen_values = true)]
        param: String,
        k: usize,
    },
}

fn report_config_error(e: &ConfigError) {
    eprintln!("invalid config:");
    for line in e.to_string().lines() {
        eprintln!("  {line}");
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config } => match load_config(&config) {
            Ok(c) => {
                println!(
                    "ok: {} nodes, {} links, {} workloads, {} subscriber sets, {} seeds",
                    c.topology.nodes().len(),
                    c.topology.links().len(),
                    c.workloads.len(),
                    c.subscriber_sets().len(),
                    c.seeds.len()
                );
                ExitCode::SUCCESS
            }
            Err(e) => {
                report_config_error(&e);
                ExitCode::FAILURE
            }
        },
        Command::Pmf { dist, param, k } => {
            let param = match param.as_str() {
                "-" | "none" => None,
                p => match p.parse::<f64>() {
                    Ok(v) => Some(v),
                    Err(e) => {
                        eprintln!("bad parameter {p:?}: {e}");
                        return ExitCode::FAILURE;
                    }
                },
            };
            let dist = match Distribution::from_kind(&dist, param) {
                Ok(d) => d,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::FAILURE;
                }
            };
            if k == 0 {
                eprintln!("K must be at least 1");
                return ExitCode::FAILURE;
            }
            println!("rank,pmf");
            for (i, p) in dist.table(k).iter().enumerate() {
                println!("{},{p:.12}", i + 1);
            }
            ExitCode::SUCCESS
        }
        Command::Run { config, out, seeds, verify, traces } => {
            let mut cfg = match load_config(&config) {
                Ok(c) => c,
                Err(e) => {
                    report_config_error(&e);
                    return ExitCode::FAILURE;
                }
            };
            let out = std::env::var_os("COPSSLITE_OUT").map_or(out, PathBuf::from);
            if let Some(n) = seeds {
                cfg.seeds = (1..=n).collect();
            }
            let result = suite::run_suite(&cfg, traces);
            // Whatever completed is written even if some runs failed.
            match result.write(&out) {
                Ok(paths) => {
                    let traces = out.join("traces");
                    for p in paths.iter().filter(|p| !p.starts_with(&traces)) {
                        println!("wrote {}", p.display());
                    }
                    if !result.traces.is_empty() {
                        println!("wrote {} traces under {}", result.traces.len(), traces.display());
                    }
                }
                Err(e) => {
                    eprintln!("cannot write reports to {}: {e}", out.display());
                    return ExitCode::FAILURE;
                }
            }
            for (label, e) in &result.failures {
                eprintln!("run {label} failed: {e}");
            }
            if verify {
                let read = |name: &str| std::fs::read_to_string(out.join(name));
                let checked = match (read("per_seed.csv"), read("report.csv")) {
                    (Ok(rows), Ok(report)) => suite::verify(&rows, &report),
                    (Err(e), _) | (_, Err(e)) => Err(format!("cannot re-read reports: {e}")),
                };
                match checked {
                    Ok(()) => println!("verify: report.csv matches {} per-seed rows", result.rows.len()),
                    Err(e) => {
                        eprintln!("verify: {e}");
                        return ExitCode::FAILURE;
                    }
                }
            }
            if result.failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
