//! Sweeps an experiment over modes, workloads, subscriber sets and seeds, and
//! writes the resulting reports.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::metrics::MetricsReport;
use crate::simnet::{self, Mode, SimError, Trace};
use crate::traffic::Distribution;

pub const PER_SEED_HEADER: &str =
    "seed,subscribers,mode,dist,param,mean_ms,median_ms,p95_ms,bytes,frames,delivery_ratio";
pub const REPORT_HEADER: &str = "subscribers,mode,dist,param,mean_ms,median_ms,p95_ms,bytes,frames,delivery_ratio";

/// Rounds to the three decimals the reports carry, so aggregates computed
/// in memory match aggregates recomputed from the written per-seed file.
fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| format!("{v:.3}"))
}

fn fmt_param(p: Option<f64>) -> String {
    p.map_or_else(String::new, |v| format!("{v}"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedRow {
    pub seed: u64,
    pub subscribers: usize,
    pub mode: Mode,
    pub dist: &'static str,
    pub param: Option<f64>,
    pub mean_ms: Option<f64>,
    pub median_ms: Option<f64>,
    pub p95_ms: Option<f64>,
    pub bytes: u64,
    pub frames: u64,
    pub delivery_ratio: f64,
}

impl SeedRow {
    fn new(seed: u64, dist: &Distribution, report: &MetricsReport) -> Self {
        Self {
            seed,
            subscribers: report.subscribers,
            mode: report.mode,
            dist: dist.kind(),
            param: dist.param(),
            mean_ms: report.latency.map(|l| round3(l.mean)),
            median_ms: report.latency.map(|l| round3(l.median)),
            p95_ms: report.latency.map(|l| round3(l.p95)),
            bytes: report.load.bytes,
            frames: report.load.frames,
            delivery_ratio: round3(report.delivery_ratio),
        }
    }

    fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{:.3}",
            self.seed,
            self.subscribers,
            self.mode,
            self.dist,
            fmt_param(self.param),
            fmt_opt(self.mean_ms),
            fmt_opt(self.median_ms),
            fmt_opt(self.p95_ms),
            self.bytes,
            self.frames,
            self.delivery_ratio
        )
    }
}

/// Per-scenario means over seeds. Latency columns average only the seeds
/// that delivered something.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub subscribers: usize,
    pub mode: Mode,
    pub dist: &'static str,
    pub param: Option<f64>,
    pub mean_ms: Option<f64>,
    pub median_ms: Option<f64>,
    pub p95_ms: Option<f64>,
    pub bytes: f64,
    pub frames: f64,
    pub delivery_ratio: f64,
    pub seeds: usize,
}

impl AggregateRow {
    fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{:.3},{:.3},{:.3}",
            self.subscribers,
            self.mode,
            self.dist,
            fmt_param(self.param),
            fmt_opt(self.mean_ms),
            fmt_opt(self.median_ms),
            fmt_opt(self.p95_ms),
            self.bytes,
            self.frames,
            self.delivery_ratio
        )
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Groups consecutive rows sharing (mode, dist, param, subscribers).
/// Rows must already be in report order.
pub fn aggregate(rows: &[SeedRow]) -> Vec<AggregateRow> {
    let same = |a: &SeedRow, b: &SeedRow| {
        (a.mode, a.dist, a.param.map(f64::to_bits), a.subscribers)
            == (b.mode, b.dist, b.param.map(f64::to_bits), b.subscribers)
    };
    rows.chunk_by(same)
        .map(|g| AggregateRow {
            subscribers: g[0].subscribers,
            mode: g[0].mode,
            dist: g[0].dist,
            param: g[0].param,
            mean_ms: mean(g.iter().filter_map(|r| r.mean_ms)),
            median_ms: mean(g.iter().filter_map(|r| r.median_ms)),
            p95_ms: mean(g.iter().filter_map(|r| r.p95_ms)),
            bytes: mean(g.iter().map(|r| r.bytes as f64)).unwrap_or(0.0),
            frames: mean(g.iter().map(|r| r.frames as f64)).unwrap_or(0.0),
            delivery_ratio: mean(g.iter().map(|r| r.delivery_ratio)).unwrap_or(0.0),
            seeds: g.len(),
        })
        .collect()
}

#[derive(Debug, Clone)]
struct Job {
    order: (Mode, usize, usize, usize),
    seed: u64,
    mode: Mode,
    dist: Distribution,
    subscribers: Vec<crate::routing::NodeId>,
}

impl Job {
    fn label(&self) -> String {
        format!(
            "{}_{}{}_n{}_seed{}",
            self.mode,
            self.dist.kind(),
            self.dist.param().map_or_else(String::new, |p| format!("-{p}")),
            self.subscribers.len(),
            self.seed
        )
    }
}

#[derive(Debug)]
pub struct SuiteResult {
    pub rows: Vec<SeedRow>,
    pub aggregate: Vec<AggregateRow>,
    /// `(label, trace)` per run, present only when traces were requested.
    pub traces: Vec<(String, Trace)>,
    /// Runs that failed, by label.
    pub failures: Vec<(String, SimError)>,
}

impl SuiteResult {
    pub fn per_seed_csv(&self) -> String {
        let mut out = format!("{PER_SEED_HEADER}\n");
        for r in &self.rows {
            out.push_str(&r.csv());
            out.push('\n');
        }
        out
    }

    pub fn report_csv(&self) -> String {
        report_csv(&self.aggregate)
    }

    /// Long format for gnuplot: one block per (mode, dist, param), blocks
    /// separated by two blank lines so `index` selects a curve.
    pub fn report_dat(&self) -> String {
        let mut out = String::from("# mode dist param subscribers mean_ms median_ms p95_ms bytes frames delivery_ratio\n");
        let mut prev: Option<(Mode, &str, Option<u64>)> = None;
        for r in &self.aggregate {
            let key = (r.mode, r.dist, r.param.map(f64::to_bits));
            if prev.is_some_and(|p| p != key) {
                out.push_str("\n\n");
            }
            prev = Some(key);
            let na = |x: Option<f64>| x.map_or_else(|| "NaN".to_string(), |v| format!("{v:.3}"));
            let _ = writeln!(
                out,
                "{} {} {} {} {} {} {} {:.3} {:.3} {:.3}",
                r.mode,
                r.dist,
                r.param.map_or_else(|| "NA".to_string(), |p| p.to_string()),
                r.subscribers,
                na(r.mean_ms),
                na(r.median_ms),
                na(r.p95_ms),
                r.bytes,
                r.frames,
                r.delivery_ratio
            );
        }
        out
    }

    /// Writes `per_seed.csv`, `report.csv`, `report.dat` and any traces
    /// under `dir`; returns the paths written.
    pub fn write(&self, dir: &Path) -> io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for (name, body) in [
            ("per_seed.csv", self.per_seed_csv()),
            ("report.csv", self.report_csv()),
            ("report.dat", self.report_dat()),
        ] {
            let path = dir.join(name);
            fs::write(&path, body)?;
            written.push(path);
        }
        if !self.traces.is_empty() {
            let tdir = dir.join("traces");
            fs::create_dir_all(&tdir)?;
            for (label, trace) in &self.traces {
                let path = tdir.join(format!("{label}.csv"));
                fs::write(&path, trace.to_csv())?;
                written.push(path);
            }
        }
        Ok(written)
    }
}

pub fn report_csv(rows: &[AggregateRow]) -> String {
    let mut out = format!("{REPORT_HEADER}\n");
    for r in rows {
        out.push_str(&r.csv());
        out.push('\n');
    }
    out
}

fn jobs(config: &ExperimentConfig) -> Vec<Job> {
    let sets = config.subscriber_sets();
    let mut jobs = Vec::new();
    for &mode in &config.modes {
        for (wi, &dist) in config.workloads.iter().enumerate() {
            for (si, subs) in sets.iter().enumerate() {
                for (ki, &seed) in config.seeds.iter().enumerate() {
                    jobs.push(Job {
                        order: (mode, wi, si, ki),
                        seed,
                        mode,
                        dist,
                        subscribers: subs.clone(),
                    });
                }
            }
        }
    }
    jobs
}

/// Runs every (mode, workload, subscriber set, seed) combination in
/// parallel and merges the results in that order.
pub fn run_suite(config: &ExperimentConfig, keep_traces: bool) -> SuiteResult {
    let mut results: Vec<_> = jobs(config)
        .into_par_iter()
        .map(|job| {
            let scenario = config.scenario(job.dist, job.mode, job.subscribers.clone());
            let outcome = simnet::run(&scenario, job.seed).map(|trace| {
                let report = MetricsReport::from_trace(
                    &trace,
                    job.mode,
                    &job.subscribers,
                    config.publications,
                    config.include_sync,
                );
                (SeedRow::new(job.seed, &job.dist, &report), keep_traces.then_some(trace))
            });
            (job, outcome)
        })
        .collect();
    results.sort_by_key(|(job, _)| job.order);

    let mut rows = Vec::new();
    let mut traces = Vec::new();
    let mut failures = Vec::new();
    for (job, outcome) in results {
        match outcome {
            Ok((row, trace)) => {
                rows.push(row);
                if let Some(t) = trace {
                    traces.push((job.label(), t));
                }
            }
            Err(e) => failures.push((job.label(), e)),
        }
    }
    let aggregate = aggregate(&rows);
    SuiteResult {
        rows,
        aggregate,
        traces,
        failures,
    }
}

fn parse_opt(s: &str) -> Result<Option<f64>, String> {
    if s.is_empty() {
        Ok(None)
    } else {
        s.parse().map(Some).map_err(|e| format!("{s:?}: {e}"))
    }
}

/// Re-reads a per-seed CSV, recomputes the aggregate report from it and
/// checks it matches `report` byte for byte.
pub fn verify(per_seed_csv: &str, report: &str) -> Result<(), String> {
    let mut lines = per_seed_csv.lines();
    if lines.next() != Some(PER_SEED_HEADER) {
        return Err("per-seed file has an unexpected header".into());
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 11 {
            return Err(format!("per-seed line {}: expected 11 fields", i + 2));
        }
        let err = |e: String| format!("per-seed line {}: {e}", i + 2);
        let mode = match f[2] {
            "pubsub" => Mode::PubSub,
            "pull" => Mode::Pull,
            m => return Err(err(format!("unknown mode {m:?}"))),
        };
        let dist: &'static str = match f[3] {
            "zipf" => "zipf",
            "geometric" => "geometric",
            "uniform" => "uniform",
            "binomial" => "binomial",
            d => return Err(err(format!("unknown dist {d:?}"))),
        };
        let int = |s: &str| s.parse::<u64>().map_err(|e| err(format!("{s:?}: {e}")));
        rows.push(SeedRow {
            seed: int(f[0])?,
            subscribers: int(f[1])? as usize,
            mode,
            dist,
            param: parse_opt(f[4]).map_err(err)?,
            mean_ms: parse_opt(f[5]).map_err(err)?,
            median_ms: parse_opt(f[6]).map_err(err)?,
            p95_ms: parse_opt(f[7]).map_err(err)?,
            bytes: int(f[8])?,
            frames: int(f[9])?,
            delivery_ratio: parse_opt(f[10]).map_err(err)?.unwrap_or(0.0),
        });
    }
    let recomputed = report_csv(&aggregate(&rows));
    if recomputed == report {
        return Ok(());
    }
    let diff = recomputed
        .lines()
        .zip(report.lines())
        .enumerate()
        .find(|(_, (a, b))| a != b)
        .map_or_else(
            || "row count differs".to_string(),
            |(i, (a, b))| format!("line {}: recomputed {a:?}, report has {b:?}", i + 1),
        );
    Err(format!("aggregate report does not match per-seed rows: {diff}"))
}
