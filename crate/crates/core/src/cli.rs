//! Command-line front end.
//!
//! Exit codes: 0 success, 2 malformed input or configuration, 3 well-formed
//! input rejected by the pipeline, 4 internal failure.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::config::parse_assignment;
use crate::signature::{
    generate_signature, DayRange, QoSSeries, SegmentedSignature, Signature, TrialExperience,
};
use crate::sim::{
    aggregate_row, run_all, sweep, RunMetrics, RunOutcome, RunThresholds, SimConfig, SweepAxis,
};
use crate::similarity::{similarity, SimilarityMeasure};
use crate::{Error, Result};

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_DOMAIN: u8 = 3;
pub const EXIT_INTERNAL: u8 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "sigdrift",
    version,
    about = "Change detection for IaaS performance signatures"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Builds a signature from a trial CSV.
    Generate(GenerateArgs),
    /// Scores trial experiences against a signature.
    Detect(DetectArgs),
    /// Runs the simulation at one threshold setting.
    Simulate(CommonArgs),
    /// Sweeps one threshold axis.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Flat key=value config file.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Root seed; overrides sim.seed.
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
    /// ed, pcc or cs; overrides sim.measure.
    #[arg(long)]
    pub measure: Option<String>,
    /// key=value config overrides, applied after the config file.
    #[arg(value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// CSV with header consumer_id,day,value.
    #[arg(long, value_name = "PATH")]
    pub trials: PathBuf,
    /// Half-open day range START:END; defaults to the days every trial covers.
    #[arg(long, value_name = "START:END")]
    pub window: Option<String>,
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// CSV with header consumer_id,day,value.
    #[arg(long, visible_alias = "trials", value_name = "PATH")]
    pub trial: PathBuf,
    /// Signature JSON: one segment object or an array of segments.
    #[arg(long, value_name = "PATH")]
    pub signature: PathBuf,
    #[arg(long, default_value = "pcc")]
    pub measure: String,
    /// Similarity threshold; scores strictly below it are anomalous.
    #[arg(long, value_name = "T_S")]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// similarity or anomaly.
    #[arg(long)]
    pub axis: String,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Serialize)]
struct DetectLine<'a> {
    consumer_id: &'a str,
    score: f64,
    anomalous: bool,
}

/// Aggregate of one `simulate` invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateSummary {
    pub runs: u32,
    pub detections: u32,
    pub mean_fp: f64,
    pub mean_delay: Option<f64>,
    pub min_delay: Option<u32>,
    pub accuracy: f64,
    pub detected_fraction: f64,
    pub tests: u32,
    pub false_alarms: u32,
}

#[derive(Debug, Deserialize)]
struct TrialRow {
    consumer_id: String,
    day: u32,
    value: f64,
}

/// Parses a trial CSV into one experience per consumer, in order of first
/// appearance. Each consumer's days must be contiguous.
pub fn read_trials<R: Read>(reader: R, attribute_id: &str) -> Result<Vec<TrialExperience>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    for want in ["consumer_id", "day", "value"] {
        if !headers.iter().any(|h| h == want) {
            return Err(Error::Parse {
                line: 1,
                message: format!("missing column {want:?}"),
            });
        }
    }

    let mut order: Vec<String> = Vec::new();
    let mut by_consumer: BTreeMap<String, Vec<(u32, f64, usize)>> = BTreeMap::new();
    for (i, row) in rdr.deserialize::<TrialRow>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        if !row.value.is_finite() {
            return Err(Error::Parse {
                line,
                message: format!("value: non-finite {}", row.value),
            });
        }
        let rows = by_consumer
            .entry(row.consumer_id.clone())
            .or_insert_with(|| {
                order.push(row.consumer_id.clone());
                Vec::new()
            });
        rows.push((row.day, row.value, line));
    }
    if order.is_empty() {
        return Err(Error::InsufficientData { rows: 0, needed: 1 });
    }

    order
        .into_iter()
        .map(|id| {
            let mut rows = by_consumer.remove(&id).unwrap_or_default();
            rows.sort_by_key(|r| r.0);
            for pair in rows.windows(2) {
                if pair[1].0 != pair[0].0 + 1 {
                    return Err(Error::Parse {
                        line: pair[1].2,
                        message: format!(
                            "day: consumer {id:?} jumps from day {} to {}",
                            pair[0].0, pair[1].0
                        ),
                    });
                }
            }
            let start = rows[0].0;
            let values = rows.into_iter().map(|r| r.1).collect();
            Ok(TrialExperience::new(
                id,
                QoSSeries::new(attribute_id, start, values)?,
            ))
        })
        .collect()
}

pub fn parse_window(s: &str) -> Result<DayRange> {
    let bad = || Error::Config(format!("window: expected START:END, found {s:?}"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let start = a.trim().parse().map_err(|_| bad())?;
    let end = b.trim().parse().map_err(|_| bad())?;
    DayRange::new(start, end).map_err(|_| bad())
}

/// Loads a signature file holding either one segment or an array of them.
pub fn read_signature(path: &Path) -> Result<SegmentedSignature> {
    let text = fs::read_to_string(path)?;
    if text.trim_start().starts_with('[') {
        Ok(serde_json::from_str(&text)?)
    } else {
        Ok(serde_json::from_str::<Signature>(&text)?.into())
    }
}

/// Resolves the effective simulation config: defaults, file, overrides, flags.
pub fn resolve_config(args: &CommonArgs) -> Result<SimConfig> {
    let mut overrides = args
        .overrides
        .iter()
        .map(|s| parse_assignment(s))
        .collect::<Result<Vec<_>>>()?;
    if let Some(seed) = args.seed {
        overrides.push(("sim.seed".into(), seed.to_string()));
    }
    if let Some(m) = &args.measure {
        overrides.push(("sim.measure".into(), m.clone()));
    }
    SimConfig::load(args.config.as_deref(), &overrides)
}

pub fn summarize(outcomes: &[RunOutcome]) -> SimulateSummary {
    let metrics: Vec<RunMetrics> = outcomes.iter().map(|o| o.metrics.clone()).collect();
    let row = aggregate_row(0.0, &metrics);
    SimulateSummary {
        runs: row.runs,
        detections: metrics.iter().filter(|m| m.detection_day.is_some()).count() as u32,
        mean_fp: row.mean_fp,
        mean_delay: row.mean_delay,
        min_delay: row.min_delay,
        accuracy: row.accuracy,
        detected_fraction: row.detected_fraction,
        tests: metrics.iter().map(|m| m.tests_performed).sum(),
        false_alarms: metrics.iter().map(|m| m.ground_truth_false_alarms).sum(),
    }
}

fn jsonl<T: Serialize>(items: impl IntoIterator<Item = T>) -> Result<String> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(&item)?);
        out.push('\n');
    }
    Ok(out)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

fn cmd_generate(args: &GenerateArgs, stdout: &mut dyn Write) -> Result<()> {
    let trials = read_trials(fs::File::open(&args.trials)?, "qos")?;
    let window = match &args.window {
        Some(w) => parse_window(w)?,
        None => {
            let start = trials.iter().map(|t| t.range().start).max().unwrap_or(0);
            let end = trials.iter().map(|t| t.range().end).min().unwrap_or(0);
            DayRange::new(start, end)
                .map_err(|_| Error::MisalignedWindows("trials share no common day".into()))?
        }
    };
    let sig = generate_signature(&trials, window)?;
    let path = write_file(
        &args.out,
        "signature.json",
        &serde_json::to_string_pretty(&sig)?,
    )?;
    let stats = sig.stats();
    writeln!(
        stdout,
        "{}",
        serde_json::json!({
            "path": path.display().to_string(),
            "window": window.to_string(),
            "length": sig.len(),
            "mean": stats.mean,
            "std": stats.std,
        })
    )?;
    Ok(())
}

fn cmd_detect(args: &DetectArgs, stdout: &mut dyn Write) -> Result<()> {
    let measure: SimilarityMeasure = args.measure.parse()?;
    let (lo, hi) = measure.score_range();
    if !(lo..=hi).contains(&args.threshold) {
        return Err(Error::Config(format!(
            "threshold {} outside [{lo}, {hi}] for {measure}",
            args.threshold
        )));
    }
    let trials = read_trials(fs::File::open(&args.trial)?, "qos")?;
    let sig = read_signature(&args.signature)?;
    for e in &trials {
        let sig_range = sig.range();
        if !sig_range.contains_range(&e.range()) {
            return Err(Error::LengthMismatch {
                left: e.range().len(),
                right: sig_range.len(),
            });
        }
        let score = similarity(e, &sig, measure)?;
        let line = DetectLine {
            consumer_id: &e.consumer_id,
            score: score.value,
            anomalous: score.value < args.threshold,
        };
        writeln!(stdout, "{}", serde_json::to_string(&line)?)?;
    }
    Ok(())
}

fn cmd_simulate(args: &CommonArgs, stdout: &mut dyn Write) -> Result<()> {
    let cfg = resolve_config(args)?;
    let outcomes = run_all(&cfg, RunThresholds::from_config(&cfg))?;
    let summary = summarize(&outcomes);

    write_file(&args.out, "config.txt", &cfg.to_config_text())?;
    write_file(
        &args.out,
        "runs.jsonl",
        &jsonl(outcomes.iter().map(|o| &o.log))?,
    )?;
    let traces = outcomes.iter().map(|o| {
        serde_json::json!({
            "run_id": o.log.run_id,
            "similarity_threshold": o.trace.similarity_threshold,
            "initial_f_thresh": o.trace.initial_f_thresh,
            "final_f_thresh": o.trace.final_f_thresh,
            "events": o.trace.events,
            "verdicts": o.trace.verdicts,
        })
    });
    write_file(&args.out, "trace.jsonl", &jsonl(traces)?)?;
    let summary_json = serde_json::to_string(&summary)?;
    write_file(&args.out, "summary.json", &format!("{summary_json}\n"))?;
    writeln!(stdout, "{summary_json}")?;
    Ok(())
}

fn cmd_sweep(args: &SweepArgs, stdout: &mut dyn Write) -> Result<()> {
    let axis: SweepAxis = args.axis.parse()?;
    let cfg = resolve_config(&args.common)?;
    let report = sweep(&cfg, axis)?;
    let csv = report.to_csv();

    let out = &args.common.out;
    write_file(out, "config.txt", &cfg.to_config_text())?;
    write_file(out, &format!("sweep_{}.csv", axis.as_str()), &csv)?;
    write_file(
        out,
        &format!("sweep_{}_runs.jsonl", axis.as_str()),
        &jsonl(&report.runs)?,
    )?;
    stdout.write_all(csv.as_bytes())?;
    Ok(())
}

/// Executes a parsed command, writing results to `stdout`.
pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Generate(a) => cmd_generate(a, stdout),
        Command::Detect(a) => cmd_detect(a, stdout),
        Command::Simulate(a) => cmd_simulate(a, stdout),
        Command::Sweep(a) => cmd_sweep(a, stdout),
    }
}

pub fn exit_code(err: &Error) -> u8 {
    if err.is_input_error() {
        EXIT_INPUT
    } else {
        EXIT_DOMAIN
    }
}

/// Binary entry point.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = std::panic::catch_unwind(|| execute(&cli, &mut std::io::stdout().lock()));
    match result {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(_) => ExitCode::from(EXIT_INTERNAL),
    }
}
