use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::run::{load_configured_trace, monitor, prepare, RunLog, RunMetrics, RunThresholds};
use super::SimConfig;
use crate::{Error, Result};

pub const SWEEP_CSV_HEADER: &str =
    "threshold,mean_fp,mean_delay,min_delay,accuracy,detected_fraction";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    SimilarityThreshold,
    AnomalyFraction,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::SimilarityThreshold => "similarity",
            SweepAxis::AnomalyFraction => "anomaly",
        }
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "similarity" => Ok(SweepAxis::SimilarityThreshold),
            "anomaly" => Ok(SweepAxis::AnomalyFraction),
            other => Err(Error::Config(format!(
                "unknown sweep axis {other:?}, expected similarity or anomaly"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub threshold: f64,
    pub runs: u32,
    pub mean_fp: f64,
    /// Mean delay over runs that detected the change at all.
    pub mean_delay: Option<f64>,
    pub min_delay: Option<u32>,
    /// Fraction of runs detecting within the detection window.
    pub accuracy: f64,
    /// Fraction of runs detecting at any point.
    pub detected_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
    /// Per-run logs for every sweep point, in (threshold, run) order.
    #[serde(skip)]
    pub runs: Vec<RunLog>,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(SWEEP_CSV_HEADER);
        out.push('\n');
        let opt = |v: Option<String>| v.unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.threshold,
                r.mean_fp,
                opt(r.mean_delay.map(|d| d.to_string())),
                opt(r.min_delay.map(|d| d.to_string())),
                r.accuracy,
                r.detected_fraction
            );
        }
        out
    }

    pub fn row(&self, threshold: f64) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| (r.threshold - threshold).abs() < 1e-12)
    }
}

/// Aggregates per-run metrics for one sweep point.
pub fn aggregate_row(threshold: f64, metrics: &[RunMetrics]) -> SweepRow {
    let n = metrics.len().max(1) as f64;
    let delays: Vec<u32> = metrics
        .iter()
        .filter_map(|m| m.detection_delay_days)
        .collect();
    SweepRow {
        threshold,
        runs: metrics.len() as u32,
        mean_fp: metrics
            .iter()
            .map(|m| m.false_positives_before_detection as f64)
            .sum::<f64>()
            / n,
        mean_delay: (!delays.is_empty())
            .then(|| delays.iter().map(|&d| d as f64).sum::<f64>() / delays.len() as f64),
        min_delay: delays.iter().copied().min(),
        accuracy: metrics.iter().filter(|m| m.detected_within_window).count() as f64 / n,
        detected_fraction: delays.len() as f64 / n,
    }
}

/// Sweeps one axis, holding the other at its configured value. Run `i` uses
/// the same seeds at every sweep point.
pub fn sweep(cfg: &SimConfig, axis: SweepAxis) -> Result<SweepReport> {
    cfg.validate()?;
    let loaded = load_configured_trace(cfg)?;
    let setups = (0..cfg.num_runs)
        .into_par_iter()
        .map(|run| prepare(cfg, run, loaded.as_ref()))
        .collect::<Result<Vec<_>>>()?;

    let mut points = match axis {
        SweepAxis::SimilarityThreshold => cfg.similarity_thresholds.clone(),
        SweepAxis::AnomalyFraction => cfg.anomaly_fractions.clone(),
    };
    points.sort_by(f64::total_cmp);

    let mut rows = Vec::with_capacity(points.len());
    let mut runs = Vec::with_capacity(points.len() * setups.len());
    for &value in &points {
        let thresholds = match axis {
            SweepAxis::SimilarityThreshold => RunThresholds {
                similarity: Some(value),
                fraction: cfg.anomaly_fraction,
            },
            SweepAxis::AnomalyFraction => RunThresholds {
                similarity: cfg.similarity_threshold,
                fraction: Some(value),
            },
        };
        let outcomes = setups
            .par_iter()
            .map(|setup| monitor(cfg, setup, thresholds))
            .collect::<Result<Vec<_>>>()?;
        let metrics: Vec<RunMetrics> = outcomes.iter().map(|o| o.metrics.clone()).collect();
        rows.push(aggregate_row(value, &metrics));
        runs.extend(outcomes.into_iter().map(|o| RunLog {
            threshold: Some(value),
            ..o.log
        }));
    }
    Ok(SweepReport { axis, rows, runs })
}

pub fn sweep_all(cfg: &SimConfig) -> Result<Vec<SweepReport>> {
    Ok(vec![
        sweep(cfg, SweepAxis::SimilarityThreshold)?,
        sweep(cfg, SweepAxis::AnomalyFraction)?,
    ])
}
