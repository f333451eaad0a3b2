//! Simulation harness for the ECA pipeline.
//!
//! Builds provider performance series, schedules consumer trial cohorts,
//! injects ground-truth changes, runs detection end to end and aggregates the
//! resulting metrics over threshold sweeps.

mod cohort;
mod run;
pub mod seed;
mod sweep;
mod synth;
mod trace;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

pub use cohort::{inject_change, schedule_trials};
pub use run::{run_all, run_once, RunLog, RunMetrics, RunOutcome, RunThresholds, RunTrace};
pub use sweep::{
    aggregate_row, sweep, sweep_all, SweepAxis, SweepReport, SweepRow, SWEEP_CSV_HEADER,
};
pub use synth::{synth_provider, SynthParams};
pub use trace::{load_trace, read_trace};

use crate::adaptation::Polarity;
use crate::cusum::CusumSettings;
use crate::signature::DayRange;
use crate::similarity::SimilarityMeasure;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChangeKind {
    None,
    LevelShift,
    ShapeRegenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChangeDay {
    Fixed(u32),
    UniformRandom,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChangeSpec {
    pub change_day: ChangeDay,
    pub kind: ChangeKind,
    /// Level-shift size in population standard deviations of the
    /// pre-change series.
    pub magnitude_sigmas: f64,
}

impl Default for ChangeSpec {
    fn default() -> Self {
        Self {
            change_day: ChangeDay::UniformRandom,
            kind: ChangeKind::LevelShift,
            magnitude_sigmas: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptationSettings {
    pub horizon_days: u32,
    pub z: u32,
    pub polarity: Polarity,
}

impl Default for AdaptationSettings {
    fn default() -> Self {
        Self {
            horizon_days: 60,
            z: 3,
            polarity: Polarity::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub num_runs: u32,
    pub horizon_days: u32,
    pub trial_days: u32,
    pub num_providers: u32,
    pub num_consumers: u32,
    /// Sweep points for the similarity axis.
    pub similarity_thresholds: Vec<f64>,
    /// Sweep points for the anomaly axis.
    pub anomaly_fractions: Vec<f64>,
    /// Fixed similarity threshold; `None` initializes it from past trials.
    pub similarity_threshold: Option<f64>,
    /// Fixed anomaly fraction; `None` initializes the count from past trials.
    pub anomaly_fraction: Option<f64>,
    pub measure: SimilarityMeasure,
    pub change: ChangeSpec,
    pub detection_window_days: u32,
    pub rng_seed: u64,
    /// Standard deviation of the per-day multiplicative consumer noise.
    pub consumer_noise: f64,
    pub synth: SynthParams,
    pub cusum: CusumSettings,
    pub adaptation: AdaptationSettings,
    /// Replaces synthetic providers with one ingested trace.
    pub trace_path: Option<PathBuf>,
    pub trace_has_header: bool,
    pub attribute_id: String,
}

fn steps(from: u32, to: u32, div: f64) -> Vec<f64> {
    (from..=to).map(|i| i as f64 / div).collect()
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            num_runs: 100,
            horizon_days: 360,
            trial_days: 30,
            num_providers: 5,
            num_consumers: 18,
            similarity_thresholds: steps(1, 9, 10.0),
            anomaly_fractions: steps(1, 10, 10.0),
            similarity_threshold: None,
            anomaly_fraction: Some(0.333),
            measure: SimilarityMeasure::PearsonCorrelation,
            change: ChangeSpec::default(),
            detection_window_days: 60,
            rng_seed: 20_200_101,
            consumer_noise: 0.05,
            synth: SynthParams::default(),
            cusum: CusumSettings::default(),
            adaptation: AdaptationSettings::default(),
            trace_path: None,
            trace_has_header: false,
            attribute_id: "throughput".into(),
        }
    }
}

impl SimConfig {
    pub fn num_windows(&self) -> u32 {
        self.horizon_days / self.trial_days
    }

    /// Days on which a randomly placed change may start: after the warm-up
    /// window, leaving a full detection window before the horizon ends.
    pub fn change_day_range(&self) -> Result<DayRange> {
        let lo = self.trial_days + 1;
        let hi = self
            .horizon_days
            .saturating_sub(self.detection_window_days)
            .max(lo + 1);
        DayRange::new(lo, hi.min(self.horizon_days))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.num_runs == 0 || self.num_providers == 0 || self.num_consumers == 0 {
            return bad("run, provider and consumer counts must be at least 1".into());
        }
        if self.trial_days == 0
            || self.horizon_days == 0
            || !self.horizon_days.is_multiple_of(self.trial_days)
        {
            return bad(format!(
                "trial length {} must divide the horizon {}",
                self.trial_days, self.horizon_days
            ));
        }
        if self.num_windows() < 2 {
            return bad("horizon must span at least two trial windows".into());
        }
        if self.trial_days < 2 {
            return bad("trial length must be at least two days".into());
        }
        let (lo, hi) = self.measure.score_range();
        let ts_ok = |t: &f64| (lo..=hi).contains(t);
        if !self.similarity_thresholds.iter().all(ts_ok)
            || !self.similarity_threshold.iter().all(ts_ok)
        {
            return bad(format!(
                "similarity thresholds must lie in [{lo}, {hi}] for {}",
                self.measure
            ));
        }
        let frac_ok = |f: &f64| *f > 0.0 && *f <= 1.0;
        if !self.anomaly_fractions.iter().all(frac_ok) || !self.anomaly_fraction.iter().all(frac_ok)
        {
            return bad("anomaly fractions must lie in (0, 1]".into());
        }
        if !(self.consumer_noise.is_finite() && self.consumer_noise >= 0.0) {
            return bad(format!(
                "consumer noise {} must be non-negative",
                self.consumer_noise
            ));
        }
        if !self.change.magnitude_sigmas.is_finite() {
            return bad("change magnitude must be finite".into());
        }
        if let ChangeDay::Fixed(d) = self.change.change_day {
            if self.change.kind != ChangeKind::None
                && !(d > self.trial_days && d < self.horizon_days)
            {
                return bad(format!(
                    "change day {d} must lie in ({}, {})",
                    self.trial_days, self.horizon_days
                ));
            }
        }
        if !(self.cusum.shift_n > 0.0 && self.cusum.control_c > 0.0) {
            return bad("cusum.shift_n and cusum.control_c must be positive".into());
        }
        if self.adaptation.horizon_days == 0 || self.adaptation.z == 0 {
            return bad("adaptation.horizon_days and adaptation.z must be positive".into());
        }
        self.synth
            .validate()
            .map_err(|e| Error::Config(e.to_string()))
    }
}
