//! Anomaly-based event detection over tumbling trial windows.

use serde::{Deserialize, Serialize};

use crate::signature::{DayRange, SegmentedSignature, TrialExperience};
use crate::similarity::{similarity, SimilarityMeasure, SimilarityScore};
use crate::{Error, Result};

/// Tumbling windows of `trial_days` days aligned to day 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Windowing {
    pub trial_days: u32,
}

impl Windowing {
    pub fn new(trial_days: u32) -> Result<Self> {
        if trial_days == 0 {
            return Err(Error::InvalidParams(
                "trial length must be at least one day".into(),
            ));
        }
        Ok(Self { trial_days })
    }

    pub fn window_of(&self, day: u32) -> u32 {
        day / self.trial_days
    }

    pub fn range(&self, window_id: u32) -> DayRange {
        DayRange {
            start: window_id * self.trial_days,
            end: (window_id + 1) * self.trial_days,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdState {
    pub t_s: f64,
    pub f_thresh: u32,
    pub measure: SimilarityMeasure,
}

impl ThresholdState {
    pub fn new(t_s: f64, f_thresh: u32, measure: SimilarityMeasure) -> Result<Self> {
        let (lo, hi) = measure.score_range();
        if !(lo..=hi).contains(&t_s) {
            return Err(Error::InvalidParams(format!(
                "similarity threshold {t_s} outside [{lo}, {hi}] for {measure}"
            )));
        }
        if f_thresh == 0 {
            return Err(Error::InvalidParams(
                "anomaly threshold must be at least 1".into(),
            ));
        }
        Ok(Self {
            t_s,
            f_thresh,
            measure,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyRecord {
    pub consumer_id: String,
    pub window_id: u32,
    pub score: SimilarityScore,
}

/// More than `f_thresh` anomalies observed in one window. Carries the whole
/// window cohort, since the condition check regenerates a signature from it.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub window_id: u32,
    pub anomaly_count: u32,
    pub anomalies: Vec<AnomalyRecord>,
    pub trials: Vec<TrialExperience>,
}

/// Serialized form of an [`Event`] in simulation logs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventLog {
    pub window_id: u32,
    pub anomaly_count: u32,
    pub consumer_ids: Vec<String>,
}

impl From<&Event> for EventLog {
    fn from(ev: &Event) -> Self {
        EventLog {
            window_id: ev.window_id,
            anomaly_count: ev.anomaly_count,
            consumer_ids: ev.anomalies.iter().map(|a| a.consumer_id.clone()).collect(),
        }
    }
}

/// Flags the trial when its similarity falls strictly below `ts.t_s`.
pub fn detect_anomaly(
    e: &TrialExperience,
    window_id: u32,
    sig: &SegmentedSignature,
    ts: &ThresholdState,
) -> Result<Option<AnomalyRecord>> {
    let score = similarity(e, sig, ts.measure)?;
    Ok((score.value < ts.t_s).then(|| AnomalyRecord {
        consumer_id: e.consumer_id.clone(),
        window_id,
        score,
    }))
}

/// Largest per-window count of past users whose score sits at the minimum
/// `ts_similarity`, floored at 1.
pub fn init_anomaly_threshold(
    past_by_window: &[Vec<TrialExperience>],
    sig: &SegmentedSignature,
    ts_similarity: f64,
    m: SimilarityMeasure,
) -> Result<u32> {
    if past_by_window.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut best = 1;
    for window in past_by_window {
        let mut count = 0;
        for e in window {
            if (similarity(e, sig, m)?.value - ts_similarity).abs() <= 1e-9 {
                count += 1;
            }
        }
        best = best.max(count);
    }
    Ok(best)
}

/// Converts an anomaly fraction of the window cohort into a count threshold.
///
/// An event needs at least `ceil(fraction * consumers)` anomalies, so with
/// strict crossing the threshold is one less than that, floored at 1.
pub fn fraction_to_threshold(fraction: f64, consumers: u32) -> Result<u32> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidParams(format!(
            "anomaly fraction {fraction} outside (0, 1]"
        )));
    }
    // guard against 0.3 * 10 = 3.0000000000000004 style round-up
    let needed = (fraction * consumers as f64 - 1e-9).ceil().max(1.0) as u32;
    Ok(needed.saturating_sub(1).max(1))
}

/// Counts anomalies across one window's trials and raises an event when the
/// count strictly exceeds `ts.f_thresh`.
pub fn evaluate_window(
    window_id: u32,
    trials: &[TrialExperience],
    sig: &SegmentedSignature,
    ts: &ThresholdState,
) -> Result<Option<Event>> {
    let mut anomalies = Vec::new();
    for e in trials {
        if let Some(rec) = detect_anomaly(e, window_id, sig, ts)? {
            anomalies.push(rec);
        }
    }
    let anomaly_count = anomalies.len() as u32;
    if anomaly_count > ts.f_thresh {
        Ok(Some(Event {
            window_id,
            anomaly_count,
            anomalies,
            trials: trials.to_vec(),
        }))
    } else {
        Ok(None)
    }
}
