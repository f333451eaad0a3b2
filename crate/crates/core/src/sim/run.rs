use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cohort::{inject_change, schedule_trials};
use super::seed::{derive_seed, rng_for};
use super::synth::synth_provider;
use super::SimConfig;
use crate::adaptation::FeedbackState;
use crate::cusum::{apply_action, evaluate_event, VerdictLog};
use crate::detection::{
    evaluate_window, fraction_to_threshold, init_anomaly_threshold, EventLog, ThresholdState,
    Windowing,
};
use crate::signature::{generate_signature, QoSSeries, SegmentedSignature, TrialExperience};
use crate::similarity::init_similarity_threshold;
use crate::Result;

/// Threshold overrides for one run. `None` falls back to initialization from
/// the past-trial cohort.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunThresholds {
    pub similarity: Option<f64>,
    pub fraction: Option<f64>,
}

impl RunThresholds {
    pub fn from_config(cfg: &SimConfig) -> Self {
        Self {
            similarity: cfg.similarity_threshold,
            fraction: cfg.anomaly_fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub false_positives_before_detection: u32,
    pub detection_day: Option<u32>,
    pub detection_delay_days: Option<u32>,
    pub detected_within_window: bool,
    pub tests_performed: u32,
    pub ground_truth_false_alarms: u32,
}

/// One line of the per-run JSON log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub run_id: u32,
    pub seed: u64,
    pub change_day: Option<u32>,
    pub detection_day: Option<u32>,
    pub false_positives: u32,
    pub tests: u32,
    pub false_alarms: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

impl RunLog {
    /// Rebuilds the run's metrics from the logged fields.
    pub fn metrics(&self, detection_window_days: u32) -> RunMetrics {
        let delay = match (self.detection_day, self.change_day) {
            (Some(d), Some(c)) => Some(d - c),
            _ => None,
        };
        RunMetrics {
            false_positives_before_detection: self.false_positives,
            detection_day: delay.and(self.detection_day),
            detection_delay_days: delay,
            detected_within_window: delay.is_some_and(|d| d <= detection_window_days),
            tests_performed: self.tests,
            ground_truth_false_alarms: self.false_alarms,
        }
    }
}

/// Events and verdicts issued during a run, in window order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub similarity_threshold: f64,
    pub initial_f_thresh: u32,
    pub final_f_thresh: u32,
    pub events: Vec<EventLog>,
    pub verdicts: Vec<VerdictLog>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub metrics: RunMetrics,
    pub log: RunLog,
    pub trace: RunTrace,
}

/// Everything a run needs that does not depend on the thresholds under test.
/// Sweeps build it once per run and reuse it across sweep points.
#[derive(Debug, Clone)]
pub(crate) struct RunSetup {
    run_id: u32,
    seed: u64,
    change_day: Option<u32>,
    past: Vec<Vec<TrialExperience>>,
    current: Vec<Vec<TrialExperience>>,
    signature: SegmentedSignature,
}

pub(crate) fn provider_truth(
    cfg: &SimConfig,
    run_id: u32,
    loaded: Option<&QoSSeries>,
) -> Result<QoSSeries> {
    match loaded {
        Some(series) => Ok(series.clone()),
        None => {
            let provider = (run_id % cfg.num_providers) as u64;
            synth_provider(
                derive_seed(cfg.rng_seed, provider, "provider"),
                cfg.horizon_days,
                &cfg.synth,
                &cfg.attribute_id,
            )
        }
    }
}

pub(crate) fn prepare(
    cfg: &SimConfig,
    run_id: u32,
    loaded: Option<&QoSSeries>,
) -> Result<RunSetup> {
    let seed = derive_seed(cfg.rng_seed, run_id as u64, "run");
    let baseline = provider_truth(cfg, run_id, loaded)?;
    let windowing = Windowing::new(cfg.trial_days)?;

    let mut past_rng = rng_for(seed, 0, "past-cohort");
    let past = schedule_trials(cfg, &baseline, &mut past_rng)?;
    let segments = past
        .iter()
        .enumerate()
        .map(|(w, trials)| generate_signature(trials, windowing.range(w as u32)))
        .collect::<Result<Vec<_>>>()?;
    let signature = SegmentedSignature::from_segments(segments)?;

    let mut change_rng = rng_for(seed, 0, "change");
    let (truth, change_day) = inject_change(
        &baseline,
        &cfg.change,
        cfg.change_day_range()?,
        &cfg.synth,
        &mut change_rng,
    )?;
    let mut trial_rng = rng_for(seed, 0, "current-cohort");
    let current = schedule_trials(cfg, &truth, &mut trial_rng)?;

    Ok(RunSetup {
        run_id,
        seed,
        change_day,
        past,
        current,
        signature,
    })
}

pub(crate) fn monitor(
    cfg: &SimConfig,
    setup: &RunSetup,
    thresholds: RunThresholds,
) -> Result<RunOutcome> {
    let windowing = Windowing::new(cfg.trial_days)?;
    let mut sig = setup.signature.clone();

    let t_s = match thresholds.similarity {
        Some(t) => t,
        None => {
            let all: Vec<TrialExperience> = setup.past.iter().flatten().cloned().collect();
            init_similarity_threshold(&all, &sig, cfg.measure)?
        }
    };
    let f_thresh = match thresholds.fraction {
        Some(f) => fraction_to_threshold(f, cfg.num_consumers)?,
        None => init_anomaly_threshold(&setup.past, &sig, t_s, cfg.measure)?,
    };
    let mut ts = ThresholdState::new(t_s, f_thresh, cfg.measure)?;
    let mut feedback = FeedbackState::new(
        cfg.adaptation.horizon_days,
        cfg.adaptation.z,
        cfg.adaptation.polarity,
    )?;

    let mut trace = RunTrace {
        similarity_threshold: t_s,
        initial_f_thresh: f_thresh,
        ..RunTrace::default()
    };
    // (window, changed) for every verdict
    let mut outcomes: Vec<(u32, bool)> = Vec::new();

    // window 0 is the warm-up cohort
    for w in 1..cfg.num_windows() {
        let trials = &setup.current[w as usize];
        let Some(event) = evaluate_window(w, trials, &sig, &ts)? else {
            continue;
        };
        let window = windowing.range(w);
        let verdict = evaluate_event(&event, window, &sig, &cfg.cusum)?;
        trace.events.push(EventLog::from(&event));
        trace.verdicts.push(VerdictLog::from(&verdict));
        outcomes.push((w, verdict.changed));
        if verdict.changed {
            sig = apply_action(&sig, &verdict)?;
        }
        feedback.record_outcome(window.end, verdict.changed)?;
        ts = feedback.adjust(&ts);
    }
    trace.final_f_thresh = ts.f_thresh;

    let change_window = setup.change_day.map(|d| windowing.window_of(d));
    let detection = change_window.and_then(|cw| outcomes.iter().find(|&&(w, c)| c && w >= cw));
    let detection_window = detection.map(|&(w, _)| w);
    let detection_day = detection_window.map(|w| windowing.range(w).end);
    let detection_delay_days = match (detection_day, setup.change_day) {
        (Some(d), Some(c)) => Some(d - c),
        _ => None,
    };
    let false_positives = outcomes
        .iter()
        .filter(|&&(w, c)| !c && detection_window.is_none_or(|dw| w < dw))
        .count() as u32;
    let false_alarms = outcomes
        .iter()
        .filter(|&&(w, c)| c && change_window.is_none_or(|cw| w < cw))
        .count() as u32;

    let metrics = RunMetrics {
        false_positives_before_detection: false_positives,
        detection_day,
        detection_delay_days,
        detected_within_window: detection_delay_days
            .is_some_and(|d| d <= cfg.detection_window_days),
        tests_performed: outcomes.len() as u32,
        ground_truth_false_alarms: false_alarms,
    };
    let log = RunLog {
        run_id: setup.run_id,
        seed: setup.seed,
        change_day: setup.change_day,
        detection_day,
        false_positives,
        tests: outcomes.len() as u32,
        false_alarms,
        threshold: None,
    };
    Ok(RunOutcome {
        metrics,
        log,
        trace,
    })
}

pub(crate) fn load_configured_trace(cfg: &SimConfig) -> Result<Option<QoSSeries>> {
    cfg.trace_path
        .as_ref()
        .map(|path| {
            super::load_trace(
                path,
                cfg.horizon_days,
                cfg.trace_has_header,
                &cfg.attribute_id,
            )
        })
        .transpose()
}

/// Runs the full pipeline once for `run_id`.
pub fn run_once(cfg: &SimConfig, run_id: u32, thresholds: RunThresholds) -> Result<RunOutcome> {
    cfg.validate()?;
    let loaded = load_configured_trace(cfg)?;
    let setup = prepare(cfg, run_id, loaded.as_ref())?;
    monitor(cfg, &setup, thresholds)
}

/// Runs `0..cfg.num_runs` in parallel. Outcomes are in run order.
pub fn run_all(cfg: &SimConfig, thresholds: RunThresholds) -> Result<Vec<RunOutcome>> {
    cfg.validate()?;
    let loaded = load_configured_trace(cfg)?;
    (0..cfg.num_runs)
        .into_par_iter()
        .map(|run| monitor(cfg, &prepare(cfg, run, loaded.as_ref())?, thresholds))
        .collect()
}
