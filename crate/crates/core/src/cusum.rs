//! Condition and action of the ECA loop.
//!
//! When an event fires, the window cohort is re-aggregated into a candidate
//! signature segment and a two-sided CUSUM chart decides whether it departs
//! from the existing signature over that window. A violation splices the
//! candidate into the signature.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::detection::Event;
use crate::signature::{
    aggregate_trials, normalize_series, splice_segment, DayRange, SegmentedSignature, Signature,
};
use crate::stats::{mean, population_std};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CusumParams {
    pub target_mean: f64,
    pub target_std: f64,
    /// Minimum detectable shift, in multiples of `target_std`.
    pub shift_n: f64,
    /// Control limit, in multiples of `target_std`.
    pub control_c: f64,
}

impl CusumParams {
    pub fn new(target_mean: f64, target_std: f64, shift_n: f64, control_c: f64) -> Result<Self> {
        let p = Self {
            target_mean,
            target_std,
            shift_n,
            control_c,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.target_mean.is_finite()
            && self.target_std.is_finite()
            && self.target_std > 0.0
            && self.shift_n.is_finite()
            && self.shift_n > 0.0
            && self.control_c.is_finite()
            && self.control_c > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("{self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CusumTrace {
    pub ul: Vec<f64>,
    pub ll: Vec<f64>,
    /// 1-based sample indices where either limit is strictly exceeded.
    pub violations: Vec<usize>,
}

impl CusumTrace {
    pub fn ul_max(&self) -> f64 {
        self.ul.iter().copied().fold(0.0, f64::max)
    }

    pub fn ll_min(&self) -> f64 {
        self.ll.iter().copied().fold(0.0, f64::min)
    }

    pub fn first_violation(&self) -> Option<usize> {
        self.violations.first().copied()
    }
}

/// Upper and lower cumulative sums with slack `shift_n * target_std / 2`.
/// Both sums start at zero on the first sample; the first observation only
/// anchors the chart.
pub fn cusum_chart(x: &[f64], p: &CusumParams) -> Result<CusumTrace> {
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    p.validate()?;
    crate::stats::check_finite(x)?;

    let slack = 0.5 * p.shift_n * p.target_std;
    let limit = p.control_c * p.target_std;
    let mut ul = Vec::with_capacity(x.len());
    let mut ll = Vec::with_capacity(x.len());
    let mut violations = Vec::new();
    let (mut u, mut l) = (0.0_f64, 0.0_f64);
    for (i, &xi) in x.iter().enumerate() {
        if i > 0 {
            u = (u + xi - p.target_mean - slack).max(0.0);
            l = (l + xi - p.target_mean + slack).min(0.0);
        }
        ul.push(u);
        ll.push(l);
        if u > limit || l < -limit {
            violations.push(i + 1);
        }
    }
    Ok(CusumTrace { ul, ll, violations })
}

/// What the chart is run over when an event is checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ConditionInput {
    /// The new cohort aggregate's day-by-day departure from the existing
    /// signature, expressed in QoS units around the segment's target mean.
    /// A cohort that reproduces the existing aggregate sits exactly on target.
    #[default]
    Deviation,
    /// The recomputed normalized signature values themselves.
    Signature,
}

impl FromStr for ConditionInput {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "deviation" => Ok(ConditionInput::Deviation),
            "signature" => Ok(ConditionInput::Signature),
            other => Err(Error::Config(format!(
                "unknown cusum input {other:?}, expected deviation or signature"
            ))),
        }
    }
}

/// Chart settings that do not come from the data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CusumSettings {
    pub shift_n: f64,
    pub control_c: f64,
    pub input: ConditionInput,
}

impl Default for CusumSettings {
    fn default() -> Self {
        Self {
            shift_n: 1.0,
            control_c: 5.0,
            input: ConditionInput::Deviation,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChangeVerdict {
    pub event_window_id: u32,
    pub window: DayRange,
    pub changed: bool,
    pub params: CusumParams,
    pub trace: CusumTrace,
    pub new_segment: Option<Signature>,
}

/// Serialized form of a [`ChangeVerdict`] in simulation logs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictLog {
    pub window_id: u32,
    pub changed: bool,
    pub violations: Vec<usize>,
    pub ul_max: f64,
    pub ll_min: f64,
}

impl From<&ChangeVerdict> for VerdictLog {
    fn from(v: &ChangeVerdict) -> Self {
        VerdictLog {
            window_id: v.event_window_id,
            changed: v.changed,
            violations: v.trace.violations.clone(),
            ul_max: v.trace.ul_max(),
            ll_min: v.trace.ll_min(),
        }
    }
}

/// Regenerates the window's segment from the event cohort and charts it
/// against the existing signature's mean and spread over `window`.
pub fn evaluate_event(
    ev: &Event,
    window: DayRange,
    sig: &SegmentedSignature,
    settings: &CusumSettings,
) -> Result<ChangeVerdict> {
    if ev.trials.is_empty() {
        return Err(Error::EmptyInput);
    }
    let restricted = ev
        .trials
        .iter()
        .map(|t| {
            Ok(crate::signature::TrialExperience {
                consumer_id: t.consumer_id.clone(),
                series: t.series.restrict(window)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let aggregate = aggregate_trials(&restricted)?;
    let candidate = normalize_series(&aggregate)?;

    let (existing, input) = match settings.input {
        ConditionInput::Deviation => {
            let existing = sig.denormalized_in(window)?;
            let m = mean(&existing);
            let x: Vec<f64> = aggregate
                .values()
                .iter()
                .zip(&existing)
                .map(|(new, old)| new - old + m)
                .collect();
            (existing, x)
        }
        ConditionInput::Signature => (sig.values_in(window)?, candidate.values().to_vec()),
    };
    let m_x = mean(&existing);
    let s_x = population_std(&existing, m_x);
    if s_x <= 1e-12 * m_x.abs().max(1.0) {
        return Err(Error::DegenerateWindow {
            start: window.start,
            end: window.end,
        });
    }
    let params = CusumParams::new(m_x, s_x, settings.shift_n, settings.control_c)?;
    let trace = cusum_chart(&input, &params)?;
    let changed = !trace.violations.is_empty();
    Ok(ChangeVerdict {
        event_window_id: ev.window_id,
        window,
        changed,
        params,
        trace,
        new_segment: changed.then_some(candidate),
    })
}

/// Splices the verdict's new segment into the signature.
pub fn apply_action(sig: &SegmentedSignature, v: &ChangeVerdict) -> Result<SegmentedSignature> {
    match (&v.new_segment, v.changed) {
        (Some(seg), true) => splice_segment(sig, v.window, seg),
        _ => Err(Error::ActionOnNegativeVerdict),
    }
}
