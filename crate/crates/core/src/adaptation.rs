//! Feedback from condition outcomes to the anomaly-frequency threshold.

use std::collections::VecDeque;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::detection::ThresholdState;
use crate::{Error, Result};

/// Direction of the threshold update when one outcome kind dominates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Polarity {
    /// Too many confirmed changes lower the threshold so events fire sooner;
    /// too many rejected events raise it.
    #[default]
    #[serde(rename = "paper-motivation")]
    ConfirmedLowers,
    /// The reverse mapping: confirmed changes raise the threshold.
    #[serde(rename = "fig2-text")]
    ConfirmedRaises,
}

impl FromStr for Polarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "paper-motivation" => Ok(Polarity::ConfirmedLowers),
            "fig2-text" => Ok(Polarity::ConfirmedRaises),
            other => Err(Error::Config(format!(
                "unknown polarity {other:?}, expected paper-motivation or fig2-text"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackState {
    horizon_days: u32,
    z: u32,
    polarity: Polarity,
    recent: VecDeque<(u32, bool)>,
}

impl FeedbackState {
    pub fn new(horizon_days: u32, z: u32, polarity: Polarity) -> Result<Self> {
        if horizon_days == 0 || z == 0 {
            return Err(Error::InvalidParams(format!(
                "feedback horizon ({horizon_days}) and outcome threshold ({z}) must be positive"
            )));
        }
        Ok(Self {
            horizon_days,
            z,
            polarity,
            recent: VecDeque::new(),
        })
    }

    pub fn horizon_days(&self) -> u32 {
        self.horizon_days
    }

    pub fn outcome_threshold(&self) -> u32 {
        self.z
    }

    pub fn recent_outcomes(&self) -> impl Iterator<Item = (u32, bool)> + '_ {
        self.recent.iter().copied()
    }

    /// (changed, unchanged) verdict counts inside the horizon.
    pub fn counts(&self) -> (u32, u32) {
        let tp = self.recent.iter().filter(|(_, c)| *c).count() as u32;
        (tp, self.recent.len() as u32 - tp)
    }

    /// Appends an outcome at `day` and drops entries more than
    /// `horizon_days` older than it.
    pub fn record_outcome(&mut self, day: u32, changed: bool) -> Result<()> {
        if let Some(&(last, _)) = self.recent.back() {
            if day < last {
                return Err(Error::NonMonotoneTime { day, last });
            }
        }
        self.recent.push_back((day, changed));
        while let Some(&(d, _)) = self.recent.front() {
            if day - d > self.horizon_days {
                self.recent.pop_front();
            } else {
                break;
            }
        }
        Ok(())
    }

    /// Moves `f_thresh` by at most one unit. Confirmed changes are checked
    /// first when both counts exceed the outcome threshold.
    pub fn adjust(&self, ts: &ThresholdState) -> ThresholdState {
        let (tp, fp) = self.counts();
        let step: i64 = if tp > self.z {
            -1
        } else if fp > self.z {
            1
        } else {
            0
        };
        let step = match self.polarity {
            Polarity::ConfirmedLowers => step,
            Polarity::ConfirmedRaises => -step,
        };
        let f_thresh = (ts.f_thresh as i64 + step).max(1) as u32;
        ThresholdState { f_thresh, ..*ts }
    }
}
