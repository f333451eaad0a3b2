//! Synthetic long-term provider performance.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::seed::rng_for;
use crate::signature::QoSSeries;
use crate::{Error, Result};

/// Shape of a synthetic provider series: a level, a monthly cycle, a weekly
/// cycle and day-level Gaussian noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub base_level: f64,
    /// Relative spread of the per-provider level, uniform in `±level_jitter`.
    pub level_jitter: f64,
    pub seasonal_amplitude: f64,
    pub seasonal_period: f64,
    /// Monthly-cycle phase is drawn uniformly in `±phase_jitter` radians.
    pub phase_jitter: f64,
    pub weekly_amplitude: f64,
    pub noise_std: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            base_level: 100.0,
            level_jitter: 0.1,
            seasonal_amplitude: 5.0,
            seasonal_period: 30.0,
            phase_jitter: 0.5,
            weekly_amplitude: 2.0,
            noise_std: 1.5,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.base_level,
            self.level_jitter,
            self.seasonal_amplitude,
            self.seasonal_period,
            self.phase_jitter,
            self.weekly_amplitude,
            self.noise_std,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite
            || self.seasonal_period <= 0.0
            || self.noise_std < 0.0
            || !(0.0..1.0).contains(&self.level_jitter)
        {
            return Err(Error::InvalidParams(format!("synthetic provider {self:?}")));
        }
        Ok(())
    }
}

/// Deterministic provider series for `seed`.
pub fn synth_provider(
    seed: u64,
    horizon_days: u32,
    params: &SynthParams,
    attribute_id: &str,
) -> Result<QoSSeries> {
    params.validate()?;
    if horizon_days == 0 {
        return Err(Error::InvalidParams(
            "horizon must be at least one day".into(),
        ));
    }
    let mut rng = rng_for(seed, 0, "synth-provider");
    let level = params.base_level * (1.0 + rng.random_range(-1.0..=1.0) * params.level_jitter);
    let seasonal_phase = rng.random_range(-1.0..=1.0) * params.phase_jitter;
    let weekly_phase = rng.random_range(0.0..2.0 * PI);
    let noise =
        Normal::new(0.0, params.noise_std).map_err(|e| Error::InvalidParams(e.to_string()))?;
    let values = (0..horizon_days)
        .map(|d| {
            let t = d as f64;
            level
                + params.seasonal_amplitude
                    * (2.0 * PI * t / params.seasonal_period + seasonal_phase).sin()
                + params.weekly_amplitude * (2.0 * PI * t / 7.0 + weekly_phase).sin()
                + noise.sample(&mut rng)
        })
        .collect();
    QoSSeries::new(attribute_id, 0, values)
}
