//! Flat `key=value` configuration with dotted namespaces.
//!
//! Later assignments override earlier ones, so a file followed by command-line
//! overrides gives the precedence CLI > file > defaults.

use std::path::{Path, PathBuf};

use crate::sim::{ChangeDay, ChangeKind, SimConfig};
use crate::{Error, Result};

pub const KNOWN_KEYS: &[&str] = &[
    "sim.num_runs",
    "sim.horizon_days",
    "sim.trial_days",
    "sim.num_providers",
    "sim.num_consumers",
    "sim.similarity_thresholds",
    "sim.anomaly_fractions",
    "sim.similarity_threshold",
    "sim.anomaly_fraction",
    "sim.measure",
    "sim.detection_window_days",
    "sim.seed",
    "sim.consumer_noise",
    "sim.trace_path",
    "sim.trace_header",
    "sim.attribute_id",
    "change.day",
    "change.kind",
    "change.magnitude_sigmas",
    "synth.base_level",
    "synth.level_jitter",
    "synth.seasonal_amplitude",
    "synth.seasonal_period",
    "synth.phase_jitter",
    "synth.weekly_amplitude",
    "synth.noise_std",
    "cusum.shift_n",
    "cusum.control_c",
    "cusum.input",
    "adaptation.horizon_days",
    "adaptation.z",
    "adaptation.polarity",
];

/// Splits `key=value`, trimming both sides.
pub fn parse_assignment(line: &str) -> Result<(String, String)> {
    let (k, v) = line
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("expected key=value, found {line:?}")))?;
    let key = k.trim();
    if key.is_empty() {
        return Err(Error::Config(format!("missing key in {line:?}")));
    }
    Ok((key.to_string(), v.trim().to_string()))
}

/// Parses a config file body. Blank lines and `#` comments are skipped.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    text.lines()
        .enumerate()
        .filter_map(|(i, raw)| {
            let line = raw.split('#').next().unwrap_or("").trim();
            (!line.is_empty()).then(|| {
                parse_assignment(line).map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))
            })
        })
        .collect()
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
}

fn list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| num(key, s.trim()))
        .collect()
}

fn optional(key: &str, v: &str) -> Result<Option<f64>> {
    if v == "init" {
        Ok(None)
    } else {
        num(key, v).map(Some)
    }
}

fn flag(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!(
            "{key}: expected true or false, found {v:?}"
        ))),
    }
}

impl SimConfig {
    /// Applies one assignment. Unknown keys are rejected.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "sim.num_runs" => self.num_runs = num(key, v)?,
            "sim.horizon_days" => self.horizon_days = num(key, v)?,
            "sim.trial_days" => self.trial_days = num(key, v)?,
            "sim.num_providers" => self.num_providers = num(key, v)?,
            "sim.num_consumers" => self.num_consumers = num(key, v)?,
            "sim.similarity_thresholds" => self.similarity_thresholds = list(key, v)?,
            "sim.anomaly_fractions" => self.anomaly_fractions = list(key, v)?,
            "sim.similarity_threshold" => self.similarity_threshold = optional(key, v)?,
            "sim.anomaly_fraction" => self.anomaly_fraction = optional(key, v)?,
            "sim.measure" => self.measure = v.parse()?,
            "sim.detection_window_days" => self.detection_window_days = num(key, v)?,
            "sim.seed" => self.rng_seed = num(key, v)?,
            "sim.consumer_noise" => self.consumer_noise = num(key, v)?,
            "sim.trace_path" => self.trace_path = (!v.is_empty()).then(|| PathBuf::from(v)),
            "sim.trace_header" => self.trace_has_header = flag(key, v)?,
            "sim.attribute_id" => self.attribute_id = v.to_string(),
            "change.day" => {
                self.change.change_day = if v == "uniform-random" {
                    ChangeDay::UniformRandom
                } else {
                    ChangeDay::Fixed(num(key, v)?)
                }
            }
            "change.kind" => {
                self.change.kind = match v {
                    "none" => ChangeKind::None,
                    "level-shift" => ChangeKind::LevelShift,
                    "shape-regenerate" => ChangeKind::ShapeRegenerate,
                    _ => {
                        return Err(Error::Config(format!(
                            "{key}: expected none, level-shift or shape-regenerate, found {v:?}"
                        )))
                    }
                }
            }
            "change.magnitude_sigmas" => self.change.magnitude_sigmas = num(key, v)?,
            "synth.base_level" => self.synth.base_level = num(key, v)?,
            "synth.level_jitter" => self.synth.level_jitter = num(key, v)?,
            "synth.seasonal_amplitude" => self.synth.seasonal_amplitude = num(key, v)?,
            "synth.seasonal_period" => self.synth.seasonal_period = num(key, v)?,
            "synth.phase_jitter" => self.synth.phase_jitter = num(key, v)?,
            "synth.weekly_amplitude" => self.synth.weekly_amplitude = num(key, v)?,
            "synth.noise_std" => self.synth.noise_std = num(key, v)?,
            "cusum.shift_n" => self.cusum.shift_n = num(key, v)?,
            "cusum.control_c" => self.cusum.control_c = num(key, v)?,
            "cusum.input" => self.cusum.input = v.parse()?,
            "adaptation.horizon_days" => self.adaptation.horizon_days = num(key, v)?,
            "adaptation.z" => self.adaptation.z = num(key, v)?,
            "adaptation.polarity" => self.adaptation.polarity = v.parse()?,
            _ => return Err(Error::Config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    pub fn apply(&mut self, assignments: &[(String, String)]) -> Result<()> {
        for (k, v) in assignments {
            self.set(k, v)?;
        }
        Ok(())
    }

    /// Defaults, then the file at `path` if any, then `overrides`.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<SimConfig> {
        let mut cfg = SimConfig::default();
        if let Some(p) = path {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            cfg.apply(&parse_config_text(&text)?)?;
        }
        cfg.apply(overrides)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Effective configuration as `key=value` lines, loadable by [`SimConfig::load`].
    pub fn to_config_text(&self) -> String {
        let join = |xs: &[f64]| xs.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        let opt = |x: Option<f64>| x.map_or_else(|| "init".to_string(), |v| v.to_string());
        let change_day = match self.change.change_day {
            ChangeDay::UniformRandom => "uniform-random".to_string(),
            ChangeDay::Fixed(d) => d.to_string(),
        };
        let kind = match self.change.kind {
            ChangeKind::None => "none",
            ChangeKind::LevelShift => "level-shift",
            ChangeKind::ShapeRegenerate => "shape-regenerate",
        };
        let input = match self.cusum.input {
            crate::cusum::ConditionInput::Deviation => "deviation",
            crate::cusum::ConditionInput::Signature => "signature",
        };
        let polarity = match self.adaptation.polarity {
            crate::adaptation::Polarity::ConfirmedLowers => "paper-motivation",
            crate::adaptation::Polarity::ConfirmedRaises => "fig2-text",
        };
        let pairs: Vec<(&str, String)> = vec![
            ("sim.num_runs", self.num_runs.to_string()),
            ("sim.horizon_days", self.horizon_days.to_string()),
            ("sim.trial_days", self.trial_days.to_string()),
            ("sim.num_providers", self.num_providers.to_string()),
            ("sim.num_consumers", self.num_consumers.to_string()),
            (
                "sim.similarity_thresholds",
                join(&self.similarity_thresholds),
            ),
            ("sim.anomaly_fractions", join(&self.anomaly_fractions)),
            ("sim.similarity_threshold", opt(self.similarity_threshold)),
            ("sim.anomaly_fraction", opt(self.anomaly_fraction)),
            ("sim.measure", self.measure.to_string()),
            (
                "sim.detection_window_days",
                self.detection_window_days.to_string(),
            ),
            ("sim.seed", self.rng_seed.to_string()),
            ("sim.consumer_noise", self.consumer_noise.to_string()),
            (
                "sim.trace_path",
                self.trace_path
                    .as_ref()
                    .map(|p| p.display().to_string())
                    .unwrap_or_default(),
            ),
            ("sim.trace_header", self.trace_has_header.to_string()),
            ("sim.attribute_id", self.attribute_id.clone()),
            ("change.day", change_day),
            ("change.kind", kind.to_string()),
            (
                "change.magnitude_sigmas",
                self.change.magnitude_sigmas.to_string(),
            ),
            ("synth.base_level", self.synth.base_level.to_string()),
            ("synth.level_jitter", self.synth.level_jitter.to_string()),
            (
                "synth.seasonal_amplitude",
                self.synth.seasonal_amplitude.to_string(),
            ),
            (
                "synth.seasonal_period",
                self.synth.seasonal_period.to_string(),
            ),
            ("synth.phase_jitter", self.synth.phase_jitter.to_string()),
            (
                "synth.weekly_amplitude",
                self.synth.weekly_amplitude.to_string(),
            ),
            ("synth.noise_std", self.synth.noise_std.to_string()),
            ("cusum.shift_n", self.cusum.shift_n.to_string()),
            ("cusum.control_c", self.cusum.control_c.to_string()),
            ("cusum.input", input.to_string()),
            (
                "adaptation.horizon_days",
                self.adaptation.horizon_days.to_string(),
            ),
            ("adaptation.z", self.adaptation.z.to_string()),
            ("adaptation.polarity", polarity.to_string()),
        ];
        pairs
            .into_iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }
}
