//! Shape similarity between a normalized trial and the signature segment that
//! covers it, plus the similarity threshold initialization from past trials.
//!
//! Every measure is reported so that a higher score means more similar.
//! Euclidean distance `d` is mapped to `1 / (1 + d)` for that reason.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::signature::{normalize_series, SegmentedSignature, TrialExperience};
use crate::stats::mean;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SimilarityMeasure {
    #[serde(rename = "ed")]
    EuclideanDistance,
    #[serde(rename = "pcc")]
    PearsonCorrelation,
    #[serde(rename = "cs")]
    CosineSimilarity,
}

impl SimilarityMeasure {
    /// Inclusive range a score of this measure can take.
    pub fn score_range(self) -> (f64, f64) {
        match self {
            SimilarityMeasure::EuclideanDistance => (0.0, 1.0),
            SimilarityMeasure::PearsonCorrelation | SimilarityMeasure::CosineSimilarity => {
                (-1.0, 1.0)
            }
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SimilarityMeasure::EuclideanDistance => "ed",
            SimilarityMeasure::PearsonCorrelation => "pcc",
            SimilarityMeasure::CosineSimilarity => "cs",
        }
    }

    pub fn compare(self, e: &[f64], s: &[f64]) -> Result<SimilarityScore> {
        match self {
            SimilarityMeasure::EuclideanDistance => euclidean_similarity(e, s),
            SimilarityMeasure::PearsonCorrelation => pearson_similarity(e, s),
            SimilarityMeasure::CosineSimilarity => cosine_similarity(e, s),
        }
    }
}

impl fmt::Display for SimilarityMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SimilarityMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ed" => Ok(SimilarityMeasure::EuclideanDistance),
            "pcc" => Ok(SimilarityMeasure::PearsonCorrelation),
            "cs" => Ok(SimilarityMeasure::CosineSimilarity),
            other => Err(Error::Config(format!(
                "unknown similarity measure {other:?}, expected ed, pcc or cs"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityScore {
    pub value: f64,
    pub measure: SimilarityMeasure,
}

fn check_pair(e: &[f64], s: &[f64], min_len: usize) -> Result<()> {
    if e.len() != s.len() {
        return Err(Error::LengthMismatch {
            left: e.len(),
            right: s.len(),
        });
    }
    if e.len() < min_len {
        return Err(Error::TooShort {
            len: e.len(),
            min: min_len,
        });
    }
    crate::stats::check_finite(e)?;
    crate::stats::check_finite(s)
}

pub fn euclidean_similarity(e: &[f64], s: &[f64]) -> Result<SimilarityScore> {
    check_pair(e, s, 2)?;
    let d = e
        .iter()
        .zip(s)
        .map(|(q, st)| (st - q) * (st - q))
        .sum::<f64>()
        .sqrt();
    Ok(SimilarityScore {
        value: 1.0 / (1.0 + d),
        measure: SimilarityMeasure::EuclideanDistance,
    })
}

pub fn pearson_similarity(e: &[f64], s: &[f64]) -> Result<SimilarityScore> {
    check_pair(e, s, 2)?;
    let (me, ms) = (mean(e), mean(s));
    let mut cov = 0.0;
    let mut var_e = 0.0;
    let mut var_s = 0.0;
    for (q, st) in e.iter().zip(s) {
        let (dq, ds) = (q - me, st - ms);
        cov += dq * ds;
        var_e += dq * dq;
        var_s += ds * ds;
    }
    if var_e <= 0.0 || var_s <= 0.0 {
        return Err(Error::DegenerateSeries);
    }
    Ok(SimilarityScore {
        value: (cov / (var_e.sqrt() * var_s.sqrt())).clamp(-1.0, 1.0),
        measure: SimilarityMeasure::PearsonCorrelation,
    })
}

pub fn cosine_similarity(e: &[f64], s: &[f64]) -> Result<SimilarityScore> {
    check_pair(e, s, 1)?;
    let dot: f64 = e.iter().zip(s).map(|(q, st)| q * st).sum();
    let ne = e.iter().map(|q| q * q).sum::<f64>().sqrt();
    let ns = s.iter().map(|st| st * st).sum::<f64>().sqrt();
    if ne == 0.0 || ns == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(SimilarityScore {
        value: (dot / (ne * ns)).clamp(-1.0, 1.0),
        measure: SimilarityMeasure::CosineSimilarity,
    })
}

/// Normalizes the trial and scores it against the signature days it covers.
pub fn similarity(
    e: &TrialExperience,
    sig: &SegmentedSignature,
    m: SimilarityMeasure,
) -> Result<SimilarityScore> {
    let window = e.range();
    let segment = sig.values_in(window)?;
    let normalized = normalize_series(&e.series)?;
    m.compare(normalized.values(), &segment)
}

/// Minimum similarity observed across past trial experiences.
pub fn init_similarity_threshold(
    past: &[TrialExperience],
    sig: &SegmentedSignature,
    m: SimilarityMeasure,
) -> Result<f64> {
    let scores = past
        .iter()
        .map(|e| Ok(similarity(e, sig, m)?.value))
        .collect::<Result<Vec<_>>>()?;
    threshold_from_scores(&scores)
}

pub fn threshold_from_scores(scores: &[f64]) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(scores.iter().copied().fold(f64::INFINITY, f64::min))
}
