//! Performance signature data model and generation by normalized averaging.
//!
//! A signature is the day-indexed, z-normalized shape of the average QoS
//! observed by a cohort of trial consumers. Each signature keeps the mean and
//! standard deviation of the aggregate it was normalized from, so the original
//! level can be recovered per segment after splices.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::stats::{check_finite, mean, population_std};
use crate::{Error, Result};

/// Half-open range of day indices `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DayRange {
    pub start: u32,
    pub end: u32,
}

impl DayRange {
    pub fn new(start: u32, end: u32) -> Result<Self> {
        if start >= end {
            return Err(Error::InvalidParams(format!(
                "empty day range [{start}, {end})"
            )));
        }
        Ok(Self { start, end })
    }

    pub fn len(&self) -> usize {
        (self.end - self.start) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    pub fn contains(&self, day: u32) -> bool {
        self.start <= day && day < self.end
    }

    pub fn contains_range(&self, other: &DayRange) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn overlaps(&self, other: &DayRange) -> bool {
        self.start < other.end && other.start < self.end
    }
}

impl fmt::Display for DayRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.start, self.end)
    }
}

/// Raw observations of one QoS attribute, one value per day.
#[derive(Debug, Clone, PartialEq)]
pub struct QoSSeries {
    attribute_id: String,
    start_day: u32,
    values: Vec<f64>,
}

impl QoSSeries {
    pub fn new(attribute_id: impl Into<String>, start_day: u32, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        check_finite(&values)?;
        Ok(Self {
            attribute_id: attribute_id.into(),
            start_day,
            values,
        })
    }

    pub fn attribute_id(&self) -> &str {
        &self.attribute_id
    }

    pub fn start_day(&self) -> u32 {
        self.start_day
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn range(&self) -> DayRange {
        DayRange {
            start: self.start_day,
            end: self.start_day + self.values.len() as u32,
        }
    }

    /// Sub-series covering `window`, which must lie inside this series.
    pub fn restrict(&self, window: DayRange) -> Result<QoSSeries> {
        if !self.range().contains_range(&window) {
            return Err(Error::CoverageGap {
                start: window.start,
                end: window.end,
            });
        }
        let lo = (window.start - self.start_day) as usize;
        Ok(QoSSeries {
            attribute_id: self.attribute_id.clone(),
            start_day: window.start,
            values: self.values[lo..lo + window.len()].to_vec(),
        })
    }
}

/// One consumer's observations over a free-trial window.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialExperience {
    pub consumer_id: String,
    pub series: QoSSeries,
}

impl TrialExperience {
    pub fn new(consumer_id: impl Into<String>, series: QoSSeries) -> Self {
        Self {
            consumer_id: consumer_id.into(),
            series,
        }
    }

    pub fn range(&self) -> DayRange {
        self.series.range()
    }
}

/// Mean and population standard deviation of the aggregate a signature
/// segment was normalized from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentStats {
    pub mean: f64,
    pub std: f64,
}

/// Normalized relative-performance series for one QoS attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SignatureRepr")]
pub struct Signature {
    attribute_id: String,
    start_day: u32,
    values: Vec<f64>,
    stats: SegmentStats,
}

#[derive(Deserialize)]
struct SignatureRepr {
    attribute_id: String,
    start_day: u32,
    values: Vec<f64>,
    stats: SegmentStats,
}

impl TryFrom<SignatureRepr> for Signature {
    type Error = Error;

    fn try_from(r: SignatureRepr) -> Result<Self> {
        Signature::new(r.attribute_id, r.start_day, r.values, r.stats)
    }
}

impl Signature {
    pub fn new(
        attribute_id: impl Into<String>,
        start_day: u32,
        values: Vec<f64>,
        stats: SegmentStats,
    ) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        check_finite(&values)?;
        if !stats.mean.is_finite() || !stats.std.is_finite() || stats.std <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "segment stats must be finite with std > 0, got mean {} std {}",
                stats.mean, stats.std
            )));
        }
        Ok(Self {
            attribute_id: attribute_id.into(),
            start_day,
            values,
            stats,
        })
    }

    pub fn attribute_id(&self) -> &str {
        &self.attribute_id
    }

    pub fn start_day(&self) -> u32 {
        self.start_day
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn stats(&self) -> SegmentStats {
        self.stats
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn range(&self) -> DayRange {
        DayRange {
            start: self.start_day,
            end: self.start_day + self.values.len() as u32,
        }
    }

    /// Values mapped back to QoS units using this segment's stats.
    pub fn denormalized(&self) -> Vec<f64> {
        self.values
            .iter()
            .map(|v| v * self.stats.std + self.stats.mean)
            .collect()
    }

    fn trimmed(&self, keep: DayRange) -> Signature {
        let lo = (keep.start - self.start_day) as usize;
        Signature {
            attribute_id: self.attribute_id.clone(),
            start_day: keep.start,
            values: self.values[lo..lo + keep.len()].to_vec(),
            stats: self.stats,
        }
    }
}

/// Contiguous, non-overlapping signature segments ordered by start day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Signature>", into = "Vec<Signature>")]
pub struct SegmentedSignature {
    segments: Vec<Signature>,
}

impl TryFrom<Vec<Signature>> for SegmentedSignature {
    type Error = Error;

    fn try_from(segments: Vec<Signature>) -> Result<Self> {
        SegmentedSignature::from_segments(segments)
    }
}

impl From<SegmentedSignature> for Vec<Signature> {
    fn from(s: SegmentedSignature) -> Self {
        s.segments
    }
}

impl From<Signature> for SegmentedSignature {
    fn from(sig: Signature) -> Self {
        SegmentedSignature {
            segments: vec![sig],
        }
    }
}

impl SegmentedSignature {
    /// Builds a segmented signature, sorting by start day and rejecting gaps
    /// or overlaps between neighbours.
    pub fn from_segments(mut segments: Vec<Signature>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::EmptyInput);
        }
        segments.sort_by_key(|s| s.start_day);
        for pair in segments.windows(2) {
            let (a, b) = (pair[0].range(), pair[1].range());
            if a.end != b.start {
                return Err(Error::InvalidParams(format!(
                    "segments {a} and {b} are not contiguous"
                )));
            }
        }
        Ok(Self { segments })
    }

    pub fn segments(&self) -> &[Signature] {
        &self.segments
    }

    pub fn range(&self) -> DayRange {
        DayRange {
            start: self.segments[0].start_day,
            end: self.segments[self.segments.len() - 1].range().end,
        }
    }

    /// All values in day order.
    pub fn values(&self) -> Vec<f64> {
        self.segments
            .iter()
            .flat_map(|s| s.values.iter().copied())
            .collect()
    }

    /// Normalized values for the days in `window`.
    pub fn values_in(&self, window: DayRange) -> Result<Vec<f64>> {
        self.collect_in(window, |seg, i| seg.values[i])
    }

    /// Values in `window` mapped back to QoS units, each through the stats of
    /// the segment that holds it.
    pub fn denormalized_in(&self, window: DayRange) -> Result<Vec<f64>> {
        self.collect_in(window, |seg, i| {
            seg.values[i] * seg.stats.std + seg.stats.mean
        })
    }

    fn collect_in(
        &self,
        window: DayRange,
        f: impl Fn(&Signature, usize) -> f64,
    ) -> Result<Vec<f64>> {
        if !self.range().contains_range(&window) {
            return Err(Error::CoverageGap {
                start: window.start,
                end: window.end,
            });
        }
        let mut out = Vec::with_capacity(window.len());
        for seg in &self.segments {
            let r = seg.range();
            if !r.overlaps(&window) {
                continue;
            }
            let lo = window.start.max(r.start);
            let hi = window.end.min(r.end);
            for day in lo..hi {
                out.push(f(seg, (day - r.start) as usize));
            }
        }
        Ok(out)
    }
}

/// Element-wise mean of trial series that share a start day and length.
pub fn aggregate_trials(trials: &[TrialExperience]) -> Result<QoSSeries> {
    let first = trials.first().ok_or(Error::EmptyInput)?;
    let range = first.range();
    if let Some(t) = trials.iter().find(|t| t.range() != range) {
        return Err(Error::MisalignedWindows(format!(
            "consumer {} covers {} but {} covers {}",
            t.consumer_id,
            t.range(),
            first.consumer_id,
            range
        )));
    }
    let k = trials.len() as f64;
    let mut sums = vec![0.0; range.len()];
    for t in trials {
        for (acc, v) in sums.iter_mut().zip(t.series.values()) {
            *acc += v;
        }
    }
    let values = sums.into_iter().map(|s| s / k).collect();
    QoSSeries::new(first.series.attribute_id(), range.start, values)
}

/// Z-normalizes a series with the population standard deviation.
pub fn normalize_series(series: &QoSSeries) -> Result<Signature> {
    let xs = series.values();
    if xs.len() < 2 {
        return Err(Error::TooShort {
            len: xs.len(),
            min: 2,
        });
    }
    let m = mean(xs);
    let sd = population_std(xs, m);
    if sd <= 1e-12 * m.abs().max(1.0) {
        return Err(Error::DegenerateSeries);
    }
    let values = xs.iter().map(|x| (x - m) / sd).collect();
    Signature::new(
        series.attribute_id(),
        series.start_day(),
        values,
        SegmentStats { mean: m, std: sd },
    )
}

/// Restricts each trial to `window`, averages them, and normalizes the result.
pub fn generate_signature(trials: &[TrialExperience], window: DayRange) -> Result<Signature> {
    if trials.is_empty() {
        return Err(Error::EmptyInput);
    }
    let restricted = trials
        .iter()
        .map(|t| {
            Ok(TrialExperience {
                consumer_id: t.consumer_id.clone(),
                series: t.series.restrict(window)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    normalize_series(&aggregate_trials(&restricted)?)
}

/// Replaces the days in `window` with `segment`, trimming neighbours so the
/// segments still tile the signature's range exactly.
pub fn splice_segment(
    sig: &SegmentedSignature,
    window: DayRange,
    segment: &Signature,
) -> Result<SegmentedSignature> {
    let full = sig.range();
    if !full.contains_range(&window) {
        return Err(Error::OutOfRange {
            start: window.start,
            end: window.end,
            horizon: full.end,
        });
    }
    if segment.len() != window.len() {
        return Err(Error::LengthMismatch {
            left: segment.len(),
            right: window.len(),
        });
    }
    let mut out = Vec::with_capacity(sig.segments.len() + 2);
    let mut inserted = false;
    for seg in &sig.segments {
        let r = seg.range();
        if r.start < window.start {
            out.push(seg.trimmed(DayRange {
                start: r.start,
                end: r.end.min(window.start),
            }));
        }
        if !inserted && r.end > window.start {
            let mut new_seg = segment.clone();
            new_seg.start_day = window.start;
            out.push(new_seg);
            inserted = true;
        }
        if r.end > window.end {
            out.push(seg.trimmed(DayRange {
                start: r.start.max(window.end),
                end: r.end,
            }));
        }
    }
    Ok(SegmentedSignature { segments: out })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial(id: &str, start: u32, values: &[f64]) -> TrialExperience {
        TrialExperience::new(id, QoSSeries::new("tp", start, values.to_vec()).unwrap())
    }

    fn seg(start: u32, values: &[f64]) -> Signature {
        Signature::new(
            "tp",
            start,
            values.to_vec(),
            SegmentStats {
                mean: 0.0,
                std: 1.0,
            },
        )
        .unwrap()
    }

    #[test]
    fn aggregate_examples() {
        let out =
            aggregate_trials(&[trial("a", 0, &[2.0, 4.0]), trial("b", 0, &[4.0, 6.0])]).unwrap();
        assert_eq!(out.values(), &[3.0, 5.0]);

        let out = aggregate_trials(&[trial("a", 3, &[7.0, 7.0, 7.0])]).unwrap();
        assert_eq!(out.values(), &[7.0, 7.0, 7.0]);
        assert_eq!(out.start_day(), 3);

        // column means by hand: (1+3+5)/3 = 3, (2+4+6)/3 = 4
        let out = aggregate_trials(&[
            trial("a", 0, &[1.0, 2.0]),
            trial("b", 0, &[3.0, 4.0]),
            trial("c", 0, &[5.0, 6.0]),
        ])
        .unwrap();
        assert_eq!(out.values(), &[3.0, 4.0]);
    }

    #[test]
    fn aggregate_errors() {
        assert!(matches!(aggregate_trials(&[]), Err(Error::EmptyInput)));
        let r = aggregate_trials(&[trial("a", 0, &[1.0, 2.0]), trial("b", 1, &[1.0, 2.0])]);
        assert!(matches!(r, Err(Error::MisalignedWindows(_))));
        let r = aggregate_trials(&[trial("a", 0, &[1.0, 2.0]), trial("b", 0, &[1.0, 2.0, 3.0])]);
        assert!(matches!(r, Err(Error::MisalignedWindows(_))));
    }

    #[test]
    fn series_rejects_non_finite() {
        assert!(matches!(
            QoSSeries::new("tp", 0, vec![1.0, f64::NAN]),
            Err(Error::NonFinite { index: 1 })
        ));
        assert!(matches!(
            QoSSeries::new("tp", 0, vec![]),
            Err(Error::EmptyInput)
        ));
    }

    #[test]
    fn normalize_examples() {
        let s = normalize_series(&QoSSeries::new("tp", 0, vec![3.0, 5.0]).unwrap()).unwrap();
        assert_eq!(s.values(), &[-1.0, 1.0]);
        assert_eq!(
            s.stats(),
            SegmentStats {
                mean: 4.0,
                std: 1.0
            }
        );

        let r = normalize_series(&QoSSeries::new("tp", 0, vec![10.0; 3]).unwrap());
        assert!(matches!(r, Err(Error::DegenerateSeries)));

        let r = normalize_series(&QoSSeries::new("tp", 0, vec![1.0]).unwrap());
        assert!(matches!(r, Err(Error::TooShort { len: 1, .. })));
    }

    #[test]
    fn normalize_is_idempotent() {
        let x = QoSSeries::new("tp", 0, vec![1.5, -2.0, 7.25, 0.0, 3.0]).unwrap();
        let once = normalize_series(&x).unwrap();
        let again =
            normalize_series(&QoSSeries::new("tp", 0, once.values().to_vec()).unwrap()).unwrap();
        for (a, b) in once.values().iter().zip(again.values()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn generate_example_and_window() {
        let trials = [trial("a", 0, &[2.0, 4.0]), trial("b", 0, &[4.0, 6.0])];
        let s = generate_signature(&trials, DayRange::new(0, 2).unwrap()).unwrap();
        assert_eq!(s.values(), &[-1.0, 1.0]);

        let trials = [trial("a", 10, &[1.0, 2.0, 9.0, 4.0])];
        let s = generate_signature(&trials, DayRange::new(11, 13).unwrap()).unwrap();
        assert_eq!(s.start_day(), 11);
        assert_eq!(s.values(), &[-1.0, 1.0]);

        let r = generate_signature(&trials, DayRange::new(12, 20).unwrap());
        assert!(matches!(r, Err(Error::CoverageGap { .. })));
    }

    #[test]
    fn splice_identity_and_locality() {
        let base: Vec<f64> = (0..360).map(|d| (d as f64 * 0.3).sin()).collect();
        let sig = SegmentedSignature::from(seg(0, &base));
        let same = splice_segment(&sig, sig.range(), &sig.segments()[0]).unwrap();
        assert_eq!(same.values(), sig.values());

        let patch = seg(0, &[9.0; 30]);
        let w = DayRange::new(30, 60).unwrap();
        let out = splice_segment(&sig, w, &patch).unwrap();
        let v = out.values();
        for d in 0..360 {
            if w.contains(d as u32) {
                assert_eq!(v[d], 9.0);
            } else {
                assert_eq!(v[d], base[d]);
            }
        }
        assert_eq!(out.segments().len(), 3);
        assert_eq!(out.range(), sig.range());
        assert_eq!(out.segments()[1].start_day(), 30);
    }

    #[test]
    fn splice_across_segment_boundary() {
        let sig =
            SegmentedSignature::from_segments(vec![seg(0, &[1.0; 4]), seg(4, &[2.0; 4])]).unwrap();
        let out = splice_segment(&sig, DayRange::new(2, 6).unwrap(), &seg(0, &[5.0; 4])).unwrap();
        assert_eq!(out.values(), vec![1.0, 1.0, 5.0, 5.0, 5.0, 5.0, 2.0, 2.0]);
        let ranges: Vec<_> = out.segments().iter().map(|s| s.range()).collect();
        assert_eq!(
            ranges,
            vec![
                DayRange::new(0, 2).unwrap(),
                DayRange::new(2, 6).unwrap(),
                DayRange::new(6, 8).unwrap()
            ]
        );
    }

    #[test]
    fn splice_errors() {
        let sig = SegmentedSignature::from(seg(0, &[0.0; 10]));
        let r = splice_segment(&sig, DayRange::new(5, 11).unwrap(), &seg(0, &[0.0; 6]));
        assert!(matches!(r, Err(Error::OutOfRange { horizon: 10, .. })));
        let r = splice_segment(&sig, DayRange::new(5, 8).unwrap(), &seg(0, &[0.0; 2]));
        assert!(matches!(r, Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn segmented_rejects_gaps() {
        let r = SegmentedSignature::from_segments(vec![seg(0, &[1.0; 4]), seg(5, &[2.0; 4])]);
        assert!(r.is_err());
        let r = SegmentedSignature::from_segments(vec![seg(0, &[1.0; 4]), seg(3, &[2.0; 4])]);
        assert!(r.is_err());
    }

    #[test]
    fn json_round_trip_and_shape() {
        let sig = SegmentedSignature::from_segments(vec![
            Signature::new(
                "tp",
                2,
                vec![1.0, -1.0],
                SegmentStats {
                    mean: 4.0,
                    std: 1.0,
                },
            )
            .unwrap(),
            Signature::new(
                "tp",
                0,
                vec![-1.0, 1.0],
                SegmentStats {
                    mean: 3.0,
                    std: 2.0,
                },
            )
            .unwrap(),
        ])
        .unwrap();
        let json = serde_json::to_value(&sig).unwrap();
        assert_eq!(json[0]["start_day"], 0);
        assert_eq!(json[1]["stats"]["mean"], 4.0);
        let back: SegmentedSignature = serde_json::from_value(json).unwrap();
        assert_eq!(back, sig);

        let bad = r#"{"attribute_id":"tp","start_day":0,"values":[],"stats":{"mean":0,"std":1}}"#;
        assert!(serde_json::from_str::<Signature>(bad).is_err());
    }

    #[test]
    fn denormalized_uses_segment_stats() {
        let sig = SegmentedSignature::from_segments(vec![
            Signature::new(
                "tp",
                0,
                vec![-1.0, 1.0],
                SegmentStats {
                    mean: 10.0,
                    std: 2.0,
                },
            )
            .unwrap(),
            Signature::new(
                "tp",
                2,
                vec![1.0, -1.0],
                SegmentStats {
                    mean: 0.0,
                    std: 1.0,
                },
            )
            .unwrap(),
        ])
        .unwrap();
        assert_eq!(
            sig.denormalized_in(DayRange::new(1, 3).unwrap()).unwrap(),
            vec![12.0, 1.0]
        );
    }
}
