use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::synth::{synth_provider, SynthParams};
use super::{ChangeDay, ChangeKind, ChangeSpec, SimConfig};
use crate::detection::Windowing;
use crate::signature::{DayRange, QoSSeries, TrialExperience};
use crate::stats::{mean, population_std};
use crate::{Error, Result};

/// One trial per consumer in every tumbling window. Each trial observes the
/// provider's values for its window scaled by independent per-day
/// multiplicative Gaussian noise.
pub fn schedule_trials<R: Rng + ?Sized>(
    cfg: &SimConfig,
    truth: &QoSSeries,
    rng: &mut R,
) -> Result<Vec<Vec<TrialExperience>>> {
    let windowing = Windowing::new(cfg.trial_days)?;
    (0..cfg.num_windows())
        .map(|w| {
            let window = truth.restrict(windowing.range(w))?;
            (0..cfg.num_consumers)
                .map(|c| {
                    let values = window
                        .values()
                        .iter()
                        .map(|v| {
                            let eps: f64 = StandardNormal.sample(rng);
                            v * (1.0 + cfg.consumer_noise * eps)
                        })
                        .collect();
                    Ok(TrialExperience::new(
                        format!("c{c:02}"),
                        QoSSeries::new(truth.attribute_id(), window.start_day(), values)?,
                    ))
                })
                .collect()
        })
        .collect()
}

/// Applies `spec` to `truth`. Returns the modified series and the first
/// changed day, or `None` for [`ChangeKind::None`].
pub fn inject_change<R: Rng + ?Sized>(
    truth: &QoSSeries,
    spec: &ChangeSpec,
    allowed: DayRange,
    synth: &SynthParams,
    rng: &mut R,
) -> Result<(QoSSeries, Option<u32>)> {
    if spec.kind == ChangeKind::None {
        return Ok((truth.clone(), None));
    }
    let range = truth.range();
    let day = match spec.change_day {
        ChangeDay::Fixed(d) => d,
        ChangeDay::UniformRandom => rng.random_range(allowed.start..allowed.end),
    };
    if day <= range.start || day >= range.end {
        return Err(Error::InvalidParams(format!(
            "change day {day} outside series {range}"
        )));
    }
    let split = (day - range.start) as usize;
    let mut values = truth.values().to_vec();
    match spec.kind {
        ChangeKind::LevelShift => {
            let pre = &values[..split];
            let shift = spec.magnitude_sigmas * population_std(pre, mean(pre));
            for v in &mut values[split..] {
                *v += shift;
            }
        }
        ChangeKind::ShapeRegenerate => {
            let fresh = synth_provider(rng.random(), range.end, synth, truth.attribute_id())?;
            values[split..].copy_from_slice(&fresh.values()[range.start as usize + split..]);
        }
        ChangeKind::None => unreachable!(),
    }
    Ok((
        QoSSeries::new(truth.attribute_id(), range.start, values)?,
        Some(day),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn truth() -> QoSSeries {
        synth_provider(3, 360, &SynthParams::default(), "tp").unwrap()
    }

    fn spec(kind: ChangeKind, day: u32, mag: f64) -> ChangeSpec {
        ChangeSpec {
            change_day: ChangeDay::Fixed(day),
            kind,
            magnitude_sigmas: mag,
        }
    }

    fn allowed() -> DayRange {
        DayRange::new(31, 300).unwrap()
    }

    #[test]
    fn cohort_counts_and_zero_noise() {
        let cfg = SimConfig {
            consumer_noise: 0.0,
            ..SimConfig::default()
        };
        let t = truth();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let windows = schedule_trials(&cfg, &t, &mut rng).unwrap();
        assert_eq!(windows.len(), 12);
        assert_eq!(windows.iter().map(Vec::len).sum::<usize>(), 216);
        for (w, trials) in windows.iter().enumerate() {
            let seg = t
                .restrict(DayRange::new(w as u32 * 30, w as u32 * 30 + 30).unwrap())
                .unwrap();
            for tr in trials {
                assert_eq!(tr.series.values(), seg.values());
            }
        }
    }

    #[test]
    fn noisy_cohort_varies() {
        let t = truth();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let windows = schedule_trials(&SimConfig::default(), &t, &mut rng).unwrap();
        assert_ne!(windows[0][0].series.values(), windows[0][1].series.values());
    }

    #[test]
    fn null_and_boundary_changes() {
        let t = truth();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (out, day) = inject_change(
            &t,
            &spec(ChangeKind::LevelShift, 100, 0.0),
            allowed(),
            &SynthParams::default(),
            &mut rng,
        )
        .unwrap();
        assert_eq!(out, t);
        assert_eq!(day, Some(100));

        let (out, _) = inject_change(
            &t,
            &spec(ChangeKind::LevelShift, 359, 2.0),
            allowed(),
            &SynthParams::default(),
            &mut rng,
        )
        .unwrap();
        let diff: Vec<usize> = (0..360)
            .filter(|&d| out.values()[d] != t.values()[d])
            .collect();
        assert_eq!(diff, vec![359]);

        let (out, day) = inject_change(
            &t,
            &spec(ChangeKind::None, 100, 2.0),
            allowed(),
            &SynthParams::default(),
            &mut rng,
        )
        .unwrap();
        assert_eq!((out, day), (t.clone(), None));
    }

    #[test]
    fn level_shift_size() {
        let t = truth();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (out, _) = inject_change(
            &t,
            &spec(ChangeKind::LevelShift, 180, 2.0),
            allowed(),
            &SynthParams::default(),
            &mut rng,
        )
        .unwrap();
        let pre = &t.values()[..180];
        let sigma = population_std(pre, mean(pre));
        let lift = mean(&out.values()[180..]) - mean(&t.values()[180..]);
        assert!((lift - 2.0 * sigma).abs() <= 0.05 * 2.0 * sigma);
        assert_eq!(&out.values()[..180], pre);
    }

    #[test]
    fn regenerated_tail() {
        let t = truth();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (out, day) = inject_change(
            &t,
            &spec(ChangeKind::ShapeRegenerate, 200, 0.0),
            allowed(),
            &SynthParams::default(),
            &mut rng,
        )
        .unwrap();
        assert_eq!(day, Some(200));
        assert_eq!(&out.values()[..200], &t.values()[..200]);
        assert!(out.values()[200..]
            .iter()
            .zip(&t.values()[200..])
            .all(|(a, b)| a != b));
    }

    #[test]
    fn random_day_within_allowed() {
        let t = truth();
        let s = ChangeSpec {
            change_day: ChangeDay::UniformRandom,
            ..ChangeSpec::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let (_, day) =
                inject_change(&t, &s, allowed(), &SynthParams::default(), &mut rng).unwrap();
            assert!(allowed().contains(day.unwrap()));
        }
    }
}
