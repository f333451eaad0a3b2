//! Small numeric helpers shared across modules.

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population (1/N) standard deviation around `mean`.
pub(crate) fn population_std(xs: &[f64], mean: f64) -> f64 {
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (ss / xs.len() as f64).sqrt()
}

pub(crate) fn check_finite(xs: &[f64]) -> crate::Result<()> {
    match xs.iter().position(|x| !x.is_finite()) {
        Some(index) => Err(crate::Error::NonFinite { index }),
        None => Ok(()),
    }
}
