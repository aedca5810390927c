//! Inequality and shape statistics over selection counts.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("empty input")]
    Empty,
    #[error("all values are zero")]
    AllZero,
    #[error("negative or non-finite value {0}")]
    BadValue(f64),
    #[error("zero variance")]
    ZeroVariance,
    #[error("need at least two values")]
    TooFew,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Granularity {
    PerLabel,
    PerParticipant,
}

impl std::str::FromStr for Granularity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "per-label" => Ok(Granularity::PerLabel),
            "per-participant" => Ok(Granularity::PerParticipant),
            other => Err(format!("unknown granularity '{other}' (expected per-label or per-participant)")),
        }
    }
}

impl std::fmt::Display for Granularity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Granularity::PerLabel => "per-label",
            Granularity::PerParticipant => "per-participant",
        })
    }
}

/// Selection counts keyed by label or participant, in a fixed order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyTable {
    pub granularity: Granularity,
    pub entries: Vec<(String, u64)>,
}

impl FrequencyTable {
    pub fn new(granularity: Granularity, entries: Vec<(String, u64)>) -> Self {
        Self { granularity, entries }
    }

    /// Zeroed table over `keys`.
    pub fn zeroed<S: ToString>(granularity: Granularity, keys: impl IntoIterator<Item = S>) -> Self {
        Self { granularity, entries: keys.into_iter().map(|k| (k.to_string(), 0)).collect() }
    }

    pub fn increment(&mut self, index: usize) {
        self.entries[index].1 += 1;
    }

    pub fn total(&self) -> u64 {
        self.entries.iter().map(|(_, c)| c).sum()
    }

    pub fn counts(&self) -> Vec<f64> {
        self.entries.iter().map(|&(_, c)| c as f64).collect()
    }

    pub fn count_of(&self, key: &str) -> Option<u64> {
        self.entries.iter().find(|(k, _)| k == key).map(|&(_, c)| c)
    }

    pub fn metrics(&self) -> Result<MetricsReport, MetricsError> {
        MetricsReport::from_counts(&self.counts())
    }
}

fn check(values: &[f64]) -> Result<(), MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::Empty);
    }
    if let Some(&bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(MetricsError::BadValue(bad));
    }
    Ok(())
}

/// Mean absolute difference over twice the mean, via the sorted-rank form
/// `sum_i (2i - n - 1) x_(i) / (n sum x)`.
pub fn gini(values: &[f64]) -> Result<f64, MetricsError> {
    check(values)?;
    if let Some(&neg) = values.iter().find(|&&v| v < 0.0) {
        return Err(MetricsError::BadValue(neg));
    }
    let total: f64 = values.iter().sum();
    if total <= 0.0 {
        return Err(MetricsError::AllZero);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, x)| (2.0 * (i as f64 + 1.0) - n - 1.0) * x)
        .sum();
    Ok((weighted / (n * total)).max(0.0))
}

/// Population central moments m2, m3, m4.
fn central_moments(values: &[f64]) -> Result<(f64, f64, f64), MetricsError> {
    check(values)?;
    if values.len() < 2 {
        return Err(MetricsError::TooFew);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in values {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);
    // relative cutoff so constant inputs with rounding noise still count as flat
    let scale = values.iter().fold(0.0f64, |acc, x| acc.max(x.abs())).max(1.0);
    if m2 <= 1e-24 * scale * scale {
        return Err(MetricsError::ZeroVariance);
    }
    Ok((m2, m3, m4))
}

/// Moment coefficient of skewness `m3 / m2^(3/2)`.
pub fn skewness(values: &[f64]) -> Result<f64, MetricsError> {
    let (m2, m3, _) = central_moments(values)?;
    Ok(m3 / m2.powf(1.5))
}

/// Excess kurtosis `m4 / m2^2 - 3`.
pub fn kurtosis(values: &[f64]) -> Result<f64, MetricsError> {
    let (m2, _, m4) = central_moments(values)?;
    Ok(m4 / (m2 * m2) - 3.0)
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population standard deviation.
pub fn std_dev(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let m = mean(values);
    (values.iter().map(|x| (x - m).powi(2)).sum::<f64>() / values.len() as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub gini: f64,
    /// `None` when every count is equal.
    pub skewness: Option<f64>,
    pub kurtosis_excess: Option<f64>,
}

impl MetricsReport {
    pub fn from_counts(values: &[f64]) -> Result<Self, MetricsError> {
        let gini = gini(values)?;
        let shape = |r: Result<f64, MetricsError>| match r {
            Ok(v) => Ok(Some(v)),
            Err(MetricsError::ZeroVariance | MetricsError::TooFew) => Ok(None),
            Err(e) => Err(e),
        };
        Ok(Self { gini, skewness: shape(skewness(values))?, kurtosis_excess: shape(kurtosis(values))? })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gini_examples() {
        assert_eq!(gini(&[5.0, 5.0, 5.0, 5.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(gini(&[1.0, 0.0, 0.0, 0.0]).unwrap(), 0.75, epsilon = 1e-12);
        assert_eq!(gini(&[0.0, 0.0]), Err(MetricsError::AllZero));
        assert_eq!(gini(&[]), Err(MetricsError::Empty));
        assert!(matches!(gini(&[1.0, -1.0]), Err(MetricsError::BadValue(_))));
    }

    #[test]
    fn shape_examples() {
        assert_abs_diff_eq!(skewness(&[1.0, 2.0, 3.0]).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(skewness(&[0.0, 0.0, 1.0]).unwrap(), 0.5f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(skewness(&[0.0, 1.0, 1.0]).unwrap(), -(0.5f64.sqrt()), epsilon = 1e-12);
        assert_abs_diff_eq!(kurtosis(&[0.0, 1.0, 0.0, 1.0]).unwrap(), -2.0, epsilon = 1e-12);
        assert!(kurtosis(&[0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]).unwrap() > 0.0);
        assert_eq!(skewness(&[4.0, 4.0, 4.0]), Err(MetricsError::ZeroVariance));
        assert_eq!(kurtosis(&[4.0]), Err(MetricsError::TooFew));
    }

    #[test]
    fn report_tolerates_flat_counts() {
        let r = MetricsReport::from_counts(&[3.0, 3.0, 3.0]).unwrap();
        assert_eq!(r.gini, 0.0);
        assert_eq!(r.skewness, None);
    }

    #[test]
    fn table_helpers() {
        let mut t = FrequencyTable::zeroed(Granularity::PerLabel, ["VL", "L", "M"]);
        t.increment(2);
        t.increment(2);
        t.increment(0);
        assert_eq!(t.total(), 3);
        assert_eq!(t.count_of("M"), Some(2));
        assert_eq!("per-participant".parse::<Granularity>().unwrap(), Granularity::PerParticipant);
        assert!("per-block".parse::<Granularity>().is_err());
    }
}
