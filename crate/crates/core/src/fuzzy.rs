//! Linguistic variables over the stake universe.
//!
//! A [`LinguisticVariable`] partitions `[lo, hi]` into an odd number of
//! triangular fuzzy sets whose degrees sum to one everywhere (a Ruspini
//! partition). Stakes are mapped to a single label with the
//! highest-membership-degree rule, see [`LinguisticVariable::hmdf`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance used for every comparison between membership degrees.
pub const DEGREE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FuzzyError {
    #[error("odd label count required (got {0}, need an odd number >= 3)")]
    LabelCount(usize),
    #[error("empty universe: lo ({lo}) must be strictly below hi ({hi})")]
    EmptyUniverse { lo: f64, hi: f64 },
    #[error("label and membership function counts differ ({labels} labels, {mfs} functions)")]
    Arity { labels: usize, mfs: usize },
    #[error("membership function {index} is malformed: need a <= b <= c, got ({a}, {b}, {c})")]
    Malformed { index: usize, a: f64, b: f64, c: f64 },
    #[error("peaks must be strictly increasing (function {index})")]
    PeakOrder { index: usize },
    #[error("partition does not sum to one at x = {x} (sum = {sum})")]
    NotRuspini { x: f64, sum: f64 },
    #[error("value {x} lies outside the universe [{lo}, {hi}]")]
    OutOfRange { x: f64, lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    ShoulderLeft,
    Interior,
    ShoulderRight,
}

/// Triangular membership function with feet `a`, `c` and peak `b`.
///
/// Shoulder shapes saturate at 1 on their outer flank.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MembershipFunction {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub shape: Shape,
}

impl MembershipFunction {
    pub fn new(a: f64, b: f64, c: f64, shape: Shape) -> Self {
        Self { a, b, c, shape }
    }

    pub fn is_well_formed(&self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite() && self.a <= self.b && self.b <= self.c
    }

    /// Degree of membership of `x`, always in `[0, 1]`.
    pub fn degree(&self, x: f64) -> f64 {
        let rising = |x: f64| {
            if x <= self.a {
                0.0
            } else if x >= self.b {
                1.0
            } else {
                (x - self.a) / (self.b - self.a)
            }
        };
        let falling = |x: f64| {
            if x <= self.b {
                1.0
            } else if x >= self.c {
                0.0
            } else {
                (self.c - x) / (self.c - self.b)
            }
        };
        let mu = match self.shape {
            Shape::ShoulderLeft => falling(x),
            Shape::ShoulderRight => rising(x),
            Shape::Interior => {
                if x == self.b {
                    1.0
                } else if x < self.b {
                    rising(x)
                } else {
                    falling(x)
                }
            }
        };
        mu.clamp(0.0, 1.0)
    }
}

/// Free function form of [`MembershipFunction::degree`].
pub fn membership(mf: &MembershipFunction, x: f64) -> f64 {
    mf.degree(x)
}

/// Result of classifying a stake: the winning label and its degree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelAssignment {
    /// Zero-based position of the label in the variable's ordered label list.
    pub label_index: usize,
    pub degree: f64,
}

/// Universe `[lo, hi]` with ordered labels and their membership functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinguisticVariable {
    name: String,
    labels: Vec<String>,
    lo: f64,
    hi: f64,
    mfs: Vec<MembershipFunction>,
}

pub(crate) fn check_label_count(n: usize) -> Result<(), FuzzyError> {
    if n < 3 || n.is_multiple_of(2) {
        return Err(FuzzyError::LabelCount(n));
    }
    Ok(())
}

impl LinguisticVariable {
    /// Evenly spaced peaks `lo + i (hi - lo) / (n - 1)`, shouldered at both ends.
    pub fn uniform<S: Into<String>>(
        name: impl Into<String>,
        labels: impl IntoIterator<Item = S>,
        lo: f64,
        hi: f64,
    ) -> Result<Self, FuzzyError> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let n = labels.len();
        check_label_count(n)?;
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(FuzzyError::EmptyUniverse { lo, hi });
        }
        let step = (hi - lo) / (n - 1) as f64;
        let peak = |i: usize| if i == n - 1 { hi } else { lo + i as f64 * step };
        let mfs = (0..n)
            .map(|i| {
                let b = peak(i);
                let a = if i == 0 { lo } else { peak(i - 1) };
                let c = if i == n - 1 { hi } else { peak(i + 1) };
                let shape = match i {
                    0 => Shape::ShoulderLeft,
                    i if i == n - 1 => Shape::ShoulderRight,
                    _ => Shape::Interior,
                };
                MembershipFunction::new(a, b, c, shape)
            })
            .collect();
        Ok(Self { name: name.into(), labels, lo, hi, mfs })
    }

    /// Builds a variable from explicit triples, which allows unbalanced labels.
    ///
    /// The first function is treated as a left shoulder and the last as a
    /// right shoulder regardless of the supplied shape. The partition must
    /// sum to one across `[lo, hi]`.
    pub fn from_functions<S: Into<String>>(
        name: impl Into<String>,
        labels: impl IntoIterator<Item = S>,
        lo: f64,
        hi: f64,
        triples: &[(f64, f64, f64)],
    ) -> Result<Self, FuzzyError> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let n = labels.len();
        check_label_count(n)?;
        if triples.len() != n {
            return Err(FuzzyError::Arity { labels: n, mfs: triples.len() });
        }
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(FuzzyError::EmptyUniverse { lo, hi });
        }
        let mut mfs = Vec::with_capacity(n);
        for (index, &(a, b, c)) in triples.iter().enumerate() {
            let shape = match index {
                0 => Shape::ShoulderLeft,
                i if i == n - 1 => Shape::ShoulderRight,
                _ => Shape::Interior,
            };
            let mf = MembershipFunction::new(a, b, c, shape);
            if !mf.is_well_formed() {
                return Err(FuzzyError::Malformed { index, a, b, c });
            }
            if index > 0 && b <= triples[index - 1].1 {
                return Err(FuzzyError::PeakOrder { index });
            }
            mfs.push(mf);
        }
        let var = Self { name: name.into(), labels, lo, hi, mfs };
        var.check_ruspini()?;
        Ok(var)
    }

    /// The sum of piecewise-linear degrees is itself piecewise linear, so
    /// checking every breakpoint inside the universe covers the interval.
    fn check_ruspini(&self) -> Result<(), FuzzyError> {
        let mut points = vec![self.lo, self.hi];
        for mf in &self.mfs {
            points.extend([mf.a, mf.b, mf.c]);
        }
        for x in points.into_iter().filter(|x| (self.lo..=self.hi).contains(x)) {
            let sum = self.degrees(x).iter().sum::<f64>();
            if (sum - 1.0).abs() > DEGREE_TOLERANCE {
                return Err(FuzzyError::NotRuspini { x, sum });
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn functions(&self) -> &[MembershipFunction] {
        &self.mfs
    }

    pub fn peaks(&self) -> Vec<f64> {
        self.mfs.iter().map(|mf| mf.b).collect()
    }

    pub fn degrees(&self, x: f64) -> Vec<f64> {
        self.mfs.iter().map(|mf| mf.degree(x)).collect()
    }

    /// Highest membership degree function. Ties within [`DEGREE_TOLERANCE`]
    /// go to the lowest label index.
    pub fn hmdf(&self, x: f64) -> Result<LabelAssignment, FuzzyError> {
        if !(self.lo..=self.hi).contains(&x) {
            return Err(FuzzyError::OutOfRange { x, lo: self.lo, hi: self.hi });
        }
        let mut best = LabelAssignment { label_index: 0, degree: self.mfs[0].degree(x) };
        for (i, mf) in self.mfs.iter().enumerate().skip(1) {
            let d = mf.degree(x);
            if d > best.degree + DEGREE_TOLERANCE {
                best = LabelAssignment { label_index: i, degree: d };
            }
        }
        Ok(best)
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }

    /// Classifies after clamping into the universe, so it never fails.
    pub fn classify(&self, stake: f64) -> LabelAssignment {
        self.hmdf(self.clamp(stake))
            .expect("clamped value always lies inside the universe")
    }

    /// Scaling phase: one assignment per stake, order preserved.
    pub fn scale_stakes(&self, stakes: &[f64]) -> Vec<LabelAssignment> {
        stakes.iter().map(|&x| self.classify(x)).collect()
    }

    /// Interval of stakes classified to `index`. The left end is open except
    /// for the first label; crossovers sit halfway between adjacent peaks.
    pub fn dominant_interval(&self, index: usize) -> (f64, f64) {
        let n = self.len();
        let peaks = self.peaks();
        let left = if index == 0 { self.lo } else { 0.5 * (peaks[index - 1] + peaks[index]) };
        let right = if index == n - 1 { self.hi } else { 0.5 * (peaks[index] + peaks[index + 1]) };
        (left, right)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const FIVE: [&str; 5] = ["VL", "L", "M", "H", "VH"];

    fn five() -> LinguisticVariable {
        LinguisticVariable::uniform("stake", FIVE, 0.0, 10.0).unwrap()
    }

    #[test]
    fn uniform_peaks() {
        assert_eq!(five().peaks(), vec![0.0, 2.5, 5.0, 7.5, 10.0]);
        let v = five();
        assert_eq!(v.functions()[0].shape, Shape::ShoulderLeft);
        assert_eq!(v.functions()[4].shape, Shape::ShoulderRight);
        assert_eq!(v.functions()[2], MembershipFunction::new(2.5, 5.0, 7.5, Shape::Interior));
    }

    #[test]
    fn rejects_even_or_short_label_lists() {
        let err = LinguisticVariable::uniform("s", ["A", "B", "C", "D"], 0.0, 10.0).unwrap_err();
        assert!(err.to_string().contains("odd label count required"));
        assert!(LinguisticVariable::uniform("s", ["A"], 0.0, 10.0).is_err());
        assert!(LinguisticVariable::uniform("s", Vec::<String>::new(), 0.0, 10.0).is_err());
    }

    #[test]
    fn rejects_empty_universe() {
        assert!(matches!(
            LinguisticVariable::uniform("s", FIVE, 3.0, 3.0),
            Err(FuzzyError::EmptyUniverse { .. })
        ));
        assert!(LinguisticVariable::uniform("s", FIVE, 4.0, 1.0).is_err());
    }

    #[test]
    fn triangular_cases() {
        let mf = MembershipFunction::new(0.0, 2.5, 5.0, Shape::Interior);
        assert_eq!(mf.degree(2.5), 1.0);
        assert_abs_diff_eq!(mf.degree(1.25), 0.5, epsilon = 1e-12);
        assert_eq!(mf.degree(6.0), 0.0);
        assert_eq!(mf.degree(-1.0), 0.0);
        assert_abs_diff_eq!(membership(&mf, 3.75), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn shoulders_saturate() {
        let left = MembershipFunction::new(0.0, 0.0, 2.5, Shape::ShoulderLeft);
        assert_eq!(left.degree(-5.0), 1.0);
        assert_eq!(left.degree(0.0), 1.0);
        let right = MembershipFunction::new(7.5, 10.0, 10.0, Shape::ShoulderRight);
        assert_eq!(right.degree(10.0), 1.0);
        assert_eq!(right.degree(25.0), 1.0);
        assert_abs_diff_eq!(right.degree(8.75), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn hmdf_examples() {
        let v = five();
        assert_eq!(v.hmdf(0.0).unwrap(), LabelAssignment { label_index: 0, degree: 1.0 });
        let six = v.hmdf(6.0).unwrap();
        assert_eq!(six.label_index, 2);
        assert_abs_diff_eq!(six.degree, 0.6, epsilon = 1e-12);
        // crossover between L and M goes to L
        let tie = v.hmdf(3.75).unwrap();
        assert_eq!(tie.label_index, 1);
        assert_abs_diff_eq!(tie.degree, 0.5, epsilon = 1e-12);
        assert!(matches!(v.hmdf(10.5), Err(FuzzyError::OutOfRange { .. })));
        assert!(v.hmdf(-0.1).is_err());
    }

    #[test]
    fn scaling_phase() {
        let v = five();
        let labels: Vec<_> = v.scale_stakes(&[0.0, 6.0, 10.0]).iter().map(|a| a.label_index).collect();
        assert_eq!(labels, vec![0, 2, 4]);
        assert!(v.scale_stakes(&[]).is_empty());
        assert_eq!(v.scale_stakes(&[12.0])[0], LabelAssignment { label_index: 4, degree: 1.0 });
    }

    #[test]
    fn explicit_unbalanced_partition() {
        let v = LinguisticVariable::from_functions(
            "stake",
            ["low", "mid", "high"],
            0.0,
            10.0,
            &[(0.0, 0.0, 2.0), (0.0, 2.0, 10.0), (2.0, 10.0, 10.0)],
        )
        .unwrap();
        assert_eq!(v.hmdf(1.5).unwrap().label_index, 1);
        assert_eq!(v.dominant_interval(1), (1.0, 6.0));
        assert_eq!(v.hmdf(6.5).unwrap().label_index, 2);

        let gap = LinguisticVariable::from_functions(
            "stake",
            ["low", "mid", "high"],
            0.0,
            10.0,
            &[(0.0, 0.0, 2.0), (3.0, 5.0, 7.0), (5.0, 10.0, 10.0)],
        );
        assert!(matches!(gap, Err(FuzzyError::NotRuspini { .. })));
    }

    #[test]
    fn dominant_intervals_tile_the_universe() {
        let v = five();
        assert_eq!(v.dominant_interval(0), (0.0, 1.25));
        assert_eq!(v.dominant_interval(2), (3.75, 6.25));
        assert_eq!(v.dominant_interval(4), (8.75, 10.0));
    }

    #[test]
    fn serde_round_trip() {
        let v = five();
        let json = serde_json::to_string(&v).unwrap();
        let back: LinguisticVariable = serde_json::from_str(&json).unwrap();
        assert_eq!(v, back);
    }
}
