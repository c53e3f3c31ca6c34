//! Confusion counts, F-beta, the two baselines and ROC curves.
//!
//! Every rate is an exact fraction. When a numerator and its denominator are
//! both zero the rate is zero, so baselines stay defined on empty folds.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::corpus::LabeledCorpus;
use crate::error::{Error, Result};
use crate::predictor::WordIndex;
use crate::ranking::DangerousWordList;
use crate::rational::{ratio, round3, Rational};
use crate::splitter::SplitOptions;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn positives(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> u64 {
        self.fp + self.tn
    }

    pub fn total(&self) -> u64 {
        self.positives() + self.negatives()
    }
}

impl std::ops::Add for ConfusionCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        ConfusionCounts {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
            tn: self.tn + o.tn,
        }
    }
}

pub fn precision(c: &ConfusionCounts) -> Rational {
    ratio(c.tp, c.tp + c.fp)
}

pub fn recall(c: &ConfusionCounts) -> Rational {
    ratio(c.tp, c.tp + c.fn_)
}

/// `(1+β²)·TP / ((1+β²)·TP + β²·FN + FP)`, zero when TP is zero.
pub fn f_beta(c: &ConfusionCounts, beta: Rational) -> Rational {
    if c.tp == 0 {
        return ratio(0, 1);
    }
    let beta2 = beta * beta;
    let one_plus = Rational::from_integer(1) + beta2;
    let tp = Rational::from_integer(c.tp);
    let weighted_tp = one_plus * tp;
    weighted_tp / (weighted_tp + beta2 * Rational::from_integer(c.fn_) + Rational::from_integer(c.fp))
}

/// F₂ in its integer form `5TP / (5TP + 4FN + FP)`.
pub fn f2(c: &ConfusionCounts) -> Rational {
    ratio(5 * c.tp, 5 * c.tp + 4 * c.fn_ + c.fp)
}

pub fn f1(c: &ConfusionCounts) -> Rational {
    ratio(2 * c.tp, 2 * c.tp + c.fn_ + c.fp)
}

/// F₂ of the predictor that calls everything vulnerable: `5V / (5V + B)`.
pub fn all_vulnerable_f2(vulnerable: u64, benign: u64) -> Rational {
    ratio(5 * vulnerable, 5 * vulnerable + benign)
}

/// Expected F₂ of a fair coin flip on data with vulnerable fraction `p`:
/// `2.5p / (4p + 0.5)`.
pub fn random_baseline_f2(p: Rational) -> Result<Rational> {
    if p > Rational::from_integer(1) {
        return Err(Error::Config(format!("vulnerable fraction {p} exceeds 1")));
    }
    // 2.5p / (4p + 0.5) == 5p / (8p + 1)
    let five_p = Rational::from_integer(5) * p;
    Ok(five_p / (Rational::from_integer(8) * p + Rational::from_integer(1)))
}

/// The JSON shape of one evaluation's metrics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsSummary {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub f2: f64,
}

impl From<&ConfusionCounts> for MetricsSummary {
    fn from(c: &ConfusionCounts) -> Self {
        MetricsSummary {
            tp: c.tp,
            fp: c.fp,
            fn_: c.fn_,
            tn: c.tn,
            precision: round3(&precision(c)),
            recall: round3(&recall(c)),
            f1: round3(&f1(c)),
            f2: round3(&f2(c)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RocPoint {
    #[serde(with = "crate::rational::serde_fraction")]
    pub threshold: Rational,
    #[serde(with = "crate::rational::serde_fraction")]
    pub tpr: Rational,
    #[serde(with = "crate::rational::serde_fraction")]
    pub fpr: Rational,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RocCurve {
    pub cutoff: usize,
    pub points: Vec<RocPoint>,
}

/// Threshold sweep at a fixed cutoff, ordered from the highest threshold to
/// the lowest.
///
/// A threshold of zero is never classified: it is either dropped or, when
/// `include_endpoint` is set, replaced by the degenerate all-vulnerable
/// anchor `(1, 1)`.
pub fn roc(
    dangerous: &DangerousWordList,
    cutoff: usize,
    corpus: &LabeledCorpus,
    thresholds: &[Rational],
    include_endpoint: bool,
    split: SplitOptions,
) -> Result<RocCurve> {
    if cutoff == 0 {
        return Err(Error::Config("ROC cutoff must be at least 1".into()));
    }
    if corpus.vulnerable().is_empty() || corpus.benign().is_empty() {
        return Err(Error::Config(format!(
            "ROC rates are undefined for `{}`: it needs both vulnerable and benign names",
            corpus.source_label()
        )));
    }
    let index = WordIndex::new(dangerous);
    let profiles: Vec<_> = corpus
        .iter()
        .map(|(name, label)| (index.profile(name, split), label))
        .collect();

    let ordered: BTreeSet<Rational> = thresholds.iter().copied().collect();
    let zero = ratio(0, 1);
    let mut points = Vec::with_capacity(ordered.len() + 1);
    for &threshold in ordered.iter().rev() {
        if threshold == zero {
            continue;
        }
        let mut counts = ConfusionCounts::default();
        for (profile, label) in &profiles {
            let predicted = profile.percentage(cutoff) > threshold;
            tally(&mut counts, *label, predicted);
        }
        points.push(RocPoint {
            threshold,
            tpr: recall(&counts),
            fpr: ratio(counts.fp, counts.fp + counts.tn),
        });
    }
    if include_endpoint {
        points.push(RocPoint {
            threshold: zero,
            tpr: ratio(1, 1),
            fpr: ratio(1, 1),
        });
    }
    Ok(RocCurve { cutoff, points })
}

pub(crate) fn tally(counts: &mut ConfusionCounts, label: crate::corpus::Label, predicted: bool) {
    use crate::corpus::Label::*;
    match (label, predicted) {
        (Vulnerable, true) => counts.tp += 1,
        (Vulnerable, false) => counts.fn_ += 1,
        (Benign, true) => counts.fp += 1,
        (Benign, false) => counts.tn += 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(tp: u64, fp: u64, fn_: u64, tn: u64) -> ConfusionCounts {
        ConfusionCounts { tp, fp, fn_, tn }
    }

    #[test]
    fn precision_and_recall() {
        assert_eq!(precision(&counts(5, 5, 0, 0)), ratio(1, 2));
        assert_eq!(precision(&counts(0, 0, 3, 3)), ratio(0, 1));
        assert_eq!(recall(&counts(75, 0, 0, 0)), ratio(1, 1));
        assert_eq!(recall(&counts(0, 4, 0, 0)), ratio(0, 1));
    }

    #[test]
    fn f_beta_values() {
        let two = Rational::from_integer(2);
        assert_eq!(f_beta(&counts(75, 522, 0, 0), two), ratio(375, 897));
        assert_eq!(f_beta(&counts(0, 3, 3, 0), two), ratio(0, 1));
        // P = R = 1/2, so the harmonic mean is 1/2.
        assert_eq!(f_beta(&counts(10, 10, 10, 0), Rational::from_integer(1)), ratio(1, 2));
        assert_eq!(f_beta(&counts(3, 7, 2, 1), two), f2(&counts(3, 7, 2, 1)));
        assert_eq!(
            f_beta(&counts(3, 7, 2, 1), Rational::from_integer(1)),
            f1(&counts(3, 7, 2, 1))
        );
    }

    #[test]
    fn all_vulnerable() {
        assert_eq!(round3(&all_vulnerable_f2(31, 491)), 0.240);
        assert_eq!(all_vulnerable_f2(5, 0), ratio(1, 1));
        assert_eq!(all_vulnerable_f2(0, 5), ratio(0, 1));
    }

    #[test]
    fn random_baseline() {
        assert_eq!(round3(&random_baseline_f2(ratio(72, 1000)).unwrap()), 0.228);
        assert_eq!(round3(&random_baseline_f2(ratio(16, 1000)).unwrap()), 0.071);
        assert_eq!(random_baseline_f2(ratio(0, 1)).unwrap(), ratio(0, 1));
        assert!(random_baseline_f2(ratio(3, 2)).is_err());
    }

    #[test]
    fn summary_rounds_to_three_places() {
        let s = MetricsSummary::from(&counts(75, 522, 0, 0));
        assert_eq!(s.f2, 0.418);
        assert_eq!(s.recall, 1.0);
    }
}
