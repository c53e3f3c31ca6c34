//! Classification of names against a tuned dangerous-word list.

use std::collections::{BTreeSet, HashMap};
use std::io::Write;

use rayon::prelude::*;

use crate::corpus::{Label, LabeledCorpus};
use crate::error::{Error, Result};
use crate::metrics::{tally, ConfusionCounts};
use crate::ranking::DangerousWordList;
use crate::rational::{format_exact, ratio, round3, Rational};
use crate::splitter::{identifier_terms, SplitOptions};

/// A deployable predictor: the ranked list plus the cutoff and threshold
/// chosen on training data.
#[derive(Debug, Clone, PartialEq)]
pub struct TunedModel {
    dangerous: DangerousWordList,
    cutoff: usize,
    threshold: Rational,
    split: SplitOptions,
}

impl TunedModel {
    /// `cutoff` must lie in `1..=dangerous.len()`, or be 0 for an empty list.
    /// `threshold` must lie in `[0, 1]`.
    pub fn new(dangerous: DangerousWordList, cutoff: usize, threshold: Rational, split: SplitOptions) -> Result<Self> {
        if threshold > ratio(1, 1) {
            return Err(Error::Model(format!(
                "threshold {} is outside [0, 1]",
                format_exact(&threshold)
            )));
        }
        let ok = if dangerous.is_empty() {
            cutoff == 0
        } else {
            (1..=dangerous.len()).contains(&cutoff)
        };
        if !ok {
            return Err(Error::Model(format!(
                "cutoff {cutoff} does not fit a list of {} words",
                dangerous.len()
            )));
        }
        Ok(TunedModel {
            dangerous,
            cutoff,
            threshold,
            split,
        })
    }

    pub fn dangerous(&self) -> &DangerousWordList {
        &self.dangerous
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn threshold(&self) -> Rational {
        self.threshold
    }

    pub fn split_options(&self) -> SplitOptions {
        self.split
    }

    /// The words actually used for classification.
    pub fn active_words(&self) -> BTreeSet<&str> {
        self.dangerous
            .prefix(self.cutoff)
            .iter()
            .map(|w| w.term.as_str())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub identifier: String,
    pub label: Label,
    /// Fraction of the name's distinct terms that are active dangerous words.
    pub percentage: Rational,
    pub matched_terms: BTreeSet<String>,
}

/// Classifies one name: vulnerable iff the fraction of its distinct terms
/// found among the first `cutoff` dangerous words strictly exceeds the
/// threshold. A name with no terms scores 0 and is benign.
pub fn classify(identifier: &str, model: &TunedModel) -> Prediction {
    classify_with(identifier, model, &model.active_words())
}

fn classify_with(identifier: &str, model: &TunedModel, active: &BTreeSet<&str>) -> Prediction {
    let terms = identifier_terms(identifier, model.split);
    let matched_terms: BTreeSet<String> = terms.iter().filter(|t| active.contains(t.as_str())).cloned().collect();
    let percentage = ratio(matched_terms.len() as u64, terms.len() as u64);
    let label = if percentage > model.threshold {
        Label::Vulnerable
    } else {
        Label::Benign
    };
    Prediction {
        identifier: identifier.to_string(),
        label,
        percentage,
        matched_terms,
    }
}

/// Classifies a batch of unlabeled names, preserving input order.
pub fn classify_names<S: AsRef<str> + Sync>(names: &[S], model: &TunedModel) -> Vec<Prediction> {
    let active = model.active_words();
    names
        .par_iter()
        .map(|n| classify_with(n.as_ref(), model, &active))
        .collect()
}

/// Classifies every name of a labeled corpus and tallies the confusion
/// counts against its labels. Predictions come back in corpus order.
pub fn classify_corpus(corpus: &LabeledCorpus, model: &TunedModel) -> (Vec<Prediction>, ConfusionCounts) {
    let items: Vec<(&String, Label)> = corpus.iter().collect();
    let active = model.active_words();
    let predictions: Vec<Prediction> = items
        .par_iter()
        .map(|(name, _)| classify_with(name, model, &active))
        .collect();
    let mut counts = ConfusionCounts::default();
    for ((_, truth), p) in items.iter().zip(&predictions) {
        tally(&mut counts, *truth, p.label == Label::Vulnerable);
    }
    (predictions, counts)
}

/// Writes `name,label,percentage,matched_terms`; matched terms are joined
/// with `;`.
pub fn write_predictions_csv<W: Write>(predictions: &[Prediction], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["name", "label", "percentage", "matched_terms"])?;
    for p in predictions {
        let matched: Vec<&str> = p.matched_terms.iter().map(String::as_str).collect();
        w.write_record([
            p.identifier.as_str(),
            p.label.as_str(),
            &format!("{:.3}", round3(&p.percentage)),
            &matched.join(";"),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// Rank position of every dangerous word, for evaluating many cutoffs at
/// once.
pub(crate) struct WordIndex<'a> {
    positions: HashMap<&'a str, usize>,
}

/// A name reduced to the sorted list positions of its dangerous terms.
#[derive(Debug, Clone)]
pub(crate) struct NameProfile {
    pub positions: Vec<usize>,
    pub term_count: usize,
}

impl<'a> WordIndex<'a> {
    pub fn new(list: &'a DangerousWordList) -> Self {
        WordIndex {
            positions: list
                .words
                .iter()
                .enumerate()
                .map(|(i, w)| (w.term.as_str(), i))
                .collect(),
        }
    }

    pub fn profile(&self, name: &str, split: SplitOptions) -> NameProfile {
        let terms = identifier_terms(name, split);
        let mut positions: Vec<usize> = terms
            .iter()
            .filter_map(|t| self.positions.get(t.as_str()).copied())
            .collect();
        positions.sort_unstable();
        NameProfile {
            positions,
            term_count: terms.len(),
        }
    }
}

impl NameProfile {
    pub fn matches(&self, cutoff: usize) -> usize {
        self.positions.partition_point(|&p| p < cutoff)
    }

    pub fn percentage(&self, cutoff: usize) -> Rational {
        ratio(self.matches(cutoff) as u64, self.term_count as u64)
    }
}
