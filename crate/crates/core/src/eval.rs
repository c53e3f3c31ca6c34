//! Cross-validation: tune on each training split, test on the held-out
//! split, and report metrics next to the two baselines.

use std::fmt::Write as _;

use serde::Serialize;

use crate::corpus::{FoldKind, FoldPlan};
use crate::error::Result;
use crate::metrics::{all_vulnerable_f2, f2, random_baseline_f2, MetricsSummary};
use crate::model::InputDigest;
use crate::predictor::classify_corpus;
use crate::ranking::{MinScorePolicy, TermScoreTable};
use crate::rational::{format_exact, ratio, round3, to_f64};
use crate::tuner::{search_weights, tune_external, TuneConfig, TuneResult};

/// How each fold's dangerous-word list is produced.
#[derive(Debug, Clone)]
pub enum Ranker {
    /// Frequency scoring with a weight search over the tuning grid.
    Frequency { policy: MinScorePolicy },
    /// Precomputed external term scores.
    External {
        scores: TermScoreTable,
        policy: MinScorePolicy,
    },
}

impl Ranker {
    pub fn tune(&self, train: &crate::corpus::LabeledCorpus, config: &TuneConfig) -> Result<TuneResult> {
        match self {
            Ranker::Frequency { policy } => search_weights(train, *policy, config),
            Ranker::External { scores, policy } => tune_external(scores, train, *policy, config),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassSizes {
    pub vulnerable: usize,
    pub benign: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldResult {
    pub fold: usize,
    pub test_label: String,
    pub train: ClassSizes,
    pub test: ClassSizes,
    pub weight: Option<String>,
    pub cutoff: usize,
    pub threshold: String,
    pub dangerous_count: usize,
    pub train_f2: f64,
    pub top_words: Vec<String>,
    pub metrics: MetricsSummary,
    /// F₂ of calling every test name vulnerable.
    pub all_vulnerable_f2: f64,
    /// Expected F₂ of a coin flip on the test fold.
    pub random_f2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanSummary {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub f2: f64,
    pub train_f2: f64,
    pub dangerous_count: f64,
    pub all_vulnerable_f2: f64,
    pub random_f2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub protocol: FoldKind,
    pub folds: Vec<FoldResult>,
    pub mean: MeanSummary,
}

/// Number of top-ranked words recorded per fold.
pub const TOP_WORDS: usize = 10;

pub fn run_eval(plan: &FoldPlan, ranker: &Ranker, config: &TuneConfig) -> Result<EvalReport> {
    let mut folds = Vec::with_capacity(plan.folds.len());
    for (i, fold) in plan.folds.iter().enumerate() {
        let tuned = ranker.tune(&fold.train, config)?;
        let (_, counts) = classify_corpus(&fold.test, &tuned.model);
        let v = fold.test.vulnerable().len() as u64;
        let b = fold.test.benign().len() as u64;
        let list = tuned.model.dangerous();
        folds.push(FoldResult {
            fold: i + 1,
            test_label: fold.test.source_label().to_string(),
            train: ClassSizes {
                vulnerable: fold.train.vulnerable().len(),
                benign: fold.train.benign().len(),
            },
            test: ClassSizes {
                vulnerable: v as usize,
                benign: b as usize,
            },
            weight: tuned.weight().map(|w| w.to_string()),
            cutoff: tuned.model.cutoff(),
            threshold: format_exact(&tuned.model.threshold()),
            dangerous_count: list.len(),
            train_f2: round3(&tuned.train_f2),
            top_words: list.terms().take(TOP_WORDS).map(String::from).collect(),
            metrics: MetricsSummary::from(&counts),
            all_vulnerable_f2: round3(&all_vulnerable_f2(v, b)),
            random_f2: round3(&random_baseline_f2(ratio(v, v + b))?),
        });
        log::info!(
            "fold {}: F2 {:.3} (train {:.3})",
            i + 1,
            to_f64(&f2(&counts)),
            to_f64(&tuned.train_f2)
        );
    }

    let n = folds.len().max(1) as f64;
    let mean = |f: &dyn Fn(&FoldResult) -> f64| ((folds.iter().map(f).sum::<f64>() / n) * 1000.0).round() / 1000.0;
    let summary = MeanSummary {
        precision: mean(&|r| r.metrics.precision),
        recall: mean(&|r| r.metrics.recall),
        f1: mean(&|r| r.metrics.f1),
        f2: mean(&|r| r.metrics.f2),
        train_f2: mean(&|r| r.train_f2),
        dangerous_count: mean(&|r| r.dangerous_count as f64),
        all_vulnerable_f2: mean(&|r| r.all_vulnerable_f2),
        random_f2: mean(&|r| r.random_f2),
    };
    Ok(EvalReport {
        protocol: plan.kind.clone(),
        folds,
        mean: summary,
    })
}

/// Everything a report embeds besides its results.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportHeader {
    pub tool: String,
    pub config: serde_json::Value,
    pub inputs: Vec<InputDigest>,
}

#[derive(Serialize)]
struct ReportDoc<'a> {
    #[serde(flatten)]
    header: &'a ReportHeader,
    #[serde(flatten)]
    report: &'a EvalReport,
}

impl EvalReport {
    pub fn to_json(&self, header: &ReportHeader) -> Result<String> {
        let mut s = serde_json::to_string_pretty(&ReportDoc { header, report: self })?;
        s.push('\n');
        Ok(s)
    }

    /// One row per fold plus a final `mean` row.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "fold",
            "test",
            "test_vulnerable",
            "test_benign",
            "weight",
            "cutoff",
            "threshold",
            "dangerous_count",
            "train_f2",
            "tp",
            "fp",
            "fn",
            "tn",
            "precision",
            "recall",
            "f1",
            "f2",
            "all_vulnerable_f2",
            "random_f2",
        ])?;
        let f = |x: f64| format!("{x:.3}");
        for r in &self.folds {
            w.write_record([
                r.fold.to_string(),
                r.test_label.clone(),
                r.test.vulnerable.to_string(),
                r.test.benign.to_string(),
                r.weight.clone().unwrap_or_else(|| "external".into()),
                r.cutoff.to_string(),
                r.threshold.clone(),
                r.dangerous_count.to_string(),
                f(r.train_f2),
                r.metrics.tp.to_string(),
                r.metrics.fp.to_string(),
                r.metrics.fn_.to_string(),
                r.metrics.tn.to_string(),
                f(r.metrics.precision),
                f(r.metrics.recall),
                f(r.metrics.f1),
                f(r.metrics.f2),
                f(r.all_vulnerable_f2),
                f(r.random_f2),
            ])?;
        }
        let m = &self.mean;
        let mut row = vec!["mean".to_string()];
        row.extend(std::iter::repeat_n(String::new(), 7));
        row.push(f(m.train_f2));
        row.extend(std::iter::repeat_n(String::new(), 4));
        row.extend([m.precision, m.recall, m.f1, m.f2, m.all_vulnerable_f2, m.random_f2].map(f));
        w.write_record(&row)?;
        let bytes = w
            .into_inner()
            .map_err(|e| crate::error::Error::io("<csv>", e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    /// Compact human-readable summary.
    pub fn summary_text(&self) -> String {
        let mut s = String::new();
        for r in &self.folds {
            let _ = writeln!(
                s,
                "fold {:>2} {:<24} F2 {:.3}  all-vulnerable {:.3}  random {:.3}",
                r.fold, r.test_label, r.metrics.f2, r.all_vulnerable_f2, r.random_f2
            );
        }
        let _ = writeln!(
            s,
            "mean        {:<24} F2 {:.3}  all-vulnerable {:.3}  random {:.3}",
            "", self.mean.f2, self.mean.all_vulnerable_f2, self.mean.random_f2
        );
        s
    }
}
