//! Featherweight prediction of potentially vulnerable functions from the
//! words in their names.
//!
//! The pipeline splits training function names into terms, scores each term
//! by how often it appears in vulnerable versus benign names, ranks the terms
//! into a dangerous-word list and tunes two knobs on the training data: how
//! many top words to use (the cutoff) and what fraction of a name's terms
//! must be dangerous (the threshold). A name is then predicted vulnerable
//! when the fraction of its terms found in the top of the list strictly
//! exceeds the threshold.
//!
//! ```
//! use favd::{clean, search_weights, classify, Label, MinScorePolicy, RawLists, TuneConfig};
//!
//! let raw = RawLists {
//!     vulnerable: vec!["png_read_chunk".into(), "png_handle_x".into(), "png_do_y".into()],
//!     benign: vec!["image_init".into(), "read_gamma".into(), "set_z".into()],
//!     source_label: "demo".into(),
//! };
//! let corpus = clean(&raw)?;
//! let tuned = search_weights(&corpus, MinScorePolicy::AtLeast(0.0), &TuneConfig::default())?;
//! assert_eq!(classify("png_write_q", &tuned.model).label, Label::Vulnerable);
//! # Ok::<(), favd::Error>(())
//! ```
//!
//! The `book/` directory of the repository walks through each stage; its
//! code listings are compiled and run as doctests of this crate.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod harvest;
pub mod metrics;
pub mod model;
pub mod predictor;
pub mod ranking;
pub mod rational;
pub mod splitter;
pub mod synth;
pub mod tuner;

pub use corpus::{
    clean, corpus_stats, load_csv, load_lists, make_kfold, make_leave_one_out, Fold, FoldKind, FoldPlan, Label,
    LabeledCorpus, RawLists,
};
pub use error::{Error, Result};
pub use metrics::{
    all_vulnerable_f2, f2, f_beta, precision, random_baseline_f2, recall, roc, ConfusionCounts, RocCurve,
};
pub use model::ModelFile;
pub use predictor::{classify, classify_corpus, Prediction, TunedModel};
pub use ranking::{
    load_external_scores, rank, score_frequency, DangerousWordList, MinScorePolicy, ScoreOrigin, TermScoreTable, Weight,
};
pub use rational::{ratio, Rational};
pub use splitter::{split, split_with, unique_terms, SplitOptions};
pub use tuner::{find_best, search_weights, train_upper_bound, SearchGrid, SearchMode, TuneConfig, TuneResult};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/splitting.md")]
    mod splitting {}
    #[doc = include_str!("../../../book/src/ranking.md")]
    mod ranking {}
    #[doc = include_str!("../../../book/src/prediction.md")]
    mod prediction {}
    #[doc = include_str!("../../../book/src/tuning.md")]
    mod tuning {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/external-scores.md")]
    mod external_scores {}
}
