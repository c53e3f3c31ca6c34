//! Term dangerousness scores and the ranked dangerous-word list.
//!
//! Two score sources feed the same ranking step:
//!
//! * frequency scoring, where each vulnerable training name adds `plus` to
//!   each of its distinct terms and each benign name subtracts `minus`;
//! * an external per-term scorer producing values in `[0, 1]`, read from a
//!   `term,score` file or supplied through [`TermScorer`].

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::LabeledCorpus;
use crate::error::{Error, Result};
use crate::splitter::{identifier_terms, SplitOptions};

/// The `plus–minus` pair used by frequency scoring. Both parts are at least 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "WeightRepr", into = "WeightRepr")]
pub struct Weight {
    plus: u32,
    minus: u32,
}

#[derive(Serialize, Deserialize)]
struct WeightRepr {
    plus: u32,
    minus: u32,
}

impl TryFrom<WeightRepr> for Weight {
    type Error = Error;

    fn try_from(r: WeightRepr) -> Result<Self> {
        Weight::new(r.plus, r.minus)
    }
}

impl From<Weight> for WeightRepr {
    fn from(w: Weight) -> Self {
        WeightRepr {
            plus: w.plus,
            minus: w.minus,
        }
    }
}

impl Weight {
    pub fn new(plus: u32, minus: u32) -> Result<Self> {
        if plus == 0 || minus == 0 {
            return Err(Error::Config(format!(
                "weight parts must be positive, got {plus}-{minus}"
            )));
        }
        Ok(Weight { plus, minus })
    }

    pub fn plus(&self) -> u32 {
        self.plus
    }

    pub fn minus(&self) -> u32 {
        self.minus
    }

    /// `{1,2,3,4,5,10}²` followed by the extremes `1-1000` and `1000-1`.
    pub fn default_grid() -> Vec<Weight> {
        const STEPS: [u32; 6] = [1, 2, 3, 4, 5, 10];
        let mut grid: Vec<Weight> = STEPS
            .iter()
            .flat_map(|&p| STEPS.iter().map(move |&m| Weight { plus: p, minus: m }))
            .collect();
        grid.push(Weight { plus: 1, minus: 1000 });
        grid.push(Weight { plus: 1000, minus: 1 });
        grid
    }

    /// Parses a comma-separated list such as `1-1,3-2,1000-1`, or `default`.
    pub fn parse_grid(text: &str) -> Result<Vec<Weight>> {
        if text.trim() == "default" {
            return Ok(Weight::default_grid());
        }
        let grid = text
            .split(',')
            .map(|s| s.trim().parse())
            .collect::<Result<Vec<Weight>>>()?;
        if grid.is_empty() {
            return Err(Error::Config("empty weight grid".into()));
        }
        Ok(grid)
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.plus, self.minus)
    }
}

impl FromStr for Weight {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("weight `{s}` is not of the form PLUS-MINUS"));
        let (p, m) = s.split_once('-').ok_or_else(bad)?;
        Weight::new(
            p.trim().parse().map_err(|_| bad())?,
            m.trim().parse().map_err(|_| bad())?,
        )
    }
}

/// Where a score table came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreOrigin {
    Frequency(Weight),
    External { source: String },
}

/// A term's score. Frequency scores are integers; external scores lie in
/// `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Score {
    Count(i64),
    Unit(f64),
}

impl Score {
    pub fn value(&self) -> f64 {
        match *self {
            Score::Count(c) => c as f64,
            Score::Unit(u) => u,
        }
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Score::Count(c) => write!(f, "{c}"),
            Score::Unit(u) => write!(f, "{u}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermScore {
    pub score: Score,
    /// Number of vulnerable training names containing the term (frequency
    /// origin only; zero otherwise).
    pub vulnerable_hits: u64,
    pub benign_hits: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TermScoreTable {
    pub origin: ScoreOrigin,
    pub scores: BTreeMap<String, TermScore>,
}

impl TermScoreTable {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn get(&self, term: &str) -> Option<&TermScore> {
        self.scores.get(term)
    }

    /// Keeps only the given terms, e.g. the vocabulary of a training corpus.
    pub fn restrict_to(&self, terms: &BTreeSet<String>) -> TermScoreTable {
        TermScoreTable {
            origin: self.origin.clone(),
            scores: self
                .scores
                .iter()
                .filter(|(t, _)| terms.contains(*t))
                .map(|(t, s)| (t.clone(), *s))
                .collect(),
        }
    }
}

/// Frequency scores over a training corpus. A name contributes each of its
/// distinct terms once.
pub fn score_frequency(train: &LabeledCorpus, weight: Weight, split: SplitOptions) -> TermScoreTable {
    let mut hits: BTreeMap<String, (u64, u64)> = BTreeMap::new();
    for name in train.vulnerable() {
        for term in identifier_terms(name, split) {
            hits.entry(term).or_default().0 += 1;
        }
    }
    for name in train.benign() {
        for term in identifier_terms(name, split) {
            hits.entry(term).or_default().1 += 1;
        }
    }
    let scores = hits
        .into_iter()
        .map(|(term, (v, b))| {
            let score = weight.plus as i64 * v as i64 - weight.minus as i64 * b as i64;
            (
                term,
                TermScore {
                    score: Score::Count(score),
                    vulnerable_hits: v,
                    benign_hits: b,
                },
            )
        })
        .collect();
    TermScoreTable {
        origin: ScoreOrigin::Frequency(weight),
        scores,
    }
}

/// Which terms survive ranking: all of them, or those scoring at least the
/// bound (inclusive).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MinScorePolicy {
    All,
    AtLeast(f64),
}

impl MinScorePolicy {
    pub fn admits(&self, score: f64) -> bool {
        match *self {
            MinScorePolicy::All => true,
            MinScorePolicy::AtLeast(t) => score >= t,
        }
    }

    fn check(&self, origin: &ScoreOrigin) -> Result<()> {
        match (*self, origin) {
            (MinScorePolicy::AtLeast(t), _) if !t.is_finite() => {
                Err(Error::Config(format!("minimum score {t} is not finite")))
            }
            (MinScorePolicy::AtLeast(t), ScoreOrigin::External { .. }) if !(0.0..=1.0).contains(&t) => Err(
                Error::Config(format!("minimum score {t} is outside [0, 1] for external scores")),
            ),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for MinScorePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MinScorePolicy::All => f.write_str("all"),
            MinScorePolicy::AtLeast(t) => write!(f, "{t}"),
        }
    }
}

impl FromStr for MinScorePolicy {
    type Err = Error;

    /// Accepts `all`/`none`, `zero`, or a number.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "all" | "none" => Ok(MinScorePolicy::All),
            "zero" => Ok(MinScorePolicy::AtLeast(0.0)),
            other => other
                .strip_prefix("at-least:")
                .unwrap_or(other)
                .parse::<f64>()
                .ok()
                .filter(|t| t.is_finite())
                .map(MinScorePolicy::AtLeast)
                .ok_or_else(|| Error::Config(format!("unknown minimum-score policy `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedWord {
    pub term: String,
    pub score: Score,
}

/// Terms ordered from most to least dangerous.
#[derive(Debug, Clone, PartialEq)]
pub struct DangerousWordList {
    pub words: Vec<RankedWord>,
    pub policy: MinScorePolicy,
    pub origin: ScoreOrigin,
}

impl DangerousWordList {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(|w| w.term.as_str())
    }

    /// The first `cutoff` terms.
    pub fn prefix(&self, cutoff: usize) -> &[RankedWord] {
        &self.words[..cutoff.min(self.words.len())]
    }

    /// Writes `rank,term,score` rows, ranks starting at 1.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["rank", "term", "score"])?;
        for (i, word) in self.words.iter().enumerate() {
            w.write_record([(i + 1).to_string(), word.term.clone(), word.score.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Filters by `policy` and sorts by score, highest first. Ties go to the term
/// found in more vulnerable names (frequency origin), then to the
/// lexicographically smaller term.
pub fn rank(table: &TermScoreTable, policy: MinScorePolicy) -> Result<DangerousWordList> {
    policy.check(&table.origin)?;
    let mut kept: Vec<(&String, &TermScore)> = table
        .scores
        .iter()
        .filter(|(_, s)| policy.admits(s.score.value()))
        .collect();
    let by_hits = matches!(table.origin, ScoreOrigin::Frequency(_));
    kept.sort_by(|(ta, a), (tb, b)| {
        b.score
            .value()
            .total_cmp(&a.score.value())
            .then_with(|| {
                if by_hits {
                    b.vulnerable_hits.cmp(&a.vulnerable_hits)
                } else {
                    Ordering::Equal
                }
            })
            .then_with(|| ta.cmp(tb))
    });
    Ok(DangerousWordList {
        words: kept
            .into_iter()
            .map(|(t, s)| RankedWord {
                term: t.clone(),
                score: s.score,
            })
            .collect(),
        policy,
        origin: table.origin.clone(),
    })
}

/// Reads a `term,score` file (header optional). Scores must lie in `[0, 1]`
/// and each term may appear once.
pub fn load_external_scores(path: &Path) -> Result<TermScoreTable> {
    let text = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8(text).map_err(|_| Error::Encoding {
        path: path.to_path_buf(),
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut scores = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = i + 1;
        let term = record.get(0).unwrap_or("");
        let raw = record.get(1).unwrap_or("");
        if i == 0 && term == "term" && raw == "score" {
            continue;
        }
        if term.is_empty() && raw.is_empty() {
            continue;
        }
        let score: f64 = raw.parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("`{raw}` is not a number"),
        })?;
        insert_unit_score(&mut scores, term, score)?;
    }
    Ok(TermScoreTable {
        origin: ScoreOrigin::External {
            source: path.display().to_string(),
        },
        scores,
    })
}

fn insert_unit_score(scores: &mut BTreeMap<String, TermScore>, term: &str, score: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&score) {
        return Err(Error::ScoreOutOfRange {
            term: term.to_string(),
            score,
        });
    }
    let entry = TermScore {
        score: Score::Unit(score),
        vulnerable_hits: 0,
        benign_hits: 0,
    };
    if scores.insert(term.to_string(), entry).is_some() {
        return Err(Error::DuplicateTerm(term.to_string()));
    }
    Ok(())
}

/// A per-term dangerousness model, such as a name-level neural classifier
/// queried with one term at a time.
pub trait TermScorer {
    /// Identifier recorded as the table's origin.
    fn source(&self) -> String;

    /// Probability-like score in `[0, 1]`, or `None` if the scorer has no
    /// opinion on the term.
    fn score(&self, term: &str) -> Result<Option<f64>>;
}

/// A scorer backed by a precomputed table, e.g. the output of an offline run.
impl TermScorer for TermScoreTable {
    fn source(&self) -> String {
        match &self.origin {
            ScoreOrigin::External { source } => source.clone(),
            ScoreOrigin::Frequency(w) => format!("frequency:{w}"),
        }
    }

    fn score(&self, term: &str) -> Result<Option<f64>> {
        Ok(self.scores.get(term).map(|s| s.score.value()))
    }
}

/// Longest name the name-level model accepts.
pub const NAME_MODEL_MAX_LEN: usize = 50;

/// Checks that a term fits the input encoding of a character-level name
/// model: at most 50 characters drawn from ASCII letters, digits and `_`.
pub fn check_name_model_term(term: &str) -> Result<()> {
    let reason = if term.is_empty() {
        Some("empty".to_string())
    } else if term.chars().count() > NAME_MODEL_MAX_LEN {
        Some(format!("longer than {NAME_MODEL_MAX_LEN} characters"))
    } else {
        term.chars()
            .find(|c| !(c.is_ascii_alphanumeric() || *c == '_'))
            .map(|c| format!("character `{c}` outside the model alphabet"))
    };
    match reason {
        Some(reason) => Err(Error::UnscorableTerm {
            term: term.to_string(),
            reason,
        }),
        None => Ok(()),
    }
}

/// Result of scoring a vocabulary through a [`TermScorer`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalScoring {
    pub table: TermScoreTable,
    /// Terms the model cannot encode.
    pub rejected: Vec<String>,
    /// Terms the scorer returned no score for.
    pub unscored: Vec<String>,
}

/// Scores each term in isolation. Terms outside the model alphabet or length
/// limit are not sent to the scorer.
pub fn score_terms<S: TermScorer + ?Sized>(scorer: &S, terms: &BTreeSet<String>) -> Result<ExternalScoring> {
    let mut scores = BTreeMap::new();
    let mut rejected = Vec::new();
    let mut unscored = Vec::new();
    for term in terms {
        if check_name_model_term(term).is_err() {
            rejected.push(term.clone());
            continue;
        }
        match scorer.score(term)? {
            Some(s) => insert_unit_score(&mut scores, term, s)?,
            None => unscored.push(term.clone()),
        }
    }
    if !rejected.is_empty() {
        log::warn!("{} terms cannot be encoded by the name model", rejected.len());
    }
    Ok(ExternalScoring {
        table: TermScoreTable {
            origin: ScoreOrigin::External {
                source: scorer.source(),
            },
            scores,
        },
        rejected,
        unscored,
    })
}
