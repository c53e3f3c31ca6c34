//! Labeled function-name datasets: loading, cleaning and fold plans.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{ratio, Rational};

/// Name lists as read from disk, before cleaning. May contain duplicates and
/// names present in both lists.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RawLists {
    pub vulnerable: Vec<String>,
    pub benign: Vec<String>,
    pub source_label: String,
}

/// Cleaned, disjoint sets of vulnerable and benign names.
///
/// The fields are private so the disjointness invariant cannot be broken
/// after construction; use [`clean`] or [`LabeledCorpus::new`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledCorpus {
    vulnerable: BTreeSet<String>,
    benign: BTreeSet<String>,
    source_label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Vulnerable,
    Benign,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Vulnerable => "vulnerable",
            Label::Benign => "benign",
        }
    }
}

impl LabeledCorpus {
    /// Builds a corpus from already-clean sets. Fails if the sets overlap or
    /// contain an empty name.
    pub fn new(
        vulnerable: BTreeSet<String>,
        benign: BTreeSet<String>,
        source_label: impl Into<String>,
    ) -> Result<Self> {
        let source_label = source_label.into();
        if let Some(name) = vulnerable.intersection(&benign).next() {
            return Err(Error::Config(format!(
                "`{name}` is labeled both vulnerable and benign in `{source_label}`"
            )));
        }
        if vulnerable.contains("") || benign.contains("") {
            return Err(Error::Config(format!("empty name in `{source_label}`")));
        }
        Ok(LabeledCorpus {
            vulnerable,
            benign,
            source_label,
        })
    }

    pub fn vulnerable(&self) -> &BTreeSet<String> {
        &self.vulnerable
    }

    pub fn benign(&self) -> &BTreeSet<String> {
        &self.benign
    }

    pub fn source_label(&self) -> &str {
        &self.source_label
    }

    pub fn len(&self) -> usize {
        self.vulnerable.len() + self.benign.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn label_of(&self, name: &str) -> Option<Label> {
        if self.vulnerable.contains(name) {
            Some(Label::Vulnerable)
        } else if self.benign.contains(name) {
            Some(Label::Benign)
        } else {
            None
        }
    }

    /// Every name with its label, vulnerable names first, each group sorted.
    pub fn iter(&self) -> impl Iterator<Item = (&String, Label)> {
        self.vulnerable
            .iter()
            .map(|n| (n, Label::Vulnerable))
            .chain(self.benign.iter().map(|n| (n, Label::Benign)))
    }

    pub fn to_raw(&self) -> RawLists {
        RawLists {
            vulnerable: self.vulnerable.iter().cloned().collect(),
            benign: self.benign.iter().cloned().collect(),
            source_label: self.source_label.clone(),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.source_label = label.into();
        self
    }
}

fn read_text(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    String::from_utf8(bytes).map_err(|_| Error::Encoding {
        path: path.to_path_buf(),
    })
}

/// Reads one identifier per line; trailing whitespace (including `\r`) is
/// stripped and blank lines are dropped.
pub fn read_name_list(path: &Path) -> Result<Vec<String>> {
    Ok(read_text(path)?
        .lines()
        .map(str::trim_end)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect())
}

/// Loads a vulnerable list and a benign list. The source label defaults to
/// the name of the directory holding the vulnerable list.
pub fn load_lists(vulnerable_path: &Path, benign_path: &Path) -> Result<RawLists> {
    let vulnerable = read_name_list(vulnerable_path)?;
    let benign = read_name_list(benign_path)?;
    let source_label = vulnerable_path
        .parent()
        .and_then(|p| p.file_name())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(RawLists {
        vulnerable,
        benign,
        source_label,
    })
}

/// Loads a `name,label` CSV with a header row; labels are `vulnerable` or
/// `benign`.
pub fn load_csv(path: &Path) -> Result<RawLists> {
    let text = read_text(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    if headers.get(0) != Some("name") || headers.get(1) != Some("label") {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "expected header `name,label`".into(),
        });
    }
    let mut raw = RawLists {
        source_label: path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
        ..RawLists::default()
    };
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let name = record.get(0).unwrap_or("").to_string();
        if name.is_empty() {
            continue;
        }
        match record.get(1).unwrap_or("") {
            "vulnerable" => raw.vulnerable.push(name),
            "benign" => raw.benign.push(name),
            other => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 2,
                    message: format!("unknown label `{other}`"),
                })
            }
        }
    }
    Ok(raw)
}

/// Removes duplicates within each list and moves names found on both lists
/// to the vulnerable side.
pub fn clean(raw: &RawLists) -> Result<LabeledCorpus> {
    let vulnerable: BTreeSet<String> = raw.vulnerable.iter().filter(|n| !n.is_empty()).cloned().collect();
    let benign: BTreeSet<String> = raw
        .benign
        .iter()
        .filter(|n| !n.is_empty() && !vulnerable.contains(*n))
        .cloned()
        .collect();
    if vulnerable.is_empty() && benign.is_empty() {
        return Err(Error::EmptyCorpus(raw.source_label.clone()));
    }
    Ok(LabeledCorpus {
        vulnerable,
        benign,
        source_label: raw.source_label.clone(),
    })
}

/// Number of names that appear on both raw lists (after removing internal
/// duplicates); these end up vulnerable after [`clean`].
pub fn overlap_count(raw: &RawLists) -> usize {
    let v: BTreeSet<&String> = raw.vulnerable.iter().collect();
    let b: BTreeSet<&String> = raw.benign.iter().collect();
    v.intersection(&b).count()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusStats {
    pub vulnerable: usize,
    pub benign: usize,
    pub vulnerable_fraction: Rational,
}

pub fn corpus_stats(corpus: &LabeledCorpus) -> Result<CorpusStats> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus(corpus.source_label.clone()));
    }
    let v = corpus.vulnerable.len();
    let b = corpus.benign.len();
    Ok(CorpusStats {
        vulnerable: v,
        benign: b,
        vulnerable_fraction: ratio(v as u64, (v + b) as u64),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FoldKind {
    Kfold { k: usize, seed: u64 },
    LeaveOneOut { projects: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: LabeledCorpus,
    pub test: LabeledCorpus,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub kind: FoldKind,
    pub folds: Vec<Fold>,
}

/// Stratified k-fold plan. Each class is sorted, shuffled with a ChaCha8
/// generator seeded from `seed`, and dealt round-robin into the folds, so
/// per-class fold sizes differ by at most one.
pub fn make_kfold(corpus: &LabeledCorpus, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::Protocol(format!("k must be at least 2, got {k}")));
    }
    if corpus.vulnerable.len() < k || corpus.benign.len() < k {
        return Err(Error::TooFewForFolds {
            label: corpus.source_label.clone(),
            k,
            vulnerable: corpus.vulnerable.len(),
            benign: corpus.benign.len(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let deal = |names: &BTreeSet<String>, rng: &mut ChaCha8Rng| {
        let mut order: Vec<&String> = names.iter().collect();
        order.shuffle(rng);
        let mut buckets = vec![BTreeSet::new(); k];
        for (i, name) in order.into_iter().enumerate() {
            buckets[i % k].insert(name.clone());
        }
        buckets
    };
    let vuln_buckets = deal(&corpus.vulnerable, &mut rng);
    let benign_buckets = deal(&corpus.benign, &mut rng);

    let folds = (0..k)
        .map(|i| {
            let pick = |buckets: &[BTreeSet<String>], held_out: bool| -> BTreeSet<String> {
                buckets
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| (*j == i) == held_out)
                    .flat_map(|(_, b)| b.iter().cloned())
                    .collect()
            };
            Fold {
                train: LabeledCorpus {
                    vulnerable: pick(&vuln_buckets, false),
                    benign: pick(&benign_buckets, false),
                    source_label: format!("{}/train{}", corpus.source_label, i + 1),
                },
                test: LabeledCorpus {
                    vulnerable: pick(&vuln_buckets, true),
                    benign: pick(&benign_buckets, true),
                    source_label: format!("{}/test{}", corpus.source_label, i + 1),
                },
            }
        })
        .collect();

    Ok(FoldPlan {
        kind: FoldKind::Kfold { k, seed },
        folds,
    })
}

/// Leave-one-project-out plan: one fold per corpus, trained on the re-cleaned
/// union of every other corpus.
pub fn make_leave_one_out(corpora: &[LabeledCorpus]) -> Result<FoldPlan> {
    if corpora.len() < 2 {
        return Err(Error::Protocol("leave-one-out needs at least two projects".into()));
    }
    let mut seen = BTreeMap::new();
    for c in corpora {
        if seen.insert(c.source_label.as_str(), ()).is_some() {
            return Err(Error::Protocol(format!("duplicate project label `{}`", c.source_label)));
        }
    }

    let mut folds = Vec::with_capacity(corpora.len());
    for (i, test) in corpora.iter().enumerate() {
        let mut union = RawLists {
            source_label: format!("all-but-{}", test.source_label),
            ..RawLists::default()
        };
        for (j, other) in corpora.iter().enumerate() {
            if i != j {
                union.vulnerable.extend(other.vulnerable.iter().cloned());
                union.benign.extend(other.benign.iter().cloned());
            }
        }
        folds.push(Fold {
            train: clean(&union)?,
            test: test.clone(),
        });
    }
    Ok(FoldPlan {
        kind: FoldKind::LeaveOneOut {
            projects: corpora.iter().map(|c| c.source_label.clone()).collect(),
        },
        folds,
    })
}

/// Loads every project directory (each holding `vulnerable.txt` and
/// `benign.txt`) and labels it with the directory name.
pub fn load_projects(dirs: &[PathBuf]) -> Result<Vec<LabeledCorpus>> {
    dirs.iter()
        .map(|dir| {
            let raw = load_lists(&dir.join("vulnerable.txt"), &dir.join("benign.txt"))?;
            clean(&raw)
        })
        .collect()
}
