//! The persisted model file.
//!
//! A model is stored as JSON with the full dangerous-word list, so the list
//! that explains every prediction travels with the model:
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "policy": {"at_least": 0.0},
//!   "weight": {"plus": 3, "minus": 2},
//!   "source": null,
//!   "cutoff": 2,
//!   "threshold": 0.3,
//!   "fold_case": false,
//!   "dangerous": [{"term": "png", "score": 12}, {"term": "handle", "score": 7}],
//!   "train_f2": 0.85,
//!   "warnings": [],
//!   "provenance": {"tool": "favd 0.1.0", "inputs": [], "seed": null, "config": {}}
//! }
//! ```

use std::fs;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::predictor::TunedModel;
use crate::ranking::{DangerousWordList, MinScorePolicy, RankedWord, ScoreOrigin, Weight};
use crate::rational::{serde_fraction, Rational};
use crate::splitter::SplitOptions;
use crate::tuner::TuneResult;

pub const SCHEMA_VERSION: u32 = 1;
pub const VOCABULARY_STARVATION: &str = "vocabulary_starvation";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// SHA-256 of a file's bytes, hex encoded.
pub fn digest_file(path: &Path) -> Result<InputDigest> {
    let mut file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(InputDigest {
        path: path.display().to_string(),
        sha256: hex::encode(hasher.finalize()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub inputs: Vec<InputDigest>,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
}

impl Provenance {
    pub fn new(inputs: Vec<InputDigest>, seed: Option<u64>, config: serde_json::Value) -> Self {
        Provenance {
            tool: tool_version(),
            inputs,
            seed,
            config,
        }
    }
}

pub fn tool_version() -> String {
    format!("favd {}", env!("CARGO_PKG_VERSION"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub schema_version: u32,
    pub policy: MinScorePolicy,
    /// Frequency weight, absent for externally scored models.
    pub weight: Option<Weight>,
    /// External score source, absent for frequency models.
    pub source: Option<String>,
    pub cutoff: usize,
    #[serde(with = "serde_fraction")]
    pub threshold: Rational,
    #[serde(default)]
    pub fold_case: bool,
    pub dangerous: Vec<RankedWord>,
    #[serde(with = "serde_fraction")]
    pub train_f2: Rational,
    #[serde(default)]
    pub warnings: Vec<String>,
    pub provenance: Provenance,
}

impl ModelFile {
    pub fn from_tuning(result: &TuneResult, provenance: Provenance) -> Self {
        let model = &result.model;
        let list = model.dangerous();
        let (weight, source) = match &list.origin {
            ScoreOrigin::Frequency(w) => (Some(*w), None),
            ScoreOrigin::External { source } => (None, Some(source.clone())),
        };
        let mut warnings = Vec::new();
        if list.is_empty() {
            warnings.push(VOCABULARY_STARVATION.to_string());
        }
        ModelFile {
            schema_version: SCHEMA_VERSION,
            policy: list.policy,
            weight,
            source,
            cutoff: model.cutoff(),
            threshold: model.threshold(),
            fold_case: model.split_options().fold_case,
            dangerous: list.words.clone(),
            train_f2: result.train_f2,
            warnings,
            provenance,
        }
    }

    /// Rebuilds the predictor, checking the file for consistency.
    pub fn to_model(&self) -> Result<TunedModel> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Model(format!(
                "unsupported schema version {}",
                self.schema_version
            )));
        }
        let origin = match (&self.weight, &self.source) {
            (Some(w), None) => ScoreOrigin::Frequency(*w),
            (None, Some(s)) => ScoreOrigin::External { source: s.clone() },
            _ => return Err(Error::Model("exactly one of `weight` and `source` must be set".into())),
        };
        let mut seen = std::collections::HashSet::new();
        for pair in self.dangerous.windows(2) {
            if pair[1].score.value() > pair[0].score.value() {
                return Err(Error::Model(format!(
                    "dangerous list is not sorted: `{}` scores above `{}`",
                    pair[1].term, pair[0].term
                )));
            }
        }
        for w in &self.dangerous {
            if !seen.insert(w.term.as_str()) {
                return Err(Error::Model(format!("term `{}` is listed twice", w.term)));
            }
        }
        TunedModel::new(
            DangerousWordList {
                words: self.dangerous.clone(),
                policy: self.policy,
                origin,
            },
            self.cutoff,
            self.threshold,
            SplitOptions {
                fold_case: self.fold_case,
            },
        )
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Model(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
