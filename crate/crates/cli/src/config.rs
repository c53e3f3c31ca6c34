//! Settings shared by several subcommands, merged from an optional TOML file
//! and command-line flags. Flags win over the file; the file wins over the
//! built-in defaults.

use std::path::{Path, PathBuf};

use clap::Args;
use favd::rational::{format_exact, parse_decimal};
use favd::{MinScorePolicy, Rational, SearchGrid, SearchMode, SplitOptions, TuneConfig, Weight};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub policy: Option<String>,
    pub weights: Option<String>,
    pub cutoff_step: Option<usize>,
    pub threshold_step: Option<String>,
    pub greedy: Option<bool>,
    pub fold_case: Option<bool>,
    pub k: Option<usize>,
    pub seed: Option<u64>,
    pub external_scores: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}

/// Ranking and search flags.
#[derive(Debug, Clone, Args)]
pub struct TuneArgs {
    /// Minimum-score policy: `all`, `zero`, or a number.
    #[arg(long)]
    pub policy: Option<String>,
    /// Weight grid, e.g. `1-1,3-2,1000-1`, or `default`.
    #[arg(long)]
    pub weights: Option<String>,
    /// Rank by externally supplied `term,score` values instead of frequency.
    #[arg(long, value_name = "CSV")]
    pub external_scores: Option<PathBuf>,
    /// Distance between tried cutoffs.
    #[arg(long)]
    pub cutoff_step: Option<usize>,
    /// Distance between tried thresholds, e.g. `0.05` or `1/20`.
    #[arg(long)]
    pub threshold_step: Option<String>,
    /// Use greedy coordinate ascent instead of the exhaustive grid.
    #[arg(long)]
    pub greedy: bool,
    /// Lowercase terms after splitting.
    #[arg(long)]
    pub fold_case: bool,
    /// TOML file providing defaults for these flags.
    #[arg(long, value_name = "TOML")]
    pub config: Option<PathBuf>,
}

/// The effective settings, embedded verbatim in every report and model.
#[derive(Debug, Clone, Serialize)]
pub struct Effective {
    pub policy: MinScorePolicy,
    pub weights: Vec<String>,
    pub external_scores: Option<PathBuf>,
    pub cutoff_step: usize,
    pub threshold_step: String,
    pub mode: SearchMode,
    pub fold_case: bool,
    #[serde(skip)]
    pub threshold_step_exact: Rational,
    #[serde(skip)]
    pub weight_grid: Vec<Weight>,
}

impl TuneArgs {
    pub fn resolve(&self) -> Result<(Effective, FileConfig), CliError> {
        let file = FileConfig::load(self.config.as_deref())?;
        let external_scores = self.external_scores.clone().or(file.external_scores.clone());
        let default_policy = if external_scores.is_some() { "0.5" } else { "zero" };
        let policy: MinScorePolicy = self
            .policy
            .clone()
            .or(file.policy.clone())
            .unwrap_or_else(|| default_policy.into())
            .parse()
            .map_err(usage)?;
        let weight_grid = Weight::parse_grid(
            &self
                .weights
                .clone()
                .or(file.weights.clone())
                .unwrap_or_else(|| "default".into()),
        )
        .map_err(usage)?;
        let step_text = self
            .threshold_step
            .clone()
            .or(file.threshold_step.clone())
            .unwrap_or_else(|| "0.05".into());
        let threshold_step = parse_decimal(&step_text)
            .ok_or_else(|| CliError::Usage(format!("invalid threshold step `{step_text}`")))?;
        let effective = Effective {
            policy,
            weights: weight_grid.iter().map(|w| w.to_string()).collect(),
            external_scores,
            cutoff_step: self.cutoff_step.or(file.cutoff_step).unwrap_or(100),
            threshold_step: format_exact(&threshold_step),
            mode: if self.greedy || file.greedy.unwrap_or(false) {
                SearchMode::Greedy
            } else {
                SearchMode::Exhaustive
            },
            fold_case: self.fold_case || file.fold_case.unwrap_or(false),
            threshold_step_exact: threshold_step,
            weight_grid,
        };
        effective.tune_config(false).grid.validate().map_err(usage)?;
        Ok((effective, file))
    }
}

impl Effective {
    pub fn tune_config(&self, keep_trace: bool) -> TuneConfig {
        TuneConfig {
            grid: SearchGrid {
                cutoff_step: self.cutoff_step,
                threshold_step: self.threshold_step_exact,
                weight_grid: self.weight_grid.clone(),
            },
            mode: self.mode,
            keep_trace,
            split: self.split(),
        }
    }

    pub fn split(&self) -> SplitOptions {
        SplitOptions {
            fold_case: self.fold_case,
        }
    }
}

fn usage(e: favd::Error) -> CliError {
    CliError::Usage(e.to_string())
}
