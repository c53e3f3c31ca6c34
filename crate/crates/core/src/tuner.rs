//! Choosing cutoff, threshold and weight by maximising F₂ on training data.
//!
//! The default search is exhaustive over a [`SearchGrid`]. Cells are compared
//! by F₂, then by smaller cutoff, then by larger threshold, so the winner is
//! unique and reproducible. A greedy coordinate-ascent mode is available for
//! very large vocabularies.

use std::cmp::Ordering;
use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{Label, LabeledCorpus};
use crate::error::{Error, Result};
use crate::metrics::{f2, ConfusionCounts};
use crate::predictor::{NameProfile, TunedModel, WordIndex};
use crate::ranking::{rank, score_frequency, DangerousWordList, MinScorePolicy, ScoreOrigin, TermScoreTable, Weight};
use crate::rational::{ratio, Rational};
use crate::splitter::{unique_terms, SplitOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct SearchGrid {
    /// Distance between consecutive cutoffs, starting from 1.
    pub cutoff_step: usize,
    /// Distance between consecutive thresholds in `[0, 1]`.
    pub threshold_step: Rational,
    pub weight_grid: Vec<Weight>,
}

impl Default for SearchGrid {
    fn default() -> Self {
        SearchGrid {
            cutoff_step: 100,
            threshold_step: ratio(1, 20),
            weight_grid: Weight::default_grid(),
        }
    }
}

impl SearchGrid {
    pub fn validate(&self) -> Result<()> {
        if self.cutoff_step == 0 {
            return Err(Error::Config("cutoff step must be positive".into()));
        }
        if self.threshold_step == ratio(0, 1) || self.threshold_step > ratio(1, 1) {
            return Err(Error::Config("threshold step must lie in (0, 1]".into()));
        }
        if self.weight_grid.is_empty() {
            return Err(Error::Config("weight grid is empty".into()));
        }
        Ok(())
    }

    /// `1, 1+step, 1+2·step, …` up to `len`, always ending at `len`. An empty
    /// list has the single cutoff 0.
    pub fn cutoff_values(&self, len: usize) -> Vec<usize> {
        if len == 0 {
            return vec![0];
        }
        let mut values: Vec<usize> = (1..=len).step_by(self.cutoff_step.max(1)).collect();
        if values.last() != Some(&len) {
            values.push(len);
        }
        values
    }

    /// `0, step, 2·step, …` up to 1, always ending at 1.
    pub fn threshold_values(&self) -> Vec<Rational> {
        let one = ratio(1, 1);
        let mut values = Vec::new();
        let mut t = ratio(0, 1);
        while t < one {
            values.push(t);
            t += self.threshold_step;
        }
        values.push(one);
        values
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    #[default]
    Exhaustive,
    Greedy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneConfig {
    pub grid: SearchGrid,
    pub mode: SearchMode,
    /// Keep every evaluated cell in [`TuneResult::trace`].
    pub keep_trace: bool,
    pub split: SplitOptions,
}

impl Default for TuneConfig {
    fn default() -> Self {
        TuneConfig {
            grid: SearchGrid::default(),
            mode: SearchMode::Exhaustive,
            keep_trace: false,
            split: SplitOptions::default(),
        }
    }
}

/// One evaluated (cutoff, threshold) combination.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridCell {
    pub weight: Option<Weight>,
    pub cutoff: usize,
    pub threshold: Rational,
    pub counts: ConfusionCounts,
    pub f2: Rational,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub model: TunedModel,
    pub train_counts: ConfusionCounts,
    pub train_f2: Rational,
    pub trace: Vec<GridCell>,
}

impl TuneResult {
    pub fn weight(&self) -> Option<Weight> {
        match self.model.dangerous().origin {
            ScoreOrigin::Frequency(w) => Some(w),
            ScoreOrigin::External { .. } => None,
        }
    }

    /// Writes `weight,cutoff,threshold,tp,fp,fn,tn,f2` rows for every traced
    /// cell.
    pub fn write_trace_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["weight", "cutoff", "threshold", "tp", "fp", "fn", "tn", "f2"])?;
        for c in &self.trace {
            w.write_record([
                c.weight.map(|w| w.to_string()).unwrap_or_else(|| "external".into()),
                c.cutoff.to_string(),
                crate::rational::format_exact(&c.threshold),
                c.counts.tp.to_string(),
                c.counts.fp.to_string(),
                c.counts.fn_.to_string(),
                c.counts.tn.to_string(),
                format!("{:.6}", crate::rational::to_f64(&c.f2)),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Orders cells so that the better one compares `Greater`.
fn cell_order(a: &GridCell, b: &GridCell) -> Ordering {
    a.f2.cmp(&b.f2)
        .then_with(|| b.cutoff.cmp(&a.cutoff))
        .then_with(|| a.threshold.cmp(&b.threshold))
}

/// Pre-split training names against one dangerous list.
struct Landscape {
    profiles: Vec<(NameProfile, Label)>,
    thresholds: Vec<Rational>,
    /// `below[t][m]`: number of thresholds strictly below `m / t`.
    below: Vec<Vec<usize>>,
    weight: Option<Weight>,
}

impl Landscape {
    fn new(dangerous: &DangerousWordList, train: &LabeledCorpus, grid: &SearchGrid, split: SplitOptions) -> Self {
        let index = WordIndex::new(dangerous);
        let profiles: Vec<_> = train
            .iter()
            .map(|(name, label)| (index.profile(name, split), label))
            .collect();
        let thresholds = grid.threshold_values();
        let longest = profiles.iter().map(|(p, _)| p.term_count).max().unwrap_or(0);
        let below = (0..=longest)
            .map(|t| {
                (0..=t)
                    .map(|m| {
                        let p = ratio(m as u64, t as u64);
                        thresholds.partition_point(|x| *x < p)
                    })
                    .collect()
            })
            .collect();
        Landscape {
            profiles,
            thresholds,
            below,
            weight: match dangerous.origin {
                ScoreOrigin::Frequency(w) => Some(w),
                ScoreOrigin::External { .. } => None,
            },
        }
    }

    fn cell(&self, cutoff: usize, threshold: Rational, counts: ConfusionCounts) -> GridCell {
        GridCell {
            weight: self.weight,
            cutoff,
            threshold,
            counts,
            f2: f2(&counts),
        }
    }

    /// Every threshold at one cutoff. A name is predicted vulnerable at
    /// exactly the thresholds below its percentage, so one histogram of
    /// "how many thresholds lie below" per class gives all columns at once.
    fn column(&self, cutoff: usize) -> Vec<GridCell> {
        let n = self.thresholds.len();
        let mut vuln_hist = vec![0u64; n + 1];
        let mut benign_hist = vec![0u64; n + 1];
        let (mut vulnerable, mut benign) = (0u64, 0u64);
        for (profile, label) in &self.profiles {
            let below = self.below[profile.term_count][profile.matches(cutoff)];
            match label {
                Label::Vulnerable => {
                    vuln_hist[below] += 1;
                    vulnerable += 1;
                }
                Label::Benign => {
                    benign_hist[below] += 1;
                    benign += 1;
                }
            }
        }
        // predicted vulnerable at threshold j  <=>  below > j
        let mut cells = Vec::with_capacity(n);
        let (mut tp, mut fp) = (0u64, 0u64);
        let mut tps = vec![0u64; n];
        let mut fps = vec![0u64; n];
        for j in (0..n).rev() {
            tp += vuln_hist[j + 1];
            fp += benign_hist[j + 1];
            tps[j] = tp;
            fps[j] = fp;
        }
        for j in 0..n {
            let counts = ConfusionCounts {
                tp: tps[j],
                fp: fps[j],
                fn_: vulnerable - tps[j],
                tn: benign - fps[j],
            };
            cells.push(self.cell(cutoff, self.thresholds[j], counts));
        }
        cells
    }

    fn single(&self, cutoff: usize, threshold: Rational) -> GridCell {
        let mut counts = ConfusionCounts::default();
        for (profile, label) in &self.profiles {
            crate::metrics::tally(&mut counts, *label, profile.percentage(cutoff) > threshold);
        }
        self.cell(cutoff, threshold, counts)
    }
}

fn best_of<'a>(cells: impl IntoIterator<Item = &'a GridCell>) -> Option<&'a GridCell> {
    cells.into_iter().max_by(|a, b| cell_order(a, b))
}

/// Finds the cutoff and threshold with the highest training F₂ for a fixed
/// dangerous-word list. An empty list yields an all-benign model with F₂ 0.
pub fn find_best(dangerous: &DangerousWordList, train: &LabeledCorpus, config: &TuneConfig) -> Result<TuneResult> {
    config.grid.validate()?;
    let landscape = Landscape::new(dangerous, train, &config.grid, config.split);

    if dangerous.is_empty() {
        let cell = landscape.single(0, ratio(0, 1));
        return Ok(TuneResult {
            model: TunedModel::new(dangerous.clone(), 0, cell.threshold, config.split)?,
            train_counts: cell.counts,
            train_f2: cell.f2,
            trace: if config.keep_trace { vec![cell] } else { Vec::new() },
        });
    }

    let cutoffs = config.grid.cutoff_values(dangerous.len());
    let (best, trace) = match config.mode {
        SearchMode::Exhaustive => {
            let cells: Vec<GridCell> = cutoffs.par_iter().flat_map_iter(|&c| landscape.column(c)).collect();
            let best = best_of(&cells).cloned().expect("grid is non-empty");
            (best, cells)
        }
        SearchMode::Greedy => greedy(&landscape, &cutoffs),
    };

    Ok(TuneResult {
        model: TunedModel::new(dangerous.clone(), best.cutoff, best.threshold, config.split)?,
        train_counts: best.counts,
        train_f2: best.f2,
        trace: if config.keep_trace { trace } else { Vec::new() },
    })
}

/// Coordinate ascent: best threshold in the first cutoff column, then
/// alternate between the best cutoff for the current threshold and the best
/// threshold for the current cutoff until the cell stops changing.
fn greedy(landscape: &Landscape, cutoffs: &[usize]) -> (GridCell, Vec<GridCell>) {
    let mut seen: HashMap<(usize, Rational), GridCell> = HashMap::new();
    let visit = |cells: Vec<GridCell>, seen: &mut HashMap<(usize, Rational), GridCell>| {
        for c in &cells {
            seen.entry((c.cutoff, c.threshold)).or_insert_with(|| c.clone());
        }
        best_of(&cells).cloned().expect("non-empty scan")
    };

    let mut current = visit(landscape.column(cutoffs[0]), &mut seen);
    loop {
        let row: Vec<GridCell> = cutoffs
            .iter()
            .map(|&c| landscape.single(c, current.threshold))
            .collect();
        let by_cutoff = visit(row, &mut seen);
        let next = visit(landscape.column(by_cutoff.cutoff), &mut seen);
        if cell_order(&next, &current) != Ordering::Greater {
            break;
        }
        current = next;
    }

    let mut trace: Vec<GridCell> = seen.into_values().collect();
    trace.sort_by(|a, b| a.cutoff.cmp(&b.cutoff).then(a.threshold.cmp(&b.threshold)));
    (current, trace)
}

/// Scores the training data with every weight of the grid, ranks under
/// `policy`, tunes each list and keeps the best. Ties go to the earlier
/// weight in the grid.
pub fn search_weights(train: &LabeledCorpus, policy: MinScorePolicy, config: &TuneConfig) -> Result<TuneResult> {
    config.grid.validate()?;
    let results: Vec<TuneResult> = config
        .grid
        .weight_grid
        .par_iter()
        .map(|&w| {
            let table = score_frequency(train, w, config.split);
            let list = rank(&table, policy)?;
            find_best(&list, train, config)
        })
        .collect::<Result<_>>()?;

    let mut trace = Vec::new();
    let mut best: Option<TuneResult> = None;
    for mut r in results {
        if config.keep_trace {
            trace.append(&mut r.trace);
        }
        match &best {
            Some(b) if r.train_f2 <= b.train_f2 => {}
            _ => best = Some(r),
        }
    }
    let mut best = best.expect("weight grid is non-empty");
    best.trace = trace;
    Ok(best)
}

/// Best training F₂ reachable with frequency ranking: an indication of how
/// much signal the training names carry.
pub fn train_upper_bound(train: &LabeledCorpus, policy: MinScorePolicy, config: &TuneConfig) -> Result<Rational> {
    Ok(search_weights(train, policy, config)?.train_f2)
}

/// Tunes a model from externally supplied term scores, restricted to the
/// terms that occur in the training names.
pub fn tune_external(
    scores: &TermScoreTable,
    train: &LabeledCorpus,
    policy: MinScorePolicy,
    config: &TuneConfig,
) -> Result<TuneResult> {
    let vocabulary = unique_terms(train.vulnerable().iter().chain(train.benign()), config.split);
    let list = rank(&scores.restrict_to(&vocabulary), policy)?;
    find_best(&list, train, config)
}
