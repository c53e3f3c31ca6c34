//! Acceptance gate. Runs every criterion, prints one line per criterion and
//! exits non-zero if any of them fails. The data-dependent criterion runs
//! only when `FAVD_REPLICATION_DIR` points at the replication lists and is
//! reported as skipped otherwise.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use favd::eval::{run_eval, Ranker};
use favd::rational::to_f64;
use favd::synth::{generate, SynthSpec};
use favd::tuner::tune_external;
use favd::{
    all_vulnerable_f2, classify, classify_corpus, clean, f_beta, load_external_scores, load_lists, make_kfold,
    random_baseline_f2, rank, ratio, roc, score_frequency, search_weights, split, DangerousWordList, LabeledCorpus,
    MinScorePolicy, Rational, SearchGrid, SplitOptions, TuneConfig, TunedModel, Weight,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Outcome {
    Pass(String),
    Fail(String),
    Skipped(String),
}

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_budget(elapsed: Duration, budget: Duration) -> Result<(), String> {
    ensure(elapsed <= budget, || format!("took {elapsed:.2?}, budget {budget:.0?}"))
}

// ---------------------------------------------------------------------------
// shared fixtures
// ---------------------------------------------------------------------------

/// Corpora that every identity check is run against.
struct Suite {
    small: Vec<LabeledCorpus>,
    roc: Vec<LabeledCorpus>,
}

fn small_spec(seed: u64) -> SynthSpec {
    SynthSpec {
        seed,
        n_vulnerable: 8 + (seed % 5) as usize,
        n_benign: 20 + (seed % 11) as usize,
        planted_dangerous: ["copy", "parse", "read"].map(String::from).to_vec(),
        vocab_size: 10 + (seed % 4) as usize,
        min_terms: 1,
        max_terms: 3,
        signal_strength: [1.0, 0.8, 0.5, 0.0][(seed % 4) as usize],
        overlap: [0.5, 1.0, 0.0, 0.3][(seed % 4) as usize],
        diversity: 0.0,
        camel_case: false,
    }
}

fn build_suite() -> Suite {
    let small = (0..25).map(|s| generate(&small_spec(s)).unwrap().corpus).collect();
    let roc = (0..10)
        .map(|s| {
            generate(&SynthSpec {
                seed: 100 + s,
                signal_strength: 0.7,
                overlap: 0.6,
                diversity: 0.2,
                ..SynthSpec::default()
            })
            .unwrap()
            .corpus
        })
        .collect();
    Suite { small, roc }
}

/// Hand-authored external scores: a fixed function of the term's bytes, with
/// deliberate ties, written as a score file and read back through the loader.
fn external_scores_for(corpus: &LabeledCorpus, dir: &Path, tag: &str) -> favd::TermScoreTable {
    let mut terms = BTreeSet::new();
    for (name, _) in corpus.iter() {
        terms.extend(split(name));
    }
    let mut text = String::from("term,score\n");
    for t in &terms {
        let h = t
            .bytes()
            .fold(7u32, |acc, b| acc.wrapping_mul(31).wrapping_add(b as u32));
        text.push_str(&format!("{t},{}\n", (h % 21) as f64 / 20.0));
    }
    let path = dir.join(format!("scores-{tag}.csv"));
    fs::write(&path, text).unwrap();
    load_external_scores(&path).unwrap()
}

// ---------------------------------------------------------------------------
// brute-force oracle
// ---------------------------------------------------------------------------

/// Everything the oracle needs, rebuilt from the raw names without the
/// library's scoring, ranking or classification code.
struct Oracle {
    names: Vec<(BTreeSet<String>, bool)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct OracleCell {
    cutoff: usize,
    /// Threshold numerator over 20.
    k: u64,
    tp: u64,
    fp: u64,
    fn_: u64,
    tn: u64,
}

impl OracleCell {
    fn f2(&self) -> (u64, u64) {
        (5 * self.tp, 5 * self.tp + 4 * self.fn_ + self.fp)
    }
}

/// `a` beats `b`: higher F₂, then smaller cutoff, then larger threshold.
fn oracle_beats(a: &OracleCell, b: &OracleCell) -> bool {
    let (an, ad) = a.f2();
    let (bn, bd) = b.f2();
    // zero denominators score zero
    let lhs = if ad == 0 { 0 } else { an as u128 * bd.max(1) as u128 };
    let rhs = if bd == 0 { 0 } else { bn as u128 * ad.max(1) as u128 };
    if lhs != rhs {
        return lhs > rhs;
    }
    if a.cutoff != b.cutoff {
        return a.cutoff < b.cutoff;
    }
    a.k > b.k
}

impl Oracle {
    fn new(corpus: &LabeledCorpus) -> Self {
        let mut names = Vec::new();
        for (name, vulnerable) in corpus
            .vulnerable()
            .iter()
            .map(|n| (n, true))
            .chain(corpus.benign().iter().map(|n| (n, false)))
        {
            assert!(
                name.bytes().all(|b| b.is_ascii_lowercase() || b == b'_'),
                "oracle splits on underscores only: {name}"
            );
            let terms: BTreeSet<String> = name.split('_').filter(|t| !t.is_empty()).map(String::from).collect();
            names.push((terms, vulnerable));
        }
        Oracle { names }
    }

    fn vocabulary(&self) -> BTreeSet<String> {
        self.names.iter().flat_map(|(t, _)| t.iter().cloned()).collect()
    }

    fn frequency_list(&self, plus: i64, minus: i64, floor: Option<i64>) -> Vec<String> {
        let mut rows: Vec<(i64, i64, String)> = Vec::new();
        for term in self.vocabulary() {
            let v = self.names.iter().filter(|(t, l)| *l && t.contains(&term)).count() as i64;
            let b = self.names.iter().filter(|(t, l)| !*l && t.contains(&term)).count() as i64;
            let score = plus * v - minus * b;
            if floor.is_none_or(|f| score >= f) {
                rows.push((score, v, term));
            }
        }
        rows.sort_by(|a, b| b.0.cmp(&a.0).then(b.1.cmp(&a.1)).then(a.2.cmp(&b.2)));
        rows.into_iter().map(|r| r.2).collect()
    }

    fn external_list(&self, scores: &BTreeMap<String, f64>, floor: Option<f64>) -> Vec<String> {
        let vocab = self.vocabulary();
        let mut rows: Vec<(f64, String)> = scores
            .iter()
            .filter(|(t, s)| vocab.contains(*t) && floor.is_none_or(|f| **s >= f))
            .map(|(t, s)| (*s, t.clone()))
            .collect();
        rows.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        rows.into_iter().map(|r| r.1).collect()
    }

    /// Every (cutoff, threshold) cell for one list, counts recomputed from
    /// scratch for each cell.
    fn cells(&self, list: &[String], step: usize) -> Vec<OracleCell> {
        let mut cutoffs: Vec<usize> = Vec::new();
        if list.is_empty() {
            cutoffs.push(0);
        } else {
            let mut c = 1;
            while c <= list.len() {
                cutoffs.push(c);
                c += step;
            }
            if *cutoffs.last().unwrap() != list.len() {
                cutoffs.push(list.len());
            }
        }
        let ks: Vec<u64> = if list.is_empty() { vec![0] } else { (0..=20).collect() };
        let mut out = Vec::new();
        for &cutoff in &cutoffs {
            let active: BTreeSet<&String> = list.iter().take(cutoff).collect();
            for &k in &ks {
                let mut cell = OracleCell {
                    cutoff,
                    k,
                    tp: 0,
                    fp: 0,
                    fn_: 0,
                    tn: 0,
                };
                for (terms, vulnerable) in &self.names {
                    let m = terms.iter().filter(|t| active.contains(t)).count() as u64;
                    let n = terms.len() as u64;
                    // m / n > k / 20
                    let predicted = n > 0 && 20 * m > k * n;
                    match (predicted, *vulnerable) {
                        (true, true) => cell.tp += 1,
                        (true, false) => cell.fp += 1,
                        (false, true) => cell.fn_ += 1,
                        (false, false) => cell.tn += 1,
                    }
                }
                out.push(cell);
            }
        }
        out
    }
}

fn oracle_best(cells: &[OracleCell]) -> OracleCell {
    let mut best = cells[0];
    for c in &cells[1..] {
        if oracle_beats(c, &best) {
            best = *c;
        }
    }
    best
}

fn same_f2(lib: &Rational, cell: &OracleCell) -> bool {
    let (n, d) = cell.f2();
    if d == 0 {
        return *lib == ratio(0, 1);
    }
    *lib.numer() as u128 * d as u128 == n as u128 * *lib.denom() as u128
}

fn compare_trace(
    label: &str,
    trace: &[favd::tuner::GridCell],
    expected: &BTreeMap<(String, usize, u64), OracleCell>,
) -> Result<(), String> {
    ensure(trace.len() == expected.len(), || {
        format!(
            "{label}: {} library cells vs {} oracle cells",
            trace.len(),
            expected.len()
        )
    })?;
    for cell in trace {
        let k = cell.threshold * ratio(20, 1);
        ensure(k.is_integer(), || {
            format!("{label}: off-grid threshold {}", cell.threshold)
        })?;
        let w = cell.weight.map(|w| w.to_string()).unwrap_or_default();
        let key = (w, cell.cutoff, k.to_integer());
        let o = expected
            .get(&key)
            .ok_or_else(|| format!("{label}: cell {key:?} missing from oracle"))?;
        let c = cell.counts;
        ensure((c.tp, c.fp, c.fn_, c.tn) == (o.tp, o.fp, o.fn_, o.tn), || {
            format!("{label}: counts differ at {key:?}: {c:?} vs {o:?}")
        })?;
        ensure(same_f2(&cell.f2, o), || format!("{label}: F2 differs at {key:?}"))?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// criteria
// ---------------------------------------------------------------------------

fn criterion_1() -> Check {
    let published = [
        ("Asterisk", 49, 10102, 0.024),
        ("FFmpeg", 184, 4379, 0.174),
        ("LibPNG", 31, 491, 0.240),
        ("LibTIFF", 75, 522, 0.418),
        ("Pidgin", 26, 6722, 0.019),
        ("VLC", 37, 2699, 0.064),
        ("loo", 402, 24906, 0.075),
        ("VDISC", 72612, 932741, 0.280),
    ];
    let mut worst = 0.0f64;
    for (name, v, b, expected) in published {
        let got = to_f64(&all_vulnerable_f2(v, b));
        let err = (got - expected).abs();
        ensure(err <= 0.0005, || format!("{name}: {got:.5} vs {expected}"))?;
        worst = worst.max(err);
    }
    Ok(format!("8 datasets, max |err| {worst:.5}"))
}

fn criterion_2() -> Check {
    let mut worst = 0.0f64;
    for (p, expected) in [(ratio(72, 1000), 0.228), (ratio(16, 1000), 0.071)] {
        let got = to_f64(&random_baseline_f2(p).map_err(|e| e.to_string())?);
        let err = (got - expected).abs();
        ensure(err <= 0.0005, || format!("p={}: {got:.5} vs {expected}", to_f64(&p)))?;
        worst = worst.max(err);
    }
    Ok(format!("max |err| {worst:.5}"))
}

const SAMPLE_WORDS: &[&str] = &[
    // most dangerous
    "invite",
    "avi",
    "png",
    "JPEG",
    "mxit",
    "MP",
    "retrans",
    "264",
    "handle",
    "pdf",
    "msn",
    "AVI",
    "pkt",
    "vp",
    "CCP",
    "Checked",
    "httpconn",
    "Html",
    "unpacksms",
    "old",
    "CAL",
    "readwrite",
    "slp",
    "Strip",
    "aocmessage",
    "avcodec",
    "PLT",
    "LZWDecode",
    "emoticon",
    "Tags",
    "milliwatt",
    "ivi",
    "do",
    "Into",
    "silc",
    "ASF",
    "astman",
    "tile",
    "PLTE",
    "Entry",
    "slplink",
    "vcd",
    "sipsock",
    "mjpeg",
    "read",
    "Strips",
    "yahoo",
    "skcr",
    "action",
    "hdr",
    "filter",
    "cvt",
    "idn",
    "LOADSparse",
    "ha",
    "gif",
    "chunks",
    "readgitimage",
    "untar",
    "Recieve",
    // least dangerous
    "asn",
    "ff",
    "image",
    "Samples",
    "purple",
    "Get",
    "ast",
    "get",
    "transform",
    "Handler",
    "cb",
    "vlc",
    "254",
    "write",
    "store",
    "Fax",
    "get",
    "Callback",
    "PD",
    "init",
    "init",
    "Error",
    "pidgin",
    "vlclua",
    "PE",
    "frame",
    "standard",
    "Check",
    "set",
    "Control",
    "225",
    "read",
    "gpc",
    "Image",
    "jabber",
    "Set",
    "get",
    "parse",
    "16",
    "Swab",
    "add",
    "Add",
    "channel",
    "mov",
    "gp",
    "Set",
    "account",
    "Out",
    "handel",
    "tag",
    "gamma",
    "Proc",
    "blist",
    "test",
    "to",
    "mxf",
    "display",
    "Warning",
    "media",
    "rtp",
];

fn criterion_3() -> Check {
    let fixtures: &[(&str, &[&str])] = &[
        ("read_file", &["read", "file"]),
        ("png_push_read_chunk", &["png", "push", "read", "chunk"]),
        ("readFile", &["read", "File"]),
        ("XMLHttpRequest", &["XMLHttp", "Request"]),
        ("av_log2_16bit", &["av", "log", "2", "16", "bit"]),
        ("__init__", &["init"]),
    ];
    for (name, expected) in fixtures {
        let got = split(name);
        ensure(got == *expected, || format!("{name} -> {got:?}, expected {expected:?}"))?;
    }
    for w in SAMPLE_WORDS {
        let name = format!("x_{w}_y");
        let got = split(&name);
        ensure(got == ["x", *w, "y"], || format!("{name} -> {got:?}"))?;
    }
    Ok(format!(
        "{} fixtures, {} sample words intact",
        fixtures.len(),
        SAMPLE_WORDS.len()
    ))
}

fn criterion_4(suite: &Suite, dir: &Path) -> Check {
    let start = Instant::now();
    let mut cells = 0usize;
    for (i, corpus) in suite.small.iter().enumerate() {
        ensure(corpus.len() <= 50, || format!("corpus {i} has {} names", corpus.len()))?;
        let oracle = Oracle::new(corpus);
        let vocab = oracle.vocabulary();
        ensure(vocab.len() <= 30, || format!("corpus {i} has {} terms", vocab.len()))?;

        let step = [1, 1, 3, 7][i % 4];
        let (policy, floor) = if i % 2 == 0 {
            (MinScorePolicy::AtLeast(0.0), Some(0))
        } else {
            (MinScorePolicy::All, None)
        };
        let config = TuneConfig {
            grid: SearchGrid {
                cutoff_step: step,
                ..SearchGrid::default()
            },
            keep_trace: true,
            ..TuneConfig::default()
        };

        // frequency ranking: weight x cutoff x threshold
        let tuned = search_weights(corpus, policy, &config).map_err(|e| e.to_string())?;
        let mut expected = BTreeMap::new();
        let mut best: Option<(Weight, OracleCell)> = None;
        for w in Weight::default_grid() {
            let list = oracle.frequency_list(w.plus() as i64, w.minus() as i64, floor);
            let weight_cells = oracle.cells(&list, step);
            let top = oracle_best(&weight_cells);
            // earlier weights win ties
            let replace = match &best {
                None => true,
                Some((_, b)) => {
                    let (tn, td) = top.f2();
                    let (bn, bd) = b.f2();
                    let t = if td == 0 { 0 } else { tn as u128 * bd.max(1) as u128 };
                    let o = if bd == 0 { 0 } else { bn as u128 * td.max(1) as u128 };
                    t > o
                }
            };
            if replace {
                best = Some((w, top));
            }
            for c in weight_cells {
                expected.insert((w.to_string(), c.cutoff, c.k), c);
            }
        }
        compare_trace(&format!("corpus {i}"), &tuned.trace, &expected)?;
        cells += expected.len();
        let (bw, bc) = best.unwrap();
        let got = (tuned.weight().unwrap(), tuned.model.cutoff(), tuned.model.threshold());
        ensure(got == (bw, bc.cutoff, ratio(bc.k, 20)), || {
            format!("corpus {i}: argmax {got:?}, oracle {bw} / {} / {}/20", bc.cutoff, bc.k)
        })?;
        ensure(same_f2(&tuned.train_f2, &bc), || format!("corpus {i}: best F2 differs"))?;

        // external scores: cutoff x threshold through the same tuner
        let table = external_scores_for(corpus, dir, &i.to_string());
        let raw: BTreeMap<String, f64> = table.scores.iter().map(|(t, s)| (t.clone(), s.score.value())).collect();
        let (ext_policy, ext_floor) = if i % 2 == 0 {
            (MinScorePolicy::AtLeast(0.5), Some(0.5))
        } else {
            (MinScorePolicy::All, None)
        };
        let tuned = tune_external(&table, corpus, ext_policy, &config).map_err(|e| e.to_string())?;
        let list = oracle.external_list(&raw, ext_floor);
        let ext_cells = oracle.cells(&list, step);
        let expected: BTreeMap<_, _> = ext_cells.iter().map(|c| ((String::new(), c.cutoff, c.k), *c)).collect();
        compare_trace(&format!("corpus {i} (external)"), &tuned.trace, &expected)?;
        cells += expected.len();
        let bc = oracle_best(&ext_cells);
        ensure(
            (tuned.model.cutoff(), tuned.model.threshold()) == (bc.cutoff, ratio(bc.k, 20)),
            || format!("corpus {i} (external): argmax differs"),
        )?;
    }
    let elapsed = start.elapsed();
    within_budget(elapsed, Duration::from_secs(10))?;
    Ok(format!(
        "25 corpora, {cells} cells identical incl. external scores ({elapsed:.2?})"
    ))
}

fn full_vocabulary_identity(corpus: &LabeledCorpus, list: DangerousWordList) -> Result<(), String> {
    let len = list.len();
    let model = TunedModel::new(list, len, ratio(0, 1), SplitOptions::default()).map_err(|e| e.to_string())?;
    let (_, counts) = classify_corpus(corpus, &model);
    let expected = all_vulnerable_f2(corpus.vulnerable().len() as u64, corpus.benign().len() as u64);
    let got = f_beta(&counts, ratio(2, 1));
    ensure(got == expected, || {
        format!("{}: {got} vs {expected}", corpus.source_label())
    })
}

fn criterion_5(suite: &Suite, dir: &Path) -> Check {
    let mut checked = 0;
    for (i, corpus) in suite.small.iter().chain(&suite.roc).enumerate() {
        for w in [Weight::new(1, 1).unwrap(), Weight::new(1000, 1).unwrap()] {
            let table = score_frequency(corpus, w, SplitOptions::default());
            full_vocabulary_identity(corpus, rank(&table, MinScorePolicy::All).map_err(|e| e.to_string())?)?;
            checked += 1;
        }
        let table = external_scores_for(corpus, dir, &format!("id{i}"));
        full_vocabulary_identity(corpus, rank(&table, MinScorePolicy::All).map_err(|e| e.to_string())?)?;
        checked += 1;
    }
    Ok(format!("{checked} corpus/list pairs exact"))
}

fn check_roc(corpus: &LabeledCorpus, list: &DangerousWordList, label: &str) -> Result<usize, String> {
    let thresholds = SearchGrid::default().threshold_values();
    let grid = SearchGrid {
        cutoff_step: 7,
        ..SearchGrid::default()
    };
    let mut curves = 0;
    for cutoff in grid.cutoff_values(list.len()) {
        let curve = roc(list, cutoff, corpus, &thresholds, true, SplitOptions::default()).map_err(|e| e.to_string())?;
        let pts = &curve.points;
        let first = &pts[0];
        ensure(
            first.threshold == ratio(1, 1) && first.tpr == ratio(0, 1) && first.fpr == ratio(0, 1),
            || format!("{label} cutoff {cutoff}: threshold-1 point is not (0,0)"),
        )?;
        let last = pts.last().unwrap();
        ensure(
            last.threshold == ratio(0, 1) && last.tpr == ratio(1, 1) && last.fpr == ratio(1, 1),
            || format!("{label} cutoff {cutoff}: endpoint is not (1,1)"),
        )?;
        for pair in pts.windows(2) {
            ensure(pair[0].threshold > pair[1].threshold, || {
                format!("{label}: thresholds out of order")
            })?;
            ensure(pair[0].tpr <= pair[1].tpr && pair[0].fpr <= pair[1].fpr, || {
                format!(
                    "{label} cutoff {cutoff}: rates fall below threshold {}",
                    pair[0].threshold
                )
            })?;
        }
        curves += 1;
    }
    Ok(curves)
}

fn criterion_6(suite: &Suite, dir: &Path) -> Check {
    let start = Instant::now();
    let mut curves = 0;
    for (i, corpus) in suite.roc.iter().enumerate() {
        let table = score_frequency(corpus, Weight::new(2, 1).unwrap(), SplitOptions::default());
        let list = rank(&table, MinScorePolicy::AtLeast(0.0)).map_err(|e| e.to_string())?;
        curves += check_roc(corpus, &list, &format!("corpus {i}"))?;
        let table = external_scores_for(corpus, dir, &format!("roc{i}"));
        let list = rank(&table, MinScorePolicy::All).map_err(|e| e.to_string())?;
        curves += check_roc(corpus, &list, &format!("corpus {i} (external)"))?;
    }

    // growing the cutoff never lowers a percentage
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut probes = 0;
    for model_no in 0..200u64 {
        let spec = SynthSpec {
            seed: 1000 + model_no,
            n_vulnerable: rng.gen_range(3..15),
            n_benign: rng.gen_range(3..30),
            vocab_size: rng.gen_range(6..20),
            signal_strength: rng.gen_range(0.0..=1.0),
            overlap: rng.gen_range(0.0..=1.0),
            camel_case: rng.gen_bool(0.3),
            ..SynthSpec::default()
        };
        let corpus = generate(&spec).map_err(|e| e.to_string())?.corpus;
        let weight = Weight::new(rng.gen_range(1..20), rng.gen_range(1..20)).unwrap();
        let list = rank(
            &score_frequency(&corpus, weight, SplitOptions::default()),
            MinScorePolicy::All,
        )
        .map_err(|e| e.to_string())?;
        let threshold = ratio(rng.gen_range(0..=20), 20);
        let models: Vec<TunedModel> = (1..=list.len())
            .map(|c| TunedModel::new(list.clone(), c, threshold, SplitOptions::default()).unwrap())
            .collect();
        for (name, _) in corpus.iter() {
            let ps: Vec<Rational> = models.iter().map(|m| classify(name, m).percentage).collect();
            ensure(ps.windows(2).all(|w| w[0] <= w[1]), || {
                format!("model {model_no}: percentage of {name} falls as cutoff grows")
            })?;
            probes += 1;
        }
    }
    let elapsed = start.elapsed();
    within_budget(elapsed, Duration::from_secs(5))?;
    Ok(format!(
        "{curves} curves monotone with (0,0)/(1,1) ends, {probes} cutoff-growth probes ({elapsed:.2?})"
    ))
}

fn fine_config() -> TuneConfig {
    TuneConfig {
        grid: SearchGrid {
            cutoff_step: 1,
            ..SearchGrid::default()
        },
        ..TuneConfig::default()
    }
}

fn criterion_7() -> Check {
    let start = Instant::now();
    let ranker = Ranker::Frequency {
        policy: MinScorePolicy::AtLeast(0.0),
    };
    let spec = |seed: u64, signal: f64, overlap: f64| SynthSpec {
        seed,
        n_vulnerable: 1000,
        n_benign: 2000,
        signal_strength: signal,
        overlap,
        ..SynthSpec::default()
    };

    let mut worst_separable = 1.0f64;
    for seed in 0..20 {
        let corpus = generate(&spec(seed, 1.0, 0.0)).map_err(|e| e.to_string())?.corpus;
        let plan = make_kfold(&corpus, 2, seed).map_err(|e| e.to_string())?;
        let report = run_eval(&plan, &ranker, &fine_config()).map_err(|e| e.to_string())?;
        worst_separable = worst_separable.min(report.mean.f2);
        ensure(report.mean.f2 == 1.0, || {
            format!("separable seed {seed}: CV F2 {}", report.mean.f2)
        })?;
    }

    let (mut tuned, mut baseline) = (0.0, 0.0);
    for seed in 0..20 {
        let corpus = generate(&spec(seed, 0.0, 1.0)).map_err(|e| e.to_string())?.corpus;
        let plan = make_kfold(&corpus, 2, seed).map_err(|e| e.to_string())?;
        let report = run_eval(&plan, &ranker, &fine_config()).map_err(|e| e.to_string())?;
        tuned += report.mean.f2 / 20.0;
        baseline += report.mean.all_vulnerable_f2 / 20.0;
    }
    ensure((tuned - baseline).abs() <= 0.05, || {
        format!("null case: mean F2 {tuned:.3} vs all-vulnerable {baseline:.3}")
    })?;
    let elapsed = start.elapsed();
    within_budget(elapsed, Duration::from_secs(30))?;
    Ok(format!(
        "separable min CV F2 {worst_separable:.3}; null mean {tuned:.3} vs baseline {baseline:.3} ({elapsed:.2?})"
    ))
}

fn favd_cmd(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_favd"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("favd {}: {}", args.join(" "), String::from_utf8_lossy(&out.stderr))
    })
}

fn criterion_8(dir: &Path) -> Check {
    let data = dir.join("det");
    let d = data.to_str().unwrap();
    favd_cmd(&["synth", "--out", d])?;
    let v = data.join("vulnerable.txt");
    let b = data.join("benign.txt");
    let mut files = 0;
    let mut runs: Vec<Vec<Vec<u8>>> = Vec::new();
    for run in 0..2 {
        let out = dir.join(format!("eval{run}"));
        favd_cmd(&[
            "eval",
            "--vulnerable",
            v.to_str().unwrap(),
            "--benign",
            b.to_str().unwrap(),
            "--k",
            "5",
            "--seed",
            "11",
            "--out",
            out.to_str().unwrap(),
        ])?;
        let bytes = ["eval.json", "folds.csv"]
            .iter()
            .map(|f| fs::read(out.join(f)).map_err(|e| e.to_string()))
            .collect::<Result<Vec<_>, _>>()?;
        files = bytes.len();
        runs.push(bytes);
    }
    ensure(runs[0] == runs[1], || "reports differ between identical runs".into())?;
    Ok(format!("{files} report files byte-identical across runs"))
}

fn criterion_9() -> Outcome {
    let Some(root) = std::env::var_os("FAVD_REPLICATION_DIR").map(PathBuf::from) else {
        return Outcome::Skipped("FAVD_REPLICATION_DIR not set".into());
    };
    let missing: Vec<_> = ["LibPNG", "Pidgin", "Asterisk"]
        .iter()
        .filter(|p| !root.join(p).join("vulnerable.txt").is_file() || !root.join(p).join("benign.txt").is_file())
        .collect();
    if !missing.is_empty() {
        return Outcome::Skipped(format!("replication lists missing for {missing:?}"));
    }
    match replication(&root) {
        Ok(s) => Outcome::Pass(s),
        Err(s) => Outcome::Fail(s),
    }
}

fn replication(root: &Path) -> Check {
    let start = Instant::now();
    let ranker = Ranker::Frequency {
        policy: MinScorePolicy::AtLeast(0.0),
    };
    let mut notes = Vec::new();
    let mut failures = Vec::new();
    for (project, expected, tolerance) in [
        ("LibPNG", 0.639, 0.10),
        ("Pidgin", 0.601, 0.10),
        ("Asterisk", 0.0, 0.02),
    ] {
        let dir = root.join(project);
        let raw = load_lists(&dir.join("vulnerable.txt"), &dir.join("benign.txt")).map_err(|e| e.to_string())?;
        let corpus = clean(&raw).map_err(|e| e.to_string())?.with_label(project);
        let plan = make_kfold(&corpus, 5, 0).map_err(|e| e.to_string())?;
        let report = run_eval(&plan, &ranker, &TuneConfig::default()).map_err(|e| e.to_string())?;
        let f2 = report.mean.f2;
        notes.push(format!("{project} {f2:.3}"));
        if (f2 - expected).abs() > tolerance {
            failures.push(format!("{project} mean F2 {f2:.3}, expected {expected} ± {tolerance}"));
        }
        if project == "LibPNG" {
            for word in ["png", "handle"] {
                let hits = report
                    .folds
                    .iter()
                    .filter(|f| f.top_words.iter().any(|w| w == word))
                    .count();
                notes.push(format!("`{word}` top-10 in {hits}/5"));
                if hits < 4 {
                    failures.push(format!("`{word}` in LibPNG top-10 in only {hits}/5 folds"));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(300) {
        failures.push(format!("took {elapsed:.2?}, budget 5m"));
    }
    if failures.is_empty() {
        Ok(format!("{} ({elapsed:.2?})", notes.join(", ")))
    } else {
        Err(format!("{} [{}]", failures.join("; "), notes.join(", ")))
    }
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let suite = build_suite();

    let results: Vec<(&str, Outcome)> = vec![
        ("baseline closed forms", criterion_1().into()),
        ("random baseline", criterion_2().into()),
        ("splitter regression", criterion_3().into()),
        ("oracle equivalence", criterion_4(&suite, dir.path()).into()),
        ("all-vulnerable identity", criterion_5(&suite, dir.path()).into()),
        ("ROC properties", criterion_6(&suite, dir.path()).into()),
        ("separable and null corpora", criterion_7().into()),
        ("report determinism", criterion_8(dir.path()).into()),
        ("replication data", criterion_9()),
    ];

    let mut failed = 0;
    println!();
    for (i, (name, outcome)) in results.iter().enumerate() {
        let (tag, detail) = match outcome {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::Skipped(d) => ("SKIPPED", d),
        };
        println!("criterion {} {:<28} {:<7} {}", i + 1, name, tag, detail);
    }
    println!();
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

impl From<Check> for Outcome {
    fn from(c: Check) -> Self {
        match c {
            Ok(s) => Outcome::Pass(s),
            Err(s) => Outcome::Fail(s),
        }
    }
}
