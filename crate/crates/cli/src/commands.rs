use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use favd::corpus::{corpus_stats, load_projects, overlap_count};
use favd::eval::{run_eval, Ranker, ReportHeader};
use favd::harvest::{collect_sources, harvest as harvest_files};
use favd::model::{digest_file, tool_version, InputDigest, Provenance, VOCABULARY_STARVATION};
use favd::predictor::{classify_names, write_predictions_csv};
use favd::rational::{format_exact, round3};
use favd::synth::{generate, SynthSpec};
use favd::tuner::{search_weights, tune_external};
use favd::{
    all_vulnerable_f2, clean, load_csv, load_external_scores, load_lists, make_kfold, make_leave_one_out,
    random_baseline_f2, rank, ratio, roc as roc_curve, score_frequency, split_with, LabeledCorpus, ModelFile, RawLists,
    SplitOptions, Weight,
};
use serde::Serialize;
use serde_json::json;

use crate::config::TuneArgs;
use crate::CliError;

type CliResult = Result<(), CliError>;

#[derive(Debug, Clone, Args)]
pub struct CorpusArgs {
    /// Vulnerable function names, one per line.
    #[arg(long, requires = "benign", conflicts_with = "csv")]
    pub vulnerable: Option<PathBuf>,
    /// Benign function names, one per line.
    #[arg(long, requires = "vulnerable")]
    pub benign: Option<PathBuf>,
    /// A `name,label` CSV instead of two list files.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

impl CorpusArgs {
    fn given(&self) -> bool {
        self.vulnerable.is_some() || self.csv.is_some()
    }

    fn load(&self) -> Result<(LabeledCorpus, Vec<InputDigest>), CliError> {
        let (raw, paths): (RawLists, Vec<&Path>) = match (&self.vulnerable, &self.benign, &self.csv) {
            (Some(v), Some(b), None) => (load_lists(v, b)?, vec![v, b]),
            (None, None, Some(c)) => (load_csv(c)?, vec![c]),
            _ => {
                return Err(CliError::Usage(
                    "give either --vulnerable and --benign, or --csv".into(),
                ))
            }
        };
        let moved = overlap_count(&raw);
        if moved > 0 {
            log::info!("{moved} names appear on both lists and are kept as vulnerable");
        }
        let corpus = clean(&raw)?;
        let digests = paths.into_iter().map(digest_file).collect::<Result<_, _>>()?;
        Ok((corpus, digests))
    }
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> CliResult {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| {
            CliError::Data(favd::Error::Io {
                path: p.to_path_buf(),
                source: e,
            })
        }),
        None => std::io::stdout().write_all(bytes).map_err(|e| {
            CliError::Data(favd::Error::Io {
                path: "<stdout>".into(),
                source: e,
            })
        }),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| {
        CliError::Data(favd::Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    pub name: String,
    /// Lowercase the terms.
    #[arg(long)]
    pub fold_case: bool,
}

pub fn split(args: SplitArgs) -> CliResult {
    let terms = split_with(
        &args.name,
        SplitOptions {
            fold_case: args.fold_case,
        },
    );
    let mut out = String::new();
    for t in terms {
        out.push_str(&t);
        out.push('\n');
    }
    write_output(None, out.as_bytes())
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub tune: TuneArgs,
    /// Where to write the model JSON.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write every evaluated grid cell as CSV.
    #[arg(long, value_name = "CSV")]
    pub trace: Option<PathBuf>,
}

pub fn train(args: TrainArgs) -> CliResult {
    let (effective, _) = args.tune.resolve()?;
    let (corpus, mut inputs) = args.corpus.load()?;
    let config = effective.tune_config(args.trace.is_some());

    let result = match &effective.external_scores {
        Some(path) => {
            inputs.push(digest_file(path)?);
            tune_external(&load_external_scores(path)?, &corpus, effective.policy, &config)?
        }
        None => search_weights(&corpus, effective.policy, &config)?,
    };

    let provenance = Provenance::new(
        inputs,
        None,
        serde_json::to_value(&effective).map_err(favd::Error::from)?,
    );
    let file = ModelFile::from_tuning(&result, provenance);
    if file.warnings.iter().any(|w| w == VOCABULARY_STARVATION) {
        eprintln!("favd: warning: no term passed the minimum score; the model predicts everything benign");
    }
    fs::write(&args.out, file.to_json()?).map_err(io_err(&args.out))?;
    if let Some(trace) = &args.trace {
        let mut buf = Vec::new();
        result.write_trace_csv(&mut buf)?;
        fs::write(trace, buf).map_err(io_err(trace))?;
    }
    eprintln!(
        "trained: {} dangerous words, cutoff {}, threshold {}, training F2 {:.3}",
        file.dangerous.len(),
        file.cutoff,
        format_exact(&file.threshold),
        round3(&file.train_f2)
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Number of folds for k-fold cross-validation.
    #[arg(long, short)]
    pub k: Option<usize>,
    /// Seed for the fold shuffle.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Leave-one-project-out over these directories, each holding
    /// `vulnerable.txt` and `benign.txt`.
    #[arg(long, num_args = 2.., conflicts_with_all = ["vulnerable", "csv", "k"])]
    pub loo: Vec<PathBuf>,
    #[command(flatten)]
    pub tune: TuneArgs,
    /// Directory for `eval.json` and `folds.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct EvalConfig<'a> {
    protocol: &'static str,
    k: Option<usize>,
    seed: Option<u64>,
    projects: Vec<String>,
    beta: u32,
    #[serde(flatten)]
    tune: &'a crate::config::Effective,
}

pub fn eval(args: EvalArgs) -> CliResult {
    let (effective, file) = args.tune.resolve()?;
    let config = effective.tune_config(false);

    let (plan, mut inputs, k, seed) = if !args.loo.is_empty() {
        let corpora = load_projects(&args.loo)?;
        let mut inputs = Vec::new();
        for dir in &args.loo {
            inputs.push(digest_file(&dir.join("vulnerable.txt"))?);
            inputs.push(digest_file(&dir.join("benign.txt"))?);
        }
        (make_leave_one_out(&corpora)?, inputs, None, None)
    } else if args.corpus.given() {
        let (corpus, inputs) = args.corpus.load()?;
        let k = args.k.or(file.k).unwrap_or(5);
        let seed = args.seed.or(file.seed).unwrap_or(0);
        (make_kfold(&corpus, k, seed)?, inputs, Some(k), Some(seed))
    } else {
        return Err(CliError::Usage(
            "give --vulnerable/--benign or --csv for k-fold, or --loo DIR...".into(),
        ));
    };

    let ranker = match &effective.external_scores {
        Some(path) => {
            inputs.push(digest_file(path)?);
            Ranker::External {
                scores: load_external_scores(path)?,
                policy: effective.policy,
            }
        }
        None => Ranker::Frequency {
            policy: effective.policy,
        },
    };

    let report = run_eval(&plan, &ranker, &config)?;
    let header = ReportHeader {
        tool: tool_version(),
        config: serde_json::to_value(EvalConfig {
            protocol: if k.is_some() { "kfold" } else { "leave_one_out" },
            k,
            seed,
            projects: args.loo.iter().map(|p| p.display().to_string()).collect(),
            beta: 2,
            tune: &effective,
        })
        .map_err(favd::Error::from)?,
        inputs,
    };

    fs::create_dir_all(&args.out).map_err(io_err(&args.out))?;
    let json_path = args.out.join("eval.json");
    let csv_path = args.out.join("folds.csv");
    fs::write(&json_path, report.to_json(&header)?).map_err(io_err(&json_path))?;
    fs::write(&csv_path, report.to_csv()?).map_err(io_err(&csv_path))?;
    eprint!("{}", report.summary_text());
    Ok(())
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Model JSON written by `favd train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Names to classify: one per line, or a `name,file,line` CSV from
    /// `favd harvest`.
    #[arg(long)]
    pub names: PathBuf,
    /// Output CSV (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn read_names(path: &Path) -> Result<Vec<String>, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let first = text.lines().next().unwrap_or("").trim_end();
    if first == "name,file,line" {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let mut names = Vec::new();
        for record in reader.records() {
            let record = record.map_err(favd::Error::from)?;
            if let Some(n) = record.get(0).filter(|n| !n.is_empty()) {
                names.push(n.to_string());
            }
        }
        Ok(names)
    } else {
        Ok(favd::corpus::read_name_list(path)?)
    }
}

pub fn predict(args: PredictArgs) -> CliResult {
    let model = ModelFile::load(&args.model)?.to_model()?;
    let names = read_names(&args.names)?;
    let predictions = classify_names(&names, &model);
    let mut buf = Vec::new();
    write_predictions_csv(&predictions, &mut buf)?;
    write_output(args.out.as_deref(), &buf)
}

#[derive(Debug, Args)]
pub struct RocArgs {
    /// Labeled names to sweep over.
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Use this model's dangerous-word list.
    #[arg(long, conflicts_with = "weight")]
    pub model: Option<PathBuf>,
    /// Otherwise rank the corpus's own terms with this weight.
    #[arg(long)]
    pub weight: Option<String>,
    /// Minimum-score policy when ranking with --weight.
    #[arg(long, default_value = "zero")]
    pub policy: String,
    /// Cutoffs to sweep, comma separated (default: every grid cutoff).
    #[arg(long, value_delimiter = ',')]
    pub cutoffs: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub cutoff_step: usize,
    #[arg(long, default_value = "0.05")]
    pub threshold_step: String,
    /// Add the degenerate threshold-0 point at (1, 1).
    #[arg(long)]
    pub endpoint: bool,
    #[arg(long)]
    pub fold_case: bool,
    /// Output CSV (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn roc(args: RocArgs) -> CliResult {
    let (corpus, _) = args.corpus.load()?;
    let (list, split) = match (&args.model, &args.weight) {
        (Some(path), None) => {
            let model = ModelFile::load(path)?.to_model()?;
            (model.dangerous().clone(), model.split_options())
        }
        (None, weight) => {
            let weight: Weight = weight.as_deref().unwrap_or("1-1").parse()?;
            let split = SplitOptions {
                fold_case: args.fold_case,
            };
            let table = score_frequency(&corpus, weight, split);
            (rank(&table, args.policy.parse()?)?, split)
        }
        (Some(_), Some(_)) => unreachable!("clap rejects --model with --weight"),
    };
    if list.is_empty() {
        return Err(CliError::Data(favd::Error::Config(
            "the dangerous-word list is empty".into(),
        )));
    }
    let step = favd::rational::parse_decimal(&args.threshold_step)
        .ok_or_else(|| CliError::Usage(format!("invalid threshold step `{}`", args.threshold_step)))?;
    let grid = favd::SearchGrid {
        cutoff_step: args.cutoff_step,
        threshold_step: step,
        weight_grid: Weight::default_grid(),
    };
    grid.validate()?;
    let cutoffs = if args.cutoffs.is_empty() {
        grid.cutoff_values(list.len())
    } else {
        args.cutoffs.clone()
    };
    let thresholds = grid.threshold_values();

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["cutoff", "threshold", "tpr", "fpr"])
        .map_err(favd::Error::from)?;
    for cutoff in cutoffs {
        let curve = roc_curve(&list, cutoff, &corpus, &thresholds, args.endpoint, split)?;
        for p in &curve.points {
            w.write_record([
                cutoff.to_string(),
                format_exact(&p.threshold),
                format!("{:.6}", favd::rational::to_f64(&p.tpr)),
                format!("{:.6}", favd::rational::to_f64(&p.fpr)),
            ])
            .map_err(favd::Error::from)?;
        }
    }
    let buf = w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?;
    write_output(args.out.as_deref(), &buf)
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Number of vulnerable names (instead of list files).
    #[arg(long, requires = "benign_count", conflicts_with_all = ["vulnerable", "csv"])]
    pub vulnerable_count: Option<u64>,
    /// Number of benign names.
    #[arg(long, requires = "vulnerable_count")]
    pub benign_count: Option<u64>,
}

pub fn baseline(args: BaselineArgs) -> CliResult {
    let (v, b) = match (args.vulnerable_count, args.benign_count) {
        (Some(v), Some(b)) => (v, b),
        _ => {
            let (corpus, _) = args.corpus.load()?;
            let stats = corpus_stats(&corpus)?;
            (stats.vulnerable as u64, stats.benign as u64)
        }
    };
    if v + b == 0 {
        return Err(CliError::Usage("at least one name is needed".into()));
    }
    let fraction = ratio(v, v + b);
    let report = json!({
        "vulnerable": v,
        "benign": b,
        "vulnerable_fraction": round3(&fraction),
        "all_vulnerable_f2": round3(&all_vulnerable_f2(v, b)),
        "random_f2": round3(&random_baseline_f2(fraction)?),
    });
    let mut text = serde_json::to_string_pretty(&report).map_err(favd::Error::from)?;
    text.push('\n');
    write_output(None, text.as_bytes())
}

#[derive(Debug, Args)]
pub struct HarvestArgs {
    /// Source files or directories (searched recursively for C/C++ files).
    #[arg(required = true)]
    pub paths: Vec<PathBuf>,
    /// Output CSV (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn harvest(args: HarvestArgs) -> CliResult {
    let files = collect_sources(&args.paths);
    let report = harvest_files(&files);
    for (path, reason) in &report.skipped {
        eprintln!("favd: warning: skipped {}: {reason}", path.display());
    }
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    write_output(args.out.as_deref(), &buf)
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// JSON generator settings; missing fields take their defaults.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Directory for `vulnerable.txt`, `benign.txt` and `planted.txt`.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn synth(args: SynthArgs) -> CliResult {
    let spec: SynthSpec = match &args.spec {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(io_err(path))?;
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => SynthSpec::default(),
    };
    let synth = generate(&spec)?;
    fs::create_dir_all(&args.out).map_err(io_err(&args.out))?;
    let lines = |items: &mut dyn Iterator<Item = &String>| {
        let mut s = String::new();
        for i in items {
            s.push_str(i);
            s.push('\n');
        }
        s
    };
    for (file, body) in [
        ("vulnerable.txt", lines(&mut synth.corpus.vulnerable().iter())),
        ("benign.txt", lines(&mut synth.corpus.benign().iter())),
        ("planted.txt", lines(&mut synth.planted.iter())),
    ] {
        let path = args.out.join(file);
        fs::write(&path, body).map_err(io_err(&path))?;
    }
    Ok(())
}
