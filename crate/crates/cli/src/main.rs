//! Command-line front end for the intention-mining pipeline.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use intentminer::classifiers::{predict, train, ClassifierKind, ClassifierSpec, TrainedModel};
use intentminer::corpus::{
    filter_language, ingest_path, label_by_seeds, preprocess, write_jsonl, Corpus, Label, PreprocessConfig,
    SeedVector,
};
use intentminer::eval::{confusion_and_metrics, cross_validate, stratified_kfold_split};
use intentminer::featsel::{
    forward_select, ig_report_csv, ig_scores, select_by_ig, selection_trace_csv, FeatureSubset,
};
use intentminer::pipeline::{run_matrix, run_pipeline, write_atomically, write_grid, PipelineConfig};
use intentminer::synth::{generate, SynthConfig};
use intentminer::vectorize::{build_vocabulary, project, vectorize, FeatureMatrix, VectorMode, Vocabulary};

#[derive(Parser)]
#[command(name = "intentminer", version, about = "Intention mining in short texts")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled synthetic corpus as JSONL.
    Synth(SynthArgs),
    /// Read JSONL or CSV and write normalized JSONL.
    Ingest(IngestArgs),
    /// Tokenize a corpus; tokens are stored alongside the raw text.
    Preprocess(PreprocessArgs),
    /// Build vocabulary and matrix, score terms, and select features.
    Select(SelectArgs),
    /// Train one classifier on a preprocessed corpus.
    Train(TrainArgs),
    /// Score a trained model, or cross-validate a classifier spec.
    Evaluate(EvaluateArgs),
    /// Run a full scheme from a config file (or a run manifest).
    Pipeline(PipelineArgs),
    /// Run every config in a directory and write a summary table.
    Matrix(MatrixArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    /// JSON file with generator settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n_yes: Option<usize>,
    #[arg(long)]
    n_no: Option<usize>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct LabelArgs {
    /// Label every document from seed phrases, replacing existing labels.
    #[arg(long)]
    relabel: bool,
    /// Comma-separated seed phrases (default: the built-in list).
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<String>>,
}

impl LabelArgs {
    fn apply(&self, corpus: Corpus) -> Result<Corpus> {
        if !self.relabel {
            return Ok(corpus);
        }
        let seeds = match &self.seeds {
            Some(s) => SeedVector::new(s)?,
            None => SeedVector::default(),
        };
        Ok(label_by_seeds(corpus, &seeds))
    }
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Keep only documents with this language code.
    #[arg(long)]
    lang: Option<String>,
    #[command(flatten)]
    label: LabelArgs,
}

#[derive(Args)]
struct PreprocessArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// JSON preprocessing flags (default: everything but the POS filter).
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    label: LabelArgs,
}

#[derive(Args)]
struct FeatureArgs {
    /// Preprocessed, labeled corpus (JSONL).
    #[arg(long)]
    input: PathBuf,
    /// Vocabulary written by `select`.
    #[arg(long)]
    vocab: PathBuf,
    /// Feature subset written by `select` (default: all terms).
    #[arg(long)]
    subset: Option<PathBuf>,
    #[arg(long, default_value = "binary", value_parser = parse_mode)]
    mode: VectorMode,
}

impl FeatureArgs {
    fn load(&self) -> Result<(FeatureMatrix, Vec<Label>)> {
        let corpus = ingest_path(&self.input)?;
        let labels = corpus.labels().context("corpus must be labeled (use --relabel when preprocessing)")?;
        let vocab = Vocabulary::read(&self.vocab)?;
        let matrix = vectorize(&corpus, &vocab, self.mode);
        let matrix = match &self.subset {
            Some(p) => project(&matrix, &read_json::<FeatureSubset>(p)?)?,
            None => matrix,
        };
        Ok((matrix, labels))
    }
}

#[derive(Args)]
struct SpecArgs {
    /// Classifier with default parameters: dt, nb, svm or ann.
    #[arg(long, conflicts_with = "spec")]
    classifier: Option<ClassifierKind>,
    /// JSON classifier spec `{"kind", "params", "seed"}`.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

impl SpecArgs {
    fn resolve(&self) -> Result<ClassifierSpec> {
        let spec = match (&self.spec, self.classifier) {
            (Some(p), _) => read_json::<ClassifierSpec>(p)?,
            (None, Some(k)) => ClassifierSpec::default_for(k),
            (None, None) => bail!("pass --classifier or --spec"),
        };
        Ok(match self.seed {
            Some(s) => spec.with_seed(s),
            None => spec,
        })
    }
}

#[derive(Args)]
struct SelectArgs {
    /// Preprocessed, labeled corpus (JSONL).
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output_dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    min_df: usize,
    #[arg(long, default_value_t = 0.0)]
    ig_threshold: f64,
    #[arg(long, default_value = "binary", value_parser = parse_mode)]
    mode: VectorMode,
    /// Follow the IG filter with forward selection using this classifier.
    #[arg(long)]
    wrapper: Option<ClassifierKind>,
    #[arg(long, default_value_t = 20)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    features: FeatureArgs,
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    features: FeatureArgs,
    /// Score this trained model on the corpus instead of cross-validating.
    #[arg(long, conflicts_with_all = ["classifier", "spec"])]
    model: Option<PathBuf>,
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    relabel: bool,
}

#[derive(Args)]
struct MatrixArgs {
    /// Directory of pipeline configs (`*.json`).
    #[arg(long)]
    config_dir: PathBuf,
    #[arg(long)]
    output_dir: PathBuf,
    /// First write the standard 24-config grid derived from this base config
    /// into `--config-dir`.
    #[arg(long)]
    write_grid: Option<PathBuf>,
}

fn parse_mode(s: &str) -> Result<VectorMode, String> {
    match s {
        "binary" => Ok(VectorMode::Binary),
        "tf" => Ok(VectorMode::Tf),
        _ => Err(format!("unknown vector mode `{s}` (binary or tf)")),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn pretty<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn synth(a: SynthArgs) -> Result<()> {
    let mut cfg: SynthConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => SynthConfig::default(),
    };
    cfg.n_yes = a.n_yes.unwrap_or(cfg.n_yes);
    cfg.n_no = a.n_no.unwrap_or(cfg.n_no);
    cfg.noise_rate = a.noise.unwrap_or(cfg.noise_rate);
    cfg.seed = a.seed.unwrap_or(cfg.seed);
    let corpus = generate(&cfg)?;
    write_jsonl(&corpus, &a.out)?;
    eprintln!("wrote {} documents to {}", corpus.n(), a.out.display());
    Ok(())
}

fn ingest(a: IngestArgs) -> Result<()> {
    let mut corpus = ingest_path(&a.input)?;
    if let Some(lang) = &a.lang {
        corpus = filter_language(corpus, lang);
    }
    let corpus = a.label.apply(corpus)?;
    write_jsonl(&corpus, &a.out)?;
    let [y, n, u] = corpus.class_counts();
    eprintln!("{} documents ({y} yes, {n} no, {u} unlabeled)", corpus.n());
    Ok(())
}

fn preprocess_cmd(a: PreprocessArgs) -> Result<()> {
    let cfg: PreprocessConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => PreprocessConfig::default(),
    };
    let corpus = a.label.apply(ingest_path(&a.input)?)?;
    let corpus = preprocess(corpus, &cfg)?;
    write_jsonl(&corpus, &a.out)?;
    Ok(())
}

fn select(a: SelectArgs) -> Result<()> {
    let corpus = ingest_path(&a.input)?;
    let labels = corpus.labels().context("corpus must be labeled (use --relabel when preprocessing)")?;
    let vocab = build_vocabulary(&corpus, a.min_df)?;
    let matrix = vectorize(&corpus, &vocab, a.mode);
    let scores = ig_scores(&matrix, &labels)?;
    let ig_subset = select_by_ig(&scores, a.ig_threshold)?;

    let mut files = vec![
        ("vocabulary.txt", vocab.terms().join("\n") + "\n"),
        ("matrix.txt", matrix.to_text()),
        ("ig_report.csv", ig_report_csv(&scores, &vocab)?),
    ];
    let subset = match a.wrapper {
        Some(kind) => {
            let spec = ClassifierSpec::default_for(kind).with_seed(a.seed);
            let filtered = project(&matrix, &ig_subset)?;
            let pool = FeatureSubset::all(ig_subset.len());
            let (inner, trace) = forward_select(&filtered, &labels, &spec, &pool, a.budget)?;
            files.push(("selection_trace.csv", selection_trace_csv(&trace, &vocab, Some(&ig_subset))?));
            ig_subset.compose(&inner)?
        }
        None => ig_subset,
    };
    files.push(("subset.json", pretty(&subset)));
    write_atomically(&a.output_dir, &files)?;
    eprintln!("{} of {} terms selected", subset.len(), vocab.len());
    Ok(())
}

fn train_cmd(a: TrainArgs) -> Result<()> {
    let (matrix, labels) = a.features.load()?;
    let model = train(&a.spec.resolve()?, &matrix, &labels)?;
    model.save(&a.out)?;
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let (matrix, labels) = a.features.load()?;
    let out = match &a.model {
        Some(p) => {
            let model = TrainedModel::load(p)?;
            pretty(&confusion_and_metrics(&predict(&model, &matrix)?, &labels, Label::Yes)?)
        }
        None => {
            let spec = a.spec.resolve()?;
            let plan = stratified_kfold_split(&labels, a.k, spec.seed)?;
            let r = cross_validate(&spec, &matrix, &labels, &plan)?;
            pretty(&serde_json::json!({
                "spec": r.spec,
                "folds": r.per_fold,
                "aggregate": r.aggregate,
            }))
        }
    };
    match &a.out {
        Some(p) => fs::write(p, out).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{out}"),
    }
    Ok(())
}

fn pipeline(a: PipelineArgs) -> Result<()> {
    let mut cfg = PipelineConfig::load(&a.config)?;
    if let Some(d) = a.output_dir {
        cfg.output_dir = d;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    cfg.relabel |= a.relabel;
    let o = run_pipeline(&cfg)?;
    let acc = o.report.aggregate.accuracy.to_cell();
    eprintln!(
        "{} {}: {} features (IG kept {} of {}), accuracy {acc}",
        cfg.final_spec.kind(),
        cfg.feature_selection_name(),
        o.features.len(),
        o.ig_selected,
        o.vocab_size
    );
    Ok(())
}

fn matrix(a: MatrixArgs) -> Result<()> {
    if let Some(base) = &a.write_grid {
        let written = write_grid(&a.config_dir, &PipelineConfig::load(base)?)?;
        eprintln!("wrote {} configs to {}", written.len(), a.config_dir.display());
    }
    let rows = run_matrix(&a.config_dir, &a.output_dir)?;
    let failed = rows.iter().filter(|r| r.status != "ok").count();
    eprintln!("{} runs, {failed} failed", rows.len());
    if failed > 0 {
        bail!("{failed} matrix runs failed; see summary.csv");
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    if let Ok(n) = std::env::var("INTENTMINER_THREADS") {
        let n: usize = n.parse().context("INTENTMINER_THREADS must be a positive integer")?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }

    match cli.command {
        Command::Synth(a) => synth(a),
        Command::Ingest(a) => ingest(a),
        Command::Preprocess(a) => preprocess_cmd(a),
        Command::Select(a) => select(a),
        Command::Train(a) => train_cmd(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Pipeline(a) => pipeline(a),
        Command::Matrix(a) => matrix(a),
    }
}
