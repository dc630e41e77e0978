//! End-to-end runs: ingest, label, preprocess, vectorize, select, evaluate.
//!
//! Every report is computed in memory first and then written through
//! temporary files that are renamed into place, so a failed run never
//! leaves half-written reports behind.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::classifiers::{ClassifierKind, ClassifierSpec};
use crate::corpus::{filter_language, ingest_path, label_by_seeds, preprocess, Corpus, Label, PreprocessConfig, SeedVector};
use crate::error::{Error, Result};
use crate::eval::{cross_validate, stratified_kfold_split, EvalReport, Measure, Metrics};
use crate::featsel::{
    forward_select, ig_report_csv, ig_scores, select_by_ig, selection_trace_csv, FeatureSubset, SelectionTrace,
};
use crate::vectorize::{build_vocabulary, project, vectorize, FeatureMatrix, VectorMode, Vocabulary};

pub const MANIFEST_FORMAT_VERSION: u32 = 1;

pub const IG_REPORT_FILE: &str = "ig_report.csv";
pub const TRACE_FILE: &str = "selection_trace.csv";
pub const EVAL_JSON_FILE: &str = "eval.json";
pub const EVAL_CSV_FILE: &str = "eval.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_FILE: &str = "summary.csv";

/// Which features reach the final classifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Every vocabulary term (baseline).
    None,
    /// Terms with information gain above the threshold.
    One,
    /// IG filter followed by forward selection with `wrapper_spec`.
    Two,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus_path: PathBuf,
    #[serde(default)]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub preprocess: PreprocessConfig,
    #[serde(default = "default_min_df")]
    pub min_df: usize,
    #[serde(default)]
    pub ig_threshold: f64,
    #[serde(default = "default_scheme")]
    pub scheme: Scheme,
    #[serde(default)]
    pub wrapper_spec: Option<ClassifierSpec>,
    #[serde(default = "default_final_spec")]
    pub final_spec: ClassifierSpec,
    #[serde(default = "default_ffs_budget")]
    pub ffs_budget: usize,
    #[serde(default = "default_cv_k")]
    pub cv_k: usize,
    /// Seeds the folds and both classifiers, replacing their own seeds.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub vector_mode: VectorMode,
    /// Keep only documents with this language code.
    #[serde(default)]
    pub language: Option<String>,
    /// Re-derive labels from `seeds` even when the corpus is labeled.
    #[serde(default)]
    pub relabel: bool,
    #[serde(default)]
    pub seeds: SeedVector,
    /// Wall time is left out by default so reports are reproducible.
    #[serde(default)]
    pub record_wall_time: bool,
}

fn default_min_df() -> usize {
    1
}
fn default_scheme() -> Scheme {
    Scheme::One
}
fn default_final_spec() -> ClassifierSpec {
    ClassifierSpec::default_for(ClassifierKind::Dt)
}
fn default_ffs_budget() -> usize {
    20
}
fn default_cv_k() -> usize {
    10
}

impl PipelineConfig {
    pub fn new(corpus_path: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            corpus_path: corpus_path.into(),
            output_dir: output_dir.into(),
            preprocess: PreprocessConfig::default(),
            min_df: default_min_df(),
            ig_threshold: 0.0,
            scheme: default_scheme(),
            wrapper_spec: None,
            final_spec: default_final_spec(),
            ffs_budget: default_ffs_budget(),
            cv_k: default_cv_k(),
            seed: 0,
            vector_mode: VectorMode::default(),
            language: None,
            relabel: false,
            seeds: SeedVector::default(),
            record_wall_time: false,
        }
    }

    /// Parses a config document. A run manifest is accepted too: its
    /// `config` member is used, which makes any manifest replayable.
    pub fn from_json(text: &str) -> Result<Self> {
        let mut value: Value = serde_json::from_str(text)?;
        if value.get("manifest_format_version").is_some() {
            value = value.get_mut("config").map(Value::take).unwrap_or(Value::Null);
        }
        let config: PipelineConfig = serde_json::from_value(value)?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.corpus_path.as_os_str().is_empty() {
            return Err(Error::Config("`corpus_path` must be set".into()));
        }
        if !self.corpus_path.is_file() {
            return Err(Error::Config(format!("`corpus_path` {} is not a readable file", self.corpus_path.display())));
        }
        if self.output_dir.as_os_str().is_empty() {
            return Err(Error::Config("`output_dir` must be set".into()));
        }
        if self.cv_k < 2 {
            return Err(Error::Config(format!("`cv_k` must be >= 2, got {}", self.cv_k)));
        }
        if self.min_df == 0 {
            return Err(Error::Config("`min_df` must be >= 1".into()));
        }
        if !self.ig_threshold.is_finite() || self.ig_threshold < 0.0 {
            return Err(Error::Config(format!("`ig_threshold` must be finite and >= 0, got {}", self.ig_threshold)));
        }
        if self.scheme == Scheme::Two {
            if self.wrapper_spec.is_none() {
                return Err(Error::Config("scheme two requires `wrapper_spec`".into()));
            }
            if self.ffs_budget == 0 {
                return Err(Error::Config("`ffs_budget` must be >= 1".into()));
            }
        }
        self.final_spec.params.validate()?;
        if let Some(w) = &self.wrapper_spec {
            w.params.validate()?;
        }
        Ok(())
    }

    /// Final classifier with the pipeline seed applied.
    pub fn effective_final_spec(&self) -> ClassifierSpec {
        self.final_spec.clone().with_seed(self.seed)
    }

    pub fn effective_wrapper_spec(&self) -> Option<ClassifierSpec> {
        self.wrapper_spec.clone().map(|s| s.with_seed(self.seed))
    }

    /// Row label in summary tables: `all-features`, `ig` or `ig+<wrapper>`.
    pub fn feature_selection_name(&self) -> String {
        match (self.scheme, &self.wrapper_spec) {
            (Scheme::None, _) => "all-features".into(),
            (Scheme::One, _) => "ig".into(),
            (Scheme::Two, Some(w)) => format!("ig+{}", w.kind().as_str()),
            (Scheme::Two, None) => "ig+?".into(),
        }
    }
}

/// Corpus after ingest, labeling and preprocessing, with its matrix.
pub struct Prepared {
    pub corpus: Corpus,
    pub labels: Vec<Label>,
    pub vocab: Vocabulary,
    pub matrix: FeatureMatrix,
    pub relabeled: bool,
}

/// Runs the data stages shared by every scheme.
pub fn prepare(config: &PipelineConfig) -> Result<Prepared> {
    let mut corpus = ingest_path(&config.corpus_path).map_err(|e| e.in_stage("ingest"))?;
    if let Some(lang) = &config.language {
        corpus = filter_language(corpus, lang);
    }
    let relabeled = config.relabel || !corpus.is_fully_labeled();
    if relabeled {
        if !config.relabel && corpus.class_counts()[2] < corpus.n() {
            log::warn!("corpus is partially labeled; relabeling every document from seeds");
        }
        corpus = label_by_seeds(corpus, &config.seeds);
    }
    let corpus = preprocess(corpus, &config.preprocess).map_err(|e| e.in_stage("preprocess"))?;
    let labels = corpus.labels().map_err(|e| e.in_stage("label"))?;
    let vocab = build_vocabulary(&corpus, config.min_df).map_err(|e| e.in_stage("vocabulary"))?;
    let matrix = vectorize(&corpus, &vocab, config.vector_mode);
    Ok(Prepared {
        corpus,
        labels,
        vocab,
        matrix,
        relabeled,
    })
}

/// Everything a run produced, before or after it was written.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub config: PipelineConfig,
    pub report: EvalReport,
    /// Vocabulary terms of the final features, in column order.
    pub features: Vec<String>,
    pub vocab_size: usize,
    /// Terms surviving the IG filter (the whole vocabulary for scheme none).
    pub ig_selected: usize,
    pub trace: Option<SelectionTrace>,
    pub class_counts: [usize; 2],
    pub relabeled: bool,
    files: Vec<(&'static str, String)>,
}

impl RunOutcome {
    /// Share of the vocabulary removed by the IG filter.
    pub fn ig_cut_fraction(&self) -> f64 {
        1.0 - self.ig_selected as f64 / self.vocab_size as f64
    }

    /// Report file contents keyed by file name, in write order.
    pub fn files(&self) -> &[(&'static str, String)] {
        &self.files
    }

    pub fn eval_csv_row(&self) -> Vec<String> {
        let a = &self.report.aggregate;
        vec![
            self.config.final_spec.kind().as_str().to_string(),
            self.config.feature_selection_name(),
            a.recall.to_cell(),
            a.precision.to_cell(),
            a.f_measure.to_cell(),
            a.accuracy.to_cell(),
        ]
    }
}

/// Runs the configured scheme and writes its reports into `output_dir`.
pub fn run_pipeline(config: &PipelineConfig) -> Result<RunOutcome> {
    let outcome = compute(config)?;
    write_atomically(&config.output_dir, outcome.files()).map_err(|e| e.in_stage("write"))?;
    Ok(outcome)
}

/// Same as [`run_pipeline`] without touching the file system.
pub fn compute(config: &PipelineConfig) -> Result<RunOutcome> {
    config.validate()?;
    let prep = prepare(config)?;
    let Prepared {
        corpus,
        labels,
        vocab,
        matrix,
        relabeled,
    } = prep;
    let [n_yes, n_no, _] = corpus.class_counts();
    log::info!("{} documents ({n_yes} yes / {n_no} no), {} terms", corpus.n(), vocab.len());

    let scores = ig_scores(&matrix, &labels).map_err(|e| e.in_stage("ig"))?;
    let ig_csv = ig_report_csv(&scores, &vocab)?;
    let ig_subset = match config.scheme {
        Scheme::None => FeatureSubset::all(vocab.len()),
        _ => select_by_ig(&scores, config.ig_threshold).map_err(|e| e.in_stage("ig"))?,
    };
    log::info!("IG filter keeps {} of {} terms", ig_subset.len(), vocab.len());

    let mut trace = None;
    let mut trace_csv = None;
    let subset = if config.scheme == Scheme::Two {
        let wrapper = config.effective_wrapper_spec().expect("validated");
        let filtered = project(&matrix, &ig_subset)?;
        let pool = FeatureSubset::all(ig_subset.len());
        let (inner, t) = forward_select(&filtered, &labels, &wrapper, &pool, config.ffs_budget)
            .map_err(|e| e.in_stage("forward_select"))?;
        log::info!("forward selection keeps {} features", inner.len());
        trace_csv = Some(selection_trace_csv(&t, &vocab, Some(&ig_subset))?);
        trace = Some(t);
        ig_subset.compose(&inner)?
    } else {
        ig_subset.clone()
    };

    let final_matrix = project(&matrix, &subset)?;
    let plan = stratified_kfold_split(&labels, config.cv_k, config.seed).map_err(|e| e.in_stage("evaluate"))?;
    let mut report = cross_validate(&config.effective_final_spec(), &final_matrix, &labels, &plan)
        .map_err(|e| e.in_stage("evaluate"))?;
    report.feature_subset = subset.clone();
    let features: Vec<String> = subset
        .indices()
        .iter()
        .map(|&i| vocab.term(i).expect("in range").to_string())
        .collect();

    let mut outcome = RunOutcome {
        config: config.clone(),
        report,
        features,
        vocab_size: vocab.len(),
        ig_selected: ig_subset.len(),
        trace,
        class_counts: [n_yes, n_no],
        relabeled,
        files: Vec::new(),
    };
    let mut files = vec![(IG_REPORT_FILE, ig_csv)];
    if let Some(t) = trace_csv {
        files.push((TRACE_FILE, t));
    }
    files.push((EVAL_JSON_FILE, eval_json(&outcome)));
    files.push((EVAL_CSV_FILE, eval_csv(&[outcome.eval_csv_row()], false)?));
    let names: Vec<&str> = files.iter().map(|(n, _)| *n).chain([MANIFEST_FILE]).collect();
    files.push((MANIFEST_FILE, manifest_json(&outcome, &names)));
    outcome.files = files;
    Ok(outcome)
}

fn eval_json(o: &RunOutcome) -> String {
    let wall = if o.config.record_wall_time {
        json!(o.report.wall_time)
    } else {
        Value::Null
    };
    let v = json!({
        "spec": o.report.spec,
        "feature_selection": o.config.feature_selection_name(),
        "features": o.features,
        "folds": o.report.per_fold,
        "aggregate": o.report.aggregate,
        "wall_time_s": wall,
    });
    serde_json::to_string_pretty(&v).expect("report serializes") + "\n"
}

fn manifest_json(o: &RunOutcome, outputs: &[&str]) -> String {
    let v = json!({
        "manifest_format_version": MANIFEST_FORMAT_VERSION,
        "tool": {"name": "intentminer", "version": env!("CARGO_PKG_VERSION")},
        "config": o.config,
        "corpus": {
            "n_docs": o.class_counts[0] + o.class_counts[1],
            "n_yes": o.class_counts[0],
            "n_no": o.class_counts[1],
            "relabeled": o.relabeled,
        },
        "features": {
            "vocabulary_size": o.vocab_size,
            "ig_selected": o.ig_selected,
            "ig_cut_fraction": o.ig_cut_fraction(),
            "final": o.features.len(),
        },
        "outputs": outputs,
    });
    serde_json::to_string_pretty(&v).expect("manifest serializes") + "\n"
}

const EVAL_HEADER: [&str; 6] = ["classifier", "feature_selection", "recall", "precision", "f_measure", "accuracy"];

fn eval_csv(rows: &[Vec<String>], extra: bool) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if extra {
        let mut h: Vec<&str> = EVAL_HEADER.to_vec();
        h.extend(["n_features", "status"]);
        w.write_record(h)?;
    } else {
        w.write_record(EVAL_HEADER)?;
    }
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Writes every file under a temporary name, then renames them all. A
/// failure while writing removes the temporaries and leaves existing
/// reports untouched.
pub fn write_atomically(dir: &Path, files: &[(&str, String)]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut staged = Vec::with_capacity(files.len());
    for (name, content) in files {
        let tmp = dir.join(format!(".{name}.tmp"));
        if let Err(e) = fs::write(&tmp, content) {
            for (t, _) in &staged {
                let _ = fs::remove_file(t);
            }
            return Err(Error::io(tmp, e));
        }
        staged.push((tmp, dir.join(name)));
    }
    for (tmp, dest) in staged {
        fs::rename(&tmp, &dest).map_err(|e| Error::io(dest, e))?;
    }
    Ok(())
}

/// Fixed row order of summary tables.
pub const FEATURE_SELECTION_ORDER: [&str; 6] = ["all-features", "ig", "ig+nb", "ig+svm", "ig+ann", "ig+dt"];

/// One summary row per configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub name: String,
    pub classifier: String,
    pub feature_selection: String,
    pub aggregate: Option<Metrics>,
    pub n_features: Option<usize>,
    pub status: String,
}

fn sort_key(row: &SummaryRow) -> (usize, usize, String) {
    let fs = FEATURE_SELECTION_ORDER
        .iter()
        .position(|f| *f == row.feature_selection)
        .unwrap_or(FEATURE_SELECTION_ORDER.len());
    let clf = ClassifierKind::ALL
        .iter()
        .position(|k| k.as_str() == row.classifier)
        .unwrap_or(ClassifierKind::ALL.len());
    (fs, clf, row.name.clone())
}

/// Runs every `*.json` config in `config_dir` (in file-name order), each
/// into `output_dir/<file stem>`, and writes `output_dir/summary.csv`.
/// Failed runs still get a row with `NA` metrics and the error as status.
pub fn run_matrix(config_dir: &Path, output_dir: &Path) -> Result<Vec<SummaryRow>> {
    let entries = fs::read_dir(config_dir).map_err(|e| Error::io(config_dir, e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Config(format!("no *.json configs in {}", config_dir.display())));
    }

    let mut rows = Vec::with_capacity(paths.len());
    for path in &paths {
        let name = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        let loaded = PipelineConfig::load(path);
        let (classifier, feature_selection) = match &loaded {
            Ok(c) => (c.final_spec.kind().as_str().to_string(), c.feature_selection_name()),
            Err(_) => ("?".to_string(), "?".to_string()),
        };
        let result = loaded.and_then(|mut c| {
            c.output_dir = output_dir.join(&name);
            run_pipeline(&c)
        });
        log::info!("matrix run {name}: {}", if result.is_ok() { "ok" } else { "failed" });
        rows.push(match result {
            Ok(o) => SummaryRow {
                name,
                classifier,
                feature_selection,
                aggregate: Some(o.report.aggregate.clone()),
                n_features: Some(o.features.len()),
                status: "ok".into(),
            },
            Err(e) => SummaryRow {
                name,
                classifier,
                feature_selection,
                aggregate: None,
                n_features: None,
                status: format!("error: {e}"),
            },
        });
    }
    rows.sort_by_key(sort_key);
    write_atomically(output_dir, &[(SUMMARY_FILE, summary_csv(&rows)?)])?;
    Ok(rows)
}

pub fn summary_csv(rows: &[SummaryRow]) -> Result<String> {
    let na = Measure::Undefined {
        undefined: "run failed".into(),
    };
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let m = |f: fn(&Metrics) -> &Measure| r.aggregate.as_ref().map_or(&na, f).to_cell();
            vec![
                r.classifier.clone(),
                r.feature_selection.clone(),
                m(|a| &a.recall),
                m(|a| &a.precision),
                m(|a| &a.f_measure),
                m(|a| &a.accuracy),
                r.n_features.map_or("NA".into(), |n| n.to_string()),
                r.status.clone(),
            ]
        })
        .collect();
    eval_csv(&cells, true)
}

/// The 6 x 4 grid of feature selection by final classifier, derived from
/// `base`. Names sort in summary order.
pub fn standard_grid(base: &PipelineConfig) -> Vec<(String, PipelineConfig)> {
    let mut out = Vec::with_capacity(24);
    for (fi, fs) in FEATURE_SELECTION_ORDER.iter().enumerate() {
        for (ci, kind) in ClassifierKind::ALL.iter().enumerate() {
            let mut c = base.clone();
            c.final_spec = ClassifierSpec::default_for(*kind);
            (c.scheme, c.wrapper_spec) = match *fs {
                "all-features" => (Scheme::None, None),
                "ig" => (Scheme::One, None),
                w => {
                    let k: ClassifierKind = w.trim_start_matches("ig+").parse().expect("known kind");
                    (Scheme::Two, Some(ClassifierSpec::default_for(k)))
                }
            };
            if let Some(base_final) = Some(&base.final_spec).filter(|s| s.kind() == *kind) {
                c.final_spec = base_final.clone();
            }
            out.push((format!("{:02}-{fs}-{}", fi * 4 + ci + 1, kind.as_str()), c));
        }
    }
    out
}

/// Writes [`standard_grid`] as one JSON file per configuration.
pub fn write_grid(dir: &Path, base: &PipelineConfig) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    standard_grid(base)
        .into_iter()
        .map(|(name, c)| {
            let path = dir.join(format!("{name}.json"));
            fs::write(&path, c.to_json() + "\n").map_err(|e| Error::io(&path, e))?;
            Ok(path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::write_jsonl;
    use crate::synth::{generate, SynthConfig};

    fn small_corpus(dir: &Path) -> PathBuf {
        let cfg = SynthConfig {
            n_yes: 60,
            n_no: 40,
            ..Default::default()
        };
        let path = dir.join("corpus.jsonl");
        write_jsonl(&generate(&cfg).unwrap(), &path).unwrap();
        path
    }

    #[test]
    fn config_defaults_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = PipelineConfig::from_json(r#"{"corpus_path": "x.jsonl", "output_dir": "out"}"#).unwrap();
        assert_eq!(c.cv_k, 10);
        assert_eq!(c.ig_threshold, 0.0);
        assert_eq!(c.scheme, Scheme::One);
        assert_eq!(c.ffs_budget, 20);
        assert!(c.validate().unwrap_err().to_string().contains("corpus_path"));
        c.corpus_path = small_corpus(dir.path());
        c.validate().unwrap();

        let missing = PipelineConfig::new("", "out").validate().unwrap_err();
        assert!(missing.to_string().contains("corpus_path"));
        let mut two = c.clone();
        two.scheme = Scheme::Two;
        assert!(two.validate().is_err());
        let mut k = c.clone();
        k.cv_k = 1;
        assert!(k.validate().is_err());
        assert!(PipelineConfig::from_json(r#"{"corpus_path": "x", "bogus": 1}"#).is_err());
    }

    #[test]
    fn grid_shape() {
        let dir = tempfile::tempdir().unwrap();
        let grid = standard_grid(&PipelineConfig::new(small_corpus(dir.path()), "out"));
        assert_eq!(grid.len(), 24);
        assert_eq!(grid[0].0, "01-all-features-dt");
        assert_eq!(grid[23].0, "24-ig+dt-ann");
        assert_eq!(grid[9].1.feature_selection_name(), "ig+nb");
        for (_, c) in &grid {
            c.validate().unwrap();
        }
    }

    #[test]
    fn scheme_one_writes_reports_and_replays() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = small_corpus(dir.path());
        let mut cfg = PipelineConfig::new(&corpus, dir.path().join("run"));
        cfg.cv_k = 5;
        let o = run_pipeline(&cfg).unwrap();
        for f in [IG_REPORT_FILE, EVAL_JSON_FILE, EVAL_CSV_FILE, MANIFEST_FILE] {
            assert!(cfg.output_dir.join(f).exists(), "{f}");
        }
        assert!(!cfg.output_dir.join(TRACE_FILE).exists());
        assert_eq!(o.ig_selected, 11);

        let manifest = fs::read_to_string(cfg.output_dir.join(MANIFEST_FILE)).unwrap();
        let replay = PipelineConfig::from_json(&manifest).unwrap();
        assert_eq!(replay, cfg);
        let again = compute(&replay).unwrap();
        assert_eq!(again.files(), o.files());
    }

    #[test]
    fn scheme_two_trace() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = PipelineConfig::new(small_corpus(dir.path()), dir.path().join("run"));
        cfg.scheme = Scheme::Two;
        cfg.wrapper_spec = Some(ClassifierSpec::default_for(ClassifierKind::Nb));
        cfg.ffs_budget = 5;
        cfg.cv_k = 5;
        let o = run_pipeline(&cfg).unwrap();
        assert!(cfg.output_dir.join(TRACE_FILE).exists());
        let t = o.trace.unwrap();
        assert!(t.chosen_size <= 5);
        assert_eq!(o.features.len(), t.chosen_size);
    }

    #[test]
    fn stage_errors_leave_no_reports() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = PipelineConfig::new(dir.path().join("missing.jsonl"), dir.path().join("run"));
        let err = run_pipeline(&cfg).unwrap_err();
        assert!(err.to_string().contains("corpus_path"), "{err}");
        assert!(!cfg.output_dir.exists());

        let bad = dir.path().join("bad.jsonl");
        fs::write(&bad, "{\"id\": \"a\", \"text\": \"x\"}\nnot json\n").unwrap();
        let cfg = PipelineConfig::new(&bad, dir.path().join("run"));
        let err = run_pipeline(&cfg).unwrap_err();
        assert!(err.to_string().contains("stage `ingest`"), "{err}");
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(!cfg.output_dir.exists());
    }

    #[test]
    fn matrix_summary_rows() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = small_corpus(dir.path());
        let configs = dir.path().join("configs");
        let mut base = PipelineConfig::new(&corpus, "unused");
        base.cv_k = 3;
        let mut broken = base.clone();
        broken.corpus_path = dir.path().join("nope.jsonl");
        fs::create_dir_all(&configs).unwrap();
        fs::write(configs.join("b.json"), base.to_json()).unwrap();
        fs::write(configs.join("a.json"), broken.to_json()).unwrap();
        fs::write(configs.join("notes.txt"), "ignored").unwrap();
        let out = dir.path().join("out");
        let rows = run_matrix(&configs, &out).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].name, "a");
        assert!(rows[0].status.starts_with("error"));
        assert_eq!(rows[1].status, "ok");
        let summary = fs::read_to_string(out.join(SUMMARY_FILE)).unwrap();
        assert_eq!(summary.lines().count(), 3);
        assert!(summary.lines().nth(1).unwrap().contains(",NA,"));

        let empty = dir.path().join("empty");
        fs::create_dir_all(&empty).unwrap();
        assert!(run_matrix(&empty, &out).is_err());
    }
}
