//! The four supervised learners behind one train / predict contract.
//!
//! Training rows are put in a canonical order (sorted by feature vector, then
//! label) before any learner sees them, so every trained model is a function
//! of the multiset of training rows and the seed. Leave-one-out evaluation
//! relies on this to share work between identical rows.

pub mod ann;
pub mod dt;
pub mod nb;
pub mod svm;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::vectorize::FeatureMatrix;

pub use ann::{AnnModel, AnnParams, Mlp, MlpGradient};
pub use dt::{gini_impurity, DecisionTree, DtParams, TreeNode};
pub use nb::{EventModel, NaiveBayes, NbParams};
pub use svm::{rbf_kernel, smo_solve, SmoSolution, SvmModel, SvmParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Dt,
    Nb,
    Svm,
    Ann,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 4] = [
        ClassifierKind::Dt,
        ClassifierKind::Nb,
        ClassifierKind::Svm,
        ClassifierKind::Ann,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::Dt => "dt",
            ClassifierKind::Nb => "nb",
            ClassifierKind::Svm => "svm",
            ClassifierKind::Ann => "ann",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.as_str().to_uppercase())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dt" => Ok(ClassifierKind::Dt),
            "nb" => Ok(ClassifierKind::Nb),
            "svm" => Ok(ClassifierKind::Svm),
            "ann" => Ok(ClassifierKind::Ann),
            other => Err(Error::InvalidParams(format!("unknown classifier kind `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ClassifierParams {
    Dt(DtParams),
    Nb(NbParams),
    Svm(SvmParams),
    Ann(AnnParams),
}

impl ClassifierParams {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            ClassifierParams::Dt(_) => ClassifierKind::Dt,
            ClassifierParams::Nb(_) => ClassifierKind::Nb,
            ClassifierParams::Svm(_) => ClassifierKind::Svm,
            ClassifierParams::Ann(_) => ClassifierKind::Ann,
        }
    }

    pub fn default_for(kind: ClassifierKind) -> Self {
        match kind {
            ClassifierKind::Dt => ClassifierParams::Dt(DtParams::default()),
            ClassifierKind::Nb => ClassifierParams::Nb(NbParams::default()),
            ClassifierKind::Svm => ClassifierParams::Svm(SvmParams::default()),
            ClassifierKind::Ann => ClassifierParams::Ann(AnnParams::default()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ClassifierParams::Dt(p) => p.validate(),
            ClassifierParams::Nb(p) => p.validate(),
            ClassifierParams::Svm(p) => p.validate(),
            ClassifierParams::Ann(p) => p.validate(),
        }
    }
}

/// A learner kind, its hyperparameters and the seed for any randomness.
///
/// JSON form: `{"kind": "svm", "params": {"gamma": 1.0}, "seed": 7}`, with
/// `params` fields and `seed` optional.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct ClassifierSpec {
    pub params: ClassifierParams,
    pub seed: u64,
}

impl ClassifierSpec {
    pub fn new(params: ClassifierParams, seed: u64) -> Result<Self> {
        params.validate()?;
        Ok(ClassifierSpec { params, seed })
    }

    /// Default hyperparameters for `kind`, seed 0.
    pub fn default_for(kind: ClassifierKind) -> Self {
        ClassifierSpec {
            params: ClassifierParams::default_for(kind),
            seed: 0,
        }
    }

    pub fn kind(&self) -> ClassifierKind {
        self.params.kind()
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    kind: ClassifierKind,
    #[serde(default)]
    params: Option<serde_json::Value>,
    #[serde(default)]
    seed: u64,
}

impl TryFrom<RawSpec> for ClassifierSpec {
    type Error = String;

    fn try_from(raw: RawSpec) -> std::result::Result<Self, String> {
        let value = raw.params.unwrap_or_else(|| serde_json::json!({}));
        let params = match raw.kind {
            ClassifierKind::Dt => serde_json::from_value(value).map(ClassifierParams::Dt),
            ClassifierKind::Nb => serde_json::from_value(value).map(ClassifierParams::Nb),
            ClassifierKind::Svm => serde_json::from_value(value).map(ClassifierParams::Svm),
            ClassifierKind::Ann => serde_json::from_value(value).map(ClassifierParams::Ann),
        }
        .map_err(|e| format!("{} params: {e}", raw.kind.as_str()))?;
        ClassifierSpec::new(params, raw.seed).map_err(|e| e.to_string())
    }
}

impl From<ClassifierSpec> for RawSpec {
    fn from(spec: ClassifierSpec) -> Self {
        let params = match &spec.params {
            ClassifierParams::Dt(p) => serde_json::to_value(p),
            ClassifierParams::Nb(p) => serde_json::to_value(p),
            ClassifierParams::Svm(p) => serde_json::to_value(p),
            ClassifierParams::Ann(p) => serde_json::to_value(p),
        }
        .expect("params serialize");
        RawSpec {
            kind: spec.kind(),
            params: Some(params),
            seed: spec.seed,
        }
    }
}

/// Training rows after validation and canonical ordering.
pub(crate) struct TrainingSet<'a> {
    pub rows: Vec<&'a [(usize, u32)]>,
    pub labels: Vec<Label>,
    pub n_features: usize,
}

impl<'a> TrainingSet<'a> {
    fn new(matrix: &'a FeatureMatrix, labels: &[Label]) -> Result<Self> {
        if labels.len() != matrix.n_rows() {
            return Err(Error::LabelCount {
                expected: matrix.n_rows(),
                actual: labels.len(),
            });
        }
        let mut seen = [false; 2];
        for l in labels {
            seen[l.index()] = true;
        }
        if !(seen[0] && seen[1]) {
            return Err(Error::SingleClass);
        }
        let mut order: Vec<usize> = (0..matrix.n_rows()).collect();
        order.sort_by(|&a, &b| matrix.row(a).cmp(matrix.row(b)).then(labels[a].cmp(&labels[b])));
        Ok(TrainingSet {
            rows: order.iter().map(|&i| matrix.row(i)).collect(),
            labels: order.iter().map(|&i| labels[i]).collect(),
            n_features: matrix.n_cols(),
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn dense(&self, i: usize) -> Vec<f64> {
        dense(self.rows[i], self.n_features)
    }
}

pub(crate) fn dense(row: &[(usize, u32)], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for &(c, v) in row {
        out[c] = v as f64;
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TrainedModel {
    Dt(DecisionTree),
    Nb(NaiveBayes),
    Svm(SvmModel),
    Ann(AnnModel),
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    #[serde(flatten)]
    model: TrainedModel,
}

impl TrainedModel {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            TrainedModel::Dt(_) => ClassifierKind::Dt,
            TrainedModel::Nb(_) => ClassifierKind::Nb,
            TrainedModel::Svm(_) => ClassifierKind::Svm,
            TrainedModel::Ann(_) => ClassifierKind::Ann,
        }
    }

    /// Number of feature columns seen at fit time.
    pub fn n_features(&self) -> usize {
        match self {
            TrainedModel::Dt(m) => m.n_features(),
            TrainedModel::Nb(m) => m.n_features(),
            TrainedModel::Svm(m) => m.n_features(),
            TrainedModel::Ann(m) => m.n_features(),
        }
    }

    pub fn predict_row(&self, row: &[(usize, u32)]) -> Label {
        match self {
            TrainedModel::Dt(m) => m.predict_row(row),
            TrainedModel::Nb(m) => m.predict_row(row),
            TrainedModel::Svm(m) => m.predict_row(row),
            TrainedModel::Ann(m) => m.predict_row(row),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported format_version {} (expected {MODEL_FORMAT_VERSION})",
                file.format_version
            )));
        }
        Ok(file.model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Fits a model. Requires one label per row and both classes present.
pub fn train(spec: &ClassifierSpec, matrix: &FeatureMatrix, labels: &[Label]) -> Result<TrainedModel> {
    spec.params.validate()?;
    let data = TrainingSet::new(matrix, labels)?;
    Ok(match &spec.params {
        ClassifierParams::Dt(p) => TrainedModel::Dt(DecisionTree::fit(p, &data)?),
        ClassifierParams::Nb(p) => TrainedModel::Nb(NaiveBayes::fit(p, &data)?),
        ClassifierParams::Svm(p) => TrainedModel::Svm(SvmModel::fit(p, &data)?),
        ClassifierParams::Ann(p) => TrainedModel::Ann(AnnModel::fit(p, spec.seed, &data)?),
    })
}

/// Predicts one label per row.
pub fn predict(model: &TrainedModel, matrix: &FeatureMatrix) -> Result<Vec<Label>> {
    if matrix.n_cols() != model.n_features() {
        return Err(Error::DimensionMismatch {
            expected: model.n_features(),
            actual: matrix.n_cols(),
        });
    }
    use rayon::prelude::*;
    Ok(matrix.rows().par_iter().map(|r| model.predict_row(r)).collect())
}
