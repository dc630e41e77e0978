//! Stratified k-fold evaluation and confusion-matrix metrics.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{predict, train, ClassifierSpec};
use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::featsel::FeatureSubset;
use crate::vectorize::FeatureMatrix;

/// Row-to-fold assignment.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    /// Rows of fold `f`, ascending.
    pub fn test_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] == fold).collect()
    }

    /// Rows outside fold `f`, ascending.
    pub fn train_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] != fold).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k < 2 || k > n {
        return Err(Error::InvalidFolds(format!("need 2 <= k <= n, got k = {k}, n = {n}")));
    }
    Ok(())
}

fn round_robin(order: &[usize], n: usize, k: usize, seed: u64) -> FoldPlan {
    let mut assignments = vec![0; n];
    for (pos, &row) in order.iter().enumerate() {
        assignments[row] = pos % k;
    }
    FoldPlan { k, assignments, seed }
}

/// Seeded shuffle of `0..n`, then round-robin assignment.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    check_k(n, k)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(round_robin(&order, n, k, seed))
}

/// Like [`kfold_split`] but each class is shuffled separately and the
/// classes are dealt out one after the other, so every fold gets a
/// near-proportional share of both classes. Fold sizes still differ by at
/// most one.
pub fn stratified_kfold_split(labels: &[Label], k: usize, seed: u64) -> Result<FoldPlan> {
    let n = labels.len();
    check_k(n, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order = Vec::with_capacity(n);
    for class in Label::ALL {
        let mut rows: Vec<usize> = (0..n).filter(|&i| labels[i] == class).collect();
        rows.shuffle(&mut rng);
        order.extend(rows);
    }
    Ok(round_robin(&order, n, k, seed))
}

/// A ratio that may be undefined because its denominator is zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Measure {
    Defined(f64),
    Undefined { undefined: String },
}

impl Measure {
    fn ratio(num: usize, den: usize, reason: &str) -> Measure {
        if den == 0 {
            Measure::Undefined {
                undefined: reason.to_string(),
            }
        } else {
            Measure::Defined(num as f64 / den as f64)
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Measure::Defined(v) => Some(*v),
            Measure::Undefined { .. } => None,
        }
    }

    /// Numeric value, or `NA` when undefined.
    pub fn to_cell(&self) -> String {
        match self {
            Measure::Defined(v) => v.to_string(),
            Measure::Undefined { .. } => "NA".to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub recall: Measure,
    pub precision: Measure,
    #[serde(rename = "f")]
    pub f_measure: Measure,
    pub accuracy: Measure,
}

impl Metrics {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize) -> Metrics {
        let recall = Measure::ratio(tp, tp + fn_, "no positive rows (tp + fn = 0)");
        let precision = Measure::ratio(tp, tp + fp, "no positive predictions (tp + fp = 0)");
        let f_measure = match (precision.value(), recall.value()) {
            (Some(p), Some(r)) if p + r > 0.0 => Measure::Defined(2.0 * p * r / (p + r)),
            (Some(_), Some(_)) => Measure::Undefined {
                undefined: "precision + recall = 0".into(),
            },
            _ => Measure::Undefined {
                undefined: "precision or recall undefined".into(),
            },
        };
        let accuracy = Measure::ratio(tp + tn, tp + fp + fn_ + tn, "no rows");
        Metrics {
            tp,
            fp,
            fn_,
            tn,
            recall,
            precision,
            f_measure,
            accuracy,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// Confusion counts with `positive` as the positive class, plus the ratios.
pub fn confusion_and_metrics(predicted: &[Label], truth: &[Label], positive: Label) -> Result<Metrics> {
    if predicted.len() != truth.len() {
        return Err(Error::LabelCount {
            expected: truth.len(),
            actual: predicted.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::TooFewRows(0));
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (p, t) in predicted.iter().zip(truth) {
        match (*p == positive, *t == positive) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    Ok(Metrics::from_counts(tp, fp, fn_, tn))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub spec: ClassifierSpec,
    pub feature_subset: FeatureSubset,
    pub per_fold: Vec<Metrics>,
    /// Metrics of the pooled confusion counts.
    pub aggregate: Metrics,
    pub wall_time: f64,
}

/// Trains on each fold's complement and predicts the fold. Folds run in
/// parallel; results are kept in fold order. Positive class is `Yes`.
pub fn cross_validate(
    spec: &ClassifierSpec,
    matrix: &FeatureMatrix,
    labels: &[Label],
    plan: &FoldPlan,
) -> Result<EvalReport> {
    let start = Instant::now();
    if labels.len() != matrix.n_rows() || plan.assignments.len() != matrix.n_rows() {
        return Err(Error::LabelCount {
            expected: matrix.n_rows(),
            actual: labels.len().min(plan.assignments.len()),
        });
    }
    if !Label::ALL.iter().all(|c| labels.contains(c)) {
        return Err(Error::SingleClass);
    }
    let per_fold: Vec<Metrics> = (0..plan.k)
        .into_par_iter()
        .map(|fold| {
            let wrap = |e: Error| Error::Fold {
                fold,
                source: Box::new(e),
            };
            let train_rows = plan.train_rows(fold);
            let test_rows = plan.test_rows(fold);
            let y_train: Vec<Label> = train_rows.iter().map(|&i| labels[i]).collect();
            let y_test: Vec<Label> = test_rows.iter().map(|&i| labels[i]).collect();
            let model = train(spec, &matrix.select_rows(&train_rows), &y_train).map_err(wrap)?;
            let predicted = predict(&model, &matrix.select_rows(&test_rows)).map_err(wrap)?;
            confusion_and_metrics(&predicted, &y_test, Label::Yes).map_err(wrap)
        })
        .collect::<Result<_>>()?;

    let sum = |f: fn(&Metrics) -> usize| per_fold.iter().map(f).sum::<usize>();
    let aggregate = Metrics::from_counts(sum(|m| m.tp), sum(|m| m.fp), sum(|m| m.fn_), sum(|m| m.tn));
    Ok(EvalReport {
        spec: spec.clone(),
        feature_subset: FeatureSubset::all(matrix.n_cols()),
        per_fold,
        aggregate,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{ClassifierKind, ClassifierParams, DtParams};
    use crate::featsel::loocv_accuracy;
    use crate::vectorize::VectorMode;
    use proptest::prelude::*;
    use Label::{No, Yes};

    #[test]
    fn fold_sizes() {
        let p = kfold_split(10, 10, 1).unwrap();
        assert_eq!(p.fold_sizes(), vec![1; 10]);
        let p = kfold_split(5896, 10, 7).unwrap();
        let mut sizes = p.fold_sizes();
        sizes.sort_unstable();
        assert_eq!(sizes, [vec![589; 4], vec![590; 6]].concat());
        assert!(kfold_split(3, 5, 0).is_err());
        assert!(kfold_split(3, 1, 0).is_err());
    }

    #[test]
    fn stratified_folds_balance_classes() {
        let labels: Vec<Label> = (0..100).map(|i| if i < 59 { Yes } else { No }).collect();
        let p = stratified_kfold_split(&labels, 10, 3).unwrap();
        for f in 0..10 {
            let rows = p.test_rows(f);
            let yes = rows.iter().filter(|&&i| labels[i] == Yes).count();
            assert!((5..=6).contains(&yes), "fold {f}: {yes}");
            assert_eq!(rows.len(), 10);
        }
        assert_eq!(p, stratified_kfold_split(&labels, 10, 3).unwrap());
    }

    #[test]
    fn metric_examples() {
        let m = Metrics::from_counts(8, 2, 1, 9);
        assert_eq!(m.precision, Measure::Defined(0.8));
        assert!((m.recall.value().unwrap() - 0.8889).abs() < 1e-4);
        assert!((m.f_measure.value().unwrap() - 0.8421).abs() < 1e-4);
        assert_eq!(m.accuracy, Measure::Defined(0.85));

        let perfect = confusion_and_metrics(&[Yes, No, Yes], &[Yes, No, Yes], Yes).unwrap();
        for v in [&perfect.recall, &perfect.precision, &perfect.f_measure, &perfect.accuracy] {
            assert_eq!(v, &Measure::Defined(1.0));
        }

        let none = confusion_and_metrics(&[No, No], &[No, No], Yes).unwrap();
        assert!(none.precision.value().is_none());
        assert!(none.recall.value().is_none());
        assert!(none.f_measure.value().is_none());
        assert_eq!(none.accuracy, Measure::Defined(1.0));

        assert!(confusion_and_metrics(&[Yes], &[Yes, No], Yes).is_err());
    }

    #[test]
    fn metrics_json_shape() {
        let json = serde_json::to_string(&Metrics::from_counts(0, 0, 0, 2)).unwrap();
        assert_eq!(
            json,
            r#"{"tp":0,"fp":0,"fn":0,"tn":2,"recall":{"undefined":"no positive rows (tp + fn = 0)"},"precision":{"undefined":"no positive predictions (tp + fp = 0)"},"f":{"undefined":"precision or recall undefined"},"accuracy":1.0}"#
        );
        let back: Metrics = serde_json::from_str(&json).unwrap();
        assert_eq!(back, Metrics::from_counts(0, 0, 0, 2));
    }

    fn tiny() -> (FeatureMatrix, Vec<Label>) {
        let m = FeatureMatrix::from_dense(
            &[vec![1, 0], vec![1, 1], vec![0, 0], vec![0, 1], vec![1, 0], vec![0, 1], vec![1, 1], vec![0, 0]],
            VectorMode::Binary,
        )
        .unwrap();
        (m, vec![Yes, Yes, No, No, Yes, No, Yes, No])
    }

    #[test]
    fn separable_two_fold_dt() {
        let (m, y) = tiny();
        let spec = ClassifierSpec::new(ClassifierParams::Dt(DtParams { min_node_size: 1 }), 0).unwrap();
        let plan = stratified_kfold_split(&y, 2, 0).unwrap();
        let r = cross_validate(&spec, &m, &y, &plan).unwrap();
        assert_eq!(r.aggregate.accuracy, Measure::Defined(1.0));
        assert_eq!(r.per_fold.len(), 2);
        let r2 = cross_validate(&spec, &m, &y, &plan).unwrap();
        assert_eq!(r.per_fold, r2.per_fold);
        assert_eq!(r.aggregate, r2.aggregate);
    }

    #[test]
    fn single_class_complement_names_fold() {
        let m = FeatureMatrix::from_dense(&[vec![1], vec![0], vec![1], vec![0]], VectorMode::Binary).unwrap();
        let y = [Yes, No, Yes, No];
        let plan = FoldPlan {
            k: 2,
            assignments: vec![0, 1, 1, 1],
            seed: 0,
        };
        let err = cross_validate(&ClassifierSpec::default_for(ClassifierKind::Nb), &m, &y, &plan).unwrap_err();
        assert!(matches!(err, Error::Fold { fold: 1, .. }), "{err}");
    }

    #[test]
    fn k_equals_n_matches_loocv() {
        let (m, y) = tiny();
        let n = y.len();
        for kind in ClassifierKind::ALL {
            let spec = ClassifierSpec::default_for(kind).with_seed(11);
            let r = cross_validate(&spec, &m, &y, &kfold_split(n, n, 0).unwrap()).unwrap();
            assert_eq!(r.aggregate.accuracy.value().unwrap(), loocv_accuracy(&m, &y, &spec).unwrap(), "{kind:?}");
        }
    }

    proptest! {
        #[test]
        fn plans_cover_every_row(n in 2usize..200, k_raw in 2usize..20, seed in any::<u64>()) {
            let k = k_raw.min(n);
            let p = kfold_split(n, k, seed).unwrap();
            let sizes = p.fold_sizes();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            let mut rows: Vec<usize> = (0..k).flat_map(|f| p.test_rows(f)).collect();
            rows.sort_unstable();
            prop_assert_eq!(rows, (0..n).collect::<Vec<_>>());

            let labels: Vec<Label> = (0..n).map(|i| if (i * 7 + seed as usize).is_multiple_of(3) { Yes } else { No }).collect();
            let s = stratified_kfold_split(&labels, k, seed).unwrap();
            let sizes = s.fold_sizes();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
    }
}
