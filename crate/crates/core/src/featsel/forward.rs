use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{FeatureSubset, Provenance};
use crate::classifiers::{train, ClassifierSpec};
use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::vectorize::{project, FeatureMatrix, Vocabulary};

/// Leave-one-out accuracy of `spec` on the matrix.
///
/// Trained models depend only on the multiset of training rows (see
/// [`crate::classifiers`]), so holding out any one of several identical
/// `(row, label)` pairs yields the same model and the same prediction. Each
/// distinct pair is therefore trained once and weighted by its multiplicity;
/// the result equals the plain n-model loop exactly.
pub fn loocv_accuracy(matrix: &FeatureMatrix, labels: &[Label], spec: &ClassifierSpec) -> Result<f64> {
    let n = matrix.n_rows();
    if labels.len() != n {
        return Err(Error::LabelCount {
            expected: n,
            actual: labels.len(),
        });
    }
    if n < 2 {
        return Err(Error::TooFewRows(n));
    }
    if labels.iter().all(|l| *l == labels[0]) {
        return Err(Error::SingleClass);
    }

    type Key<'a> = (&'a [(usize, u32)], Label);
    let mut groups: BTreeMap<Key<'_>, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        groups.entry((matrix.row(i), *l)).or_default().push(i);
    }
    let groups: Vec<Vec<usize>> = groups.into_values().collect();

    let correct: Vec<usize> = groups
        .par_iter()
        .map(|members| {
            let held = members[0];
            let train_idx: Vec<usize> = (0..n).filter(|&i| i != held).collect();
            let train_labels: Vec<Label> = train_idx.iter().map(|&i| labels[i]).collect();
            let model = train(spec, &matrix.select_rows(&train_idx), &train_labels)?;
            let hit = model.predict_row(matrix.row(held)) == labels[held];
            Ok(if hit { members.len() } else { 0 })
        })
        .collect::<Result<_>>()?;
    Ok(correct.iter().sum::<usize>() as f64 / n as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    /// Column of the input matrix added at this step.
    pub added_index: usize,
    pub subset_size: usize,
    pub loocv_accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionTrace {
    pub steps: Vec<TraceStep>,
    /// Length of the returned prefix: the smallest size reaching the best
    /// recorded accuracy.
    pub chosen_size: usize,
}

/// Greedy forward selection scored by leave-one-out accuracy.
///
/// Starting from the empty set, every step tries each remaining pool column
/// and keeps the one with the highest accuracy (ties to the lowest column).
/// The search runs until `budget` columns are chosen or the pool is used up,
/// then returns the shortest prefix attaining the maximum accuracy.
pub fn forward_select(
    matrix: &FeatureMatrix,
    labels: &[Label],
    spec: &ClassifierSpec,
    candidate_pool: &FeatureSubset,
    budget: usize,
) -> Result<(FeatureSubset, SelectionTrace)> {
    if candidate_pool.is_empty() {
        return Err(Error::Config("forward selection needs a nonempty candidate pool".into()));
    }
    if budget == 0 {
        return Err(Error::Config("forward selection budget must be >= 1".into()));
    }
    candidate_pool.check_bounds(matrix.n_cols())?;

    let mut remaining: Vec<usize> = candidate_pool.indices().to_vec();
    remaining.sort_unstable();
    let mut selected: Vec<usize> = Vec::new();
    let mut steps = Vec::new();

    while selected.len() < budget && !remaining.is_empty() {
        let scored: Vec<(usize, f64)> = remaining
            .par_iter()
            .map(|&f| {
                let mut cols = selected.clone();
                cols.push(f);
                let subset = FeatureSubset::new(cols, Provenance::ForwardWrapper)?;
                let acc = loocv_accuracy(&project(matrix, &subset)?, labels, spec)?;
                Ok((f, acc))
            })
            .collect::<Result<_>>()?;
        // `remaining` is ascending, so the first maximum has the lowest index.
        let (best_f, best_acc) = scored
            .iter()
            .copied()
            .fold(None::<(usize, f64)>, |best, (f, acc)| match best {
                Some((_, b)) if acc <= b => best,
                _ => Some((f, acc)),
            })
            .expect("remaining is nonempty");
        remaining.retain(|&f| f != best_f);
        selected.push(best_f);
        log::debug!("forward step {}: +{best_f} -> {best_acc}", selected.len());
        steps.push(TraceStep {
            added_index: best_f,
            subset_size: selected.len(),
            loocv_accuracy: best_acc,
        });
    }

    let max = steps.iter().map(|s| s.loocv_accuracy).fold(f64::NEG_INFINITY, f64::max);
    let chosen_size = steps
        .iter()
        .find(|s| s.loocv_accuracy == max)
        .map(|s| s.subset_size)
        .expect("at least one step");
    selected.truncate(chosen_size);
    Ok((
        FeatureSubset::new(selected, Provenance::ForwardWrapper)?,
        SelectionTrace { steps, chosen_size },
    ))
}

/// CSV `step,added_term,subset_size,loocv_accuracy`. `columns` maps trace
/// indices to vocabulary columns (identity when the trace was computed on the
/// full matrix).
pub fn selection_trace_csv(trace: &SelectionTrace, vocab: &Vocabulary, columns: Option<&FeatureSubset>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["step", "added_term", "subset_size", "loocv_accuracy"])?;
    for (i, s) in trace.steps.iter().enumerate() {
        let col = match columns {
            Some(c) => *c.indices().get(s.added_index).ok_or(Error::FeatureOutOfRange {
                index: s.added_index,
                n_cols: c.len(),
            })?,
            None => s.added_index,
        };
        let term = vocab.term(col).ok_or(Error::FeatureOutOfRange {
            index: col,
            n_cols: vocab.len(),
        })?;
        w.write_record([
            (i + 1).to_string(),
            term.to_string(),
            s.subset_size.to_string(),
            s.loocv_accuracy.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{predict, ClassifierKind};
    use crate::vectorize::VectorMode;
    use Label::{No, Yes};

    fn dt() -> ClassifierSpec {
        ClassifierSpec::default_for(ClassifierKind::Dt)
    }

    fn naive_loocv(m: &FeatureMatrix, y: &[Label], spec: &ClassifierSpec) -> f64 {
        let n = m.n_rows();
        let mut hits = 0;
        for held in 0..n {
            let idx: Vec<usize> = (0..n).filter(|&i| i != held).collect();
            let yl: Vec<Label> = idx.iter().map(|&i| y[i]).collect();
            let model = train(spec, &m.select_rows(&idx), &yl).unwrap();
            if predict(&model, &m.select_rows(&[held])).unwrap()[0] == y[held] {
                hits += 1;
            }
        }
        hits as f64 / n as f64
    }

    #[test]
    fn separable_single_feature_is_perfect() {
        let m = FeatureMatrix::from_dense(&[vec![1], vec![1], vec![0], vec![0]], VectorMode::Binary).unwrap();
        let spec = ClassifierSpec::new(
            crate::classifiers::ClassifierParams::Dt(crate::classifiers::DtParams { min_node_size: 1 }),
            0,
        )
        .unwrap();
        assert_eq!(loocv_accuracy(&m, &[Yes, Yes, No, No], &spec).unwrap(), 1.0);
    }

    #[test]
    fn constant_feature_pathology() {
        let m = FeatureMatrix::from_dense(&[vec![1], vec![1], vec![1], vec![1]], VectorMode::Binary).unwrap();
        let y = [Yes, Yes, No, No];
        for kind in [ClassifierKind::Dt, ClassifierKind::Nb] {
            assert_eq!(loocv_accuracy(&m, &y, &ClassifierSpec::default_for(kind)).unwrap(), 0.0);
        }
    }

    #[test]
    fn loocv_errors() {
        let one = FeatureMatrix::from_dense(&[vec![1]], VectorMode::Binary).unwrap();
        assert!(matches!(loocv_accuracy(&one, &[Yes], &dt()), Err(Error::TooFewRows(1))));
        let two = FeatureMatrix::from_dense(&[vec![1], vec![0]], VectorMode::Binary).unwrap();
        assert!(matches!(loocv_accuracy(&two, &[Yes, Yes], &dt()), Err(Error::SingleClass)));
    }

    #[test]
    fn grouped_loocv_matches_naive_loop() {
        let dense = vec![
            vec![1, 0, 1],
            vec![1, 0, 1],
            vec![1, 1, 0],
            vec![0, 1, 0],
            vec![0, 1, 0],
            vec![0, 0, 1],
            vec![1, 0, 1],
            vec![0, 1, 1],
            vec![0, 1, 0],
        ];
        let y = [Yes, Yes, Yes, No, No, No, No, Yes, Yes];
        let m = FeatureMatrix::from_dense(&dense, VectorMode::Binary).unwrap();
        for kind in ClassifierKind::ALL {
            let spec = ClassifierSpec::default_for(kind).with_seed(5);
            assert_eq!(loocv_accuracy(&m, &y, &spec).unwrap(), naive_loocv(&m, &y, &spec), "{kind:?}");
        }
    }

    #[test]
    fn forward_prefers_perfect_predictor() {
        // Column 0 is noise, column 1 predicts the label.
        let dense = vec![
            vec![1, 1],
            vec![0, 1],
            vec![1, 1],
            vec![0, 0],
            vec![1, 0],
            vec![0, 0],
            vec![1, 1],
            vec![0, 0],
        ];
        let y = [Yes, Yes, Yes, No, No, No, Yes, No];
        let m = FeatureMatrix::from_dense(&dense, VectorMode::Binary).unwrap();
        let pool = FeatureSubset::all(2);
        let (chosen, trace) = forward_select(&m, &y, &dt(), &pool, 2).unwrap();
        assert_eq!(chosen.indices(), [1]);
        assert_eq!(trace.chosen_size, 1);
        assert_eq!(trace.steps.len(), 2);
        assert_eq!(trace.steps[0].loocv_accuracy, 1.0);
        assert!(trace.steps[1].loocv_accuracy <= 1.0);

        let (one, t1) = forward_select(&m, &y, &dt(), &pool, 1).unwrap();
        assert_eq!(one.indices(), [1]);
        assert_eq!(t1.steps.len(), 1);
    }

    #[test]
    fn forward_errors() {
        let m = FeatureMatrix::from_dense(&[vec![1], vec![0]], VectorMode::Binary).unwrap();
        let y = [Yes, No];
        let empty = FeatureSubset::new(vec![], Provenance::Manual).unwrap();
        assert!(forward_select(&m, &y, &dt(), &empty, 3).is_err());
        assert!(forward_select(&m, &y, &dt(), &FeatureSubset::all(1), 0).is_err());
        let oob = FeatureSubset::new(vec![3], Provenance::Manual).unwrap();
        assert!(forward_select(&m, &y, &dt(), &oob, 1).is_err());
    }

    #[test]
    fn trace_csv() {
        let vocab = Vocabulary::from_sorted_terms(vec!["a".into(), "b".into(), "c".into()]).unwrap();
        let trace = SelectionTrace {
            steps: vec![
                TraceStep { added_index: 1, subset_size: 1, loocv_accuracy: 0.75 },
                TraceStep { added_index: 0, subset_size: 2, loocv_accuracy: 0.5 },
            ],
            chosen_size: 1,
        };
        assert_eq!(
            selection_trace_csv(&trace, &vocab, None).unwrap(),
            "step,added_term,subset_size,loocv_accuracy\n1,b,1,0.75\n2,a,2,0.5\n"
        );
        let cols = FeatureSubset::new(vec![2, 0], Provenance::IgFilter).unwrap();
        assert_eq!(
            selection_trace_csv(&trace, &vocab, Some(&cols)).unwrap(),
            "step,added_term,subset_size,loocv_accuracy\n1,a,1,0.75\n2,c,2,0.5\n"
        );
    }
}
