use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{FeatureSubset, Provenance};
use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::vectorize::{FeatureMatrix, Vocabulary};

/// Information Gain of one column, in bits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IgScore {
    pub term_index: usize,
    pub gain: f64,
}

/// Per-column Information Gain of term presence about the class.
///
/// Computed as the mutual information
/// `sum_{x in {t, not t}} sum_c P(x, c) log2(P(x, c) / (P(x) P(c)))`, which
/// equals `H(C) - H(C | t)`. Probabilities are empirical frequencies and
/// `0 log 0 = 0`. A term whose presence is exactly independent of the class
/// in the counts (including one present everywhere) scores exactly 0. Counts
/// are collapsed to presence first.
pub fn ig_scores(matrix: &FeatureMatrix, labels: &[Label]) -> Result<Vec<IgScore>> {
    if labels.len() != matrix.n_rows() {
        return Err(Error::LabelCount {
            expected: matrix.n_rows(),
            actual: labels.len(),
        });
    }
    if matrix.n_rows() == 0 {
        return Err(Error::TooFewRows(0));
    }
    let mut class_n = [0u64; 2];
    let mut present = vec![[0u64; 2]; matrix.n_cols()];
    for (row, label) in matrix.rows().iter().zip(labels) {
        let c = label.index();
        class_n[c] += 1;
        for &(col, _) in row {
            present[col][c] += 1;
        }
    }
    let n = matrix.n_rows() as u64;
    Ok(present
        .par_iter()
        .enumerate()
        .map(|(term_index, with)| {
            let without = [class_n[0] - with[0], class_n[1] - with[1]];
            let mut gain = 0.0;
            for side in [with, &without] {
                let n_side: u64 = side.iter().sum();
                for c in 0..2 {
                    if side[c] == 0 {
                        continue;
                    }
                    let ratio = (side[c] * n) as f64 / (n_side * class_n[c]) as f64;
                    gain += side[c] as f64 / n as f64 * ratio.log2();
                }
            }
            IgScore {
                term_index,
                gain: gain.max(0.0),
            }
        })
        .collect())
}

fn ranked(scores: &[IgScore]) -> Vec<IgScore> {
    let mut s = scores.to_vec();
    s.sort_by(|a, b| b.gain.total_cmp(&a.gain).then(a.term_index.cmp(&b.term_index)));
    s
}

/// Columns with gain strictly above `threshold`, best first; equal gains are
/// ordered by ascending column.
pub fn select_by_ig(scores: &[IgScore], threshold: f64) -> Result<FeatureSubset> {
    let indices: Vec<usize> = ranked(scores)
        .into_iter()
        .filter(|s| s.gain > threshold)
        .map(|s| s.term_index)
        .collect();
    if indices.is_empty() {
        return Err(Error::NoFeatureSelected(threshold));
    }
    FeatureSubset::new(indices, Provenance::IgFilter)
}

/// CSV `term,term_index,gain`, sorted by descending gain.
pub fn ig_report_csv(scores: &[IgScore], vocab: &Vocabulary) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["term", "term_index", "gain"])?;
    for s in ranked(scores) {
        let term = vocab.term(s.term_index).ok_or(Error::FeatureOutOfRange {
            index: s.term_index,
            n_cols: vocab.len(),
        })?;
        let mut gain = String::new();
        let _ = write!(gain, "{}", s.gain);
        w.write_record([term, &s.term_index.to_string(), &gain])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vectorize::VectorMode;
    use proptest::prelude::*;
    use Label::{No, Yes};

    fn column(present: &[u32], labels: &[Label]) -> f64 {
        let dense: Vec<Vec<u32>> = present.iter().map(|&p| vec![p]).collect();
        let m = FeatureMatrix::from_dense(&dense, VectorMode::Binary).unwrap();
        ig_scores(&m, labels).unwrap()[0].gain
    }

    #[test]
    fn examples() {
        let y = [Yes, Yes, No, No];
        assert!((column(&[1, 1, 0, 0], &y) - 1.0).abs() < 1e-15);
        assert_eq!(column(&[1, 1, 1, 1], &y), 0.0);
        assert_eq!(column(&[1, 0, 1, 0], &y), 0.0);
        assert_eq!(column(&[0, 0, 0, 0], &y), 0.0);
    }

    #[test]
    fn proportional_terms_score_exactly_zero() {
        // Prior 3:2; the term covers 6 Yes and 4 No of 15 / 10.
        let mut labels = vec![Yes; 15];
        labels.extend(vec![No; 10]);
        let mut present = vec![0; 25];
        for i in (0..6).chain(15..19) {
            present[i] = 1;
        }
        assert_eq!(column(&present, &labels), 0.0);
    }

    #[test]
    fn label_count_checked() {
        let m = FeatureMatrix::from_dense(&[vec![1], vec![0]], VectorMode::Binary).unwrap();
        assert!(ig_scores(&m, &[Yes]).is_err());
    }

    #[test]
    fn selection() {
        let s = |g: &[f64]| -> Vec<IgScore> {
            g.iter().enumerate().map(|(i, &gain)| IgScore { term_index: i, gain }).collect()
        };
        assert_eq!(select_by_ig(&s(&[0.3, 0.0, 0.1]), 0.0).unwrap().indices(), [0, 2]);
        assert!(matches!(select_by_ig(&s(&[0.0, 0.0]), 0.0), Err(Error::NoFeatureSelected(_))));
        assert_eq!(select_by_ig(&s(&[0.2, 0.2]), 0.0).unwrap().indices(), [0, 1]);
        assert_eq!(select_by_ig(&s(&[0.1, 0.5, 0.2]), 0.15).unwrap().indices(), [1, 2]);
    }

    #[test]
    fn report_format() {
        let vocab = Vocabulary::from_sorted_terms(vec!["a".into(), "b".into()]).unwrap();
        let scores = [IgScore { term_index: 0, gain: 0.0 }, IgScore { term_index: 1, gain: 0.5 }];
        assert_eq!(ig_report_csv(&scores, &vocab).unwrap(), "term,term_index,gain\nb,1,0.5\na,0,0\n");
    }

    proptest! {
        #[test]
        fn invariant_to_class_swap_and_row_order(
            rows in prop::collection::vec((prop::collection::vec(0u32..2, 5), any::<bool>()), 2..30),
            rot in 0usize..30,
        ) {
            let dense: Vec<Vec<u32>> = rows.iter().map(|r| r.0.clone()).collect();
            let labels: Vec<Label> = rows.iter().map(|r| if r.1 { Yes } else { No }).collect();
            let m = FeatureMatrix::from_dense(&dense, VectorMode::Binary).unwrap();
            let base = ig_scores(&m, &labels).unwrap();
            let swapped: Vec<Label> = labels.iter().map(|l| l.other()).collect();
            let k = rot % rows.len();
            let perm: Vec<usize> = (0..rows.len()).map(|i| (i + k) % rows.len()).collect();
            let permuted = ig_scores(&m.select_rows(&perm), &perm.iter().map(|&i| labels[i]).collect::<Vec<_>>()).unwrap();
            for (j, s) in ig_scores(&m, &swapped).unwrap().iter().enumerate() {
                prop_assert!((s.gain - base[j].gain).abs() < 1e-12);
                prop_assert!((permuted[j].gain - base[j].gain).abs() < 1e-12);
                prop_assert!(base[j].gain >= 0.0 && base[j].gain <= 1.0 + 1e-12);
            }
        }
    }
}
