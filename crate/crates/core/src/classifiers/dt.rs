//! CART-style decision tree: binary Gini splits, no pruning.

use serde::{Deserialize, Serialize};

use super::TrainingSet;
use crate::corpus::Label;
use crate::error::{Error, Result};

/// Gains within this margin count as ties; a split must beat it to be made.
pub const GAIN_EPS: f64 = 1e-12;

/// Split quality is always Gini and trees are never pruned; only the minimum
/// node size is tunable.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DtParams {
    /// Both children of a split must hold at least this many rows.
    pub min_node_size: usize,
}

impl Default for DtParams {
    fn default() -> Self {
        DtParams { min_node_size: 2 }
    }
}

impl DtParams {
    pub fn validate(&self) -> Result<()> {
        if self.min_node_size < 1 {
            return Err(Error::InvalidParams("min_node_size must be >= 1".into()));
        }
        Ok(())
    }
}

/// `1 - sum(p_c^2)` over the given class counts.
pub fn gini_impurity(class_counts: &[usize]) -> Result<f64> {
    let total: usize = class_counts.iter().sum();
    if total == 0 {
        return Err(Error::InvalidParams("gini impurity of an empty node".into()));
    }
    Ok(gini(class_counts, total))
}

fn gini(counts: &[usize], total: usize) -> f64 {
    let t = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>()
}

/// Impurity decrease of splitting `parent` into `left` and `parent - left`.
pub(crate) fn split_gain(parent: [usize; 2], left: [usize; 2]) -> f64 {
    let right = [parent[0] - left[0], parent[1] - left[1]];
    let (n, nl, nr) = (parent[0] + parent[1], left[0] + left[1], right[0] + right[1]);
    let weighted = (nl as f64 / n as f64) * gini(&left, nl) + (nr as f64 / n as f64) * gini(&right, nr);
    gini(&parent, n) - weighted
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum TreeNode {
    Leaf {
        label: Label,
        /// `[yes, no]` training rows reaching the node.
        counts: [usize; 2],
    },
    Split {
        feature: usize,
        /// Rows with `value <= threshold` go left.
        threshold: f64,
        gain: f64,
        counts: [usize; 2],
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn counts(&self) -> [usize; 2] {
        match self {
            TreeNode::Leaf { counts, .. } | TreeNode::Split { counts, .. } => *counts,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    params: DtParams,
    n_features: usize,
    root: TreeNode,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BestSplit {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
    pub left_counts: [usize; 2],
}

fn majority(counts: [usize; 2]) -> Label {
    if counts[Label::Yes.index()] >= counts[Label::No.index()] {
        Label::Yes
    } else {
        Label::No
    }
}

fn value_at(row: &[(usize, u32)], feature: usize) -> u32 {
    row.binary_search_by_key(&feature, |&(c, _)| c)
        .map(|i| row[i].1)
        .unwrap_or(0)
}

impl DecisionTree {
    pub(crate) fn fit(params: &DtParams, data: &TrainingSet<'_>) -> Result<Self> {
        let all: Vec<usize> = (0..data.len()).collect();
        let root = grow(params, data, all);
        Ok(DecisionTree {
            params: params.clone(),
            n_features: data.n_features,
            root,
        })
    }

    pub fn root(&self) -> &TreeNode {
        &self.root
    }

    pub fn params(&self) -> &DtParams {
        &self.params
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn depth(&self) -> usize {
        fn d(n: &TreeNode) -> usize {
            match n {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + d(left).max(d(right)),
            }
        }
        d(&self.root)
    }

    pub fn n_leaves(&self) -> usize {
        fn l(n: &TreeNode) -> usize {
            match n {
                TreeNode::Leaf { .. } => 1,
                TreeNode::Split { left, right, .. } => l(left) + l(right),
            }
        }
        l(&self.root)
    }

    pub fn predict_row(&self, row: &[(usize, u32)]) -> Label {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { label, .. } => return *label,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    node = if value_at(row, *feature) as f64 <= *threshold { left } else { right };
                }
            }
        }
    }
}

fn class_counts(data: &TrainingSet<'_>, rows: &[usize]) -> [usize; 2] {
    let mut c = [0; 2];
    for &r in rows {
        c[data.labels[r].index()] += 1;
    }
    c
}

fn grow(params: &DtParams, data: &TrainingSet<'_>, rows: Vec<usize>) -> TreeNode {
    let counts = class_counts(data, &rows);
    let leaf = TreeNode::Leaf {
        label: majority(counts),
        counts,
    };
    if counts[0] == 0 || counts[1] == 0 {
        return leaf;
    }
    let Some(best) = best_split(params, data, &rows, counts) else {
        return leaf;
    };
    let (left, right): (Vec<usize>, Vec<usize>) = rows
        .into_iter()
        .partition(|&r| value_at(data.rows[r], best.feature) as f64 <= best.threshold);
    TreeNode::Split {
        feature: best.feature,
        threshold: best.threshold,
        gain: best.gain,
        counts,
        left: Box::new(grow(params, data, left)),
        right: Box::new(grow(params, data, right)),
    }
}

/// Scans every feature and every midpoint between adjacent distinct values.
/// Ties go to the lowest feature, then the lowest threshold.
fn best_split(params: &DtParams, data: &TrainingSet<'_>, rows: &[usize], parent: [usize; 2]) -> Option<BestSplit> {
    let n = rows.len();
    let min = params.min_node_size;
    if n < 2 * min {
        return None;
    }
    // Nonzero entries of the node as (feature, value, class).
    let mut entries: Vec<(usize, u32, usize)> = rows
        .iter()
        .flat_map(|&r| {
            let class = data.labels[r].index();
            data.rows[r].iter().map(move |&(f, v)| (f, v, class))
        })
        .collect();
    entries.sort_unstable();

    let mut best: Option<BestSplit> = None;
    let mut start = 0;
    while start < entries.len() {
        let feature = entries[start].0;
        let end = start + entries[start..].iter().take_while(|e| e.0 == feature).count();
        let group = &entries[start..end];
        start = end;

        // Distinct values ascending with their class counts; zeros first.
        let mut nonzero = [0usize; 2];
        for e in group {
            nonzero[e.2] += 1;
        }
        let mut values: Vec<(f64, [usize; 2])> = Vec::new();
        let zeros = [parent[0] - nonzero[0], parent[1] - nonzero[1]];
        if zeros[0] + zeros[1] > 0 {
            values.push((0.0, zeros));
        }
        for e in group {
            match values.last_mut() {
                Some((v, c)) if *v == e.1 as f64 => c[e.2] += 1,
                _ => {
                    let mut c = [0; 2];
                    c[e.2] = 1;
                    values.push((e.1 as f64, c));
                }
            }
        }

        let mut left = [0usize; 2];
        for w in values.windows(2) {
            left[0] += w[0].1[0];
            left[1] += w[0].1[1];
            let nl = left[0] + left[1];
            if nl < min || n - nl < min {
                continue;
            }
            let gain = split_gain(parent, left);
            let floor = best.map_or(0.0, |b| b.gain);
            if gain > floor + GAIN_EPS {
                best = Some(BestSplit {
                    feature,
                    threshold: (w[0].0 + w[1].0) / 2.0,
                    gain,
                    left_counts: left,
                });
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{train, ClassifierSpec, TrainedModel};
    use crate::vectorize::{FeatureMatrix, VectorMode};
    use Label::{No, Yes};

    #[test]
    fn gini_examples() {
        assert_eq!(gini_impurity(&[5, 5]).unwrap(), 0.5);
        assert_eq!(gini_impurity(&[10, 0]).unwrap(), 0.0);
        assert!((gini_impurity(&[3, 1]).unwrap() - 0.375).abs() < 1e-15);
        assert!(gini_impurity(&[0, 0]).is_err());
    }

    fn fit(dense: &[Vec<u32>], labels: &[Label], min_node_size: usize) -> DecisionTree {
        let m = FeatureMatrix::from_dense(dense, VectorMode::Tf).unwrap();
        let spec = ClassifierSpec::new(
            crate::classifiers::ClassifierParams::Dt(DtParams { min_node_size }),
            0,
        )
        .unwrap();
        match train(&spec, &m, labels).unwrap() {
            TrainedModel::Dt(t) => t,
            _ => unreachable!(),
        }
    }

    #[test]
    fn single_perfect_feature_gives_depth_one() {
        let t = fit(
            &[vec![0, 1], vec![1, 1], vec![0, 0], vec![1, 0]],
            &[No, Yes, No, Yes],
            1,
        );
        assert_eq!(t.depth(), 1);
        match t.root() {
            TreeNode::Split { feature, threshold, gain, .. } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, 0.5);
                assert!((gain - 0.5).abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn midpoint_threshold_on_counts() {
        let t = fit(&[vec![1], vec![2], vec![5], vec![7]], &[Yes, Yes, No, No], 1);
        match t.root() {
            TreeNode::Split { threshold, .. } => assert_eq!(*threshold, 3.5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ties_prefer_lowest_feature() {
        // Columns 0 and 1 are identical predictors.
        let t = fit(&[vec![1, 1], vec![1, 1], vec![0, 0], vec![0, 0]], &[Yes, Yes, No, No], 1);
        match t.root() {
            TreeNode::Split { feature, .. } => assert_eq!(*feature, 0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn min_node_size_blocks_small_children() {
        // The only useful split isolates one row.
        let dense = [vec![1], vec![0], vec![0], vec![0]];
        let labels = [Yes, No, No, No];
        assert_eq!(fit(&dense, &labels, 1).depth(), 1);
        let t = fit(&dense, &labels, 2);
        assert_eq!(t.depth(), 0);
        assert_eq!(t.predict_row(&[(0, 1)]), No);
    }

    #[test]
    fn leaf_tie_goes_to_yes() {
        let t = fit(&[vec![0], vec![0]], &[Yes, No], 1);
        assert_eq!(t.root(), &TreeNode::Leaf { label: Yes, counts: [1, 1] });
    }

    #[test]
    fn training_accuracy_on_xor_like_counts() {
        let dense = [vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]].concat().chunks(2).cycle().take(8).map(|c| c.to_vec()).collect::<Vec<_>>();
        let labels = [No, Yes, Yes, No].repeat(2);
        // XOR has no first split with positive gain: the tree stays a leaf.
        let t = fit(&dense, &labels, 1);
        assert_eq!(t.depth(), 0);
    }
}
