//! Vocabulary construction and sparse document-term matrices.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Label};
use crate::error::{Error, Result};
use crate::featsel::FeatureSubset;

/// Sorted, deduplicated term list; a term's position is its column.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Builds from terms that must already be strictly sorted.
    pub fn from_sorted_terms(terms: Vec<String>) -> Result<Self> {
        if let Some(w) = terms.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::MatrixFormat(format!(
                "vocabulary not strictly sorted at {:?}, {:?}",
                w[0], w[1]
            )));
        }
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Ok(Vocabulary { terms, index })
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn term(&self, col: usize) -> Option<&str> {
        self.terms.get(col).map(String::as_str)
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// One term per line; line number is the column.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = String::new();
        for t in &self.terms {
            text.push_str(t);
            text.push('\n');
        }
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_sorted_terms(text.lines().map(str::to_string).collect())
    }
}

/// Terms whose document frequency is at least `min_df`, sorted.
pub fn build_vocabulary(corpus: &Corpus, min_df: usize) -> Result<Vocabulary> {
    if min_df == 0 {
        return Err(Error::Config("min_df must be positive".into()));
    }
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in corpus.docs() {
        let mut seen: Vec<&str> = doc.tokens.iter().map(String::as_str).collect();
        seen.sort_unstable();
        seen.dedup();
        for t in seen {
            *df.entry(t).or_default() += 1;
        }
    }
    let terms: Vec<String> = df
        .into_iter()
        .filter(|&(_, n)| n >= min_df)
        .map(|(t, _)| t.to_string())
        .collect();
    if terms.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    Vocabulary::from_sorted_terms(terms)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VectorMode {
    /// Term presence, every stored value is 1.
    #[default]
    Binary,
    /// Term occurrence counts.
    Tf,
}

impl VectorMode {
    fn as_str(self) -> &'static str {
        match self {
            VectorMode::Binary => "binary",
            VectorMode::Tf => "tf",
        }
    }
}

/// One sparse row: `(column, value)` pairs sorted by column, values > 0.
pub type SparseRow = Vec<(usize, u32)>;

/// Immutable sparse document-term matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    n_cols: usize,
    mode: VectorMode,
    rows: Vec<SparseRow>,
    row_labels: Vec<Option<Label>>,
}

impl FeatureMatrix {
    /// Validates and builds a matrix from per-row entries. Entries within a
    /// row may come in any order; they are sorted by column.
    pub fn from_rows(n_cols: usize, mode: VectorMode, rows: Vec<SparseRow>) -> Result<Self> {
        let mut rows = rows;
        for (r, row) in rows.iter_mut().enumerate() {
            row.sort_unstable_by_key(|&(c, _)| c);
            for w in row.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(Error::MatrixFormat(format!("duplicate entry ({r}, {})", w[0].0)));
                }
            }
            for &(c, v) in row.iter() {
                if c >= n_cols {
                    return Err(Error::FeatureOutOfRange { index: c, n_cols });
                }
                let ok = match mode {
                    VectorMode::Binary => v == 1,
                    VectorMode::Tf => v > 0,
                };
                if !ok {
                    return Err(Error::InvalidValue {
                        row: r,
                        col: c,
                        value: v as f64,
                    });
                }
            }
        }
        let n = rows.len();
        Ok(FeatureMatrix {
            n_cols,
            mode,
            rows,
            row_labels: vec![None; n],
        })
    }

    /// Dense 0/1 or count rows; convenient for tests and small data.
    pub fn from_dense(dense: &[Vec<u32>], mode: VectorMode) -> Result<Self> {
        let n_cols = dense.first().map_or(0, Vec::len);
        let mut rows = Vec::with_capacity(dense.len());
        for d in dense {
            if d.len() != n_cols {
                return Err(Error::DimensionMismatch {
                    expected: n_cols,
                    actual: d.len(),
                });
            }
            rows.push(
                d.iter()
                    .enumerate()
                    .filter(|&(_, &v)| v != 0)
                    .map(|(c, &v)| (c, v))
                    .collect(),
            );
        }
        Self::from_rows(n_cols, mode, rows)
    }

    pub fn with_labels(mut self, labels: &[Label]) -> Result<Self> {
        if labels.len() != self.n_rows() {
            return Err(Error::LabelCount {
                expected: self.n_rows(),
                actual: labels.len(),
            });
        }
        self.row_labels = labels.iter().copied().map(Some).collect();
        Ok(self)
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn mode(&self) -> VectorMode {
        self.mode
    }

    pub fn row(&self, i: usize) -> &[(usize, u32)] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[SparseRow] {
        &self.rows
    }

    pub fn row_labels(&self) -> &[Option<Label>] {
        &self.row_labels
    }

    /// Labels of every row; errors on the first unlabeled one.
    pub fn labels(&self) -> Result<Vec<Label>> {
        self.row_labels
            .iter()
            .enumerate()
            .map(|(i, l)| l.ok_or(Error::UnlabeledRow(i)))
            .collect()
    }

    /// All stored `(row, col, value)` triples in row-major order.
    pub fn triples(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().map(move |&(c, v)| (r, c, v)))
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn dense_row(&self, i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n_cols];
        for &(c, v) in &self.rows[i] {
            out[c] = v as f64;
        }
        out
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n_rows()).map(|i| self.dense_row(i)).collect()
    }

    /// Maps every positive count to 1.
    pub fn binarize(&self) -> FeatureMatrix {
        FeatureMatrix {
            n_cols: self.n_cols,
            mode: VectorMode::Binary,
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(|&(c, _)| (c, 1)).collect())
                .collect(),
            row_labels: self.row_labels.clone(),
        }
    }

    /// Rows in the given order (indices may repeat).
    pub fn select_rows(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            n_cols: self.n_cols,
            mode: self.mode,
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            row_labels: indices.iter().map(|&i| self.row_labels[i]).collect(),
        }
    }

    /// Text export: header `n_rows n_cols mode`, then `row col value` lines.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {}\n", self.n_rows(), self.n_cols, self.mode.as_str());
        for (r, c, v) in self.triples() {
            let _ = writeln!(out, "{r} {c} {v}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |m: String| Error::MatrixFormat(m);
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| bad("missing header".into()))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 3 {
            return Err(bad(format!("header must be `n_rows n_cols mode`, got {header:?}")));
        }
        let n_rows: usize = h[0].parse().map_err(|_| bad(format!("bad n_rows {:?}", h[0])))?;
        let n_cols: usize = h[1].parse().map_err(|_| bad(format!("bad n_cols {:?}", h[1])))?;
        let mode = match h[2] {
            "binary" => VectorMode::Binary,
            "tf" => VectorMode::Tf,
            m => return Err(bad(format!("unknown mode {m:?}"))),
        };
        let mut rows = vec![Vec::new(); n_rows];
        for (i, line) in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            let parsed = (f.len() == 3)
                .then(|| Some((f[0].parse::<usize>().ok()?, f[1].parse::<usize>().ok()?, f[2].parse::<u32>().ok()?)))
                .flatten();
            let (r, c, v) = parsed.ok_or_else(|| bad(format!("line {}: expected `row col value` with a non-negative integer value, got {line:?}", i + 1)))?;
            if r >= n_rows {
                return Err(bad(format!("line {}: row {r} out of range", i + 1)));
            }
            if v == 0 {
                return Err(bad(format!("line {}: zero entries are not stored", i + 1)));
            }
            rows[r].push((c, v));
        }
        Self::from_rows(n_cols, mode, rows)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

/// Builds the document-term matrix. Out-of-vocabulary tokens are ignored and
/// document labels are copied onto the rows.
pub fn vectorize(corpus: &Corpus, vocab: &Vocabulary, mode: VectorMode) -> FeatureMatrix {
    let rows: Vec<SparseRow> = corpus
        .docs()
        .par_iter()
        .map(|doc| {
            let mut counts: BTreeMap<usize, u32> = BTreeMap::new();
            for t in &doc.tokens {
                if let Some(c) = vocab.index_of(t) {
                    *counts.entry(c).or_default() += 1;
                }
            }
            counts
                .into_iter()
                .map(|(c, n)| (c, if mode == VectorMode::Binary { 1 } else { n }))
                .collect()
        })
        .collect();
    FeatureMatrix {
        n_cols: vocab.len(),
        mode,
        rows,
        row_labels: corpus.docs().iter().map(|d| d.label).collect(),
    }
}

/// Column slice in subset order. Labels are preserved.
pub fn project(matrix: &FeatureMatrix, subset: &FeatureSubset) -> Result<FeatureMatrix> {
    let mut new_col = vec![usize::MAX; matrix.n_cols];
    for (pos, &c) in subset.indices().iter().enumerate() {
        if c >= matrix.n_cols {
            return Err(Error::FeatureOutOfRange {
                index: c,
                n_cols: matrix.n_cols,
            });
        }
        new_col[c] = pos;
    }
    let rows = matrix
        .rows
        .iter()
        .map(|row| {
            let mut out: SparseRow = row
                .iter()
                .filter(|&&(c, _)| new_col[c] != usize::MAX)
                .map(|&(c, v)| (new_col[c], v))
                .collect();
            out.sort_unstable_by_key(|&(c, _)| c);
            out
        })
        .collect();
    Ok(FeatureMatrix {
        n_cols: subset.len(),
        mode: matrix.mode,
        rows,
        row_labels: matrix.row_labels.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;
    use crate::featsel::Provenance;
    use proptest::prelude::*;

    fn tokenized(docs: &[&[&str]]) -> Corpus {
        Corpus::new(
            docs.iter()
                .enumerate()
                .map(|(i, toks)| {
                    let mut d = Document::new(i.to_string(), toks.join(" "));
                    d.tokens = toks.iter().map(|s| s.to_string()).collect();
                    d
                })
                .collect(),
        )
        .unwrap()
    }

    fn dense(m: &FeatureMatrix) -> Vec<Vec<u32>> {
        (0..m.n_rows())
            .map(|i| m.dense_row(i).into_iter().map(|v| v as u32).collect())
            .collect()
    }

    #[test]
    fn vocabulary_min_df() {
        let c = tokenized(&[&["a", "b"], &["b", "c"]]);
        assert_eq!(build_vocabulary(&c, 1).unwrap().terms(), ["a", "b", "c"]);
        assert_eq!(build_vocabulary(&c, 2).unwrap().terms(), ["b"]);
        assert!(matches!(build_vocabulary(&c, 3), Err(Error::EmptyVocabulary)));
        assert!(matches!(
            build_vocabulary(&Corpus::default(), 1),
            Err(Error::EmptyVocabulary)
        ));
    }

    #[test]
    fn tf_and_binary_rows() {
        let c = tokenized(&[&["b", "b", "c", "zzz"], &[]]);
        let vocab = Vocabulary::from_sorted_terms(vec!["a".into(), "b".into(), "c".into()]).unwrap();
        let tf = vectorize(&c, &vocab, VectorMode::Tf);
        assert_eq!(dense(&tf), vec![vec![0, 2, 1], vec![0, 0, 0]]);
        let bin = vectorize(&c, &vocab, VectorMode::Binary);
        assert_eq!(dense(&bin), vec![vec![0, 1, 1], vec![0, 0, 0]]);
        assert_eq!(tf.binarize(), bin);
    }

    #[test]
    fn projection() {
        let m = FeatureMatrix::from_dense(&[vec![1, 0, 1], vec![0, 1, 1]], VectorMode::Binary)
            .unwrap()
            .with_labels(&[Label::Yes, Label::No])
            .unwrap();
        let p = project(&m, &FeatureSubset::new(vec![0, 2], Provenance::Manual).unwrap()).unwrap();
        assert_eq!(dense(&p), vec![vec![1, 1], vec![0, 1]]);
        assert_eq!(p.labels().unwrap(), vec![Label::Yes, Label::No]);
        let rev = project(&m, &FeatureSubset::new(vec![2, 0], Provenance::Manual).unwrap()).unwrap();
        assert_eq!(dense(&rev), vec![vec![1, 1], vec![1, 0]]);
        let all = project(&m, &FeatureSubset::new(vec![0, 1, 2], Provenance::Manual).unwrap()).unwrap();
        assert_eq!(all, m);
        let oob = project(&m, &FeatureSubset::new(vec![5], Provenance::Manual).unwrap());
        assert!(matches!(oob, Err(Error::FeatureOutOfRange { index: 5, .. })));
    }

    #[test]
    fn invalid_matrices() {
        assert!(FeatureMatrix::from_rows(2, VectorMode::Binary, vec![vec![(0, 2)]]).is_err());
        assert!(FeatureMatrix::from_rows(2, VectorMode::Tf, vec![vec![(2, 1)]]).is_err());
        assert!(FeatureMatrix::from_rows(2, VectorMode::Tf, vec![vec![(1, 1), (1, 3)]]).is_err());
        assert!(FeatureMatrix::from_text("1 2 tf\n0 0 -3\n").is_err());
        assert!(FeatureMatrix::from_text("1 2 tf\n0 0 nan\n").is_err());
        assert!(FeatureMatrix::from_text("1 2 dense\n").is_err());
    }

    #[test]
    fn text_format() {
        let m = FeatureMatrix::from_dense(&[vec![0, 2, 1], vec![0, 0, 0], vec![3, 0, 0]], VectorMode::Tf).unwrap();
        let text = m.to_text();
        assert_eq!(text, "3 3 tf\n0 1 2\n0 2 1\n2 0 3\n");
        assert_eq!(FeatureMatrix::from_text(&text).unwrap(), m);
    }

    #[test]
    fn vocabulary_file() {
        let v = Vocabulary::from_sorted_terms(vec!["apple".into(), "pear".into()]).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        v.write(f.path()).unwrap();
        assert_eq!(Vocabulary::read(f.path()).unwrap(), v);
        assert!(Vocabulary::from_sorted_terms(vec!["b".into(), "a".into()]).is_err());
    }

    fn docs_strategy() -> impl Strategy<Value = Vec<Vec<String>>> {
        prop::collection::vec(
            prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", "e"]).prop_map(String::from), 0..8),
            1..12,
        )
    }

    proptest! {
        #[test]
        fn tf_row_sums_and_binarize(docs in docs_strategy()) {
            let refs: Vec<Vec<&str>> = docs.iter().map(|d| d.iter().map(String::as_str).collect()).collect();
            let slices: Vec<&[&str]> = refs.iter().map(Vec::as_slice).collect();
            let c = tokenized(&slices);
            let Ok(vocab) = build_vocabulary(&c, 1) else { return Ok(()); };
            let tf = vectorize(&c, &vocab, VectorMode::Tf);
            for (i, d) in docs.iter().enumerate() {
                let sum: u32 = tf.row(i).iter().map(|&(_, v)| v).sum();
                prop_assert_eq!(sum as usize, d.len());
            }
            prop_assert_eq!(tf.binarize(), vectorize(&c, &vocab, VectorMode::Binary));
            prop_assert_eq!(FeatureMatrix::from_text(&tf.to_text()).unwrap(), tf.clone());

            // Permutation equivariance: reversing documents reverses rows.
            let rev: Vec<&[&str]> = slices.iter().rev().copied().collect();
            let tf_rev = vectorize(&tokenized(&rev), &vocab, VectorMode::Tf);
            let n = tf.n_rows();
            for i in 0..n {
                prop_assert_eq!(tf_rev.row(i), tf.row(n - 1 - i));
            }
        }
    }
}
