//! Feature selection: the Information Gain filter and the forward wrapper.

mod forward;
mod ig;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use forward::{forward_select, loocv_accuracy, selection_trace_csv, SelectionTrace, TraceStep};
pub use ig::{ig_report_csv, ig_scores, select_by_ig, IgScore};

/// How a subset was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    IgFilter,
    ForwardWrapper,
    Manual,
}

/// Ordered, duplicate-free list of matrix columns.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSubset {
    indices: Vec<usize>,
    provenance: Provenance,
}

impl FeatureSubset {
    pub fn new(indices: Vec<usize>, provenance: Provenance) -> Result<Self> {
        let mut sorted = indices.clone();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateFeature(w[0]));
        }
        Ok(FeatureSubset { indices, provenance })
    }

    /// Every column of an `n_cols`-wide matrix, in order.
    pub fn all(n_cols: usize) -> Self {
        FeatureSubset {
            indices: (0..n_cols).collect(),
            provenance: Provenance::Manual,
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn check_bounds(&self, n_cols: usize) -> Result<()> {
        match self.indices.iter().find(|&&i| i >= n_cols) {
            Some(&index) => Err(Error::FeatureOutOfRange { index, n_cols }),
            None => Ok(()),
        }
    }

    /// Re-expresses positions of a projected matrix as columns of this
    /// subset's parent matrix.
    pub fn compose(&self, inner: &FeatureSubset) -> Result<FeatureSubset> {
        inner.check_bounds(self.len())?;
        FeatureSubset::new(
            inner.indices.iter().map(|&i| self.indices[i]).collect(),
            inner.provenance,
        )
    }
}
