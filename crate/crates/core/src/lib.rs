//! Intention mining for short social-media texts.
//!
//! The crate covers the whole path from raw posts to evaluated classifiers:
//!
//! - [`corpus`]: ingestion, seed-phrase labeling and text normalization
//! - [`vectorize`]: vocabulary and sparse binary / term-frequency matrices
//! - [`featsel`]: Information Gain scoring and the forward wrapper search
//! - [`classifiers`]: decision tree, naive Bayes, RBF SVM and a 2x100 MLP
//! - [`eval`]: stratified k-fold evaluation and confusion-matrix metrics
//! - [`pipeline`]: the two end-to-end selection schemes and the run matrix
//! - [`synth`]: a seeded synthetic tweet corpus generator
//!
//! Two schemes are supported. Scheme one keeps every term whose Information
//! Gain is positive and classifies on that subset. Scheme two narrows the IG
//! subset further with greedy forward selection scored by leave-one-out
//! accuracy of a wrapper learner.

pub mod classifiers;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod featsel;
pub mod pipeline;
pub mod synth;
pub mod vectorize;

pub use error::{Error, Result};
