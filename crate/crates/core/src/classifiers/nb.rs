//! Naive Bayes with multinomial or Bernoulli event models.
//!
//! Multinomial: `log P(d|c) = sum_k n_k log P(w_k|c)` with
//! `P(w|c) = (N_wc + alpha) / (N_c + alpha |V|)`. The multinomial coefficient
//! is the same for both classes and is dropped. Bernoulli:
//! `P(t|c) = (df_tc + alpha) / (N_docs_c + 2 alpha)` and absent terms
//! contribute `log(1 - P(t|c))`. Priors are the empirical class frequencies.

use serde::{Deserialize, Serialize};

use super::TrainingSet;
use crate::corpus::Label;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventModel {
    Bernoulli,
    Multinomial,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NbParams {
    pub event_model: EventModel,
    pub smoothing_alpha: f64,
}

impl Default for NbParams {
    fn default() -> Self {
        NbParams {
            event_model: EventModel::Multinomial,
            smoothing_alpha: 1.0,
        }
    }
}

impl NbParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.smoothing_alpha >= 0.0 && self.smoothing_alpha.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "smoothing_alpha must be finite and >= 0, got {}",
                self.smoothing_alpha
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayes {
    event_model: EventModel,
    n_features: usize,
    /// `ln P(c)` indexed by [`Label::index`].
    log_prior: [f64; 2],
    /// `ln P(w_k|c)` per feature.
    log_likelihood: Vec<[f64; 2]>,
    /// `ln (1 - P(t_k|c))`; Bernoulli only, empty otherwise.
    log_absent: Vec<[f64; 2]>,
}

impl NaiveBayes {
    pub(crate) fn fit(params: &NbParams, data: &TrainingSet<'_>) -> Result<Self> {
        let d = data.n_features;
        let alpha = params.smoothing_alpha;
        let mut class_docs = [0u64; 2];
        let mut counts = vec![[0u64; 2]; d];
        let mut totals = [0u64; 2];
        for (row, label) in data.rows.iter().zip(&data.labels) {
            let c = label.index();
            class_docs[c] += 1;
            for &(k, v) in row.iter() {
                let v = match params.event_model {
                    EventModel::Multinomial => v as u64,
                    EventModel::Bernoulli => 1,
                };
                counts[k][c] += v;
                totals[c] += v;
            }
        }
        let n = data.len() as f64;
        let log_prior = [0, 1].map(|c| (class_docs[c] as f64 / n).ln());

        let (log_likelihood, log_absent): (Vec<[f64; 2]>, Vec<[f64; 2]>) = match params.event_model {
            EventModel::Multinomial => {
                let denom = [0, 1].map(|c| totals[c] as f64 + alpha * d as f64);
                let ll = counts
                    .iter()
                    .map(|k| [0, 1].map(|c| ((k[c] as f64 + alpha) / denom[c]).ln()))
                    .collect();
                (ll, Vec::new())
            }
            EventModel::Bernoulli => {
                let denom = [0, 1].map(|c| class_docs[c] as f64 + 2.0 * alpha);
                let p: Vec<[f64; 2]> = counts
                    .iter()
                    .map(|k| [0, 1].map(|c| (k[c] as f64 + alpha) / denom[c]))
                    .collect();
                (
                    p.iter().map(|pk| pk.map(f64::ln)).collect(),
                    p.iter().map(|pk| pk.map(|x| (1.0 - x).ln())).collect(),
                )
            }
        };
        if alpha == 0.0
            && log_likelihood
                .iter()
                .chain(&log_absent)
                .any(|v| v.iter().any(|x| x.is_infinite()))
        {
            log::warn!("naive Bayes fitted with smoothing_alpha = 0 has zero-probability terms");
        }
        Ok(NaiveBayes {
            event_model: params.event_model,
            n_features: d,
            log_prior,
            log_likelihood,
            log_absent,
        })
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn event_model(&self) -> EventModel {
        self.event_model
    }

    pub fn prior(&self, class: Label) -> f64 {
        self.log_prior[class.index()].exp()
    }

    /// `P(w_k|c)` (multinomial) or `P(t_k present|c)` (Bernoulli).
    pub fn likelihood(&self, feature: usize, class: Label) -> f64 {
        self.log_likelihood[feature][class.index()].exp()
    }

    /// Unnormalized `ln P(c) + ln P(d|c)` for both classes.
    pub fn joint_log_likelihood(&self, row: &[(usize, u32)]) -> [f64; 2] {
        let mut score = self.log_prior;
        match self.event_model {
            EventModel::Multinomial => {
                for &(k, v) in row {
                    for (c, s) in score.iter_mut().enumerate() {
                        *s += v as f64 * self.log_likelihood[k][c];
                    }
                }
            }
            EventModel::Bernoulli => {
                let mut present = row.iter().map(|&(k, _)| k).peekable();
                for k in 0..self.n_features {
                    let table = if present.peek() == Some(&k) {
                        present.next();
                        &self.log_likelihood
                    } else {
                        &self.log_absent
                    };
                    for (c, s) in score.iter_mut().enumerate() {
                        *s += table[k][c];
                    }
                }
            }
        }
        score
    }

    /// `[P(Yes|d), P(No|d)]`. When both joint likelihoods vanish (possible
    /// only with `smoothing_alpha = 0`) the priors are returned.
    pub fn posterior(&self, row: &[(usize, u32)]) -> [f64; 2] {
        let mut s = self.joint_log_likelihood(row);
        if s.iter().all(|x| *x == f64::NEG_INFINITY) {
            s = self.log_prior;
        }
        let m = s[0].max(s[1]);
        let e = s.map(|x| (x - m).exp());
        let z = e[0] + e[1];
        e.map(|x| x / z)
    }

    /// Highest-posterior class; exact ties go to `Yes`.
    pub fn predict_row(&self, row: &[(usize, u32)]) -> Label {
        let p = self.posterior(row);
        if p[Label::Yes.index()] >= p[Label::No.index()] {
            Label::Yes
        } else {
            Label::No
        }
    }
}
