//! Soft-margin C-SVC with an RBF kernel, trained by SMO.
//!
//! The solver follows the LIBSVM scheme: maximal-violating-pair selection
//! with second-order working-set choice, analytic two-variable updates with
//! box clipping, and a gradient vector kept up to date after every step.
//! Optimization stops once `max_{I_up}(-y G) - min_{I_low}(-y G) < tol`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::TrainingSet;
use crate::corpus::Label;
use crate::error::{Error, Result};

const TAU: f64 = 1e-12;
/// Above this many distinct training rows the kernel is computed per row
/// on demand instead of as one dense table.
const DENSE_KERNEL_LIMIT: usize = 3000;
const ROW_CACHE_LIMIT: usize = 1024;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmParams {
    /// Soft-margin cost `C`.
    pub c_penalty: f64,
    /// RBF width: `k(x, z) = exp(-gamma |x - z|^2)`.
    pub gamma: f64,
    pub smo_tolerance: f64,
    /// Iteration cap, in units of the training-set size.
    pub max_passes: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c_penalty: 1.0,
            gamma: 1.0,
            smo_tolerance: 1e-3,
            max_passes: 200,
        }
    }
}

impl SvmParams {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !pos(self.c_penalty) {
            return Err(Error::InvalidParams(format!("c_penalty must be > 0, got {}", self.c_penalty)));
        }
        if !pos(self.gamma) {
            return Err(Error::InvalidParams(format!("gamma must be > 0, got {}", self.gamma)));
        }
        if !pos(self.smo_tolerance) {
            return Err(Error::InvalidParams("smo_tolerance must be > 0".into()));
        }
        if self.max_passes == 0 {
            return Err(Error::InvalidParams("max_passes must be >= 1".into()));
        }
        Ok(())
    }
}

/// `exp(-gamma |x - z|^2)` on dense vectors.
pub fn rbf_kernel(x: &[f64], z: &[f64], gamma: f64) -> Result<f64> {
    if x.len() != z.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            actual: z.len(),
        });
    }
    let d2: f64 = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((-gamma * d2).exp())
}

fn sparse_sq_dist(a: &[(usize, u32)], b: &[(usize, u32)]) -> f64 {
    let (mut i, mut j) = (0, 0);
    let mut acc = 0.0;
    while i < a.len() || j < b.len() {
        let (ca, cb) = (a.get(i).map(|e| e.0), b.get(j).map(|e| e.0));
        let d = match (ca, cb) {
            (Some(x), Some(y)) if x == y => {
                let d = a[i].1 as f64 - b[j].1 as f64;
                i += 1;
                j += 1;
                d
            }
            (Some(x), Some(y)) if x < y => {
                i += 1;
                a[i - 1].1 as f64
            }
            (Some(_), None) => {
                i += 1;
                a[i - 1].1 as f64
            }
            _ => {
                j += 1;
                b[j - 1].1 as f64
            }
        };
        acc += d * d;
    }
    acc
}

fn sparse_rbf(a: &[(usize, u32)], b: &[(usize, u32)], gamma: f64) -> f64 {
    (-gamma * sparse_sq_dist(a, b)).exp()
}

/// Result of one SMO run.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    /// Offset in `f(x) = sum alpha_i y_i K(x_i, x) - rho`.
    pub rho: f64,
    /// Final `m(alpha) - M(alpha)`.
    pub violation: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SmoSolution {
    /// `sum(alpha) - 1/2 alpha' Q alpha`, with `Q_ij = y_i y_j K_ij`.
    pub fn dual_objective(&self, kernel: &[Vec<f64>], y: &[f64]) -> f64 {
        let n = self.alpha.len();
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                quad += self.alpha[i] * self.alpha[j] * y[i] * y[j] * kernel[i][j];
            }
        }
        self.alpha.iter().sum::<f64>() - 0.5 * quad
    }
}

/// SMO on an explicit kernel matrix. `y` holds +1 / -1.
pub fn smo_solve(kernel: &[Vec<f64>], y: &[f64], c: f64, tol: f64, max_iter: usize) -> SmoSolution {
    let diag: Vec<f64> = (0..y.len()).map(|i| kernel[i][i]).collect();
    solve(y, &diag, c, tol, max_iter, |i, out| out.copy_from_slice(&kernel[i]))
}

fn solve<F>(y: &[f64], diag: &[f64], c: f64, tol: f64, max_iter: usize, mut kernel_row: F) -> SmoSolution
where
    F: FnMut(usize, &mut [f64]),
{
    let n = y.len();
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut ki = vec![0.0; n];
    let mut kj = vec![0.0; n];
    let in_up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let in_low = |a: f64, yt: f64| (yt > 0.0 && a > 0.0) || (yt < 0.0 && a < c);

    let mut iterations = 0;
    let mut violation;
    loop {
        // i: maximal violator in I_up.
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            if in_up(alpha[t], y[t]) && -y[t] * grad[t] > gmax {
                gmax = -y[t] * grad[t];
                i_sel = Some(t);
            }
        }
        let mut gmax2 = f64::NEG_INFINITY;
        for t in 0..n {
            if in_low(alpha[t], y[t]) {
                gmax2 = gmax2.max(y[t] * grad[t]);
            }
        }
        violation = gmax + gmax2;
        let Some(i) = i_sel else { break };
        if violation < tol || iterations >= max_iter {
            break;
        }

        kernel_row(i, &mut ki);
        // j: second-order choice in I_low.
        let mut best = f64::INFINITY;
        let mut j_sel = None;
        for t in 0..n {
            if !in_low(alpha[t], y[t]) {
                continue;
            }
            let b = gmax + y[t] * grad[t];
            if b > 0.0 {
                let mut a = diag[i] + diag[t] - 2.0 * ki[t];
                if a <= 0.0 {
                    a = TAU;
                }
                let obj = -(b * b) / a;
                if obj < best {
                    best = obj;
                    j_sel = Some(t);
                }
            }
        }
        let Some(j) = j_sel else { break };
        kernel_row(j, &mut kj);
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let kij = ki[j];
        if y[i] != y[j] {
            let mut quad = diag[i] + diag[j] - 2.0 * kij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = diag[i] + diag[j] - 2.0 * kij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * ki[t] * di + y[j] * kj[t] * dj);
        }
    }

    let converged = violation < tol;
    if !converged {
        log::warn!("SMO stopped after {iterations} iterations with violation {violation:.3e} (tol {tol:.1e})");
    }
    SmoSolution {
        rho: rho(&alpha, &grad, y, c),
        alpha,
        violation: violation.max(0.0),
        iterations,
        converged,
    }
}

fn rho(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut n_free, mut sum_free) = (0usize, 0.0);
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    if n_free > 0 {
        sum_free / n_free as f64
    } else {
        (ub + lb) / 2.0
    }
}

/// Kernel over the training rows, computed once per distinct row.
struct PatternKernel<'a> {
    patterns: Vec<&'a [(usize, u32)]>,
    pattern_of: Vec<usize>,
    gamma: f64,
    table: Option<Vec<f64>>,
    cache: HashMap<usize, Vec<f64>>,
}

impl<'a> PatternKernel<'a> {
    fn new(rows: &[&'a [(usize, u32)]], gamma: f64) -> Self {
        // Rows arrive canonically sorted, so equal rows are adjacent.
        let mut patterns: Vec<&[(usize, u32)]> = Vec::new();
        let mut pattern_of = Vec::with_capacity(rows.len());
        for &r in rows {
            if patterns.last() != Some(&r) {
                patterns.push(r);
            }
            pattern_of.push(patterns.len() - 1);
        }
        let p = patterns.len();
        let table = (p <= DENSE_KERNEL_LIMIT).then(|| {
            let mut t = vec![0.0; p * p];
            for a in 0..p {
                t[a * p + a] = 1.0;
                for b in a + 1..p {
                    let k = sparse_rbf(patterns[a], patterns[b], gamma);
                    t[a * p + b] = k;
                    t[b * p + a] = k;
                }
            }
            t
        });
        PatternKernel {
            patterns,
            pattern_of,
            gamma,
            table,
            cache: HashMap::new(),
        }
    }

    fn fill_row(&mut self, i: usize, out: &mut [f64]) {
        let p = self.patterns.len();
        let a = self.pattern_of[i];
        let prow: &[f64] = match &self.table {
            Some(t) => &t[a * p..(a + 1) * p],
            None => {
                if !self.cache.contains_key(&a) {
                    if self.cache.len() >= ROW_CACHE_LIMIT {
                        self.cache.clear();
                    }
                    let pa = self.patterns[a];
                    let row = self.patterns.iter().map(|pb| sparse_rbf(pa, pb, self.gamma)).collect();
                    self.cache.insert(a, row);
                }
                &self.cache[&a]
            }
        };
        for (o, &b) in out.iter_mut().zip(&self.pattern_of) {
            *o = prow[b];
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    params: SvmParams,
    n_features: usize,
    /// Distinct support-vector rows (sparse `(column, value)` pairs).
    support_vectors: Vec<Vec<(usize, u32)>>,
    /// `sum alpha_i y_i` over the training rows equal to each support vector.
    coef: Vec<f64>,
    bias: f64,
}

impl SvmModel {
    pub(crate) fn fit(params: &SvmParams, data: &TrainingSet<'_>) -> Result<Self> {
        let y: Vec<f64> = data
            .labels
            .iter()
            .map(|l| if *l == Label::Yes { 1.0 } else { -1.0 })
            .collect();
        let n = y.len();
        let mut kernel = PatternKernel::new(&data.rows, params.gamma);
        let diag = vec![1.0; n];
        let sol = solve(
            &y,
            &diag,
            params.c_penalty,
            params.smo_tolerance,
            params.max_passes.saturating_mul(n.max(1)),
            |i, out| kernel.fill_row(i, out),
        );

        let mut support_vectors: Vec<Vec<(usize, u32)>> = Vec::new();
        let mut coef: Vec<f64> = Vec::new();
        let mut last_pattern = usize::MAX;
        for (t, (&a, &yt)) in sol.alpha.iter().zip(&y).enumerate() {
            if a <= 0.0 {
                continue;
            }
            let pat = kernel.pattern_of[t];
            if pat != last_pattern {
                support_vectors.push(data.rows[t].to_vec());
                coef.push(0.0);
                last_pattern = pat;
            }
            *coef.last_mut().expect("pushed above") += a * yt;
        }
        Ok(SvmModel {
            params: params.clone(),
            n_features: data.n_features,
            support_vectors,
            coef,
            bias: -sol.rho,
        })
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_support_vectors(&self) -> usize {
        self.support_vectors.len()
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    /// `sum alpha_i y_i K(x_i, x) + b`.
    pub fn decision_value(&self, row: &[(usize, u32)]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.coef)
            .map(|(sv, c)| c * sparse_rbf(sv, row, self.params.gamma))
            .sum::<f64>()
            + self.bias
    }

    /// `Yes` when the decision value is non-negative.
    pub fn predict_row(&self, row: &[(usize, u32)]) -> Label {
        if self.decision_value(row) >= 0.0 {
            Label::Yes
        } else {
            Label::No
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rbf_examples() {
        assert_eq!(rbf_kernel(&[0.3, 2.0], &[0.3, 2.0], 1.0).unwrap(), 1.0);
        let k = rbf_kernel(&[0.0, 0.0], &[1.0, 0.0], 1.0).unwrap();
        assert!((k - (-1.0f64).exp()).abs() < 1e-15);
        assert!((k - 0.367879).abs() < 1e-6);
        let (x, z) = ([1.0, -2.0, 0.5], [0.0, 1.0, 2.0]);
        let k1 = rbf_kernel(&x, &z, 0.3).unwrap();
        let k2 = rbf_kernel(&x, &z, 0.6).unwrap();
        assert!((k2 - k1 * k1).abs() < 1e-15);
        assert!(rbf_kernel(&[1.0], &[1.0, 2.0], 1.0).is_err());
    }

    #[test]
    fn sparse_distance_matches_dense() {
        let a = [(0, 1), (3, 2), (5, 1)];
        let b = [(1, 4), (3, 1), (6, 2)];
        // diffs: c0 1, c1 4, c3 1, c5 1, c6 2
        assert_eq!(sparse_sq_dist(&a, &b), 1.0 + 16.0 + 1.0 + 1.0 + 4.0);
        assert_eq!(sparse_sq_dist(&a, &a), 0.0);
        assert_eq!(sparse_sq_dist(&[], &b), 16.0 + 1.0 + 4.0);
    }

    #[test]
    fn invalid_params() {
        for p in [
            SvmParams { c_penalty: 0.0, ..Default::default() },
            SvmParams { gamma: -1.0, ..Default::default() },
            SvmParams { smo_tolerance: 0.0, ..Default::default() },
            SvmParams { max_passes: 0, ..Default::default() },
        ] {
            assert!(p.validate().is_err());
        }
    }

    #[test]
    fn two_point_problem_is_exact() {
        // Two points at distance 1: alpha = 2 / (2 - 2k) when below C.
        let k = (-1.0f64).exp();
        let kernel = vec![vec![1.0, k], vec![k, 1.0]];
        let sol = smo_solve(&kernel, &[1.0, -1.0], 10.0, 1e-9, 1000);
        let expect = 1.0 / (1.0 - k);
        assert!((sol.alpha[0] - expect).abs() < 1e-9);
        assert!((sol.alpha[1] - expect).abs() < 1e-9);
        assert!(sol.rho.abs() < 1e-9);
        assert!(sol.converged);
    }
}
