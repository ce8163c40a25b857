//! Epsilon-insensitive support vector regression.
//!
//! Training solves the dual problem
//!
//! ```text
//! minimize    ½ βᵀKβ − yᵀβ + ε Σ|βᵢ|
//! subject to  Σ βᵢ = 0,  −C ≤ βᵢ ≤ C
//! ```
//!
//! where `βᵢ = αᵢ − αᵢ*`. Internally the problem is split into `2n` box
//! constrained variables (`α` then `α*`) and solved two at a time: the first
//! variable of each pair is the maximal KKT violator, the second is chosen by
//! the second-order gain of the pair update. Kernel rows are cached with
//! least-recently-used eviction.
//!
//! The predictor is `f(x) = Σ βᵢ K(xᵢ, x) + b`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataio::{FeatureMatrix, ScalerParams, TargetVector};
use crate::kernels::KernelSpec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SvrError {
    #[error("invalid SVR parameter {name}: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("training set is empty")]
    Empty,
    #[error("{rows} feature rows but {targets} targets")]
    LengthMismatch { rows: usize, targets: usize },
    #[error("non-finite value in training data")]
    NonFinite,
    #[error("model expects {expected} features, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("solver stopped after {iterations} iterations with KKT violation {worst_violation:e}")]
    NotConverged {
        iterations: u64,
        worst_violation: f64,
    },
}

pub const DEFAULT_EPSILON: f64 = 0.1;
pub const DEFAULT_TOL: f64 = 1e-3;
pub const DEFAULT_MAX_PASSES: u64 = 10_000;
/// Upper bound on the number of cached kernel rows.
pub const CACHE_ROWS: usize = 2_000;

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrParams {
    pub c: f64,
    pub epsilon: f64,
    pub kernel: KernelSpec,
    pub tol: f64,
    /// Iteration budget in sweeps: the solver gives up after
    /// `max_passes * n` pair updates.
    pub max_passes: u64,
}

impl SvrParams {
    pub fn new(c: f64, epsilon: f64, kernel: KernelSpec) -> Result<Self, SvrError> {
        let p = Self {
            c,
            epsilon,
            kernel,
            tol: DEFAULT_TOL,
            max_passes: DEFAULT_MAX_PASSES,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_tol(mut self, tol: f64) -> Result<Self, SvrError> {
        self.tol = tol;
        self.validate()?;
        Ok(self)
    }

    pub fn with_max_passes(mut self, max_passes: u64) -> Result<Self, SvrError> {
        self.max_passes = max_passes;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), SvrError> {
        let bad = |name, value| Err(SvrError::InvalidParameter { name, value });
        if !(self.c.is_finite() && self.c > 0.0) {
            return bad("c", self.c);
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return bad("epsilon", self.epsilon);
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return bad("tol", self.tol);
        }
        if self.max_passes == 0 {
            return bad("max_passes", 0.0);
        }
        Ok(())
    }
}

impl Default for SvrParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            epsilon: DEFAULT_EPSILON,
            kernel: KernelSpec::default(),
            tol: DEFAULT_TOL,
            max_passes: DEFAULT_MAX_PASSES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingInfo {
    pub n_train: usize,
    pub iterations: u64,
    /// Dual objective `½βᵀKβ − yᵀβ + εΣ|β|` at the returned solution.
    pub dual_objective: f64,
    /// Final maximal violating-pair gap.
    pub gap: f64,
    pub seed: Option<u64>,
}

/// A trained regressor. Only rows with nonzero `beta` are stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub kernel: KernelSpec,
    pub n_features: usize,
    pub support_vectors: Vec<Vec<f64>>,
    /// Row index of each support vector in the training matrix.
    pub support_indices: Vec<usize>,
    pub beta: Vec<f64>,
    pub bias: f64,
    pub params: SvrParams,
    pub scaler: Option<ScalerParams>,
    pub training: TrainingInfo,
}

impl SvrModel {
    pub fn n_support(&self) -> usize {
        self.beta.len()
    }

    pub fn with_scaler(mut self, scaler: ScalerParams) -> Self {
        self.scaler = Some(scaler);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.training.seed = Some(seed);
        self
    }

    #[inline]
    fn decision(&self, x: &[f64]) -> f64 {
        let mut sum = 0.0;
        for (sv, b) in self.support_vectors.iter().zip(&self.beta) {
            sum += b * self.kernel.eval_unchecked(sv, x);
        }
        sum + self.bias
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64, SvrError> {
        if x.len() != self.n_features {
            return Err(SvrError::DimensionMismatch {
                expected: self.n_features,
                found: x.len(),
            });
        }
        Ok(self.decision(x))
    }

    pub fn predict_batch(&self, x: &FeatureMatrix) -> Result<TargetVector, SvrError> {
        if x.n_rows() == 0 {
            return Ok(TargetVector::default());
        }
        if x.n_cols() != self.n_features {
            return Err(SvrError::DimensionMismatch {
                expected: self.n_features,
                found: x.n_cols(),
            });
        }
        let out = (0..x.n_rows())
            .into_par_iter()
            .map(|i| self.decision(x.row(i)))
            .collect();
        Ok(TargetVector(out))
    }
}

/// LRU cache of kernel rows `K(x_s, ·)`.
struct KernelCache<'a> {
    x: &'a FeatureMatrix,
    kernel: KernelSpec,
    rows: Vec<Option<Box<[f64]>>>,
    stamp: Vec<u64>,
    resident: Vec<usize>,
    capacity: usize,
    clock: u64,
}

impl<'a> KernelCache<'a> {
    fn new(x: &'a FeatureMatrix, kernel: KernelSpec, capacity: usize) -> Self {
        let n = x.n_rows();
        Self {
            x,
            kernel,
            rows: vec![None; n],
            stamp: vec![0; n],
            resident: Vec::with_capacity(capacity),
            capacity: capacity.clamp(1, n.max(1)),
            clock: 0,
        }
    }

    fn ensure(&mut self, s: usize) {
        self.clock += 1;
        self.stamp[s] = self.clock;
        if self.rows[s].is_some() {
            return;
        }
        if self.resident.len() == self.capacity {
            let (pos, _) = self
                .resident
                .iter()
                .enumerate()
                .min_by_key(|(_, &r)| self.stamp[r])
                .expect("cache capacity is at least one");
            let victim = self.resident.swap_remove(pos);
            self.rows[victim] = None;
        }
        let xs = self.x.row(s);
        let row: Box<[f64]> = self
            .x
            .rows()
            .map(|xt| self.kernel.eval_unchecked(xs, xt))
            .collect();
        self.rows[s] = Some(row);
        self.resident.push(s);
    }

    fn row(&self, s: usize) -> &[f64] {
        self.rows[s].as_deref().expect("row was ensured")
    }
}

struct Solution {
    alpha: Vec<f64>,
    grad: Vec<f64>,
    iterations: u64,
    gap: f64,
}

fn solve(
    x: &FeatureMatrix,
    y: &[f64],
    params: &SvrParams,
    cache_rows: usize,
) -> Result<Solution, SvrError> {
    let n = y.len();
    let l = 2 * n;
    let c = params.c;
    let sign = |t: usize| if t < n { 1.0 } else { -1.0 };
    let sample = |t: usize| if t < n { t } else { t - n };

    let diag: Vec<f64> = x
        .rows()
        .map(|r| params.kernel.eval_unchecked(r, r))
        .collect();
    let mut cache = KernelCache::new(x, params.kernel, n.min(cache_rows));
    let mut alpha = vec![0.0; l];
    // gradient of ½αᵀQα + pᵀα at α = 0 is p
    let mut grad: Vec<f64> = (0..l)
        .map(|t| {
            if t < n {
                params.epsilon - y[t]
            } else {
                params.epsilon + y[t - n]
            }
        })
        .collect();

    let max_iter = params.max_passes.saturating_mul(n.max(1) as u64);
    let mut iterations = 0u64;
    loop {
        // first index: maximal violator in I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            if alpha[t] < c && -grad[t] >= gmax {
                gmax = -grad[t];
                i = t;
            }
        }
        for t in n..l {
            if alpha[t] > 0.0 && grad[t] >= gmax {
                gmax = grad[t];
                i = t;
            }
        }

        let mut gmax2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut best_gain = f64::INFINITY;
        if i != usize::MAX {
            let si = sample(i);
            cache.ensure(si);
            let ki = cache.row(si);
            let mut consider = |t: usize, st: usize, grad_diff: f64| {
                if grad_diff > 0.0 {
                    let mut quad = diag[si] + diag[st] - 2.0 * ki[st];
                    if quad <= 0.0 {
                        quad = TAU;
                    }
                    let gain = -(grad_diff * grad_diff) / quad;
                    if gain <= best_gain {
                        best_gain = gain;
                        j = t;
                    }
                }
            };
            for t in 0..n {
                if alpha[t] > 0.0 {
                    gmax2 = gmax2.max(grad[t]);
                    consider(t, t, gmax + grad[t]);
                }
            }
            for t in n..l {
                if alpha[t] < c {
                    gmax2 = gmax2.max(-grad[t]);
                    consider(t, t - n, gmax - grad[t]);
                }
            }
        }

        let gap = gmax + gmax2;
        if i == usize::MAX || j == usize::MAX || gap < params.tol {
            return Ok(Solution {
                alpha,
                grad,
                iterations,
                gap: gap.max(0.0),
            });
        }
        if iterations >= max_iter {
            return Err(SvrError::NotConverged {
                iterations,
                worst_violation: gap,
            });
        }
        iterations += 1;

        let (si, sj) = (sample(i), sample(j));
        cache.ensure(si);
        cache.ensure(sj);
        let (yi, yj) = (sign(i), sign(j));
        let kij = cache.row(si)[sj];
        let qij = yi * yj * kij;
        let (old_i, old_j) = (alpha[i], alpha[j]);

        if yi != yj {
            let quad = (diag[si] + diag[sj] + 2.0 * qij).max(TAU);
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
            // both boxes share the same C
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
            let quad = (diag[si] + diag[sj] - 2.0 * qij).max(TAU);
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

        let di = alpha[i] - old_i;
        let dj = alpha[j] - old_j;
        let (ci, cj) = (yi * di, yj * dj);
        let ki = cache.row(si);
        let kj = cache.row(sj);
        let (up, down) = grad.split_at_mut(n);
        for (s, (gu, gd)) in up.iter_mut().zip(down.iter_mut()).enumerate() {
            let g = ci * ki[s] + cj * kj[s];
            *gu += g;
            *gd -= g;
        }
    }
}

/// Bias from the converged gradient: the average over free variables, or the
/// midpoint of the feasible interval when every variable sits at a bound.
fn compute_bias(alpha: &[f64], grad: &[f64], y: &[f64], params: &SvrParams) -> f64 {
    let n = y.len();
    let c = params.c;
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free_sum = 0.0;
    let mut n_free = 0usize;
    for t in 0..2 * n {
        let yt = if t < n { 1.0 } else { -1.0 };
        let yg = yt * grad[t];
        if alpha[t] >= c {
            if yt < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if yt > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            free_sum += yg;
        }
    }
    let rho = if n_free > 0 {
        free_sum / n_free as f64
    } else {
        (ub + lb) / 2.0
    };
    -rho
}

/// Trains an ε-SVR on standardized (or otherwise prepared) data.
pub fn train(
    x: &FeatureMatrix,
    y: &TargetVector,
    params: &SvrParams,
) -> Result<SvrModel, SvrError> {
    train_with_cache(x, y, params, CACHE_ROWS)
}

fn train_with_cache(
    x: &FeatureMatrix,
    y: &TargetVector,
    params: &SvrParams,
    cache_rows: usize,
) -> Result<SvrModel, SvrError> {
    params.validate()?;
    let n = y.len();
    if x.n_rows() != n {
        return Err(SvrError::LengthMismatch {
            rows: x.n_rows(),
            targets: n,
        });
    }
    if n == 0 {
        return Err(SvrError::Empty);
    }
    if x.as_slice()
        .iter()
        .chain(y.as_slice())
        .any(|v| !v.is_finite())
    {
        return Err(SvrError::NonFinite);
    }
    let y = y.as_slice();
    let sol = solve(x, y, params, cache_rows)?;

    let beta: Vec<f64> = (0..n).map(|i| sol.alpha[i] - sol.alpha[i + n]).collect();
    let bias = if beta.iter().all(|&b| b == 0.0) {
        // Every constant inside the tube is optimal; prefer the mean.
        let lo = y
            .iter()
            .fold(f64::NEG_INFINITY, |m, v| m.max(v - params.epsilon));
        let hi = y
            .iter()
            .fold(f64::INFINITY, |m, v| m.min(v + params.epsilon));
        let mean = y.iter().sum::<f64>() / n as f64;
        if lo <= hi {
            mean.clamp(lo, hi)
        } else {
            compute_bias(&sol.alpha, &sol.grad, y, params)
        }
    } else {
        compute_bias(&sol.alpha, &sol.grad, y, params)
    };

    // (Kβ)_i = grad_i − p_i for the α half of the gradient.
    let mut objective = 0.0;
    for i in 0..n {
        let k_beta = sol.grad[i] - (params.epsilon - y[i]);
        objective += 0.5 * beta[i] * k_beta - y[i] * beta[i] + params.epsilon * beta[i].abs();
    }

    let mut support_vectors = Vec::new();
    let mut support_indices = Vec::new();
    let mut kept = Vec::new();
    for (i, &b) in beta.iter().enumerate() {
        if b != 0.0 {
            support_vectors.push(x.row(i).to_vec());
            support_indices.push(i);
            kept.push(b);
        }
    }
    log::debug!(
        "svr: n={n} C={} iterations={} support={} gap={:e}",
        params.c,
        sol.iterations,
        kept.len(),
        sol.gap
    );
    Ok(SvrModel {
        kernel: params.kernel,
        n_features: x.n_cols(),
        support_vectors,
        support_indices,
        beta: kept,
        bias,
        params: *params,
        scaler: None,
        training: TrainingInfo {
            n_train: n,
            iterations: sol.iterations,
            dual_objective: objective,
            gap: sol.gap,
            seed: None,
        },
    })
}

/// Largest violation of the optimality conditions over the training set:
/// tube conditions per point given its coefficient, the box `|β| ≤ C`, and the
/// equality `Σβ = 0`. Zero means exactly optimal.
pub fn kkt_violation(
    model: &SvrModel,
    x: &FeatureMatrix,
    y: &TargetVector,
    params: &SvrParams,
) -> f64 {
    let c = params.c;
    let eps = params.epsilon;
    let mut beta = vec![0.0; y.len()];
    for (&i, &b) in model.support_indices.iter().zip(&model.beta) {
        if i < beta.len() {
            beta[i] = b;
        }
    }
    let at_bound = |b: f64| b.abs() >= c * (1.0 - 1e-12);
    let mut worst = model.beta.iter().sum::<f64>().abs();
    for (i, &b) in beta.iter().enumerate() {
        let r = model.decision(x.row(i)) - y.0[i];
        let v = if b == 0.0 {
            (r.abs() - eps).max(0.0)
        } else if b > 0.0 {
            if at_bound(b) {
                (r + eps).max(0.0)
            } else {
                (r + eps).abs()
            }
        } else if at_bound(b) {
            (eps - r).max(0.0)
        } else {
            (r - eps).abs()
        };
        worst = worst.max(v).max(b.abs() - c);
    }
    worst
}
