//! Binary max-margin classifiers.
//!
//! [`train_linear`] solves the L1-loss SVM on sparse vectors by dual
//! coordinate descent with a seeded permutation per epoch. The bias is an
//! extra constant feature of value 1, so it is regularised along with `w`.
//! [`train_smo`] solves the kernel SVM dual on a precomputed Gram matrix by
//! two-variable SMO with maximal-violating-pair selection.

use crate::features::SparseVector;
use crate::treekernel::{KernelConfig, KernelGram};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Class-dependent cost multipliers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeight {
    /// Class `c` gets `C * N / (2 N_c)`, so both classes carry equal total cost.
    #[default]
    Balanced,
    /// Positives get `C * w`, negatives `C`.
    Positive(f64),
}

/// Optimiser for the chain model's structured hinge objective.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChainSolver {
    /// Block-coordinate Frank-Wolfe on the dual: per-document steps with
    /// closed-form line search and weighted iterate averaging.
    #[default]
    FrankWolfe,
    /// Stochastic subgradient with step `1 / (lambda t)` and uniform averaging.
    Pegasos,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub c: f64,
    pub class_weight: ClassWeight,
    pub tol: f64,
    /// Epoch cap for the linear solver; SMO allows `max_iter * n` pair updates.
    pub max_iter: usize,
    /// Passes over the documents for chain training.
    pub epochs: usize,
    #[serde(default)]
    pub chain_solver: ChainSolver,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            c: 1.0,
            class_weight: ClassWeight::Balanced,
            tol: 1e-3,
            max_iter: 10_000,
            epochs: 20,
            chain_solver: ChainSolver::FrankWolfe,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), SvmError> {
        let bad = |msg: String| Err(SvmError::InvalidConfig(msg));
        if !(self.c > 0.0 && self.c.is_finite()) {
            return bad(format!("C must be positive, got {}", self.c));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if let ClassWeight::Positive(w) = self.class_weight {
            if !(w > 0.0 && w.is_finite()) {
                return bad(format!("positive weight must be positive, got {w}"));
            }
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1".into());
        }
        Ok(())
    }

    /// Upper bound `C_i` of every example's dual variable.
    pub fn costs(&self, y: &[i8]) -> Vec<f64> {
        let n = y.len() as f64;
        let positives = y.iter().filter(|&&l| l > 0).count() as f64;
        let negatives = n - positives;
        let (pos, neg) = match self.class_weight {
            ClassWeight::Balanced if positives > 0.0 && negatives > 0.0 => {
                (self.c * n / (2.0 * positives), self.c * n / (2.0 * negatives))
            }
            ClassWeight::Balanced => (self.c, self.c),
            ClassWeight::Positive(w) => (self.c * w, self.c),
        };
        y.iter().map(|&l| if l > 0 { pos } else { neg }).collect()
    }
}

#[derive(Debug, Error)]
pub enum SvmError {
    #[error("no training data")]
    EmptyData,
    #[error("label {0} is not +1 or -1")]
    InvalidLabel(i8),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("kernel matrix is {size}x{size} but there are {labels} labels")]
    NotSquare { size: usize, labels: usize },
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("no convergence: KKT violation {violation:.3e} after {iterations} iterations")]
    NoConvergence { model: Box<KernelModel>, violation: f64, iterations: usize },
    #[error("kernel row has {found} entries, model has {expected} support vectors")]
    LengthMismatch { expected: usize, found: usize },
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
}

fn check_labels(y: &[i8]) -> Result<(), SvmError> {
    match y.iter().find(|&&l| l != 1 && l != -1) {
        Some(&l) => Err(SvmError::InvalidLabel(l)),
        None => Ok(()),
    }
}

/// `score = w . x + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: SparseVector,
    pub bias: f64,
    pub epochs: usize,
    pub converged: bool,
    /// Set when the training labels had a single class.
    pub warning: Option<String>,
}

impl LinearModel {
    pub fn dim(&self) -> usize {
        self.weights.dim()
    }

    pub fn score(&self, x: &SparseVector) -> Result<f64, SvmError> {
        predict_linear(self, x)
    }
}

/// Trains a linear SVM with labels in {+1, -1}.
pub fn train_linear(x: &[SparseVector], y: &[i8], cfg: &TrainConfig) -> Result<LinearModel, SvmError> {
    cfg.validate()?;
    if x.is_empty() {
        return Err(SvmError::EmptyData);
    }
    if x.len() != y.len() {
        return Err(SvmError::LengthMismatch { expected: x.len(), found: y.len() });
    }
    check_labels(y)?;
    let dim = x[0].dim();
    if let Some(bad) = x.iter().find(|v| v.dim() != dim) {
        return Err(SvmError::DimensionMismatch { expected: dim, found: bad.dim() });
    }
    if y.iter().all(|&l| l == y[0]) {
        return Ok(LinearModel {
            weights: SparseVector::zeros(dim),
            bias: f64::from(y[0]),
            epochs: 0,
            converged: true,
            warning: Some(format!("single-class training data (all {:+}); constant model", y[0])),
        });
    }

    let costs = cfg.costs(y);
    let yf: Vec<f64> = y.iter().map(|&l| f64::from(l)).collect();
    let diag: Vec<f64> = x.iter().map(|v| v.squared_norm() + 1.0).collect();
    let mut alpha = vec![0.0; x.len()];
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut order: Vec<usize> = (0..x.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut epochs = 0;
    let mut converged = false;

    while epochs < cfg.max_iter {
        order.shuffle(&mut rng);
        let mut max_violation: f64 = 0.0;
        for &i in &order {
            let g = yf[i] * (x[i].dot_dense(&w) + b) - 1.0;
            let pg = if alpha[i] <= 0.0 {
                g.min(0.0)
            } else if alpha[i] >= costs[i] {
                g.max(0.0)
            } else {
                g
            };
            max_violation = max_violation.max(pg.abs());
            if pg.abs() > 1e-12 {
                let old = alpha[i];
                alpha[i] = (old - g / diag[i]).clamp(0.0, costs[i]);
                let step = (alpha[i] - old) * yf[i];
                x[i].add_to(&mut w, step);
                b += step;
            }
        }
        epochs += 1;
        if max_violation < cfg.tol {
            converged = true;
            break;
        }
    }

    Ok(LinearModel { weights: SparseVector::from_dense(&w), bias: b, epochs, converged, warning: None })
}

/// Decision score; the predicted label is +1 iff the score is >= 0.
pub fn predict_linear(model: &LinearModel, x: &SparseVector) -> Result<f64, SvmError> {
    if x.dim() != model.dim() {
        return Err(SvmError::DimensionMismatch { expected: model.dim(), found: x.dim() });
    }
    Ok(model.weights.dot(x) + model.bias)
}

/// `1/2 |w|^2 + sum_i C_i max(0, 1 - y_i (w . x_i + b))`.
pub fn linear_objective(model: &LinearModel, x: &[SparseVector], y: &[i8], cfg: &TrainConfig) -> f64 {
    let costs = cfg.costs(y);
    let hinge: f64 = x
        .iter()
        .zip(y)
        .zip(&costs)
        .map(|((xi, &yi), ci)| ci * (1.0 - f64::from(yi) * (model.weights.dot(xi) + model.bias)).max(0.0))
        .sum();
    0.5 * model.weights.squared_norm() + hinge
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportVector {
    /// Index into the training set.
    pub index: usize,
    /// `alpha_i * y_i`.
    pub coef: f64,
}

/// `score = sum_s coef_s K(x, x_s) + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelModel {
    pub supports: Vec<SupportVector>,
    pub bias: f64,
    pub kernel: KernelConfig,
    pub iterations: usize,
    pub max_violation: f64,
}

/// `kernel_row[s]` is the kernel value against support `s`, in model order.
pub fn predict_kernel(model: &KernelModel, kernel_row: &[f64]) -> Result<f64, SvmError> {
    if kernel_row.len() != model.supports.len() {
        return Err(SvmError::LengthMismatch { expected: model.supports.len(), found: kernel_row.len() });
    }
    Ok(model.supports.iter().zip(kernel_row).map(|(s, k)| s.coef * k).sum::<f64>() + model.bias)
}

const TAU: f64 = 1e-12;

struct SmoState<'a> {
    gram: &'a KernelGram,
    y: Vec<f64>,
    costs: Vec<f64>,
    alpha: Vec<f64>,
    /// Gradient of `1/2 a'Qa - sum a`, with `Q_ij = y_i y_j K_ij`.
    grad: Vec<f64>,
}

impl SmoState<'_> {
    fn in_up(&self, t: usize) -> bool {
        if self.y[t] > 0.0 {
            self.alpha[t] < self.costs[t]
        } else {
            self.alpha[t] > 0.0
        }
    }

    fn in_low(&self, t: usize) -> bool {
        if self.y[t] > 0.0 {
            self.alpha[t] > 0.0
        } else {
            self.alpha[t] < self.costs[t]
        }
    }

    /// `(i, m, j, M)`: the maximal violating pair and its bounds.
    fn select(&self) -> (Option<usize>, f64, Option<usize>, f64) {
        let (mut i, mut m) = (None, f64::NEG_INFINITY);
        let (mut j, mut big_m) = (None, f64::INFINITY);
        for t in 0..self.y.len() {
            let v = -self.y[t] * self.grad[t];
            if self.in_up(t) && v > m {
                i = Some(t);
                m = v;
            }
            if self.in_low(t) && v < big_m {
                j = Some(t);
                big_m = v;
            }
        }
        (i, m, j, big_m)
    }

    fn dual_objective(&self) -> f64 {
        0.5 * self.alpha.iter().zip(&self.grad).map(|(a, g)| a * (1.0 - g)).sum::<f64>()
    }

    fn update(&mut self, i: usize, j: usize) {
        let k = self.gram;
        let (ci, cj) = (self.costs[i], self.costs[j]);
        let (old_i, old_j) = (self.alpha[i], self.alpha[j]);
        let qij = self.y[i] * self.y[j] * k.get(i, j);
        let (mut ai, mut aj) = (old_i, old_j);
        if self.y[i] != self.y[j] {
            let mut quad = k.get(i, i) + k.get(j, j) + 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-self.grad[i] - self.grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > ci - cj {
                if ai > ci {
                    ai = ci;
                    aj = ci - diff;
                }
            } else if aj > cj {
                aj = cj;
                ai = cj + diff;
            }
        } else {
            let mut quad = k.get(i, i) + k.get(j, j) - 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (self.grad[i] - self.grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > ci {
                if ai > ci {
                    ai = ci;
                    aj = sum - ci;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > cj {
                if aj > cj {
                    aj = cj;
                    ai = sum - cj;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        self.alpha[i] = ai;
        self.alpha[j] = aj;
        let (di, dj) = (ai - old_i, aj - old_j);
        let (row_i, row_j) = (k.row(i), k.row(j));
        for t in 0..self.grad.len() {
            self.grad[t] += self.y[t] * (self.y[i] * row_i[t] * di + self.y[j] * row_j[t] * dj);
        }
    }
}

/// Trains a kernel SVM on a precomputed Gram matrix.
pub fn train_smo(gram: &KernelGram, y: &[i8], cfg: &TrainConfig) -> Result<KernelModel, SvmError> {
    solve_smo(gram, y, cfg, None)
}

/// As [`train_smo`], also returning the dual objective after every update.
pub fn train_smo_traced(gram: &KernelGram, y: &[i8], cfg: &TrainConfig) -> (Result<KernelModel, SvmError>, Vec<f64>) {
    let mut trace = Vec::new();
    let result = solve_smo(gram, y, cfg, Some(&mut trace));
    (result, trace)
}

fn solve_smo(
    gram: &KernelGram,
    y: &[i8],
    cfg: &TrainConfig,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<KernelModel, SvmError> {
    cfg.validate()?;
    let n = gram.size();
    if y.len() != n {
        return Err(SvmError::NotSquare { size: n, labels: y.len() });
    }
    if n == 0 {
        return Err(SvmError::EmptyData);
    }
    check_labels(y)?;
    if y.iter().all(|&l| l == y[0]) {
        return Err(SvmError::SingleClass);
    }

    let mut state = SmoState {
        gram,
        y: y.iter().map(|&l| f64::from(l)).collect(),
        costs: cfg.costs(y),
        alpha: vec![0.0; n],
        grad: vec![-1.0; n],
    };
    let cap = cfg.max_iter.saturating_mul(n);
    let mut iterations = 0;
    let (violation, bias) = loop {
        let (i, m, j, big_m) = state.select();
        let gap = if i.is_some() && j.is_some() { m - big_m } else { 0.0 };
        let bias = if i.is_some() && j.is_some() {
            (m + big_m) / 2.0
        } else {
            // One of the index sets is empty: every variable sits at a bound.
            let bound = if i.is_some() { m } else { big_m };
            if bound.is_finite() {
                bound
            } else {
                0.0
            }
        };
        if gap < cfg.tol || iterations >= cap {
            break (gap.max(0.0), bias);
        }
        state.update(i.expect("checked"), j.expect("checked"));
        iterations += 1;
        if let Some(trace) = trace.as_deref_mut() {
            trace.push(state.dual_objective());
        }
    };

    let supports = state
        .alpha
        .iter()
        .enumerate()
        .filter(|(_, &a)| a > 0.0)
        .map(|(index, &a)| SupportVector { index, coef: a * state.y[index] })
        .collect();
    let model = KernelModel {
        supports,
        bias,
        kernel: KernelConfig { lambda: gram.lambda, normalize: gram.normalized },
        iterations,
        max_violation: violation,
    };
    if violation >= cfg.tol {
        return Err(SvmError::NoConvergence { model: Box::new(model), violation, iterations });
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(dim: usize, pairs: &[(usize, f64)]) -> SparseVector {
        SparseVector::from_pairs(dim, pairs.to_vec())
    }

    fn identity_gram(n: usize) -> KernelGram {
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            v[i * n + i] = 1.0;
        }
        KernelGram::from_rows(n, v, 1.0, false).unwrap()
    }

    #[test]
    fn symmetric_pair_is_separated() {
        let x = [sv(1, &[(0, 1.0)]), sv(1, &[(0, -1.0)])];
        let cfg = TrainConfig { c: 10.0, tol: 1e-8, ..Default::default() };
        let model = train_linear(&x, &[1, -1], &cfg).unwrap();
        assert!(model.converged);
        assert!(model.weights.get(0) > 0.0);
        assert!(predict_linear(&model, &x[0]).unwrap() > 0.0);
        assert!(predict_linear(&model, &x[1]).unwrap() < 0.0);
        // Optimum: w = 1, b = 0, no hinge loss.
        assert!((linear_objective(&model, &x, &[1, -1], &cfg) - 0.5).abs() < 1e-4);
    }

    #[test]
    fn linear_errors_and_single_class() {
        let cfg = TrainConfig::default();
        assert!(matches!(train_linear(&[], &[], &cfg), Err(SvmError::EmptyData)));
        let x = [sv(2, &[(0, 1.0)]), sv(2, &[(1, 1.0)])];
        assert!(matches!(train_linear(&x, &[1, 0], &cfg), Err(SvmError::InvalidLabel(0))));
        let model = train_linear(&x, &[-1, -1], &cfg).unwrap();
        assert!(model.warning.is_some());
        assert!(predict_linear(&model, &x[0]).unwrap() < 0.0);
        assert!(predict_linear(&model, &x[1]).unwrap() < 0.0);
        let bad = [sv(2, &[(0, 1.0)]), sv(3, &[(1, 1.0)])];
        assert!(matches!(train_linear(&bad, &[1, -1], &cfg), Err(SvmError::DimensionMismatch { .. })));
    }

    #[test]
    fn zero_model_and_unit_self_dot() {
        let zero =
            LinearModel { weights: SparseVector::zeros(3), bias: -0.25, epochs: 0, converged: true, warning: None };
        assert_eq!(predict_linear(&zero, &sv(3, &[(1, 5.0)])).unwrap(), -0.25);
        let x = sv(3, &[(0, 0.6), (2, 0.8)]);
        let model = LinearModel { weights: x.clone(), bias: 0.0, epochs: 0, converged: true, warning: None };
        assert!((predict_linear(&model, &x).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(predict_linear(&model, &sv(4, &[])), Err(SvmError::DimensionMismatch { .. })));
    }

    #[test]
    fn balanced_costs_split_evenly() {
        let y = [1, -1, -1, -1, -1, -1, -1];
        let cfg = TrainConfig { c: 0.7, ..Default::default() };
        let costs = cfg.costs(&y);
        let pos: f64 = costs.iter().zip(&y).filter(|(_, &l)| l > 0).map(|(c, _)| c).sum();
        let neg: f64 = costs.iter().zip(&y).filter(|(_, &l)| l < 0).map(|(c, _)| c).sum();
        assert!((pos - neg).abs() <= 1e-12 * pos);
        let cfg = TrainConfig { class_weight: ClassWeight::Positive(3.0), ..Default::default() };
        assert_eq!(cfg.costs(&[1, -1]), [3.0, 1.0]);
    }

    #[test]
    fn smo_identity_pair() {
        let cfg = TrainConfig { class_weight: ClassWeight::Positive(1.0), ..Default::default() };
        let model = train_smo(&identity_gram(2), &[1, -1], &cfg).unwrap();
        let alphas: Vec<f64> = model.supports.iter().map(|s| s.coef.abs()).collect();
        assert_eq!(alphas.len(), 2);
        assert!(alphas.iter().all(|a| (a - 1.0).abs() < 1e-6));
        assert!(model.bias.abs() < 1e-6);
        let sum: f64 = model.supports.iter().map(|s| s.coef).sum();
        assert!(sum.abs() < 1e-9);
        // On the margin.
        let score = predict_kernel(&model, &[1.0, 0.0]).unwrap();
        assert!(score >= 1.0 - 1e-6);
        let score = predict_kernel(&model, &[0.0, 1.0]).unwrap();
        assert!(-score >= 1.0 - 1e-6);
    }

    #[test]
    fn smo_errors() {
        let cfg = TrainConfig::default();
        assert!(matches!(train_smo(&identity_gram(2), &[1, 1], &cfg), Err(SvmError::SingleClass)));
        assert!(matches!(train_smo(&identity_gram(3), &[1, -1], &cfg), Err(SvmError::NotSquare { .. })));
        let model = KernelModel {
            supports: vec![],
            bias: 0.5,
            kernel: KernelConfig::default(),
            iterations: 0,
            max_violation: 0.0,
        };
        assert_eq!(predict_kernel(&model, &[]).unwrap(), 0.5);
        assert!(matches!(predict_kernel(&model, &[1.0]), Err(SvmError::LengthMismatch { .. })));
    }

    #[test]
    fn kernel_score_is_linear_in_row() {
        let model = KernelModel {
            supports: vec![SupportVector { index: 0, coef: 0.5 }, SupportVector { index: 3, coef: -1.5 }],
            bias: 0.25,
            kernel: KernelConfig::default(),
            iterations: 0,
            max_violation: 0.0,
        };
        let row = [0.3, 0.9];
        let doubled = [0.6, 1.8];
        let s1 = predict_kernel(&model, &row).unwrap() - model.bias;
        let s2 = predict_kernel(&model, &doubled).unwrap() - model.bias;
        assert!((s2 - 2.0 * s1).abs() < 1e-12);
    }

    #[test]
    fn smo_iteration_cap_reports_best_iterate() {
        let n = 6;
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                v[i * n + j] = 1.0 / (1.0 + (i as f64 - j as f64).abs());
            }
        }
        let gram = KernelGram::from_rows(n, v, 1.0, false).unwrap();
        let cfg = TrainConfig { max_iter: 1, tol: 1e-12, c: 100.0, ..Default::default() };
        match train_smo(&gram, &[1, -1, 1, -1, 1, -1], &cfg) {
            Err(SvmError::NoConvergence { model, iterations, .. }) => {
                assert_eq!(iterations, n);
                assert!(!model.supports.is_empty());
            }
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }
}
