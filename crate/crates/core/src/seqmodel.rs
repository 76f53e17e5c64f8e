//! Chain-structured max-margin model over a document's sentences.
//!
//! A labelling `y` of sentences `x_1..x_k` scores
//! `start[y_1] + sum_t emission[y_t] . x_t + sum_{t>=2} transition[y_{t-1}][y_t]`.
//! Decoding is Viterbi. Training minimises the margin-rescaled structured
//! hinge with (optionally class-weighted) Hamming loss. Both solvers visit
//! documents in a seeded order and call the loss-augmented decoder once per
//! visit: block-coordinate Frank-Wolfe (default) or Pegasos-style averaged
//! subgradient steps.

use crate::features::SparseVector;
use crate::svm::{ChainSolver, ClassWeight, TrainConfig};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SeqError {
    #[error("no training sequences")]
    EmptyData,
    #[error("empty sequence")]
    EmptySequence,
    #[error("sequence lengths differ: {xs} inputs, {ys} labels")]
    LengthMismatch { xs: usize, ys: usize },
    #[error("label {label} outside the label set of size {size}")]
    UnknownLabel { label: usize, size: usize },
    #[error("feature dimension {found}, model expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
}

/// One document: a feature vector and a label per sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct SeqExample {
    pub xs: Vec<SparseVector>,
    pub ys: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainModel {
    pub labels: Vec<String>,
    pub dim: usize,
    pub emission: Vec<SparseVector>,
    /// `transition[from][to]`.
    pub transition: Vec<Vec<f64>>,
    pub start: Vec<f64>,
}

impl ChainModel {
    pub fn zeros(labels: Vec<String>, dim: usize) -> Self {
        let l = labels.len();
        ChainModel {
            labels,
            dim,
            emission: vec![SparseVector::zeros(dim); l],
            transition: vec![vec![0.0; l]; l],
            start: vec![0.0; l],
        }
    }

    pub fn n_labels(&self) -> usize {
        self.labels.len()
    }

    fn check_inputs(&self, xs: &[SparseVector]) -> Result<(), SeqError> {
        if xs.is_empty() {
            return Err(SeqError::EmptySequence);
        }
        match xs.iter().find(|x| x.dim() != self.dim) {
            Some(x) => Err(SeqError::DimensionMismatch { expected: self.dim, found: x.dim() }),
            None => Ok(()),
        }
    }

    fn check_labels(&self, xs: &[SparseVector], ys: &[usize]) -> Result<(), SeqError> {
        if xs.len() != ys.len() {
            return Err(SeqError::LengthMismatch { xs: xs.len(), ys: ys.len() });
        }
        match ys.iter().find(|&&y| y >= self.n_labels()) {
            Some(&label) => Err(SeqError::UnknownLabel { label, size: self.n_labels() }),
            None => Ok(()),
        }
    }

    /// `scores[t][l] = emission[l] . x_t`.
    pub fn emission_scores(&self, xs: &[SparseVector]) -> Vec<Vec<f64>> {
        xs.iter().map(|x| self.emission.iter().map(|e| e.dot(x)).collect()).collect()
    }
}

pub fn joint_score(model: &ChainModel, xs: &[SparseVector], ys: &[usize]) -> Result<f64, SeqError> {
    model.check_labels(xs, ys)?;
    if xs.is_empty() {
        return Ok(0.0);
    }
    model.check_inputs(xs)?;
    let mut score = model.start[ys[0]];
    for (x, &y) in xs.iter().zip(ys) {
        score += model.emission[y].dot(x);
    }
    for pair in ys.windows(2) {
        score += model.transition[pair[0]][pair[1]];
    }
    Ok(score)
}

/// Best path through per-position label scores. Backpointers and the final
/// label prefer the lowest label index among equal scores.
pub fn viterbi_decode(emissions: &[Vec<f64>], start: &[f64], transition: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let k = emissions.len();
    let l = start.len();
    let mut best: Vec<f64> = (0..l).map(|j| start[j] + emissions[0][j]).collect();
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(k.saturating_sub(1));
    for emission in &emissions[1..] {
        let mut next = vec![0.0; l];
        let mut pointers = vec![0; l];
        for j in 0..l {
            let (mut arg, mut top) = (0, best[0] + transition[0][j]);
            for (i, &b) in best.iter().enumerate().skip(1) {
                let v = b + transition[i][j];
                if v > top {
                    top = v;
                    arg = i;
                }
            }
            next[j] = top + emission[j];
            pointers[j] = arg;
        }
        best = next;
        back.push(pointers);
    }
    let (mut last, mut score) = (0, best[0]);
    for (j, &b) in best.iter().enumerate().skip(1) {
        if b > score {
            score = b;
            last = j;
        }
    }
    let mut path = vec![last; k];
    for t in (1..k).rev() {
        path[t - 1] = back[t - 1][path[t]];
    }
    (path, score)
}

/// Highest-scoring labelling of `xs`.
pub fn viterbi(model: &ChainModel, xs: &[SparseVector]) -> Result<(Vec<usize>, f64), SeqError> {
    model.check_inputs(xs)?;
    Ok(viterbi_decode(&model.emission_scores(xs), &model.start, &model.transition))
}

/// Maximises `joint_score + Hamming(y, gold)`.
pub fn loss_augmented_viterbi(
    model: &ChainModel,
    xs: &[SparseVector],
    gold: &[usize],
) -> Result<(Vec<usize>, f64), SeqError> {
    model.check_inputs(xs)?;
    model.check_labels(xs, gold)?;
    let mut emissions = model.emission_scores(xs);
    augment(&mut emissions, gold, &vec![1.0; model.n_labels()]);
    Ok(viterbi_decode(&emissions, &model.start, &model.transition))
}

/// As [`loss_augmented_viterbi`] with a weighted Hamming loss: a position
/// whose gold label is `g` costs `label_costs[g]` when mislabelled.
pub fn loss_augmented_viterbi_weighted(
    model: &ChainModel,
    xs: &[SparseVector],
    gold: &[usize],
    label_costs: &[f64],
) -> Result<(Vec<usize>, f64), SeqError> {
    model.check_inputs(xs)?;
    model.check_labels(xs, gold)?;
    if label_costs.len() != model.n_labels() {
        return Err(SeqError::InvalidConfig(format!(
            "{} label costs for {} labels",
            label_costs.len(),
            model.n_labels()
        )));
    }
    let mut emissions = model.emission_scores(xs);
    augment(&mut emissions, gold, label_costs);
    Ok(viterbi_decode(&emissions, &model.start, &model.transition))
}

fn augment(emissions: &mut [Vec<f64>], gold: &[usize], label_costs: &[f64]) {
    for (row, &g) in emissions.iter_mut().zip(gold) {
        for (l, v) in row.iter_mut().enumerate() {
            if l != g {
                *v += label_costs[g];
            }
        }
    }
}

/// Per-label misclassification costs from the class weighting. `Balanced`
/// gives label `l` the cost `N / (L * N_l)`; `Positive(w)` costs label 1 at
/// `w` and every other label at 1.
pub fn label_costs(examples: &[SeqExample], n_labels: usize, weight: ClassWeight) -> Vec<f64> {
    match weight {
        ClassWeight::Positive(w) => (0..n_labels).map(|l| if l == 1 { w } else { 1.0 }).collect(),
        ClassWeight::Balanced => {
            let mut counts = vec![0usize; n_labels];
            for y in examples.iter().flat_map(|ex| &ex.ys) {
                counts[*y] += 1;
            }
            let total: usize = counts.iter().sum();
            let present = counts.iter().filter(|&&c| c > 0).count().max(1);
            counts.iter().map(|&c| if c == 0 { 1.0 } else { total as f64 / (present * c) as f64 }).collect()
        }
    }
}

pub fn hamming(a: &[usize], b: &[usize]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// Dense parameter block used during training.
#[derive(Clone)]
struct Weights {
    emission: Vec<Vec<f64>>,
    transition: Vec<Vec<f64>>,
    start: Vec<f64>,
}

impl Weights {
    fn zeros(l: usize, dim: usize) -> Self {
        Weights { emission: vec![vec![0.0; dim]; l], transition: vec![vec![0.0; l]; l], start: vec![0.0; l] }
    }

    fn emission_scores(&self, xs: &[SparseVector]) -> Vec<Vec<f64>> {
        xs.iter().map(|x| self.emission.iter().map(|e| x.dot_dense(e)).collect()).collect()
    }

    fn for_each_mut(&mut self, mut f: impl FnMut(&mut f64)) {
        self.emission.iter_mut().flatten().for_each(&mut f);
        self.transition.iter_mut().flatten().for_each(&mut f);
        self.start.iter_mut().for_each(f);
    }

    fn squared_norm(&self) -> f64 {
        let mut total = 0.0;
        self.clone().for_each_mut(|v| total += *v * *v);
        total
    }

    /// `self += scale * Phi(xs, ys)`.
    fn add_features(&mut self, xs: &[SparseVector], ys: &[usize], scale: f64) {
        self.start[ys[0]] += scale;
        for (x, &y) in xs.iter().zip(ys) {
            x.add_to(&mut self.emission[y], scale);
        }
        for pair in ys.windows(2) {
            self.transition[pair[0]][pair[1]] += scale;
        }
    }

    fn add_scaled(&mut self, other: &Weights, scale: f64) {
        for (a, b) in self.emission.iter_mut().zip(&other.emission) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += scale * y;
            }
        }
        for (a, b) in self.transition.iter_mut().zip(&other.transition) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += scale * y;
            }
        }
        for (x, y) in self.start.iter_mut().zip(&other.start) {
            *x += scale * y;
        }
    }

    fn into_model(self, labels: Vec<String>, dim: usize) -> ChainModel {
        ChainModel {
            labels,
            dim,
            emission: self.emission.iter().map(|e| SparseVector::from_dense(e)).collect(),
            transition: self.transition,
            start: self.start,
        }
    }
}

/// `1/2 |W|^2 + C sum_j max_y [score(x_j, y) + Hamming(y, y_j) - score(x_j, y_j)]`.
pub fn structured_objective(model: &ChainModel, examples: &[SeqExample], c: f64) -> Result<f64, SeqError> {
    weighted_objective(model, examples, c, &vec![1.0; model.n_labels()])
}

/// [`structured_objective`] with the weighted Hamming loss of
/// [`loss_augmented_viterbi_weighted`].
pub fn weighted_objective(
    model: &ChainModel,
    examples: &[SeqExample],
    c: f64,
    label_costs: &[f64],
) -> Result<f64, SeqError> {
    let mut norm = model.start.iter().map(|v| v * v).sum::<f64>();
    norm += model.transition.iter().flatten().map(|v| v * v).sum::<f64>();
    norm += model.emission.iter().map(SparseVector::squared_norm).sum::<f64>();
    let mut loss = 0.0;
    for ex in examples {
        let (_, augmented) = loss_augmented_viterbi_weighted(model, &ex.xs, &ex.ys, label_costs)?;
        loss += augmented - joint_score(model, &ex.xs, &ex.ys)?;
    }
    Ok(0.5 * norm + c * loss)
}

/// Flat parameter layout: emissions, then transitions, then start weights.
struct Layout {
    l: usize,
    dim: usize,
}

impl Layout {
    fn size(&self) -> usize {
        self.l * self.dim + self.l * self.l + self.l
    }

    fn transition(&self, from: usize, to: usize) -> usize {
        self.l * self.dim + from * self.l + to
    }

    fn start(&self, label: usize) -> usize {
        self.l * self.dim + self.l * self.l + label
    }

    fn emission_block<'a>(&self, w: &'a [f64], label: usize) -> &'a [f64] {
        &w[label * self.dim..(label + 1) * self.dim]
    }

    /// `Phi(xs, gold) - Phi(xs, ys)` as a sparse vector over the flat layout.
    fn feature_difference(&self, xs: &[SparseVector], gold: &[usize], ys: &[usize]) -> SparseVector {
        let mut pairs = Vec::new();
        let add = |labels: &[usize], sign: f64, pairs: &mut Vec<(usize, f64)>| {
            pairs.push((self.start(labels[0]), sign));
            for (x, &y) in xs.iter().zip(labels) {
                pairs.extend(x.entries().iter().map(|&(j, v)| (y * self.dim + j, sign * v)));
            }
            for p in labels.windows(2) {
                pairs.push((self.transition(p[0], p[1]), sign));
            }
        };
        add(gold, 1.0, &mut pairs);
        add(ys, -1.0, &mut pairs);
        SparseVector::from_pairs(self.size(), pairs)
    }

    fn scores(&self, w: &[f64], xs: &[SparseVector]) -> Vec<Vec<f64>> {
        xs.iter().map(|x| (0..self.l).map(|l| x.dot_dense(self.emission_block(w, l))).collect()).collect()
    }

    fn split(&self, w: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let start = (0..self.l).map(|l| w[self.start(l)]).collect();
        let transition = (0..self.l).map(|a| (0..self.l).map(|b| w[self.transition(a, b)]).collect()).collect();
        (start, transition)
    }

    fn to_model(&self, w: &[f64], labels: Vec<String>) -> ChainModel {
        let (start, transition) = self.split(w);
        ChainModel {
            labels,
            dim: self.dim,
            emission: (0..self.l).map(|l| SparseVector::from_dense(self.emission_block(w, l))).collect(),
            transition,
            start,
        }
    }
}

fn combine(a: &SparseVector, wa: f64, b: &SparseVector, wb: f64) -> SparseVector {
    let pairs = a.entries().iter().map(|&(i, v)| (i, wa * v)).chain(b.entries().iter().map(|&(i, v)| (i, wb * v)));
    SparseVector::from_pairs(a.dim(), pairs.collect())
}

fn weighted_hamming(gold: &[usize], ys: &[usize], costs: &[f64]) -> f64 {
    gold.iter().zip(ys).filter(|(g, y)| g != y).map(|(&g, _)| costs[g]).sum()
}

/// Trains a chain over `n_labels` labels, weighting the Hamming loss by
/// `cfg.class_weight` (see [`label_costs`]).
pub fn train_chain(examples: &[SeqExample], n_labels: usize, cfg: &TrainConfig) -> Result<ChainModel, SeqError> {
    train(examples, n_labels, cfg, false).map(|(model, _)| model)
}

/// As [`train_chain`], also returning the weighted objective of the
/// averaged model after each epoch.
pub fn train_chain_traced(
    examples: &[SeqExample],
    n_labels: usize,
    cfg: &TrainConfig,
) -> Result<(ChainModel, Vec<f64>), SeqError> {
    train(examples, n_labels, cfg, true)
}

fn train(
    examples: &[SeqExample],
    n_labels: usize,
    cfg: &TrainConfig,
    traced: bool,
) -> Result<(ChainModel, Vec<f64>), SeqError> {
    if !(cfg.c > 0.0 && cfg.c.is_finite()) {
        return Err(SeqError::InvalidConfig(format!("C must be positive, got {}", cfg.c)));
    }
    if cfg.epochs == 0 {
        return Err(SeqError::InvalidConfig("epochs must be at least 1".into()));
    }
    if n_labels == 0 {
        return Err(SeqError::InvalidConfig("empty label set".into()));
    }
    let first = examples.first().ok_or(SeqError::EmptyData)?;
    let dim = first.xs.first().ok_or(SeqError::EmptySequence)?.dim();
    let labels: Vec<String> = (0..n_labels).map(|l| l.to_string()).collect();
    let shape = ChainModel::zeros(labels.clone(), dim);
    for ex in examples {
        shape.check_inputs(&ex.xs)?;
        shape.check_labels(&ex.xs, &ex.ys)?;
    }

    let costs = label_costs(examples, n_labels, cfg.class_weight);
    match cfg.chain_solver {
        ChainSolver::FrankWolfe => frank_wolfe(examples, labels, dim, &costs, cfg, traced),
        ChainSolver::Pegasos => pegasos(examples, labels, dim, &costs, cfg, traced),
    }
}

fn pegasos(
    examples: &[SeqExample],
    labels: Vec<String>,
    dim: usize,
    costs: &[f64],
    cfg: &TrainConfig,
    traced: bool,
) -> Result<(ChainModel, Vec<f64>), SeqError> {
    let n_labels = labels.len();
    let n = examples.len();
    let lambda = 1.0 / (cfg.c * n as f64);
    let mut w = Weights::zeros(n_labels, dim);
    let mut sum = Weights::zeros(n_labels, dim);
    let mut steps = 0usize;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut trace = Vec::with_capacity(cfg.epochs);

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for &k in &order {
            let ex = &examples[k];
            steps += 1;
            let eta = 1.0 / (lambda * steps as f64);
            let mut emissions = w.emission_scores(&ex.xs);
            let gold_emission: f64 = emissions.iter().zip(&ex.ys).map(|(row, &g)| row[g]).sum();
            let gold_score =
                gold_emission + w.start[ex.ys[0]] + ex.ys.windows(2).map(|p| w.transition[p[0]][p[1]]).sum::<f64>();
            augment(&mut emissions, &ex.ys, costs);
            let (violator, augmented) = viterbi_decode(&emissions, &w.start, &w.transition);
            let shrink = 1.0 - eta * lambda;
            w.for_each_mut(|v| *v *= shrink);
            if augmented > gold_score && violator != ex.ys {
                w.add_features(&ex.xs, &ex.ys, eta);
                w.add_features(&ex.xs, &violator, -eta);
            }
            sum.add_scaled(&w, 1.0);
        }
        if traced {
            let mut avg = sum.clone();
            avg.for_each_mut(|v| *v /= steps as f64);
            let model = avg.into_model(labels.clone(), dim);
            trace.push(weighted_objective(&model, examples, cfg.c, costs)?);
        }
    }

    let mut avg = sum;
    avg.for_each_mut(|v| *v /= steps as f64);
    debug_assert!(avg.squared_norm().is_finite());
    Ok((avg.into_model(labels, dim), trace))
}

/// Block-coordinate Frank-Wolfe: each document owns a block of the dual,
/// represented by its primal contribution `blocks[i]` and loss `block_loss[i]`.
fn frank_wolfe(
    examples: &[SeqExample],
    labels: Vec<String>,
    dim: usize,
    costs: &[f64],
    cfg: &TrainConfig,
    traced: bool,
) -> Result<(ChainModel, Vec<f64>), SeqError> {
    let n_labels = labels.len();
    let layout = Layout { l: n_labels, dim };
    let n = examples.len();
    let lambda = 1.0 / (cfg.c * n as f64);
    let mut w = vec![0.0; layout.size()];
    let mut avg = w.clone();
    let mut blocks: Vec<SparseVector> = vec![SparseVector::zeros(layout.size()); n];
    let mut block_loss = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut trace = Vec::with_capacity(cfg.epochs);
    let mut k = 0usize;
    let scale = 1.0 / (lambda * n as f64);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let ex = &examples[i];
            let mut emissions = layout.scores(&w, &ex.xs);
            augment(&mut emissions, &ex.ys, costs);
            let (start, transition) = layout.split(&w);
            let (violator, _) = viterbi_decode(&emissions, &start, &transition);
            let psi = layout.feature_difference(&ex.xs, &ex.ys, &violator);
            let loss_s = weighted_hamming(&ex.ys, &violator, costs) / n as f64;
            let diff = combine(&blocks[i], 1.0, &psi, -scale);
            let denom = lambda * diff.squared_norm();
            let gamma = if denom > 0.0 {
                ((lambda * diff.dot_dense(&w) - block_loss[i] + loss_s) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            if gamma > 0.0 {
                let updated = combine(&blocks[i], 1.0 - gamma, &psi, gamma * scale);
                updated.add_to(&mut w, 1.0);
                blocks[i].add_to(&mut w, -1.0);
                blocks[i] = updated;
                block_loss[i] = (1.0 - gamma) * block_loss[i] + gamma * loss_s;
            }
            let rho = 2.0 / (k as f64 + 2.0);
            for (a, &v) in avg.iter_mut().zip(&w) {
                *a = (1.0 - rho) * *a + rho * v;
            }
            k += 1;
        }
        if traced {
            let model = layout.to_model(&avg, labels.clone());
            trace.push(weighted_objective(&model, examples, cfg.c, costs)?);
        }
    }
    Ok((layout.to_model(&avg, labels), trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(dim: usize, i: usize) -> SparseVector {
        SparseVector::from_pairs(dim, vec![(i, 1.0)])
    }

    /// Two labels, two positions; emissions as dense one-hot inputs.
    fn model_with(emission: [[f64; 2]; 2], transition: [[f64; 2]; 2]) -> (ChainModel, Vec<SparseVector>) {
        // x_t = e_t and emission[l][t] = e[t][l], so emission[l] . x_t = e[t][l].
        let mut model = ChainModel::zeros(vec!["0".into(), "1".into()], 2);
        model.emission = (0..2).map(|l| SparseVector::from_dense(&[emission[0][l], emission[1][l]])).collect();
        model.transition = transition.iter().map(|r| r.to_vec()).collect();
        (model, vec![unit(2, 0), unit(2, 1)])
    }

    #[test]
    fn per_position_argmax_without_transitions() {
        let (model, xs) = model_with([[1.0, 0.0], [0.0, 1.0]], [[0.0; 2]; 2]);
        assert_eq!(viterbi(&model, &xs).unwrap(), (vec![0, 1], 2.0));
    }

    #[test]
    fn transition_penalty_changes_path() {
        let (model, xs) = model_with([[1.0, 0.0], [0.0, 2.0]], [[0.0, -5.0], [0.0, 0.0]]);
        // [0,0]=1, [0,1]=-2, [1,0]=0, [1,1]=2
        for (ys, expected) in [([0, 0], 1.0), ([0, 1], -2.0), ([1, 0], 0.0), ([1, 1], 2.0)] {
            assert_eq!(joint_score(&model, &xs, &ys).unwrap(), expected);
        }
        assert_eq!(viterbi(&model, &xs).unwrap(), (vec![1, 1], 2.0));
    }

    #[test]
    fn joint_score_edge_cases() {
        let (mut model, xs) = model_with([[0.5, 0.25], [0.0, 0.0]], [[0.0; 2]; 2]);
        model.start = vec![0.125, -1.0];
        assert_eq!(joint_score(&model, &xs[..1], &[1]).unwrap(), -1.0 + 0.25);
        let zero = ChainModel::zeros(vec!["a".into(), "b".into()], 2);
        assert_eq!(joint_score(&zero, &xs, &[1, 0]).unwrap(), 0.0);
        assert_eq!(joint_score(&zero, &xs, &[1]), Err(SeqError::LengthMismatch { xs: 2, ys: 1 }));
        assert_eq!(joint_score(&zero, &xs, &[2, 0]), Err(SeqError::UnknownLabel { label: 2, size: 2 }));
    }

    #[test]
    fn zero_model_augmented_picks_lowest_non_gold() {
        let model = ChainModel::zeros(vec!["a".into(), "b".into(), "c".into()], 1);
        let xs = vec![unit(1, 0); 4];
        let (ys, score) = loss_augmented_viterbi(&model, &xs, &[0, 1, 2, 1]).unwrap();
        assert_eq!(ys, [1, 0, 0, 0]);
        assert_eq!(score, 4.0);
    }

    #[test]
    fn augmented_argmax_respects_margin() {
        // Gold [0, 1] wins by 3 per position, more than the loss it avoids.
        let (model, xs) = model_with([[3.0, 0.0], [0.0, 3.0]], [[0.0; 2]; 2]);
        let (ys, score) = loss_augmented_viterbi(&model, &xs, &[0, 1]).unwrap();
        assert_eq!((ys, score), (vec![0, 1], 6.0));
        // Margin 0.5 < 1: the competitor flipping both positions wins.
        let (model, xs) = model_with([[0.5, 0.0], [0.0, 0.5]], [[0.0; 2]; 2]);
        let (ys, score) = loss_augmented_viterbi(&model, &xs, &[0, 1]).unwrap();
        assert_eq!((ys, score), (vec![1, 0], 2.0));
    }

    #[test]
    fn weighted_loss_and_costs() {
        let model = ChainModel::zeros(vec!["a".into(), "b".into()], 1);
        let xs = vec![unit(1, 0); 3];
        let (ys, score) = loss_augmented_viterbi_weighted(&model, &xs, &[0, 1, 0], &[0.5, 2.0]).unwrap();
        assert_eq!((ys, score), (vec![1, 0, 1], 3.0));
        let ex = |ys: Vec<usize>| SeqExample { xs: vec![unit(1, 0); ys.len()], ys };
        let examples = [ex(vec![0, 0, 0]), ex(vec![1, 0, 0, 0])];
        // N = 7, N_0 = 6, N_1 = 1.
        assert_eq!(label_costs(&examples, 2, ClassWeight::Balanced), [7.0 / 12.0, 3.5]);
        assert_eq!(label_costs(&examples, 2, ClassWeight::Positive(3.0)), [1.0, 3.0]);
        assert_eq!(label_costs(&examples[..1], 2, ClassWeight::Balanced), [1.0, 1.0]);
    }

    #[test]
    fn single_length_one_example() {
        let ex = SeqExample { xs: vec![unit(3, 2)], ys: vec![1] };
        let model = train_chain(std::slice::from_ref(&ex), 2, &TrainConfig::default()).unwrap();
        assert_eq!(viterbi(&model, &ex.xs).unwrap().0, [1]);
    }

    #[test]
    fn training_errors() {
        let cfg = TrainConfig::default();
        assert_eq!(train_chain(&[], 2, &cfg), Err(SeqError::EmptyData));
        let a = SeqExample { xs: vec![unit(3, 0)], ys: vec![0] };
        let b = SeqExample { xs: vec![unit(4, 0)], ys: vec![0] };
        assert!(matches!(train_chain(&[a, b], 2, &cfg), Err(SeqError::DimensionMismatch { .. })));
    }
}
