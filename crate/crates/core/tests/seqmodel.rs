use claudette::seqmodel::{
    hamming, joint_score, loss_augmented_viterbi, train_chain, train_chain_traced, viterbi, ChainModel, SeqExample,
};
use claudette::svm::{ChainSolver, TrainConfig};
use claudette::SparseVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Multiples of 1/4 in [-2, 2]: sums stay exact, so ties are real ties.
fn dyadic(rng: &mut ChaCha8Rng) -> f64 {
    f64::from(rng.gen_range(-8..=8)) / 4.0
}

fn random_case(rng: &mut ChaCha8Rng) -> (ChainModel, Vec<SparseVector>, Vec<usize>) {
    let l = rng.gen_range(1..=3);
    let k = rng.gen_range(1..=8);
    let dim = 3;
    let mut model = ChainModel::zeros((0..l).map(|i| i.to_string()).collect(), dim);
    model.emission = (0..l).map(|_| SparseVector::from_dense(&[dyadic(rng), dyadic(rng), dyadic(rng)])).collect();
    model.transition = (0..l).map(|_| (0..l).map(|_| dyadic(rng)).collect()).collect();
    model.start = (0..l).map(|_| dyadic(rng)).collect();
    let xs = (0..k).map(|_| SparseVector::from_dense(&[dyadic(rng), dyadic(rng), dyadic(rng)])).collect();
    let gold = (0..k).map(|_| rng.gen_range(0..l)).collect();
    (model, xs, gold)
}

/// Every labelling, reverse-lexicographically smallest optimum first.
fn brute_force(l: usize, k: usize, score: impl Fn(&[usize]) -> f64) -> (Vec<usize>, f64) {
    let mut best: Option<(Vec<usize>, f64)> = None;
    for code in 0..l.pow(k as u32) {
        let mut ys = vec![0; k];
        let mut c = code;
        // Position k-1 is the most significant digit, so codes ascend in
        // reverse-lexicographic order and the first optimum wins.
        for y in ys.iter_mut() {
            *y = c % l;
            c /= l;
        }
        let s = score(&ys);
        if best.as_ref().is_none_or(|(_, b)| s > *b) {
            best = Some((ys, s));
        }
    }
    best.unwrap()
}

#[test]
fn viterbi_matches_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..100 {
        let (model, xs, gold) = random_case(&mut rng);
        let (l, k) = (model.n_labels(), xs.len());
        let plain = |ys: &[usize]| joint_score(&model, &xs, ys).unwrap();
        let (expected, best) = brute_force(l, k, plain);
        let (ys, score) = viterbi(&model, &xs).unwrap();
        assert_eq!(score, best);
        assert_eq!(ys, expected);
        assert_eq!(joint_score(&model, &xs, &ys).unwrap(), score);

        let augmented = |ys: &[usize]| plain(ys) + hamming(ys, &gold) as f64;
        let (expected, best) = brute_force(l, k, augmented);
        let (ys, score) = loss_augmented_viterbi(&model, &xs, &gold).unwrap();
        assert_eq!(score, best);
        assert_eq!(ys, expected);
        assert!(score >= joint_score(&model, &xs, &gold).unwrap());
    }
}

fn config(solver: ChainSolver, epochs: usize, seed: u64) -> TrainConfig {
    TrainConfig { epochs, seed, chain_solver: solver, ..TrainConfig::default() }
}

/// Label 1 iff feature 0 is present; feature 1 is noise on every sentence.
fn separable(seed: u64) -> Vec<SeqExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..12)
        .map(|_| {
            let k = rng.gen_range(3..=10);
            let ys: Vec<usize> = (0..k).map(|_| usize::from(rng.gen_bool(0.3))).collect();
            let xs = ys
                .iter()
                .map(|&y| {
                    let mut pairs = vec![(1, rng.gen_range(0.5..1.0))];
                    if y == 1 {
                        pairs.push((0, 1.0));
                    }
                    SparseVector::from_pairs(3, pairs)
                })
                .collect();
            SeqExample { xs, ys }
        })
        .collect()
}

#[test]
fn separable_sequences_are_fit_exactly() {
    let data = separable(1);
    for solver in [ChainSolver::FrankWolfe, ChainSolver::Pegasos] {
        let cfg = config(solver, 100, 0);
        let (model, trace) = train_chain_traced(&data, 2, &cfg).unwrap();
        let errors: usize = data.iter().map(|ex| hamming(&viterbi(&model, &ex.xs).unwrap().0, &ex.ys)).sum();
        assert_eq!(errors, 0, "{solver:?}");
        assert!(trace.iter().all(|v| v.is_finite()));
        assert!(trace.last().unwrap() < trace.first().unwrap(), "{solver:?}: {trace:?}");
    }
}

/// Positives always come in adjacent pairs; each of three cue features
/// fires with probability 0.6 on positives and 0.4 on negatives. Feature 3
/// is always on.
fn paired(seed: u64) -> Vec<SeqExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..20)
        .map(|_| {
            let mut ys = Vec::new();
            while ys.len() < 30 {
                if rng.gen_bool(0.3) {
                    ys.extend([1, 1]);
                }
                ys.extend(std::iter::repeat_n(0, rng.gen_range(1..=3)));
            }
            let xs = ys
                .iter()
                .map(|&y| {
                    let p = if y == 1 { 0.6 } else { 0.4 };
                    let mut pairs = vec![(3, 1.0)];
                    pairs.extend((0..3).filter(|_| rng.gen_bool(p)).map(|c| (c, 1.0)));
                    SparseVector::from_pairs(4, pairs)
                })
                .collect();
            SeqExample { xs, ys }
        })
        .collect()
}

/// Shifting every transition into a label can be undone through that
/// label's emission weight on the constant feature, so only the interaction
/// `(pos->pos - pos->neg) - (neg->pos - neg->neg)` is determined by the data.
#[test]
fn adjacent_pairs_favour_staying_positive() {
    for seed in 0..5 {
        let model = train_chain(&paired(seed), 2, &config(ChainSolver::FrankWolfe, 20, seed)).unwrap();
        let t = &model.transition;
        assert!(t[1][1] - t[1][0] > t[0][1] - t[0][0], "seed {seed}: {t:?}");
    }
}

#[test]
fn single_length_one_example() {
    let ex = SeqExample { xs: vec![SparseVector::from_dense(&[1.0, 0.5])], ys: vec![1] };
    for solver in [ChainSolver::FrankWolfe, ChainSolver::Pegasos] {
        let model = train_chain(std::slice::from_ref(&ex), 2, &config(solver, 20, 0)).unwrap();
        assert_eq!(viterbi(&model, &ex.xs).unwrap().0, vec![1]);
    }
}

#[test]
fn fixed_seed_gives_identical_models() {
    let data = paired(4);
    for solver in [ChainSolver::FrankWolfe, ChainSolver::Pegasos] {
        let a = serde_json::to_string(&train_chain(&data, 2, &config(solver, 5, 9)).unwrap()).unwrap();
        let b = serde_json::to_string(&train_chain(&data, 2, &config(solver, 5, 9)).unwrap()).unwrap();
        let c = serde_json::to_string(&train_chain(&data, 2, &config(solver, 5, 10)).unwrap()).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
