use claudette::svm::{
    linear_objective, predict_kernel, train_linear, train_smo, train_smo_traced, ClassWeight, TrainConfig,
};
use claudette::treekernel::KernelGram;
use claudette::SparseVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn scores(gram: &KernelGram, model: &claudette::svm::KernelModel) -> Vec<f64> {
    (0..gram.size())
        .map(|i| {
            let row: Vec<f64> = model.supports.iter().map(|s| gram.get(i, s.index)).collect();
            predict_kernel(model, &row).unwrap()
        })
        .collect()
}

#[test]
fn identity_gram_two_points() {
    let gram = KernelGram::from_rows(2, vec![1.0, 0.0, 0.0, 1.0], 1.0, false).unwrap();
    let cfg = TrainConfig { class_weight: ClassWeight::Positive(1.0), ..TrainConfig::default() };
    let model = train_smo(&gram, &[1, -1], &cfg).unwrap();
    let mut alpha = [0.0; 2];
    for s in &model.supports {
        alpha[s.index] = s.coef.abs();
    }
    assert!((alpha[0] - 1.0).abs() < 1e-6 && (alpha[1] - 1.0).abs() < 1e-6, "{alpha:?}");
    assert!(model.bias.abs() < 1e-6);
    for (s, y) in scores(&gram, &model).iter().zip([1.0, -1.0]) {
        assert!(y * s >= 1.0 - 1e-6);
    }
}

fn random_problem(rng: &mut ChaCha8Rng) -> (KernelGram, Vec<i8>) {
    let n = rng.gen_range(4..=50);
    let m = rng.gen_range(2..=8);
    let a: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let values = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| a[i].iter().zip(&a[j]).map(|(x, y)| x * y).sum())
        .collect();
    let mut y: Vec<i8> = (0..n).map(|_| if rng.gen_bool(0.4) { 1 } else { -1 }).collect();
    y[0] = 1;
    y[1] = -1;
    (KernelGram::from_rows(n, values, 1.0, false).unwrap(), y)
}

#[test]
fn kkt_conditions_on_random_psd_grams() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = TrainConfig::default();
    for _ in 0..20 {
        let (gram, y) = random_problem(&mut rng);
        let model = train_smo(&gram, &y, &cfg).unwrap();
        let costs = cfg.costs(&y);
        let mut alpha = vec![0.0; y.len()];
        for s in &model.supports {
            alpha[s.index] = s.coef * f64::from(y[s.index]);
        }
        let balance: f64 = alpha.iter().zip(&y).map(|(a, &l)| a * f64::from(l)).sum();
        assert!(balance.abs() <= cfg.tol, "sum alpha y = {balance}");
        let f = scores(&gram, &model);
        let mut worst: f64 = 0.0;
        for i in 0..y.len() {
            assert!(alpha[i] >= -1e-12 && alpha[i] <= costs[i] + 1e-12);
            let margin = f64::from(y[i]) * f[i];
            let violation = if alpha[i] <= 1e-12 {
                1.0 - margin
            } else if alpha[i] >= costs[i] - 1e-12 {
                margin - 1.0
            } else {
                (margin - 1.0).abs()
            };
            worst = worst.max(violation);
        }
        assert!(worst < cfg.tol, "KKT violation {worst}");
    }
}

#[test]
fn dual_objective_never_decreases() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..10 {
        let (gram, y) = random_problem(&mut rng);
        let (model, trace) = train_smo_traced(&gram, &y, &TrainConfig::default());
        model.unwrap();
        assert!(!trace.is_empty());
        for w in trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-12, "{} -> {}", w[0], w[1]);
        }
    }
}

#[test]
fn balanced_costs_are_equal_per_class() {
    let y: Vec<i8> = (0..37).map(|i| if i % 5 == 0 { 1 } else { -1 }).collect();
    let cfg = TrainConfig { c: 2.5, ..TrainConfig::default() };
    let costs = cfg.costs(&y);
    let pos: f64 = costs.iter().zip(&y).filter(|(_, &l)| l > 0).map(|(c, _)| c).sum();
    let neg: f64 = costs.iter().zip(&y).filter(|(_, &l)| l < 0).map(|(c, _)| c).sum();
    assert!((pos - neg).abs() < 1e-9);
}

#[test]
fn separable_data_has_no_training_errors() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let direction = [0.6, -0.8, 0.0, 0.0, 0.0];
    let (mut x, mut y) = (Vec::new(), Vec::new());
    while x.len() < 200 {
        let p: Vec<f64> = (0..5).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let side: f64 = p.iter().zip(&direction).map(|(a, b)| a * b).sum();
        if side.abs() >= 0.5 {
            x.push(SparseVector::from_dense(&p));
            y.push(if side > 0.0 { 1 } else { -1 });
        }
    }
    let model = train_linear(&x, &y, &TrainConfig::default()).unwrap();
    let errors = x.iter().zip(&y).filter(|(xi, &yi)| f64::from(yi) * model.score(xi).unwrap() <= 0.0).count();
    assert_eq!(errors, 0);
}

#[test]
fn two_point_objective_matches_dual_solution() {
    // Augmented inputs (1, 0, 1) and (-1, 0, 1) have Gram diag(2, 2), so the
    // dual a1 + a2 - a1^2 - a2^2 is maximised at a = min(1/2, C).
    let x = vec![SparseVector::from_dense(&[1.0, 0.0]), SparseVector::from_dense(&[-1.0, 0.0])];
    let y = [1, -1];
    for c in [0.05, 0.1, 0.3, 1.0, 4.0] {
        let cfg = TrainConfig { c, tol: 1e-6, ..TrainConfig::default() };
        let model = train_linear(&x, &y, &cfg).unwrap();
        let a = c.min(0.5);
        let optimum = 2.0 * a - 2.0 * a * a;
        let objective = linear_objective(&model, &x, &y, &cfg);
        assert!((objective - optimum).abs() <= 1e-4, "C={c}: {objective} vs {optimum}");
    }
}

#[test]
fn training_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let x: Vec<SparseVector> =
        (0..60).map(|_| SparseVector::from_dense(&[rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])).collect();
    let y: Vec<i8> = (0..60).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
    let cfg = TrainConfig { seed: 3, ..TrainConfig::default() };
    let a = serde_json::to_string(&train_linear(&x, &y, &cfg).unwrap()).unwrap();
    let b = serde_json::to_string(&train_linear(&x, &y, &cfg).unwrap()).unwrap();
    assert_eq!(a, b);
}
