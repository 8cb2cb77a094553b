use mlgcn_core::embeddings::{EmbeddingKind, EmbeddingMatrix};
use mlgcn_core::graph::{count_cooccurrence, GraphConfig, LabelGraph};
use mlgcn_core::model::{init_model, MlGcnModel, ModelConfig};
use mlgcn_core::tensor::Tensor;
use mlgcn_core::train::{epoch_orders, sgd_update, train, OptimizerState, TrainConfig, TrainingData};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const C: usize = 5;
const D: usize = 6;

fn problem(seed: u64) -> (MlGcnModel, TrainingData) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<Vec<usize>> = (0..40)
        .map(|_| (0..C).filter(|_| rng.random_bool(0.4)).collect())
        .collect();
    let stats = count_cooccurrence(&labels, C).unwrap();
    let graph = LabelGraph::build(&stats, &GraphConfig::default()).unwrap();
    let z = EmbeddingMatrix::from_tensor(Tensor::eye(C).unwrap(), EmbeddingKind::OneHot).unwrap();
    let cfg = ModelConfig { layer_dims: vec![8, D], seed, ..ModelConfig::default() };
    let model = init_model(&cfg, z, graph.adjacency().clone(), D).unwrap();

    let signatures: Vec<Vec<f64>> = (0..C).map(|_| (0..D).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let mut x = Vec::new();
    let mut y = Vec::new();
    for s in &labels {
        let mut f = vec![0.0; D];
        for &l in s {
            f.iter_mut().zip(&signatures[l]).for_each(|(a, b)| *a += b);
        }
        x.extend(f);
        y.extend((0..C).map(|l| if s.contains(&l) { 1.0 } else { 0.0 }));
    }
    let data = TrainingData::new(Tensor::new([40, D], x).unwrap(), Tensor::new([40, C], y).unwrap()).unwrap();
    (model, data)
}

fn bits(model: &MlGcnModel) -> Vec<u64> {
    model.layers().iter().flat_map(|l| l.weight.data().iter().map(|v| v.to_bits())).collect()
}

#[test]
fn zero_learning_rate_keeps_weights() {
    let (model, data) = problem(1);
    let before = bits(&model);
    let cfg = TrainConfig { lr0: 0.0, epochs: 3, batch_size: 7, ..TrainConfig::default() };
    let (trained, history) = train(model, &data, &cfg, None).unwrap();
    assert_eq!(bits(&trained), before);
    assert_eq!(history.epochs.len(), 3);
}

#[test]
fn same_seed_same_run() {
    let cfg = TrainConfig { epochs: 4, seed: 9, ..TrainConfig::scaled(4) };
    let (m1, data) = problem(2);
    let (m2, _) = problem(2);
    let (a, ha) = train(m1, &data, &cfg, None).unwrap();
    let (b, hb) = train(m2, &data, &cfg, None).unwrap();
    assert_eq!(bits(&a), bits(&b));
    let losses = |h: &mlgcn_core::train::TrainHistory| h.epochs.iter().map(|e| e.loss.to_bits()).collect::<Vec<_>>();
    assert_eq!(losses(&ha), losses(&hb));
}

#[test]
fn loss_decreases_on_separable_data() {
    let (model, data) = problem(3);
    let cfg = TrainConfig { lr0: 0.05, epochs: 30, batch_size: 8, ..TrainConfig::scaled(30) };
    let (_, history) = train(model, &data, &cfg, None).unwrap();
    assert!(history.final_loss().unwrap() < history.first_loss().unwrap());
}

#[test]
fn mismatched_dimensions_are_config_errors() {
    let (model, data) = problem(4);
    let narrow = TrainingData::new(data.features.select_rows(&[0, 1]).unwrap(), data.targets.select_rows(&[0, 1]).unwrap()).unwrap();
    assert!(train(model.clone(), &narrow, &TrainConfig { epochs: 1, ..TrainConfig::default() }, None).is_ok());
    let wrong = TrainingData::new(Tensor::zeros([2, D + 1]).unwrap(), Tensor::zeros([2, C]).unwrap()).unwrap();
    assert!(matches!(
        train(model, &wrong, &TrainConfig::default(), None),
        Err(mlgcn_core::Error::Config(_))
    ));
}

#[test]
fn overflowing_learning_rate_reports_divergence() {
    let (model, data) = problem(5);
    let cfg = TrainConfig { lr0: 1e300, epochs: 5, ..TrainConfig::default() };
    match train(model, &data, &cfg, None) {
        Err(mlgcn_core::Error::Diverged { epoch, .. }) => assert!(epoch < 5),
        other => panic!("expected divergence, got {other:?}"),
    }
}

proptest! {
    #[test]
    fn sgd_is_linear_without_momentum(theta in -5.0f64..5.0, g in -5.0f64..5.0, lr in 0.0f64..1.0) {
        let mut one = [Tensor::new([1], vec![theta]).unwrap()];
        let mut s1 = OptimizerState::new(&one);
        let grad = [Tensor::new([1], vec![g]).unwrap()];
        sgd_update(&mut one, &grad, &mut s1, lr, 0.0, 0.0).unwrap();
        sgd_update(&mut one, &grad, &mut s1, lr, 0.0, 0.0).unwrap();

        let mut two = [Tensor::new([1], vec![theta]).unwrap()];
        let mut s2 = OptimizerState::new(&two);
        let double = [Tensor::new([1], vec![2.0 * g]).unwrap()];
        sgd_update(&mut two, &double, &mut s2, lr, 0.0, 0.0).unwrap();
        prop_assert!((one[0].data()[0] - two[0].data()[0]).abs() <= 1e-12);
    }

    #[test]
    fn weight_decay_alone_shrinks_norm(values in prop::collection::vec(-10.0f64..10.0, 1..20), lr in 1e-3f64..1.0, wd in 1e-3f64..1.0) {
        prop_assume!(values.iter().any(|v| *v != 0.0));
        let n = values.len();
        let norm = |t: &Tensor| t.data().iter().map(|v| v * v).sum::<f64>();
        let mut p = [Tensor::new([n], values).unwrap()];
        let before = norm(&p[0]);
        let mut s = OptimizerState::new(&p);
        sgd_update(&mut p, &[Tensor::zeros([n]).unwrap()], &mut s, lr, 0.9, wd).unwrap();
        prop_assert!(norm(&p[0]) < before);
    }

    #[test]
    fn every_epoch_visits_each_sample_once(n in 1usize..60, epochs in 1usize..5, seed in any::<u64>()) {
        for order in epoch_orders(n, epochs, seed) {
            let mut sorted = order.clone();
            sorted.sort_unstable();
            prop_assert_eq!(sorted, (0..n).collect::<Vec<_>>());
        }
    }
}
