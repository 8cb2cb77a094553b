//! Mini-batch SGD with classic momentum, L2 weight decay folded into the
//! gradient, and a step learning-rate schedule.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::metrics::{self, DecisionRule, MetricsReport};
use crate::model::MlGcnModel;
use crate::tensor::{Tape, Tensor};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr0: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub decay_every: usize,
    pub decay_factor: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr0: 0.01,
            momentum: 0.9,
            weight_decay: 1e-4,
            epochs: 100,
            decay_every: 40,
            decay_factor: 0.1,
            batch_size: 16,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Default schedule compressed to `epochs`, keeping the decay point at
    /// the same fraction of training (100/40 → e.g. 30/12).
    pub fn scaled(epochs: usize) -> Self {
        let decay_every = ((epochs * 40 + 50) / 100).max(1);
        Self {
            epochs,
            decay_every,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr0 >= 0.0 && self.lr0.is_finite()) {
            return Err(Error::Config(format!("lr0 must be >= 0, got {}", self.lr0)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!(
                "momentum must lie in [0, 1), got {}",
                self.momentum
            )));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::Config(format!(
                "weight decay must be >= 0, got {}",
                self.weight_decay
            )));
        }
        if self.batch_size == 0 || self.decay_every == 0 {
            return Err(Error::Config("batch size and decay interval must be >= 1".into()));
        }
        if !(self.decay_factor > 0.0 && self.decay_factor <= 1.0) {
            return Err(Error::Config(format!(
                "decay factor must lie in (0, 1], got {}",
                self.decay_factor
            )));
        }
        Ok(())
    }

    /// `lr0 · decay_factor^⌊epoch / decay_every⌋`.
    pub fn lr_at_epoch(&self, epoch: usize) -> f64 {
        let steps = epoch / self.decay_every.max(1);
        (0..steps).fold(self.lr0, |lr, _| lr * self.decay_factor)
    }
}

/// Momentum buffers, one per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    velocity: Vec<Vec<f64>>,
}

impl OptimizerState {
    pub fn new(params: &[Tensor]) -> Self {
        Self {
            velocity: params.iter().map(|p| alloc::vec![0.0; p.len()]).collect(),
        }
    }

    pub fn velocity(&self) -> &[Vec<f64>] {
        &self.velocity
    }
}

/// One step: `g = grad + wd·θ; v = μ·v + g; θ -= lr·v`.
pub fn sgd_update(
    params: &mut [Tensor],
    grads: &[Tensor],
    state: &mut OptimizerState,
    lr: f64,
    momentum: f64,
    weight_decay: f64,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.velocity.len() {
        return Err(Error::Usage(format!(
            "{} params, {} grads, {} velocity buffers",
            params.len(),
            grads.len(),
            state.velocity.len()
        )));
    }
    for ((p, g), v) in params.iter().zip(grads).zip(&state.velocity) {
        if p.shape() != g.shape() || v.len() != p.len() {
            return Err(Error::Shape {
                op: "sgd_update",
                left: p.shape().to_vec(),
                right: g.shape().to_vec(),
            });
        }
        if g.data().iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { op: "gradient" });
        }
    }
    for ((p, g), v) in params.iter_mut().zip(grads).zip(&mut state.velocity) {
        for ((theta, &grad), vel) in p.data_mut().iter_mut().zip(g.data()).zip(v.iter_mut()) {
            let step = grad + weight_decay * *theta;
            *vel = momentum * *vel + step;
            *theta -= lr * *vel;
        }
        if p.data().iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { op: "sgd_update" });
        }
    }
    Ok(())
}

/// Features paired with 0/1 targets, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingData {
    pub features: Tensor,
    pub targets: Tensor,
}

impl TrainingData {
    pub fn new(features: Tensor, targets: Tensor) -> Result<Self> {
        let (n, _) = features.matrix_dims("features")?;
        let (nt, _) = targets.matrix_dims("targets")?;
        if n != nt {
            return Err(Error::Shape {
                op: "training data",
                left: features.shape().to_vec(),
                right: targets.shape().to_vec(),
            });
        }
        if let Some(bad) = targets.data().iter().find(|&&y| y != 0.0 && y != 1.0) {
            return Err(Error::Data(format!("target {bad} is not 0 or 1")));
        }
        Ok(Self { features, targets })
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Per-sample mean loss over the epoch.
    pub loss: f64,
    pub lr: f64,
    pub validation: Option<MetricsReport>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
}

impl TrainHistory {
    pub fn first_loss(&self) -> Option<f64> {
        self.epochs.first().map(|e| e.loss)
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.loss)
    }
}

/// Optional held-out set evaluated after every epoch.
#[derive(Debug, Clone, Copy)]
pub struct Validation<'a> {
    pub data: &'a TrainingData,
    pub rule: DecisionRule,
}

/// The sample order for each epoch, drawn from one seeded stream.
pub fn epoch_orders(samples: usize, epochs: usize, seed: u64) -> impl Iterator<Item = Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..epochs).map(move |_| {
        let mut order: Vec<usize> = (0..samples).collect();
        order.shuffle(&mut rng);
        order
    })
}

/// Trains the GCN weights against the logistic loss.
pub fn train(
    mut model: MlGcnModel,
    data: &TrainingData,
    config: &TrainConfig,
    validation: Option<Validation<'_>>,
) -> Result<(MlGcnModel, TrainHistory)> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::Data("training set is empty".into()));
    }
    if data.features.cols() != model.feature_dim() {
        return Err(Error::Config(format!(
            "features have dimension {} but the model emits {}",
            data.features.cols(),
            model.feature_dim()
        )));
    }
    if data.targets.cols() != model.num_labels() {
        return Err(Error::Config(format!(
            "targets have {} labels but the model has {}",
            data.targets.cols(),
            model.num_labels()
        )));
    }

    let mut params: Vec<Tensor> = model.layers().iter().map(|l| l.weight.clone()).collect();
    let mut state = OptimizerState::new(&params);
    let mut history = TrainHistory::default();

    for (epoch, order) in epoch_orders(data.len(), config.epochs, config.seed).enumerate() {
        let lr = config.lr_at_epoch(epoch);
        let mut total = 0.0;
        for (batch, idx) in order.chunks(config.batch_size).enumerate() {
            let at = |e: Error| match e {
                Error::NonFinite { op } => Error::Diverged { epoch, batch, op },
                other => other,
            };
            let x = data.features.select_rows(idx)?;
            let y = data.targets.select_rows(idx)?;

            let mut tape = Tape::new();
            let (weights, classifiers) = model.record(&mut tape).map_err(at)?;
            let xv = tape.var(x);
            let wt = tape.transpose(classifiers).map_err(at)?;
            let scores = tape.matmul(xv, wt).map_err(at)?;
            let loss = tape.bce_with_logits(scores, &y).map_err(at)?;
            total += tape.value(loss).item().unwrap_or(0.0) * idx.len() as f64;

            let mut grads = tape.backward(loss).map_err(at)?;
            let grads: Vec<Tensor> = weights
                .iter()
                .map(|&w| grads.take(w).expect("weights are tracked leaves"))
                .collect();
            sgd_update(
                &mut params,
                &grads,
                &mut state,
                lr,
                config.momentum,
                config.weight_decay,
            )
            .map_err(at)?;
            model.set_weights(params.clone())?;
        }

        let validation = match validation {
            Some(v) => {
                let w = crate::model::generate_classifiers(&model)?;
                let scores = crate::model::predict_batch(&w, &v.data.features)?;
                Some(metrics::evaluate(&scores, &v.data.targets, v.rule)?)
            }
            None => None,
        };
        history.epochs.push(EpochRecord {
            epoch,
            loss: total / data.len() as f64,
            lr,
            validation,
        });
    }
    Ok((model, history))
}
