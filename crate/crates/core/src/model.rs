//! Stacked graph convolutions that map label embeddings to per-label
//! classifiers, plus prediction and the multi-label logistic loss.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embeddings::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::graph::{CorrelationMatrix, Stage};
use crate::tensor::{self, Tape, Tensor, Var};

/// Architecture and initialization settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    /// Output width of each layer; the last entry must equal the feature dimension.
    pub layer_dims: Vec<usize>,
    pub slope: f64,
    /// Apply LeakyReLU after the last layer as well.
    pub final_activation: bool,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            layer_dims: alloc::vec![1024, 2048],
            slope: 0.2,
            final_activation: false,
            seed: 0,
        }
    }
}

/// One graph convolution weight `W^l` (no bias).
#[derive(Debug, Clone, PartialEq)]
pub struct GcnLayer {
    pub weight: Tensor,
}

/// GCN classifier generator with a fixed adjacency and fixed label embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct MlGcnModel {
    layers: Vec<GcnLayer>,
    adjacency: CorrelationMatrix,
    embedding: EmbeddingMatrix,
    slope: f64,
    final_activation: bool,
}

/// Draws weights uniformly from `[-1/√fan_in, 1/√fan_in]`, seeded.
pub fn init_model(
    config: &ModelConfig,
    embedding: EmbeddingMatrix,
    adjacency: CorrelationMatrix,
    feature_dim: usize,
) -> Result<MlGcnModel> {
    if config.layer_dims.is_empty() {
        return Err(Error::Config("at least one GCN layer is required".into()));
    }
    if config.layer_dims.contains(&0) {
        return Err(Error::Config(format!(
            "layer dims must be positive, got {:?}",
            config.layer_dims
        )));
    }
    let last = *config.layer_dims.last().unwrap();
    if last != feature_dim {
        return Err(Error::Config(format!(
            "last layer dim {last} does not match feature dim {feature_dim}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut fan_in = embedding.dim();
    let mut layers = Vec::with_capacity(config.layer_dims.len());
    for &fan_out in &config.layer_dims {
        let bound = 1.0 / libm::sqrt(fan_in as f64);
        let data = (0..fan_in * fan_out)
            .map(|_| rng.random_range(-bound..=bound))
            .collect();
        layers.push(GcnLayer {
            weight: Tensor::new([fan_in, fan_out], data)?,
        });
        fan_in = fan_out;
    }
    MlGcnModel::from_parts(layers, adjacency, embedding, config.slope, config.final_activation)
}

impl MlGcnModel {
    /// Assembles a model from explicit weights, validating every shape.
    pub fn from_parts(
        layers: Vec<GcnLayer>,
        adjacency: CorrelationMatrix,
        embedding: EmbeddingMatrix,
        slope: f64,
        final_activation: bool,
    ) -> Result<Self> {
        tensor::check_slope(slope)?;
        if !matches!(adjacency.stage(), Stage::Normalized | Stage::Reweighted) {
            return Err(Error::Config(format!(
                "adjacency must be normalized or reweighted, got {}",
                adjacency.stage().name()
            )));
        }
        if adjacency.size() != embedding.num_labels() {
            return Err(Error::Config(format!(
                "adjacency is {0}×{0} but there are {1} label embeddings",
                adjacency.size(),
                embedding.num_labels()
            )));
        }
        if layers.is_empty() {
            return Err(Error::Config("at least one GCN layer is required".into()));
        }
        let mut width = embedding.dim();
        for (l, layer) in layers.iter().enumerate() {
            let (rows, cols) = layer.weight.matrix_dims("gcn layer")?;
            if rows != width {
                return Err(Error::Config(format!(
                    "layer {l} expects input width {rows}, previous width is {width}"
                )));
            }
            width = cols;
        }
        Ok(Self {
            layers,
            adjacency,
            embedding,
            slope,
            final_activation,
        })
    }

    pub fn layers(&self) -> &[GcnLayer] {
        &self.layers
    }

    pub fn adjacency(&self) -> &CorrelationMatrix {
        &self.adjacency
    }

    pub fn embedding(&self) -> &EmbeddingMatrix {
        &self.embedding
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }

    pub fn final_activation(&self) -> bool {
        self.final_activation
    }

    pub fn num_labels(&self) -> usize {
        self.embedding.num_labels()
    }

    pub fn feature_dim(&self) -> usize {
        self.layers.last().map(|l| l.weight.cols()).unwrap_or(0)
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        self.layers.iter().map(|l| l.weight.cols()).collect()
    }

    /// Replaces the weights, keeping their shapes.
    pub fn set_weights(&mut self, weights: Vec<Tensor>) -> Result<()> {
        if weights.len() != self.layers.len() {
            return Err(Error::Usage(format!(
                "expected {} weight tensors, got {}",
                self.layers.len(),
                weights.len()
            )));
        }
        for (layer, w) in self.layers.iter().zip(&weights) {
            if layer.weight.shape() != w.shape() {
                return Err(Error::Shape {
                    op: "set_weights",
                    left: layer.weight.shape().to_vec(),
                    right: w.shape().to_vec(),
                });
            }
        }
        for (layer, w) in self.layers.iter_mut().zip(weights) {
            layer.weight = w;
        }
        Ok(())
    }

    /// Records the classifier computation on `tape`.
    ///
    /// Returns the weight variables (tracked) and the `C×D` classifier variable.
    pub fn record(&self, tape: &mut Tape) -> Result<(Vec<Var>, Var)> {
        let adjacency = tape.var(self.adjacency.to_tensor());
        let mut h = tape.var(self.embedding.tensor().clone());
        let mut weights = Vec::with_capacity(self.layers.len());
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let w = tape.var(layer.weight.clone().with_grad());
            weights.push(w);
            let mixed = tape.matmul(adjacency, h)?;
            h = tape.matmul(mixed, w)?;
            if l < last || self.final_activation {
                h = tape.leaky_relu(h, self.slope)?;
            }
        }
        Ok((weights, h))
    }
}

/// `H^{l+1} = LeakyReLU(Â H^l W^l)` from `H^0 = Z`; returns the `C×D` classifiers.
pub fn generate_classifiers(model: &MlGcnModel) -> Result<Tensor> {
    let a = model.adjacency.to_tensor();
    let mut h = model.embedding.tensor().clone();
    let last = model.layers.len() - 1;
    for (l, layer) in model.layers.iter().enumerate() {
        h = tensor::matmul(&tensor::matmul(&a, &h)?, &layer.weight)?;
        if l < last || model.final_activation {
            h = tensor::leaky_relu(&h, model.slope)?;
        }
    }
    Ok(h)
}

/// Scores `ŷ = W x` for one feature vector.
pub fn predict(classifiers: &Tensor, x: &[f64]) -> Result<Tensor> {
    let (c, d) = classifiers.matrix_dims("predict")?;
    if x.len() != d {
        return Err(Error::Shape {
            op: "predict",
            left: classifiers.shape().to_vec(),
            right: alloc::vec![x.len()],
        });
    }
    let scores = (0..c)
        .map(|i| classifiers.row(i).iter().zip(x).map(|(w, v)| w * v).sum())
        .collect();
    Tensor::from_parts(alloc::vec![c], scores, "predict")
}

/// Batched scores `X · Wᵀ` (`B×D` features → `B×C` logits).
pub fn predict_batch(classifiers: &Tensor, features: &Tensor) -> Result<Tensor> {
    let (_, d) = classifiers.matrix_dims("predict_batch")?;
    let (_, fd) = features.matrix_dims("predict_batch")?;
    if d != fd {
        return Err(Error::Shape {
            op: "predict_batch",
            left: features.shape().to_vec(),
            right: classifiers.shape().to_vec(),
        });
    }
    tensor::matmul(features, &classifiers.transpose()?)
}

/// Binary cross-entropy on logits, summed over labels and averaged over the batch.
pub fn bce_loss(scores: &Tensor, targets: &Tensor) -> Result<f64> {
    if scores.shape() != targets.shape() {
        return Err(Error::Shape {
            op: "bce_loss",
            left: scores.shape().to_vec(),
            right: targets.shape().to_vec(),
        });
    }
    tensor::bce_with_logits_value(scores, targets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::EmbeddingKind;

    fn adjacency(values: &[f64], n: usize) -> CorrelationMatrix {
        CorrelationMatrix::from_values(n, values.to_vec(), Stage::Normalized, None, None).unwrap()
    }

    fn embedding(rows: &[&[f64]]) -> EmbeddingMatrix {
        EmbeddingMatrix::from_tensor(Tensor::from_rows(rows).unwrap(), EmbeddingKind::WordVectors)
            .unwrap()
    }

    #[test]
    fn default_shapes() {
        let z = EmbeddingMatrix::from_tensor(
            Tensor::zeros([80, 300]).unwrap(),
            EmbeddingKind::WordVectors,
        )
        .unwrap();
        let a = CorrelationMatrix::from_values(
            80,
            Tensor::eye(80).unwrap().into_data(),
            Stage::Normalized,
            None,
            None,
        )
        .unwrap();
        let m = init_model(&ModelConfig::default(), z, a, 2048).unwrap();
        assert_eq!(m.layers()[0].weight.shape(), &[300, 1024]);
        assert_eq!(m.layers()[1].weight.shape(), &[1024, 2048]);
        assert_eq!(generate_classifiers(&m).unwrap().shape(), &[80, 2048]);
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let z = embedding(&[&[1.0, 0.0, 2.0], &[0.0, 1.0, 1.0]]);
        let a = adjacency(&[1.0, 0.0, 0.0, 1.0], 2);
        let cfg = ModelConfig {
            layer_dims: alloc::vec![4, 4, 5],
            seed: 7,
            ..ModelConfig::default()
        };
        let m1 = init_model(&cfg, z.clone(), a.clone(), 5).unwrap();
        let m2 = init_model(&cfg, z.clone(), a.clone(), 5).unwrap();
        assert_eq!(m1, m2);
        assert_eq!(m1.layers().len(), 3);
        let bound = 1.0 / libm::sqrt(3.0);
        assert!(m1.layers()[0].weight.data().iter().all(|w| w.abs() <= bound));
        let other = init_model(&ModelConfig { seed: 8, ..cfg.clone() }, z.clone(), a.clone(), 5)
            .unwrap();
        assert_ne!(m1, other);

        assert!(matches!(init_model(&cfg, z.clone(), a.clone(), 6), Err(Error::Config(_))));
        let empty = ModelConfig {
            layer_dims: Vec::new(),
            ..cfg
        };
        assert!(matches!(init_model(&empty, z, a, 5), Err(Error::Config(_))));
    }

    #[test]
    fn adjacency_size_must_match_labels() {
        let z = embedding(&[&[1.0], &[2.0], &[3.0]]);
        let a = adjacency(&[1.0, 0.0, 0.0, 1.0], 2);
        let cfg = ModelConfig {
            layer_dims: alloc::vec![2],
            ..ModelConfig::default()
        };
        assert!(matches!(init_model(&cfg, z, a, 2), Err(Error::Config(_))));
    }

    #[test]
    fn single_layer_direct_evaluation() {
        let z = embedding(&[&[1.0], &[2.0]]);
        let a = adjacency(&[0.5, 0.5, 0.5, 0.5], 2);
        let w = Tensor::from_rows(&[[2.0]]).unwrap();
        let m = MlGcnModel::from_parts(alloc::vec![GcnLayer { weight: w }], a, z, 0.2, false)
            .unwrap();
        assert_eq!(generate_classifiers(&m).unwrap().data(), &[3.0, 3.0]);
    }

    #[test]
    fn identity_adjacency_is_per_node_mlp() {
        let z = embedding(&[&[1.0, 2.0], &[0.5, 0.25]]);
        let a = adjacency(&[1.0, 0.0, 0.0, 1.0], 2);
        let w0 = Tensor::from_rows(&[[1.0, 0.5, 2.0], [0.25, 1.0, 1.0]]).unwrap();
        let w1 = Tensor::from_rows(&[[1.0, 2.0], [0.5, 0.5], [1.0, 0.0]]).unwrap();
        let m = MlGcnModel::from_parts(
            alloc::vec![GcnLayer { weight: w0.clone() }, GcnLayer { weight: w1.clone() }],
            a,
            z.clone(),
            0.2,
            false,
        )
        .unwrap();
        let expected = tensor::matmul(&tensor::matmul(z.tensor(), &w0).unwrap(), &w1).unwrap();
        assert_eq!(generate_classifiers(&m).unwrap(), expected);
    }

    #[test]
    fn predict_cases() {
        let w = Tensor::from_rows(&[[1.0, 0.0], [0.0, 2.0]]).unwrap();
        assert_eq!(predict(&w, &[3.0, 4.0]).unwrap().data(), &[3.0, 8.0]);
        let eye = Tensor::eye(3).unwrap();
        assert_eq!(predict(&eye, &[1.5, -2.0, 0.0]).unwrap().data(), &[1.5, -2.0, 0.0]);
        assert!(predict(&w, &[1.0]).is_err());

        let x = Tensor::from_rows(&[[3.0, 4.0], [1.0, -1.0]]).unwrap();
        let batch = predict_batch(&w, &x).unwrap();
        assert_eq!(batch.data(), &[3.0, 8.0, 1.0, -2.0]);
    }

    #[test]
    fn loss_values() {
        let zeros = Tensor::zeros([1, 4]).unwrap();
        let targets = Tensor::new([1, 4], alloc::vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        let l = bce_loss(&zeros, &targets).unwrap();
        assert!((l - 4.0 * core::f64::consts::LN_2).abs() < 1e-12);

        let saturated = Tensor::new([1, 4], alloc::vec![50.0, -50.0, 50.0, -50.0]).unwrap();
        assert!(bce_loss(&saturated, &targets).unwrap() < 1e-6);

        let s = Tensor::new([1, 1], alloc::vec![libm::log(3.0)]).unwrap();
        let y = Tensor::new([1, 1], alloc::vec![1.0]).unwrap();
        assert!((bce_loss(&s, &y).unwrap() + libm::log(0.75)).abs() < 1e-12);

        let bad = Tensor::new([1, 4], alloc::vec![2.0, 0.0, 1.0, 0.0]).unwrap();
        assert!(matches!(bce_loss(&zeros, &bad), Err(Error::Data(_))));
    }

    #[test]
    fn loss_shrinks_as_correct_logits_grow() {
        let y = Tensor::new([1, 2], alloc::vec![1.0, 0.0]).unwrap();
        let mut prev = f64::INFINITY;
        for m in [0.5, 1.0, 2.0, 4.0, 8.0, 16.0] {
            let s = Tensor::new([1, 2], alloc::vec![m, -m]).unwrap();
            let l = bce_loss(&s, &y).unwrap();
            assert!(l > 0.0 && l < prev);
            prev = l;
        }
    }
}
