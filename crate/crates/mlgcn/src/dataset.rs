//! Annotations joined with their feature vectors.

use std::path::Path;

use mlgcn_core::embeddings::LabelVocabulary;
use mlgcn_core::tensor::{self, Tensor};
use mlgcn_core::train::TrainingData;

use crate::error::{Error, Result};
use crate::matrix;
use crate::text::{self, AnnotatedSample};

/// Samples with `N×D` features; row `i` belongs to `samples[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDataset {
    pub samples: Vec<AnnotatedSample>,
    pub features: Tensor,
    pub vocab: LabelVocabulary,
}

/// Keeps `N×D` features and max-pools `N×D×h×w` maps down to `N×D`.
pub fn pool_features(features: Tensor) -> Result<Tensor> {
    match features.rank() {
        2 => Ok(features),
        4 => {
            let s = features.shape().to_vec();
            let per = s[1] * s[2] * s[3];
            let mut rows = Vec::with_capacity(s[0]);
            for chunk in features.data().chunks(per) {
                let map = Tensor::new([s[1], s[2], s[3]], chunk.to_vec())?;
                rows.push(tensor::global_max_pool(&map)?.into_data());
            }
            Ok(Tensor::from_rows(&rows)?)
        }
        r => Err(Error::Invalid(format!(
            "features must be N×D or N×D×h×w, got rank {r}"
        ))),
    }
}

impl FeatureDataset {
    pub fn new(samples: Vec<AnnotatedSample>, features: Tensor, vocab: LabelVocabulary) -> Result<Self> {
        let features = pool_features(features)?;
        if features.rows() != samples.len() {
            return Err(Error::Invalid(format!(
                "{} feature rows for {} annotated samples",
                features.rows(),
                samples.len()
            )));
        }
        let c = vocab.len();
        if let Some(s) = samples.iter().find(|s| s.labels.iter().any(|&l| l >= c)) {
            return Err(Error::Invalid(format!("sample {} has a label outside the vocabulary", s.id)));
        }
        Ok(Self { samples, features, vocab })
    }

    pub fn load(annotations: &Path, features: &Path, vocab: LabelVocabulary) -> Result<Self> {
        let samples = text::load_annotations(annotations, &vocab)?;
        Self::new(samples, matrix::read_tensor(features)?, vocab)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn label_sets(&self) -> Vec<&[usize]> {
        self.samples.iter().map(|s| s.labels.as_slice()).collect()
    }

    /// `N×C` 0/1 indicator matrix.
    pub fn targets(&self) -> Result<Tensor> {
        let c = self.vocab.len();
        let mut y = vec![0.0; self.len() * c];
        for (i, s) in self.samples.iter().enumerate() {
            for &l in &s.labels {
                y[i * c + l] = 1.0;
            }
        }
        Ok(Tensor::new([self.len(), c], y)?)
    }

    pub fn training_data(&self) -> Result<TrainingData> {
        Ok(TrainingData::new(self.features.clone(), self.targets()?)?)
    }

    /// Splits into the first `n` samples and the rest.
    pub fn split_at(&self, n: usize) -> Result<(Self, Self)> {
        let head: Vec<usize> = (0..n).collect();
        let tail: Vec<usize> = (n..self.len()).collect();
        let part = |idx: &[usize]| -> Result<Self> {
            Ok(Self {
                samples: idx.iter().map(|&i| self.samples[i].clone()).collect(),
                features: self.features.select_rows(idx)?,
                vocab: self.vocab.clone(),
            })
        };
        Ok((part(&head)?, part(&tail)?))
    }
}
