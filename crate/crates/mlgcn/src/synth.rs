//! Seeded synthetic datasets with planted label co-occurrence.
//!
//! Labels `2k` and `2k+1` form a pair. Every label is first drawn on its own
//! with probability `base_rate`; then each label whose partner was drawn is
//! switched on with probability `strength`. Features sum one fixed unit
//! signature per active label plus a background signature shared by every
//! sample, and add isotropic Gaussian noise.

use mlgcn_core::embeddings::LabelVocabulary;
use mlgcn_core::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::dataset::FeatureDataset;
use crate::error::{Error, Result};
use crate::text::AnnotatedSample;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub labels: usize,
    pub dim: usize,
    pub samples: usize,
    pub strength: f64,
    pub base_rate: f64,
    pub noise: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            labels: 10,
            dim: 64,
            samples: 2500,
            strength: 0.8,
            base_rate: 0.15,
            noise: 0.1,
            seed: 0,
        }
    }
}

/// The planted pairs `(2k, 2k+1)`; an odd last label stays unpaired.
pub fn planted_pairs(labels: usize) -> Vec<(usize, usize)> {
    (0..labels / 2).map(|k| (2 * k, 2 * k + 1)).collect()
}

/// `P(partner | label)` within a planted pair.
pub fn planted_conditional(base_rate: f64, strength: f64) -> f64 {
    let (q, s) = (base_rate, strength);
    (q + 2.0 * (1.0 - q) * s) / (1.0 + (1.0 - q) * s)
}

/// Zero-padded names `label0`, `label1`, ... in index order.
pub fn label_names(labels: usize) -> Vec<String> {
    let width = labels.saturating_sub(1).to_string().len();
    (0..labels).map(|i| format!("label{i:0width$}")).collect()
}

pub fn generate(config: &SynthConfig) -> Result<FeatureDataset> {
    let SynthConfig { labels: c, dim: d, samples: n, strength, base_rate, noise, seed } = *config;
    if c < 2 || d < c {
        return Err(Error::Invalid(format!("synthetic data needs 2 <= labels <= dim, got {c} labels, dim {d}")));
    }
    if n == 0 {
        return Err(Error::Invalid("synthetic data needs at least one sample".into()));
    }
    for (name, v) in [("strength", strength), ("base rate", base_rate)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Invalid(format!("{name} must lie in [0, 1], got {v}")));
        }
    }
    let bad_noise = || Error::Invalid(format!("noise must be a finite non-negative deviation, got {noise}"));
    if noise.is_nan() || noise < 0.0 {
        return Err(bad_noise());
    }
    let noise_dist = Normal::new(0.0, noise).map_err(|_| bad_noise())?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // index c is the shared background
    let signatures: Vec<Vec<f64>> = (0..=c)
        .map(|_| {
            let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / norm).collect()
        })
        .collect();

    let mut samples = Vec::with_capacity(n);
    let mut features = Vec::with_capacity(n * d);
    for i in 0..n {
        let drawn: Vec<bool> = (0..c).map(|_| rng.random_bool(base_rate)).collect();
        let mut active = drawn.clone();
        for (a, b) in planted_pairs(c) {
            let pull_a = rng.random_bool(strength);
            let pull_b = rng.random_bool(strength);
            active[a] |= drawn[b] && pull_a;
            active[b] |= drawn[a] && pull_b;
        }
        let mut x = signatures[c].clone();
        for sig in signatures.iter().zip(&active).filter_map(|(s, &on)| on.then_some(s)) {
            x.iter_mut().zip(sig).for_each(|(a, s)| *a += s);
        }
        for v in &mut x {
            *v += noise_dist.sample(&mut rng);
        }
        features.extend(x);
        samples.push(AnnotatedSample {
            id: format!("s{i:06}"),
            labels: (0..c).filter(|&l| active[l]).collect(),
        });
    }
    let vocab = LabelVocabulary::new(label_names(c))?;
    FeatureDataset::new(samples, Tensor::new([n, d], features)?, vocab)
}
