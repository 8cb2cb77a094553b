//! Label correlation matrix construction.
//!
//! Pipeline: pair co-occurrence counts → conditional probabilities
//! `P_ij = P(L_j | L_i)` → thresholded binary edges → re-weighted rows with a
//! fixed self weight → symmetric degree normalization.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Guard added to every degree before taking `D^{-1/2}`.
pub const DEGREE_EPSILON: f64 = 1e-6;

/// Pair and single-label occurrence counts over a set of samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CooccurrenceStats {
    num_labels: usize,
    pairs: Vec<u64>,
    occurrences: Vec<u64>,
}

impl CooccurrenceStats {
    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    /// `M_ij`: samples containing both `i` and `j` (zero on the diagonal).
    pub fn pair_count(&self, i: usize, j: usize) -> u64 {
        self.pairs[i * self.num_labels + j]
    }

    /// `N_i`: samples containing label `i`.
    pub fn occurrences(&self) -> &[u64] {
        &self.occurrences
    }

    /// Row-major `C×C` pair counts.
    pub fn pair_counts(&self) -> &[u64] {
        &self.pairs
    }
}

/// Counts label occurrences and pairwise co-occurrences.
///
/// Duplicate indices inside one sample are counted once.
pub fn count_cooccurrence<S: AsRef<[usize]>>(
    samples: &[S],
    num_labels: usize,
) -> Result<CooccurrenceStats> {
    if num_labels == 0 {
        return Err(Error::Config("label count must be positive".into()));
    }
    let mut pairs = vec![0u64; num_labels * num_labels];
    let mut occurrences = vec![0u64; num_labels];
    let mut labels = Vec::new();
    for (s, sample) in samples.iter().enumerate() {
        labels.clear();
        labels.extend_from_slice(sample.as_ref());
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_labels) {
            return Err(Error::Data(format!(
                "sample {s}: label index {bad} out of range for {num_labels} labels"
            )));
        }
        labels.sort_unstable();
        labels.dedup();
        for (a, &i) in labels.iter().enumerate() {
            occurrences[i] += 1;
            for &j in &labels[a + 1..] {
                pairs[i * num_labels + j] += 1;
                pairs[j * num_labels + i] += 1;
            }
        }
    }
    Ok(CooccurrenceStats {
        num_labels,
        pairs,
        occurrences,
    })
}

/// Which step of the pipeline a [`CorrelationMatrix`] came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Conditional,
    Binary,
    Reweighted,
    Normalized,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Conditional => "conditional",
            Stage::Binary => "binary",
            Stage::Reweighted => "reweighted",
            Stage::Normalized => "normalized",
        }
    }
}

/// A `C×C` label correlation matrix tagged with its pipeline stage.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    size: usize,
    values: Vec<f64>,
    stage: Stage,
    tau: Option<f64>,
    p: Option<f64>,
}

impl CorrelationMatrix {
    /// Wraps externally stored values, validating the stage invariants.
    pub fn from_values(
        size: usize,
        values: Vec<f64>,
        stage: Stage,
        tau: Option<f64>,
        p: Option<f64>,
    ) -> Result<Self> {
        if size == 0 || values.len() != size * size {
            return Err(Error::Length {
                expected: size * size,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Data(
                "correlation entries must be finite and non-negative".into(),
            ));
        }
        let m = Self {
            size,
            values,
            stage,
            tau,
            p,
        };
        match stage {
            Stage::Conditional => {
                if m.values.iter().any(|&v| v > 1.0) || (0..size).any(|i| m.get(i, i) != 0.0) {
                    return Err(Error::Data(
                        "conditional matrix needs entries in [0, 1] and a zero diagonal".into(),
                    ));
                }
            }
            Stage::Binary => {
                if m.values.iter().any(|&v| v != 0.0 && v != 1.0) {
                    return Err(Error::Data("binary matrix entries must be 0 or 1".into()));
                }
            }
            Stage::Reweighted => {
                for i in 0..size {
                    let s: f64 = m.row(i).iter().sum();
                    if (s - 1.0).abs() > 1e-12 {
                        return Err(Error::Data(format!("reweighted row {i} sums to {s}")));
                    }
                }
            }
            Stage::Normalized => {}
        }
        Ok(m)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn tau(&self) -> Option<f64> {
        self.tau
    }

    pub fn p(&self) -> Option<f64> {
        self.p
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.size + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.size..(i + 1) * self.size]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of non-zero off-diagonal entries.
    pub fn edge_count(&self) -> usize {
        (0..self.size)
            .flat_map(|i| (0..self.size).map(move |j| (i, j)))
            .filter(|&(i, j)| i != j && self.get(i, j) != 0.0)
            .count()
    }

    /// Rows whose diagonal entry is exactly zero.
    pub fn zero_diagonal_rows(&self) -> usize {
        (0..self.size).filter(|&i| self.get(i, i) == 0.0).count()
    }

    pub fn to_tensor(&self) -> Tensor {
        Tensor::new([self.size, self.size], self.values.clone())
            .expect("correlation values are finite and sized")
    }

    fn expect_stage(&self, stage: Stage, op: &str) -> Result<()> {
        if self.stage == stage {
            Ok(())
        } else {
            Err(Error::Usage(format!(
                "{op} expects a {} matrix, got {}",
                stage.name(),
                self.stage.name()
            )))
        }
    }
}

/// `P_ij = M_ij / N_i`; rows of labels that never occur are all zero.
pub fn conditional_probability(stats: &CooccurrenceStats) -> CorrelationMatrix {
    let c = stats.num_labels;
    let mut values = vec![0.0; c * c];
    for i in 0..c {
        let n = stats.occurrences[i];
        if n == 0 {
            continue;
        }
        for j in 0..c {
            if i != j {
                values[i * c + j] = stats.pair_count(i, j) as f64 / n as f64;
            }
        }
    }
    CorrelationMatrix {
        size: c,
        values,
        stage: Stage::Conditional,
        tau: None,
        p: None,
    }
}

/// Keeps an edge iff `P_ij ≥ tau`.
pub fn binarize(conditional: &CorrelationMatrix, tau: f64) -> Result<CorrelationMatrix> {
    conditional.expect_stage(Stage::Conditional, "binarize")?;
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::Config(format!("tau must lie in (0, 1], got {tau}")));
    }
    let values = conditional
        .values
        .iter()
        .map(|&v| if v >= tau { 1.0 } else { 0.0 })
        .collect();
    Ok(CorrelationMatrix {
        size: conditional.size,
        values,
        stage: Stage::Binary,
        tau: Some(tau),
        p: None,
    })
}

/// Re-weights each row to `1 − p` on the diagonal and `p` spread evenly over
/// the row's surviving edges. A row without edges keeps all weight on itself.
pub fn reweight(binary: &CorrelationMatrix, p: f64) -> Result<CorrelationMatrix> {
    binary.expect_stage(Stage::Binary, "reweight")?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Config(format!("p must lie in [0, 1], got {p}")));
    }
    let c = binary.size;
    let mut values = vec![0.0; c * c];
    for i in 0..c {
        let neighbors = (0..c).filter(|&j| j != i && binary.get(i, j) == 1.0).count();
        if neighbors == 0 {
            values[i * c + i] = 1.0;
            continue;
        }
        let share = p / neighbors as f64;
        for j in 0..c {
            if j != i && binary.get(i, j) == 1.0 {
                values[i * c + j] = share;
            }
        }
        values[i * c + i] = 1.0 - p;
    }
    Ok(CorrelationMatrix {
        size: c,
        values,
        stage: Stage::Reweighted,
        tau: binary.tau,
        p: Some(p),
    })
}

/// `D^{-1/2} A′ D^{-1/2}` with `D_ii = Σ_j A′_ij + ε`.
pub fn normalize_adjacency(reweighted: &CorrelationMatrix) -> Result<CorrelationMatrix> {
    reweighted.expect_stage(Stage::Reweighted, "normalize_adjacency")?;
    let c = reweighted.size;
    let inv_sqrt: Vec<f64> = (0..c)
        .map(|i| 1.0 / libm::sqrt(reweighted.row(i).iter().sum::<f64>() + DEGREE_EPSILON))
        .collect();
    let mut values = vec![0.0; c * c];
    for i in 0..c {
        for j in 0..c {
            values[i * c + j] = inv_sqrt[i] * reweighted.get(i, j) * inv_sqrt[j];
        }
    }
    Ok(CorrelationMatrix {
        size: c,
        values,
        stage: Stage::Normalized,
        tau: reweighted.tau,
        p: reweighted.p,
    })
}

/// Threshold, self weight and whether to apply degree normalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphConfig {
    pub tau: f64,
    pub p: f64,
    pub normalize: bool,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            tau: 0.4,
            p: 0.2,
            normalize: true,
        }
    }
}

/// Every intermediate of the correlation pipeline.
#[derive(Debug, Clone)]
pub struct LabelGraph {
    pub conditional: CorrelationMatrix,
    pub binary: CorrelationMatrix,
    pub reweighted: CorrelationMatrix,
    pub normalized: Option<CorrelationMatrix>,
}

impl LabelGraph {
    pub fn build(stats: &CooccurrenceStats, config: &GraphConfig) -> Result<Self> {
        let conditional = conditional_probability(stats);
        let binary = binarize(&conditional, config.tau)?;
        let reweighted = reweight(&binary, config.p)?;
        let normalized = if config.normalize {
            Some(normalize_adjacency(&reweighted)?)
        } else {
            None
        };
        Ok(Self {
            conditional,
            binary,
            reweighted,
            normalized,
        })
    }

    /// The propagation matrix used by the GCN layers.
    pub fn adjacency(&self) -> &CorrelationMatrix {
        self.normalized.as_ref().unwrap_or(&self.reweighted)
    }
}
