//! Grid runs over threshold, self weight and layer stack.
//!
//! Each grid point rebuilds the label graph, trains from the same seed and
//! reports test metrics. Points whose configuration is rejected or whose
//! training diverges still produce a row.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::embeddings::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::graph::{CooccurrenceStats, GraphConfig, LabelGraph};
use crate::metrics::{self, DecisionRule};
use crate::model::{self, ModelConfig};
use crate::train::{self, TrainConfig, TrainingData};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub tau: f64,
    pub p: f64,
    pub layer_dims: Vec<usize>,
}

/// Cartesian product in `tau`-major, then `p`, then layer-stack order.
pub fn grid(taus: &[f64], ps: &[f64], layer_dims: &[Vec<usize>]) -> Vec<SweepPoint> {
    let mut points = Vec::with_capacity(taus.len() * ps.len() * layer_dims.len());
    for &tau in taus {
        for &p in ps {
            for dims in layer_dims {
                points.push(SweepPoint {
                    tau,
                    p,
                    layer_dims: dims.clone(),
                });
            }
        }
    }
    points
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepOutcome {
    Completed {
        map: f64,
        cf1: f64,
        of1: f64,
        first_loss: f64,
        final_loss: f64,
    },
    Diverged(String),
    Rejected(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub point: SweepPoint,
    /// Surviving off-diagonal edges after thresholding.
    pub edges: Option<usize>,
    /// Rows of the re-weighted matrix with no self weight.
    pub zero_diagonal_rows: Option<usize>,
    pub outcome: SweepOutcome,
}

impl SweepRow {
    /// Whether some label ignores its own features (the `p = 1` case).
    pub fn degenerate_diagonal(&self) -> bool {
        self.zero_diagonal_rows.is_some_and(|n| n > 0)
    }
}

/// Everything shared by the points of one sweep.
#[derive(Debug, Clone)]
pub struct SweepSetup<'a> {
    pub stats: &'a CooccurrenceStats,
    pub embedding: &'a EmbeddingMatrix,
    pub train: &'a TrainingData,
    pub test: &'a TrainingData,
    pub model: ModelConfig,
    pub training: TrainConfig,
    pub normalize: bool,
    pub rule: DecisionRule,
}

pub fn run_point(setup: &SweepSetup<'_>, point: &SweepPoint) -> SweepRow {
    let graph_config = GraphConfig {
        tau: point.tau,
        p: point.p,
        normalize: setup.normalize,
    };
    let graph = match LabelGraph::build(setup.stats, &graph_config) {
        Ok(g) => g,
        Err(e) => {
            return SweepRow {
                point: point.clone(),
                edges: None,
                zero_diagonal_rows: None,
                outcome: SweepOutcome::Rejected(e.to_string()),
            }
        }
    };
    let edges = Some(graph.binary.edge_count());
    let zero_diagonal_rows = Some(graph.reweighted.zero_diagonal_rows());
    let outcome = match train_and_score(setup, point, graph) {
        Ok(o) => o,
        Err(e @ (Error::Diverged { .. } | Error::NonFinite { .. })) => {
            SweepOutcome::Diverged(e.to_string())
        }
        Err(e) => SweepOutcome::Rejected(e.to_string()),
    };
    SweepRow {
        point: point.clone(),
        edges,
        zero_diagonal_rows,
        outcome,
    }
}

fn train_and_score(
    setup: &SweepSetup<'_>,
    point: &SweepPoint,
    graph: LabelGraph,
) -> Result<SweepOutcome> {
    let config = ModelConfig {
        layer_dims: point.layer_dims.clone(),
        ..setup.model.clone()
    };
    let adjacency = graph.adjacency().clone();
    let initial = model::init_model(
        &config,
        setup.embedding.clone(),
        adjacency,
        setup.train.features.cols(),
    )?;
    let (trained, history) = train::train(initial, setup.train, &setup.training, None)?;
    let w = model::generate_classifiers(&trained)?;
    let scores = model::predict_batch(&w, &setup.test.features)?;
    let report = metrics::evaluate(&scores, &setup.test.targets, setup.rule)?;
    Ok(SweepOutcome::Completed {
        map: report.map,
        cf1: report.cf1,
        of1: report.of1,
        first_loss: history.first_loss().unwrap_or(f64::NAN),
        final_loss: history.final_loss().unwrap_or(f64::NAN),
    })
}

/// Runs every point in order.
pub fn run_sweep(setup: &SweepSetup<'_>, points: &[SweepPoint]) -> Vec<SweepRow> {
    points.iter().map(|p| run_point(setup, p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_order_is_tau_major() {
        let g = grid(&[0.1, 0.2], &[0.0, 1.0], &[alloc::vec![4], alloc::vec![3, 4]]);
        assert_eq!(g.len(), 8);
        assert_eq!((g[0].tau, g[0].p, g[0].layer_dims.len()), (0.1, 0.0, 1));
        assert_eq!((g[1].tau, g[1].p, g[1].layer_dims.len()), (0.1, 0.0, 2));
        assert_eq!((g[2].tau, g[2].p), (0.1, 1.0));
        assert_eq!(g[4].tau, 0.2);
    }
}
