//! Trained model directories: weights, graph, embeddings and vocabulary.
//!
//! Files: `model.txt` (architecture), `vocab.txt`, `adjacency.mlgf`,
//! `embedding.mlgf` and one `layer{l}.mlgf` per GCN layer.

use std::path::Path;

use mlgcn_core::embeddings::{EmbeddingKind, EmbeddingMatrix, LabelVocabulary};
use mlgcn_core::graph::{CorrelationMatrix, Stage};
use mlgcn_core::model::{GcnLayer, MlGcnModel};

use crate::artifacts::Artifacts;
use crate::error::{Error, Result};
use crate::manifest::KeyValues;
use crate::matrix;
use crate::text;

pub const FORMAT: &str = "mlgcn-checkpoint-1";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: MlGcnModel,
    pub vocab: LabelVocabulary,
}

fn kind_name(kind: EmbeddingKind) -> &'static str {
    match kind {
        EmbeddingKind::OneHot => "one-hot",
        EmbeddingKind::WordVectors => "word-vectors",
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), |x| x.to_string())
}

fn parse_opt(raw: Option<&str>) -> Option<f64> {
    raw.and_then(|s| s.parse().ok())
}

/// Writes every checkpoint file through `out`; `seed` is the run's seed.
pub fn save(out: &mut Artifacts, model: &MlGcnModel, vocab: &LabelVocabulary, seed: u64) -> Result<()> {
    let adjacency = model.adjacency();
    let mut kv = KeyValues::new();
    kv.set("format", FORMAT);
    kv.set("labels", model.num_labels());
    kv.set("embedding_dim", model.embedding().dim());
    kv.set("feature_dim", model.feature_dim());
    let dims: Vec<String> = model.layer_dims().iter().map(|d| d.to_string()).collect();
    kv.set("layer_dims", dims.join(","));
    kv.set("slope", model.slope());
    kv.set("final_activation", model.final_activation());
    kv.set("adjacency_stage", adjacency.stage().name());
    kv.set("tau", opt(adjacency.tau()));
    kv.set("p", opt(adjacency.p()));
    kv.set("embedding", kind_name(model.embedding().kind()));
    kv.set("seed", seed);
    kv.set("vocab", "vocab.txt");
    out.write_text("model.txt", &kv.render())?;
    out.write_text("vocab.txt", &text::vocabulary_text(vocab))?;
    out.write_tensor("adjacency.mlgf", &adjacency.to_tensor())?;
    out.write_tensor("embedding.mlgf", model.embedding().tensor())?;
    for (l, layer) in model.layers().iter().enumerate() {
        out.write_tensor(&format!("layer{l}.mlgf"), &layer.weight)?;
    }
    Ok(())
}

pub fn load(dir: &Path) -> Result<Checkpoint> {
    let meta_path = dir.join("model.txt");
    let kv = KeyValues::load(&meta_path)?;
    let format: String = kv.require(&meta_path, "format")?;
    if format != FORMAT {
        return Err(Error::Invalid(format!(
            "{}: unsupported checkpoint format {format:?}",
            meta_path.display()
        )));
    }
    let vocab = text::load_vocabulary(&dir.join("vocab.txt"))?;
    let layer_dims: String = kv.require(&meta_path, "layer_dims")?;
    let depth = layer_dims.split(',').filter(|s| !s.is_empty()).count();
    let slope: f64 = kv.require(&meta_path, "slope")?;
    let final_activation: bool = kv.require(&meta_path, "final_activation")?;
    let stage = match kv.get("adjacency_stage") {
        Some("normalized") => Stage::Normalized,
        Some("reweighted") => Stage::Reweighted,
        other => {
            return Err(Error::Invalid(format!(
                "{}: bad adjacency_stage {other:?}",
                meta_path.display()
            )))
        }
    };
    let kind = match kv.get("embedding") {
        Some("one-hot") => EmbeddingKind::OneHot,
        Some("word-vectors") => EmbeddingKind::WordVectors,
        other => {
            return Err(Error::Invalid(format!(
                "{}: bad embedding kind {other:?}",
                meta_path.display()
            )))
        }
    };

    let a = matrix::read_tensor(&dir.join("adjacency.mlgf"))?;
    if a.rank() != 2 || a.rows() != a.cols() {
        return Err(Error::Invalid(format!("adjacency must be square, got {:?}", a.shape())));
    }
    let adjacency = CorrelationMatrix::from_values(
        a.rows(),
        a.into_data(),
        stage,
        parse_opt(kv.get("tau")),
        parse_opt(kv.get("p")),
    )?;
    let embedding = EmbeddingMatrix::from_tensor(matrix::read_tensor(&dir.join("embedding.mlgf"))?, kind)?;
    let layers = (0..depth)
        .map(|l| {
            Ok(GcnLayer {
                weight: matrix::read_tensor(&dir.join(format!("layer{l}.mlgf")))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let model = MlGcnModel::from_parts(layers, adjacency, embedding, slope, final_activation)?;
    if model.num_labels() != vocab.len() {
        return Err(Error::Invalid(format!(
            "checkpoint has {} labels but vocab.txt lists {}",
            model.num_labels(),
            vocab.len()
        )));
    }
    Ok(Checkpoint { model, vocab })
}
