//! Label vocabularies, word-vector tables and the label embedding matrix.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Ordered, duplicate-free list of label names.
///
/// The order is the canonical row/column order of every label-indexed matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVocabulary {
    names: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl LabelVocabulary {
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(Error::Data("vocabulary is empty".into()));
        }
        let mut index = BTreeMap::new();
        for (i, name) in names.iter().enumerate() {
            if name.trim().is_empty() {
                return Err(Error::Data(format!("label {i} has an empty name")));
            }
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::Data(format!("duplicate label name {name:?}")));
            }
        }
        Ok(Self { names, index })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, index: usize) -> Option<&str> {
        self.names.get(index).map(String::as_str)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }
}

/// Token → vector map with a single shared dimension.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WordVectorTable {
    dim: usize,
    vectors: BTreeMap<String, Vec<f64>>,
}

impl WordVectorTable {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            vectors: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Inserts a vector under the lowercased token. The first entry for a
    /// token wins; returns `false` if the token was already present.
    pub fn insert(&mut self, token: &str, vector: Vec<f64>) -> Result<bool> {
        if vector.len() != self.dim {
            return Err(Error::Shape {
                op: "word vector",
                left: vec![self.dim],
                right: vec![vector.len()],
            });
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { op: "word vector" });
        }
        let key = token.to_lowercase();
        if self.vectors.contains_key(&key) {
            return Ok(false);
        }
        self.vectors.insert(key, vector);
        Ok(true)
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(token).map(Vec::as_slice)
    }
}

/// Lowercases and splits a label name on whitespace and hyphens.
pub fn tokenize(name: &str) -> Vec<String> {
    name.split(|c: char| c.is_whitespace() || c == '-')
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Where label representations come from.
#[derive(Debug, Clone, Copy)]
pub enum EmbeddingSource<'a> {
    WordVectors(&'a WordVectorTable),
    OneHot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingKind {
    WordVectors,
    OneHot,
}

/// `C×d` matrix of label representations, row `i` for label `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    z: Tensor,
    kind: EmbeddingKind,
}

impl EmbeddingMatrix {
    /// Wraps a precomputed `C×d` matrix.
    pub fn from_tensor(z: Tensor, kind: EmbeddingKind) -> Result<Self> {
        z.matrix_dims("embedding")?;
        Ok(Self { z, kind })
    }

    pub fn tensor(&self) -> &Tensor {
        &self.z
    }

    pub fn kind(&self) -> EmbeddingKind {
        self.kind
    }

    pub fn num_labels(&self) -> usize {
        self.z.rows()
    }

    pub fn dim(&self) -> usize {
        self.z.cols()
    }
}

/// Builds `Z`: token-mean word vectors per label, or the identity in one-hot mode.
pub fn build_label_embeddings(
    vocab: &LabelVocabulary,
    source: EmbeddingSource<'_>,
) -> Result<EmbeddingMatrix> {
    let c = vocab.len();
    match source {
        EmbeddingSource::OneHot => Ok(EmbeddingMatrix {
            z: Tensor::eye(c)?,
            kind: EmbeddingKind::OneHot,
        }),
        EmbeddingSource::WordVectors(table) => {
            let d = table.dim();
            let mut data = Vec::with_capacity(c * d);
            for name in vocab.names() {
                let tokens = tokenize(name);
                if tokens.is_empty() {
                    return Err(Error::Data(format!("label {name:?} has no tokens")));
                }
                let mut row = vec![0.0; d];
                for token in &tokens {
                    let v = table.get(token).ok_or_else(|| {
                        Error::Data(format!(
                            "label {name:?}: token {token:?} missing from word vectors"
                        ))
                    })?;
                    row.iter_mut().zip(v).for_each(|(r, x)| *r += x);
                }
                let k = tokens.len() as f64;
                data.extend(row.into_iter().map(|x| x / k));
            }
            Ok(EmbeddingMatrix {
                z: Tensor::new([c, d], data)?,
                kind: EmbeddingKind::WordVectors,
            })
        }
    }
}

impl core::fmt::Display for EmbeddingKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            EmbeddingKind::WordVectors => "word-vectors",
            EmbeddingKind::OneHot => "one-hot",
        })
    }
}

impl core::str::FromStr for EmbeddingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "word-vectors" => Ok(EmbeddingKind::WordVectors),
            "one-hot" => Ok(EmbeddingKind::OneHot),
            other => Err(Error::Config(format!("unknown embedding kind {other:?}"))),
        }
    }
}
