//! Line-oriented text inputs: label vocabulary, annotations and word vectors.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use mlgcn_core::embeddings::{LabelVocabulary, WordVectorTable};

use crate::error::{io, Error, Result};

/// One annotated sample: an identifier and its sorted, deduplicated labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedSample {
    pub id: String,
    pub labels: Vec<usize>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(io(path))
}

/// One label name per non-blank line, in canonical order.
pub fn parse_vocabulary(path: &Path, text: &str) -> Result<LabelVocabulary> {
    let mut names: Vec<&str> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let name = line.trim();
        if name.is_empty() {
            continue;
        }
        if names.contains(&name) {
            return Err(Error::Data {
                path: path.into(),
                line: i + 1,
                msg: format!("duplicate label {name:?}"),
            });
        }
        names.push(name);
    }
    if names.is_empty() {
        return Err(Error::Empty { path: path.into() });
    }
    Ok(LabelVocabulary::new(names)?)
}

pub fn load_vocabulary(path: &Path) -> Result<LabelVocabulary> {
    parse_vocabulary(path, &read(path)?)
}

pub fn vocabulary_text(vocab: &LabelVocabulary) -> String {
    vocab.names().iter().map(|n| format!("{n}\n")).collect()
}

/// `id<TAB>label,label,...` per line; the label list may be empty.
pub fn parse_annotations(path: &Path, text: &str, vocab: &LabelVocabulary) -> Result<Vec<AnnotatedSample>> {
    let mut samples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let (id, labels) = line.split_once('\t').ok_or_else(|| Error::Parse {
            path: path.into(),
            line: line_no,
            msg: "expected `id<TAB>labels`".into(),
        })?;
        let id = id.trim();
        if id.is_empty() {
            return Err(Error::Parse {
                path: path.into(),
                line: line_no,
                msg: "empty sample id".into(),
            });
        }
        let mut set = BTreeSet::new();
        for name in labels.split(',').map(str::trim).filter(|n| !n.is_empty()) {
            let index = vocab.index_of(name).ok_or_else(|| Error::Data {
                path: path.into(),
                line: line_no,
                msg: format!("unknown label {name:?}"),
            })?;
            set.insert(index);
        }
        samples.push(AnnotatedSample {
            id: id.to_string(),
            labels: set.into_iter().collect(),
        });
    }
    Ok(samples)
}

pub fn load_annotations(path: &Path, vocab: &LabelVocabulary) -> Result<Vec<AnnotatedSample>> {
    parse_annotations(path, &read(path)?, vocab)
}

pub fn annotations_text(samples: &[AnnotatedSample], vocab: &LabelVocabulary) -> String {
    let mut out = String::new();
    for s in samples {
        let names: Vec<&str> = s.labels.iter().filter_map(|&l| vocab.name(l)).collect();
        out.push_str(&format!("{}\t{}\n", s.id, names.join(",")));
    }
    out
}

/// `token v1 v2 ... vd` per line; `d` is fixed by the first entry.
pub fn parse_word_vectors(path: &Path, text: &str) -> Result<WordVectorTable> {
    let mut table: Option<WordVectorTable> = None;
    for (i, line) in text.lines().enumerate() {
        let parse = |msg: String| Error::Parse {
            path: path.into(),
            line: i + 1,
            msg,
        };
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else { continue };
        let vector = fields
            .map(|f| f.parse::<f64>().map_err(|e| parse(format!("bad value {f:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if vector.is_empty() {
            return Err(parse(format!("token {token:?} has no values")));
        }
        let t = table.get_or_insert_with(|| WordVectorTable::new(vector.len()));
        if vector.len() != t.dim() {
            return Err(parse(format!("expected {} values, found {}", t.dim(), vector.len())));
        }
        t.insert(token, vector).map_err(|e| parse(e.to_string()))?;
    }
    table.ok_or_else(|| Error::Empty { path: path.into() })
}

pub fn load_word_vectors(path: &Path) -> Result<WordVectorTable> {
    parse_word_vectors(path, &read(path)?)
}
