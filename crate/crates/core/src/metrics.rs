//! Multi-label evaluation: per-class and overall precision/recall/F1 under a
//! threshold or top-k decision rule, all-points mean average precision, and
//! Euclidean k-nearest-neighbor retrieval.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::tensor::{sigmoid_scalar, Tensor};

/// How scores are turned into positive/negative decisions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecisionRule {
    /// Positive iff `sigmoid(score) > t`.
    Threshold(f64),
    /// The `k` highest scores per sample, lower label index first on ties.
    TopK(usize),
}

impl Default for DecisionRule {
    fn default() -> Self {
        DecisionRule::Threshold(0.5)
    }
}

impl fmt::Display for DecisionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecisionRule::Threshold(t) => write!(f, "threshold:{t}"),
            DecisionRule::TopK(k) => write!(f, "topk:{k}"),
        }
    }
}

impl FromStr for DecisionRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("decision rule must be threshold:<t> or topk:<k>, got {s:?}"));
        let (kind, value) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "threshold" => {
                let t: f64 = value.parse().map_err(|_| bad())?;
                if !(t > 0.0 && t < 1.0) {
                    return Err(Error::Config(format!("threshold must lie in (0, 1), got {t}")));
                }
                Ok(DecisionRule::Threshold(t))
            }
            "topk" => {
                let k: usize = value.parse().map_err(|_| bad())?;
                if k == 0 {
                    return Err(Error::Config("top-k needs k >= 1".into()));
                }
                Ok(DecisionRule::TopK(k))
            }
            _ => Err(bad()),
        }
    }
}

/// Scores together with the binary decisions made from them.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    pub samples: usize,
    pub labels: usize,
    pub scores: Vec<f64>,
    pub decided: Vec<bool>,
    pub rule: DecisionRule,
}

impl PredictionSet {
    pub fn decided_row(&self, b: usize) -> &[bool] {
        &self.decided[b * self.labels..(b + 1) * self.labels]
    }
}

pub fn decide_labels(scores: &Tensor, rule: DecisionRule) -> Result<PredictionSet> {
    let (b, c) = scores.matrix_dims("decide_labels")?;
    let s = scores.data();
    let decided = match rule {
        DecisionRule::Threshold(t) => s.iter().map(|&v| sigmoid_scalar(v) > t).collect(),
        DecisionRule::TopK(k) => {
            if k == 0 {
                return Err(Error::Config("top-k needs k >= 1".into()));
            }
            let mut decided = vec![false; b * c];
            let mut order: Vec<usize> = Vec::with_capacity(c);
            for row in 0..b {
                let r = &s[row * c..(row + 1) * c];
                order.clear();
                order.extend(0..c);
                order.sort_by(|&i, &j| r[j].total_cmp(&r[i]).then(i.cmp(&j)));
                for &j in order.iter().take(k) {
                    decided[row * c + j] = true;
                }
            }
            decided
        }
    };
    Ok(PredictionSet {
        samples: b,
        labels: c,
        scores: s.to_vec(),
        decided,
        rule,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Averaging {
    /// Mean of per-class precision and recall.
    PerClass,
    /// Precision and recall from counts pooled over every (sample, class).
    Overall,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prf1 {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf1 {
    fn new(precision: f64, recall: f64) -> Self {
        Self {
            precision,
            recall,
            f1: harmonic(precision, recall),
        }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Validates a `B×C` 0/1 ground-truth matrix against the expected shape.
fn truth_flags(truth: &Tensor, samples: usize, labels: usize) -> Result<Vec<bool>> {
    let (b, c) = truth.matrix_dims("truth")?;
    if (b, c) != (samples, labels) {
        return Err(Error::Shape {
            op: "truth",
            left: vec![samples, labels],
            right: vec![b, c],
        });
    }
    truth
        .data()
        .iter()
        .map(|&v| match v {
            1.0 => Ok(true),
            0.0 => Ok(false),
            x => Err(Error::Data(format!("ground truth value {x} is not 0 or 1"))),
        })
        .collect()
}

pub fn prf1(pred: &PredictionSet, truth: &Tensor, mode: Averaging) -> Result<Prf1> {
    let (b, c) = (pred.samples, pred.labels);
    let gt = truth_flags(truth, b, c)?;
    let mut tp = vec![0usize; c];
    let mut predicted = vec![0usize; c];
    let mut actual = vec![0usize; c];
    for row in 0..b {
        for j in 0..c {
            let (d, g) = (pred.decided[row * c + j], gt[row * c + j]);
            tp[j] += usize::from(d && g);
            predicted[j] += usize::from(d);
            actual[j] += usize::from(g);
        }
    }
    Ok(match mode {
        Averaging::PerClass => {
            let p = (0..c).map(|j| ratio(tp[j], predicted[j])).sum::<f64>() / c as f64;
            let r = (0..c).map(|j| ratio(tp[j], actual[j])).sum::<f64>() / c as f64;
            Prf1::new(p, r)
        }
        Averaging::Overall => {
            let sum = |v: &[usize]| v.iter().sum::<usize>();
            Prf1::new(
                ratio(sum(&tp), sum(&predicted)),
                ratio(sum(&tp), sum(&actual)),
            )
        }
    })
}

/// All-points average precision of one ranked relevance list.
pub fn average_precision(scores: &[f64], relevant: &[bool]) -> Option<f64> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]).then(i.cmp(&j)));
    let mut hits = 0usize;
    let mut total = 0.0;
    for (rank, &i) in order.iter().enumerate() {
        if relevant[i] {
            hits += 1;
            total += hits as f64 / (rank + 1) as f64;
        }
    }
    (hits > 0).then(|| total / hits as f64)
}

/// Mean AP over classes that have at least one positive.
///
/// Per-class AP is `None` for classes without positives.
pub fn mean_average_precision(scores: &Tensor, truth: &Tensor) -> Result<(f64, Vec<Option<f64>>)> {
    let (b, c) = scores.matrix_dims("mean_average_precision")?;
    let gt = truth_flags(truth, b, c)?;
    let s = scores.data();
    let mut column = vec![0.0; b];
    let mut rel = vec![false; b];
    let per_class: Vec<Option<f64>> = (0..c)
        .map(|j| {
            for row in 0..b {
                column[row] = s[row * c + j];
                rel[row] = gt[row * c + j];
            }
            average_precision(&column, &rel)
        })
        .collect();
    let defined: Vec<f64> = per_class.iter().flatten().copied().collect();
    if defined.is_empty() {
        return Err(Error::Data("no class has a positive sample".into()));
    }
    Ok((defined.iter().sum::<f64>() / defined.len() as f64, per_class))
}

/// Everything reported for one evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub cp: f64,
    pub cr: f64,
    pub cf1: f64,
    pub op: f64,
    pub or: f64,
    pub of1: f64,
    pub map: f64,
    pub per_class_ap: Vec<Option<f64>>,
    pub rule: DecisionRule,
}

impl MetricsReport {
    /// `(name, value)` pairs in reporting order.
    pub fn entries(&self) -> [(&'static str, f64); 7] {
        [
            ("mAP", self.map),
            ("CP", self.cp),
            ("CR", self.cr),
            ("CF1", self.cf1),
            ("OP", self.op),
            ("OR", self.or),
            ("OF1", self.of1),
        ]
    }
}

pub fn evaluate(scores: &Tensor, truth: &Tensor, rule: DecisionRule) -> Result<MetricsReport> {
    let pred = decide_labels(scores, rule)?;
    let class = prf1(&pred, truth, Averaging::PerClass)?;
    let overall = prf1(&pred, truth, Averaging::Overall)?;
    let (map, per_class_ap) = mean_average_precision(scores, truth)?;
    Ok(MetricsReport {
        cp: class.precision,
        cr: class.recall,
        cf1: class.f1,
        op: overall.precision,
        or: overall.recall,
        of1: overall.f1,
        map,
        per_class_ap,
        rule,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

/// The `k` gallery rows closest to `query`, nearest first, lower index on ties.
pub fn knn_retrieve<G: AsRef<[f64]>>(query: &[f64], gallery: &[G], k: usize) -> Result<Vec<Neighbor>> {
    if k > gallery.len() {
        return Err(Error::Usage(format!(
            "k = {k} exceeds gallery size {}",
            gallery.len()
        )));
    }
    let mut found = Vec::with_capacity(gallery.len());
    for (i, g) in gallery.iter().enumerate() {
        let g = g.as_ref();
        if g.len() != query.len() {
            return Err(Error::Shape {
                op: "knn_retrieve",
                left: vec![query.len()],
                right: vec![g.len()],
            });
        }
        let sq: f64 = query.iter().zip(g).map(|(a, b)| (a - b) * (a - b)).sum();
        found.push((sq, i));
    }
    found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(found
        .into_iter()
        .take(k)
        .map(|(sq, index)| Neighbor {
            index,
            distance: libm::sqrt(sq),
        })
        .collect())
}
