//! Define-by-run reverse-mode differentiation.
//!
//! Every operation appends a node whose operands are earlier nodes, so the
//! node list is already in topological order and backward is a single reverse
//! sweep. Gradients from multiple consumers of one node are summed.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{ensure_finite, gemm, max_pool_kernel, sigmoid_scalar, transpose_kernel, Tensor};
use crate::error::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Transpose(Var),
    LeakyRelu(Var, f64),
    Sigmoid(Var),
    MaxPool { input: Var, argmax: Vec<usize> },
    Add(Var, Var),
    Mul(Var, Var),
    Sum(Var),
    /// Mean over rows of the per-row sum of logistic losses.
    BceWithLogits { scores: Var, targets: Vec<f64> },
}

#[derive(Debug, Clone)]
struct Node {
    value: Tensor,
    op: Op,
    tracked: bool,
}

/// Recorded forward computation.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients of a scalar with respect to every tracked leaf.
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, var: Var) -> Option<&Tensor> {
        self.grads.get(var.0).and_then(Option::as_ref)
    }

    /// Removes and returns the gradient for `var`.
    pub fn take(&mut self, var: Var) -> Option<Tensor> {
        self.grads.get_mut(var.0).and_then(Option::take)
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Records a leaf. It is differentiated iff `tensor.requires_grad()`.
    pub fn var(&mut self, tensor: Tensor) -> Var {
        let tracked = tensor.requires_grad();
        self.push(tensor, Op::Leaf, tracked)
    }

    pub fn value(&self, var: Var) -> &Tensor {
        &self.nodes[var.0].value
    }

    fn push(&mut self, value: Tensor, op: Op, tracked: bool) -> Var {
        self.nodes.push(Node { value, op, tracked });
        Var(self.nodes.len() - 1)
    }

    fn tracked(&self, var: Var) -> bool {
        self.nodes[var.0].tracked
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = super::matmul(self.value(a), self.value(b))?;
        let tracked = self.tracked(a) || self.tracked(b);
        Ok(self.push(out, Op::MatMul(a, b), tracked))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).transpose()?;
        let tracked = self.tracked(a);
        Ok(self.push(out, Op::Transpose(a), tracked))
    }

    pub fn leaky_relu(&mut self, a: Var, slope: f64) -> Result<Var> {
        let out = super::leaky_relu(self.value(a), slope)?;
        let tracked = self.tracked(a);
        Ok(self.push(out, Op::LeakyRelu(a, slope), tracked))
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        let out = super::sigmoid(self.value(a))?;
        let tracked = self.tracked(a);
        Ok(self.push(out, Op::Sigmoid(a), tracked))
    }

    pub fn global_max_pool(&mut self, a: Var) -> Result<Var> {
        let (values, argmax) = max_pool_kernel(self.value(a))?;
        let out = Tensor::from_parts(vec![values.len()], values, "global_max_pool")?;
        let tracked = self.tracked(a);
        Ok(self.push(out, Op::MaxPool { input: a, argmax }, tracked))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.zip_same_shape("add", a, b, |x, y| x + y)?;
        let tracked = self.tracked(a) || self.tracked(b);
        Ok(self.push(out, Op::Add(a, b), tracked))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.zip_same_shape("mul", a, b, |x, y| x * y)?;
        let tracked = self.tracked(a) || self.tracked(b);
        Ok(self.push(out, Op::Mul(a, b), tracked))
    }

    /// Sum of all elements, as a rank-0 tensor.
    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let total = self.value(a).data().iter().sum::<f64>();
        let out = Tensor::from_parts(Vec::new(), vec![total], "sum")?;
        let tracked = self.tracked(a);
        Ok(self.push(out, Op::Sum(a), tracked))
    }

    /// Binary cross-entropy on logits: summed over columns, averaged over rows.
    ///
    /// `targets` must have the shape of `scores` and contain only 0 and 1.
    pub fn bce_with_logits(&mut self, scores: Var, targets: &Tensor) -> Result<Var> {
        let s = self.value(scores);
        if s.shape() != targets.shape() {
            return Err(Error::Shape {
                op: "bce_with_logits",
                left: s.shape().to_vec(),
                right: targets.shape().to_vec(),
            });
        }
        let loss = bce_with_logits_value(s, targets)?;
        let out = Tensor::from_parts(Vec::new(), vec![loss], "bce_with_logits")?;
        let tracked = self.tracked(scores);
        Ok(self.push(
            out,
            Op::BceWithLogits {
                scores,
                targets: targets.data().to_vec(),
            },
            tracked,
        ))
    }

    fn zip_same_shape(
        &self,
        op: &'static str,
        a: Var,
        b: Var,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Tensor> {
        let (x, y) = (self.value(a), self.value(b));
        if x.shape() != y.shape() {
            return Err(Error::Shape {
                op,
                left: x.shape().to_vec(),
                right: y.shape().to_vec(),
            });
        }
        let data = x.data().iter().zip(y.data()).map(|(&p, &q)| f(p, q)).collect();
        Tensor::from_parts(x.shape().to_vec(), data, op)
    }

    /// Reverse sweep from a scalar `loss`. Consumes the tape.
    pub fn backward(self, loss: Var) -> Result<Gradients> {
        let node = self
            .nodes
            .get(loss.0)
            .ok_or_else(|| Error::Usage(format!("variable {} is not on this tape", loss.0)))?;
        if node.value.len() != 1 {
            return Err(Error::Usage(format!(
                "backward needs a scalar, got shape {:?}",
                node.value.shape()
            )));
        }
        if !node.tracked {
            return Err(Error::Usage(
                "backward through a value that depends on no tracked tensor".into(),
            ));
        }

        let mut adj: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        adj[loss.0] = Some(vec![1.0]);

        for idx in (0..=loss.0).rev() {
            let Some(g) = adj[idx].take() else { continue };
            let node = &self.nodes[idx];
            if !node.tracked {
                continue;
            }
            ensure_finite("backward", &g)?;
            match &node.op {
                Op::Leaf => {
                    adj[idx] = Some(g);
                }
                Op::MatMul(a, b) => {
                    let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                    let (m, k) = (va.shape()[0], va.shape()[1]);
                    let n = vb.shape()[1];
                    if self.tracked(*a) {
                        // dA = G · Bᵀ
                        let bt = transpose_kernel(vb.data(), k, n);
                        accumulate(&mut adj[a.0], gemm(&g, &bt, m, n, k));
                    }
                    if self.tracked(*b) {
                        // dB = Aᵀ · G
                        let at = transpose_kernel(va.data(), m, k);
                        accumulate(&mut adj[b.0], gemm(&at, &g, k, m, n));
                    }
                }
                Op::Transpose(a) => {
                    let shape = node.value.shape();
                    accumulate(&mut adj[a.0], transpose_kernel(&g, shape[0], shape[1]));
                }
                Op::LeakyRelu(a, slope) => {
                    let x = self.nodes[a.0].value.data();
                    let d = g
                        .iter()
                        .zip(x)
                        .map(|(&gi, &xi)| if xi > 0.0 { gi } else { gi * slope })
                        .collect();
                    accumulate(&mut adj[a.0], d);
                }
                Op::Sigmoid(a) => {
                    let y = node.value.data();
                    let d = g.iter().zip(y).map(|(&gi, &yi)| gi * yi * (1.0 - yi)).collect();
                    accumulate(&mut adj[a.0], d);
                }
                Op::MaxPool { input, argmax } => {
                    let mut d = vec![0.0; self.nodes[input.0].value.len()];
                    for (&pos, &gi) in argmax.iter().zip(&g) {
                        d[pos] += gi;
                    }
                    accumulate(&mut adj[input.0], d);
                }
                Op::Add(a, b) => {
                    if self.tracked(*a) {
                        accumulate(&mut adj[a.0], g.clone());
                    }
                    if self.tracked(*b) {
                        accumulate(&mut adj[b.0], g);
                    }
                }
                Op::Mul(a, b) => {
                    let (va, vb) = (self.nodes[a.0].value.data(), self.nodes[b.0].value.data());
                    if self.tracked(*a) {
                        accumulate(&mut adj[a.0], g.iter().zip(vb).map(|(x, y)| x * y).collect());
                    }
                    if self.tracked(*b) {
                        accumulate(&mut adj[b.0], g.iter().zip(va).map(|(x, y)| x * y).collect());
                    }
                }
                Op::Sum(a) => {
                    let n = self.nodes[a.0].value.len();
                    accumulate(&mut adj[a.0], vec![g[0]; n]);
                }
                Op::BceWithLogits { scores, targets } => {
                    let s = &self.nodes[scores.0].value;
                    let scale = g[0] / s.rows() as f64;
                    let d = s
                        .data()
                        .iter()
                        .zip(targets)
                        .map(|(&si, &yi)| scale * (sigmoid_scalar(si) - yi))
                        .collect();
                    accumulate(&mut adj[scores.0], d);
                }
            }
        }

        let grads = self
            .nodes
            .iter()
            .zip(adj)
            .map(|(node, g)| match (&node.op, g) {
                (Op::Leaf, Some(g)) if node.tracked => {
                    Tensor::from_parts(node.value.shape().to_vec(), g, "backward").map(Some)
                }
                (Op::Leaf, None) if node.tracked => {
                    Tensor::zeros(node.value.shape().to_vec()).map(Some)
                }
                _ => Ok(None),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Gradients { grads })
    }
}

fn accumulate(slot: &mut Option<Vec<f64>>, delta: Vec<f64>) {
    match slot {
        Some(acc) => acc.iter_mut().zip(delta).for_each(|(a, d)| *a += d),
        None => *slot = Some(delta),
    }
}

/// Numerically stable `Σ_c [max(s,0) − s·y + ln(1 + e^{−|s|})]`, averaged over rows.
pub(crate) fn bce_with_logits_value(scores: &Tensor, targets: &Tensor) -> Result<f64> {
    let mut total = 0.0;
    for (&s, &y) in scores.data().iter().zip(targets.data()) {
        if y != 0.0 && y != 1.0 {
            return Err(Error::Data(format!("target {y} is not in {{0, 1}}")));
        }
        total += s.max(0.0) - s * y + libm::log1p(libm::exp(-s.abs()));
    }
    let loss = total / scores.rows() as f64;
    ensure_finite("bce_with_logits", &[loss])?;
    Ok(loss)
}
