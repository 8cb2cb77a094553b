//! Dense row-major `f64` tensors and the kernels the model needs.
//!
//! The eager functions in this module ([`matmul`], [`leaky_relu`], [`sigmoid`],
//! [`global_max_pool`]) compute values only. The same kernels are recorded on
//! a [`Tape`] when gradients are required.

mod tape;

pub use tape::{Gradients, Tape, Var};
pub(crate) use tape::bce_with_logits_value;

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Dense row-major array of finite 64-bit reals.
///
/// A rank-0 tensor (empty shape) holds exactly one element.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
    requires_grad: bool,
}

impl Tensor {
    /// Builds a tensor, checking that `data` fills `shape` and is finite.
    pub fn new(shape: impl Into<Vec<usize>>, data: Vec<f64>) -> Result<Self> {
        let shape = shape.into();
        if shape.contains(&0) {
            return Err(Error::Config(alloc::format!(
                "tensor dimensions must be positive, got {shape:?}"
            )));
        }
        let expected = shape.iter().product::<usize>();
        if data.len() != expected {
            return Err(Error::Length {
                expected,
                got: data.len(),
            });
        }
        ensure_finite("tensor", &data)?;
        Ok(Self {
            shape,
            data,
            requires_grad: false,
        })
    }

    pub fn scalar(value: f64) -> Result<Self> {
        Self::new(Vec::new(), vec![value])
    }

    pub fn zeros(shape: impl Into<Vec<usize>>) -> Result<Self> {
        let shape = shape.into();
        let n = shape.iter().product();
        Self::new(shape, vec![0.0; n])
    }

    /// `n × n` identity.
    pub fn eye(n: usize) -> Result<Self> {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self::new([n, n], data)
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::Shape {
                    op: "from_rows",
                    left: vec![cols],
                    right: vec![row.len()],
                });
            }
            data.extend_from_slice(row);
        }
        Self::new([rows.len(), cols], data)
    }

    /// Marks the tensor as a differentiation target when placed on a tape.
    pub fn with_grad(mut self) -> Self {
        self.requires_grad = true;
        self
    }

    pub fn requires_grad(&self) -> bool {
        self.requires_grad
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Scalar value of a one-element tensor.
    pub fn item(&self) -> Option<f64> {
        (self.data.len() == 1).then(|| self.data[0])
    }

    pub fn rows(&self) -> usize {
        self.shape.first().copied().unwrap_or(1)
    }

    pub fn cols(&self) -> usize {
        if self.shape.len() >= 2 {
            self.shape[1]
        } else {
            1
        }
    }

    /// Element `(i, j)` of a matrix.
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols() + j]
    }

    /// Row `i` of a matrix as a slice.
    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn transpose(&self) -> Result<Tensor> {
        let (m, n) = self.matrix_dims("transpose")?;
        Tensor::new([n, m], transpose_kernel(&self.data, m, n))
    }

    /// Selects matrix rows in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Tensor> {
        let (m, n) = self.matrix_dims("select_rows")?;
        let mut data = Vec::with_capacity(indices.len() * n);
        for &i in indices {
            if i >= m {
                return Err(Error::Usage(alloc::format!(
                    "row {i} out of range for {m} rows"
                )));
            }
            data.extend_from_slice(&self.data[i * n..(i + 1) * n]);
        }
        Tensor::new([indices.len(), n], data)
    }

    pub(crate) fn matrix_dims(&self, op: &'static str) -> Result<(usize, usize)> {
        if self.shape.len() != 2 {
            return Err(Error::Shape {
                op,
                left: self.shape.clone(),
                right: vec![],
            });
        }
        Ok((self.shape[0], self.shape[1]))
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Constructor for kernel outputs whose shape is known to be valid.
    pub(crate) fn from_parts(shape: Vec<usize>, data: Vec<f64>, op: &'static str) -> Result<Self> {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        ensure_finite(op, &data)?;
        Ok(Self {
            shape,
            data,
            requires_grad: false,
        })
    }
}

pub(crate) fn ensure_finite(op: &'static str, data: &[f64]) -> Result<()> {
    if data.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { op })
    }
}

/// Matrix product `a · b`.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (m, k) = a.matrix_dims("matmul")?;
    let (k2, n) = b.matrix_dims("matmul")?;
    if k != k2 {
        return Err(Error::Shape {
            op: "matmul",
            left: a.shape.clone(),
            right: b.shape.clone(),
        });
    }
    Tensor::from_parts(vec![m, n], gemm(&a.data, &b.data, m, k, n), "matmul")
}

/// Elementwise `max(x, slope·x)`.
pub fn leaky_relu(x: &Tensor, slope: f64) -> Result<Tensor> {
    check_slope(slope)?;
    let data = x.data.iter().map(|&v| leaky(v, slope)).collect();
    Tensor::from_parts(x.shape.clone(), data, "leaky_relu")
}

/// Elementwise logistic function.
pub fn sigmoid(x: &Tensor) -> Result<Tensor> {
    let data = x.data.iter().map(|&v| sigmoid_scalar(v)).collect();
    Tensor::from_parts(x.shape.clone(), data, "sigmoid")
}

/// Reduces a `D×h×w` feature map to a `D`-vector of per-channel maxima.
pub fn global_max_pool(map: &Tensor) -> Result<Tensor> {
    let (values, _) = max_pool_kernel(map)?;
    Tensor::from_parts(vec![values.len()], values, "global_max_pool")
}

pub(crate) fn check_slope(slope: f64) -> Result<()> {
    if (0.0..1.0).contains(&slope) {
        Ok(())
    } else {
        Err(Error::Config(alloc::format!(
            "leaky relu slope must lie in [0, 1), got {slope}"
        )))
    }
}

#[inline]
pub(crate) fn leaky(v: f64, slope: f64) -> f64 {
    if v >= 0.0 {
        v
    } else {
        slope * v
    }
}

/// Overflow-safe logistic function.
#[inline]
pub fn sigmoid_scalar(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// Per-channel maxima and the flat argmax index (first occurrence) of each.
pub(crate) fn max_pool_kernel(map: &Tensor) -> Result<(Vec<f64>, Vec<usize>)> {
    if map.rank() != 3 {
        return Err(Error::Shape {
            op: "global_max_pool",
            left: map.shape.clone(),
            right: vec![],
        });
    }
    let channels = map.shape[0];
    let cell = map.shape[1] * map.shape[2];
    let mut values = Vec::with_capacity(channels);
    let mut argmax = Vec::with_capacity(channels);
    for c in 0..channels {
        let plane = &map.data[c * cell..(c + 1) * cell];
        let mut best = 0;
        for (i, &v) in plane.iter().enumerate().skip(1) {
            if v > plane[best] {
                best = i;
            }
        }
        values.push(plane[best]);
        argmax.push(c * cell + best);
    }
    Ok((values, argmax))
}

/// Row-major `m×k · k×n` product, accumulated in i-k-j order.
pub(crate) fn gemm(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let out_row = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let aip = a[i * k + p];
            if aip == 0.0 {
                continue;
            }
            let b_row = &b[p * n..(p + 1) * n];
            for (o, &bv) in out_row.iter_mut().zip(b_row) {
                *o += aip * bv;
            }
        }
    }
    out
}

pub(crate) fn transpose_kernel(a: &[f64], m: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            out[j * m + i] = a[i * n + j];
        }
    }
    out
}
