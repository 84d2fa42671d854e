//! Dense row-major tensors of 1 to 3 dimensions, 64-bit floats throughout.
//!
//! Every reduction in this module runs in a fixed, documented order
//! (row-major, ascending inner index) so that repeated runs of the same
//! computation are bit-identical.

use crate::error::{Error, Result};

/// Dense row-major tensor. The single carrier type for embeddings, logits,
/// and attention maps.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

fn validate_dims(dims: &[usize]) -> Result<()> {
    if dims.is_empty() || dims.len() > 3 {
        return Err(Error::InvalidShape {
            dims: dims.to_vec(),
            reason: "tensors must have 1 to 3 dimensions".into(),
        });
    }
    if dims.iter().any(|&d| d == 0) {
        return Err(Error::InvalidShape {
            dims: dims.to_vec(),
            reason: "all dimensions must be positive".into(),
        });
    }
    Ok(())
}

impl Tensor {
    /// Build a tensor from validated external data. Rejects shape/length
    /// mismatches and non-finite entries.
    pub fn new(dims: &[usize], data: Vec<f64>) -> Result<Self> {
        validate_dims(dims)?;
        let expected: usize = dims.iter().product();
        if data.len() != expected {
            return Err(Error::DataLength {
                dims: dims.to_vec(),
                expected,
                got: data.len(),
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "tensor construction",
                index,
            });
        }
        Ok(Tensor {
            dims: dims.to_vec(),
            data,
        })
    }

    /// All-zero tensor. Panics on an invalid shape; shapes here come from
    /// already-validated configuration.
    pub fn zeros(dims: &[usize]) -> Self {
        validate_dims(dims).expect("invalid shape for zeros");
        Tensor {
            dims: dims.to_vec(),
            data: vec![0.0; dims.iter().product()],
        }
    }

    /// 2-d tensor from nested rows. Test and fixture convenience.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidShape {
                dims: vec![0],
                reason: "no rows".into(),
            });
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidShape {
                dims: vec![rows.len(), cols],
                reason: "ragged rows".into(),
            });
        }
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            data.extend_from_slice(r);
        }
        Tensor::new(&[rows.len(), cols], data)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
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

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Row count of a 2-d tensor.
    pub fn rows(&self) -> usize {
        assert_eq!(self.rank(), 2, "rows() requires a 2-d tensor");
        self.dims[0]
    }

    /// Column count of a 2-d tensor.
    pub fn cols(&self) -> usize {
        assert_eq!(self.rank(), 2, "cols() requires a 2-d tensor");
        self.dims[1]
    }

    #[inline]
    pub fn at2(&self, i: usize, j: usize) -> f64 {
        debug_assert_eq!(self.rank(), 2);
        self.data[i * self.dims[1] + j]
    }

    #[inline]
    pub fn set2(&mut self, i: usize, j: usize, v: f64) {
        debug_assert_eq!(self.rank(), 2);
        self.data[i * self.dims[1] + j] = v;
    }

    #[inline]
    pub fn at3(&self, a: usize, i: usize, j: usize) -> f64 {
        debug_assert_eq!(self.rank(), 3);
        self.data[(a * self.dims[1] + i) * self.dims[2] + j]
    }

    #[inline]
    pub fn set3(&mut self, a: usize, i: usize, j: usize, v: f64) {
        debug_assert_eq!(self.rank(), 3);
        self.data[(a * self.dims[1] + i) * self.dims[2] + j] = v;
    }

    /// Row `i` of a 2-d tensor as a slice.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        debug_assert_eq!(self.rank(), 2);
        let c = self.dims[1];
        &self.data[i * c..(i + 1) * c]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        debug_assert_eq!(self.rank(), 2);
        let c = self.dims[1];
        &mut self.data[i * c..(i + 1) * c]
    }

    /// Matrix product. Accumulates in f64 with k ascending per output
    /// element, so results are reproducible bit for bit.
    pub fn matmul(&self, other: &Tensor) -> Result<Tensor> {
        if self.rank() != 2 || other.rank() != 2 || self.dims[1] != other.dims[0] {
            return Err(Error::ShapeMismatch {
                op: "matmul",
                left: self.dims.clone(),
                right: other.dims.clone(),
            });
        }
        let (m, k, n) = (self.dims[0], self.dims[1], other.dims[1]);
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let a_row = &self.data[i * k..(i + 1) * k];
            let o_row = &mut out[i * n..(i + 1) * n];
            for (kk, &a) in a_row.iter().enumerate() {
                let b_row = &other.data[kk * n..(kk + 1) * n];
                for j in 0..n {
                    o_row[j] += a * b_row[j];
                }
            }
        }
        Ok(Tensor {
            dims: vec![m, n],
            data: out,
        })
    }

    /// Transpose of a 2-d tensor.
    pub fn transpose(&self) -> Tensor {
        assert_eq!(self.rank(), 2, "transpose requires a 2-d tensor");
        let (r, c) = (self.dims[0], self.dims[1]);
        let mut data = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                data[j * r + i] = self.data[i * c + j];
            }
        }
        Tensor {
            dims: vec![c, r],
            data,
        }
    }

    /// Square root of the sum of squared entries, summed in flat index order.
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Sum of squared entries (flat index order).
    pub fn squared_sum(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn scale(&mut self, c: f64) {
        for v in &mut self.data {
            *v *= c;
        }
    }

    pub fn scaled(&self, c: f64) -> Tensor {
        let mut out = self.clone();
        out.scale(c);
        out
    }

    /// `self += c * other`, shapes must match.
    pub fn add_scaled(&mut self, other: &Tensor, c: f64) {
        assert_eq!(self.dims, other.dims, "add_scaled shape mismatch");
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += c * b;
        }
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        if self.dims != other.dims {
            return Err(Error::ShapeMismatch {
                op: "add",
                left: self.dims.clone(),
                right: other.dims.clone(),
            });
        }
        let data = self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a + b)
            .collect();
        Ok(Tensor {
            dims: self.dims.clone(),
            data,
        })
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        if self.dims != other.dims {
            return Err(Error::ShapeMismatch {
                op: "sub",
                left: self.dims.clone(),
                right: other.dims.clone(),
            });
        }
        let data = self
            .data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a - b)
            .collect();
        Ok(Tensor {
            dims: self.dims.clone(),
            data,
        })
    }

    /// Identity matrix.
    pub fn identity(n: usize) -> Tensor {
        let mut t = Tensor::zeros(&[n, n]);
        for i in 0..n {
            t.set2(i, i, 1.0);
        }
        t
    }

    /// True if any entry is NaN or infinite.
    pub fn has_non_finite(&self) -> bool {
        self.data.iter().any(|v| !v.is_finite())
    }
}
