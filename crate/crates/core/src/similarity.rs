//! Linear CKA, attention-weighted CKA, and the projector distillation loss
//! with its analytic gradient.
//!
//! Weighting is applied to the raw embeddings first, then each feature is
//! centered along the token dimension; the similarity is the normalized
//! Frobenius form
//!
//! ```text
//! CKA(X, Y) = ||Xc' Yc||_F^2 / (||Xc' Xc||_F * ||Yc' Yc||_F)
//! ```
//!
//! which is dimension-agnostic: the two inputs only need matching row
//! counts.

use crate::attention::TokenWeights;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Denominators below this trigger the zero-variance error instead of a
/// silent 0/0. No epsilon is ever added to the ratio itself.
const DEGENERACY_FLOOR: f64 = 1e-30;

/// A teacher/student embedding pair over the same token sequence. Feature
/// dimensions may differ; row counts may not.
#[derive(Debug, Clone, Copy)]
pub struct EmbeddingPair<'a> {
    teacher: &'a Tensor,
    student: &'a Tensor,
}

impl<'a> EmbeddingPair<'a> {
    pub fn new(teacher: &'a Tensor, student: &'a Tensor) -> Result<Self> {
        if teacher.rank() != 2 || student.rank() != 2 {
            return Err(Error::InvalidShape {
                dims: if teacher.rank() != 2 {
                    teacher.dims().to_vec()
                } else {
                    student.dims().to_vec()
                },
                reason: "embeddings must be 2-d (tokens x features)".into(),
            });
        }
        if teacher.rows() != student.rows() {
            return Err(Error::ShapeMismatch {
                op: "EmbeddingPair",
                left: teacher.dims().to_vec(),
                right: student.dims().to_vec(),
            });
        }
        if teacher.rows() < 2 {
            return Err(Error::InvalidArgument {
                context: "EmbeddingPair",
                reason: "need at least 2 tokens; centering a single row is degenerate".into(),
            });
        }
        Ok(EmbeddingPair { teacher, student })
    }

    pub fn teacher(&self) -> &Tensor {
        self.teacher
    }

    pub fn student(&self) -> &Tensor {
        self.student
    }

    pub fn token_count(&self) -> usize {
        self.teacher.rows()
    }
}

/// Subtract each column's mean: output column sums are zero.
pub fn center_columns(x: &Tensor) -> Result<Tensor> {
    if x.rank() != 2 {
        return Err(Error::InvalidShape {
            dims: x.dims().to_vec(),
            reason: "center_columns requires a 2-d tensor".into(),
        });
    }
    let (rows, cols) = (x.rows(), x.cols());
    let mut means = vec![0.0; cols];
    for i in 0..rows {
        for (j, m) in means.iter_mut().enumerate() {
            *m += x.at2(i, j);
        }
    }
    for m in &mut means {
        *m /= rows as f64;
    }
    let mut out = x.clone();
    for i in 0..rows {
        for (j, m) in means.iter().enumerate() {
            out.set2(i, j, x.at2(i, j) - m);
        }
    }
    Ok(out)
}

/// Scale row `i` by `w[i]`, broadcasting the scalar across all features of
/// that token.
pub fn apply_weights(x: &Tensor, w: &TokenWeights) -> Result<Tensor> {
    if x.rank() != 2 || x.rows() != w.len() {
        return Err(Error::ShapeMismatch {
            op: "apply_weights",
            left: x.dims().to_vec(),
            right: vec![w.len()],
        });
    }
    let mut out = x.clone();
    for i in 0..x.rows() {
        let wi = w.get(i);
        for v in out.row_mut(i) {
            *v *= wi;
        }
    }
    Ok(out)
}

struct CkaParts {
    cka: f64,
    num: f64,
    dx: f64,
    dy: f64,
    xc: Tensor,
    yc: Tensor,
}

fn cka_parts(x: &Tensor, y: &Tensor) -> Result<CkaParts> {
    if x.rank() != 2 || y.rank() != 2 || x.rows() != y.rows() {
        return Err(Error::ShapeMismatch {
            op: "linear_cka",
            left: x.dims().to_vec(),
            right: y.dims().to_vec(),
        });
    }
    let xc = center_columns(x)?;
    let yc = center_columns(y)?;
    let num = xc.transpose().matmul(&yc)?.squared_sum();
    let dx = xc.transpose().matmul(&xc)?.frobenius_norm();
    let dy = yc.transpose().matmul(&yc)?.frobenius_norm();
    if dx * dy < DEGENERACY_FLOOR {
        return Err(Error::DegenerateEmbedding {
            side: if dx <= dy { "left input" } else { "right input" },
        });
    }
    Ok(CkaParts {
        cka: num / (dx * dy),
        num,
        dx,
        dy,
        xc,
        yc,
    })
}

/// Linear centered kernel alignment between two representations of the same
/// token sequence. Value lies in [0, 1].
pub fn linear_cka(x: &Tensor, y: &Tensor) -> Result<f64> {
    Ok(cka_parts(x, y)?.cka)
}

/// Attention-weighted CKA: scale each token by its importance weight, then
/// compute linear CKA of the weighted embeddings.
pub fn awcka(pair: &EmbeddingPair<'_>, w: &TokenWeights) -> Result<f64> {
    let ht = apply_weights(pair.teacher(), w)?;
    let hs = apply_weights(pair.student(), w)?;
    linear_cka(&ht, &hs)
}

/// Projector distillation loss `1 - AwCKA` and its analytic gradient with
/// respect to the raw student embedding. The teacher embedding and the
/// weights are treated as constants.
pub fn pdist_loss(pair: &EmbeddingPair<'_>, w: &TokenWeights) -> Result<(f64, Tensor)> {
    let ht = apply_weights(pair.teacher(), w)?;
    let hs = apply_weights(pair.student(), w)?;
    let parts = cka_parts(&ht, &hs)?;
    let loss = 1.0 - parts.cka;

    // d(cka)/dYc = (2 / (dx dy)) * (Kx Yc - (num / dy^2) * Ky Yc), with
    // Kx = Xc Xc', Ky = Yc Yc'. Computed as Xc (Xc' Yc) and Yc (Yc' Yc) to
    // stay in feature-sized intermediates.
    let cross = parts.xc.transpose().matmul(&parts.yc)?; // E_T x E_S
    let kx_yc = parts.xc.matmul(&cross)?; // L x E_S
    let ygram = parts.yc.transpose().matmul(&parts.yc)?; // E_S x E_S
    let ky_yc = parts.yc.matmul(&ygram)?; // L x E_S

    let scale = 2.0 / (parts.dx * parts.dy);
    let ratio = parts.num / (parts.dy * parts.dy);
    let mut d_cka_d_yc = kx_yc;
    d_cka_d_yc.add_scaled(&ky_yc, -ratio);
    d_cka_d_yc.scale(scale);

    // loss = 1 - cka, chain through centering (self-adjoint) and the
    // per-row weighting.
    let mut grad = center_columns(&d_cka_d_yc.scaled(-1.0))?;
    for i in 0..grad.rows() {
        let wi = w.get(i);
        for v in grad.row_mut(i) {
            *v *= wi;
        }
    }
    Ok((loss, grad))
}
