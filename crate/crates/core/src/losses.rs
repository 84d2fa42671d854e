//! Logits-level distillation losses: temperature-scaled KL over the audio
//! and response segments, cross-entropy against the true labels, and the
//! composed total objective. Every loss returns an analytic gradient with
//! respect to the student's raw logits.

use crate::attention::{Segment, SegmentSpans};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Floor applied to probabilities inside KL logarithms; prevents -inf
/// without measurably moving gradients at 64-bit precision.
pub const PROB_FLOOR: f64 = 1e-12;

/// Direction of the segment KL: Forward = KL(teacher || student),
/// Reverse = KL(student || teacher).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KlDirection {
    Forward,
    Reverse,
}

/// A logits matrix partitioned into audio / prompt / response spans.
/// Prompt rows exist but are never distilled; `Segment` cannot name them.
#[derive(Debug, Clone)]
pub struct SegmentedLogits {
    logits: Tensor,
    spans: SegmentSpans,
}

impl SegmentedLogits {
    pub fn new(logits: Tensor, spans: SegmentSpans) -> Result<Self> {
        if logits.rank() != 2 {
            return Err(Error::InvalidShape {
                dims: logits.dims().to_vec(),
                reason: "logits must be 2-d (positions x vocabulary)".into(),
            });
        }
        if logits.rows() != spans.total() {
            return Err(Error::ShapeMismatch {
                op: "SegmentedLogits",
                left: logits.dims().to_vec(),
                right: vec![spans.total()],
            });
        }
        if logits.cols() < 2 {
            return Err(Error::InvalidArgument {
                context: "SegmentedLogits",
                reason: format!("vocabulary size must be at least 2, got {}", logits.cols()),
            });
        }
        Ok(SegmentedLogits { logits, spans })
    }

    pub fn logits(&self) -> &Tensor {
        &self.logits
    }

    pub fn spans(&self) -> SegmentSpans {
        self.spans
    }

    pub fn vocab(&self) -> usize {
        self.logits.cols()
    }
}

/// Response token ids, validated against a vocabulary size.
#[derive(Debug, Clone)]
pub struct LabelSequence {
    ids: Vec<usize>,
    vocab: usize,
}

impl LabelSequence {
    pub fn new(ids: Vec<usize>, vocab: usize) -> Result<Self> {
        for &id in &ids {
            if id >= vocab {
                return Err(Error::LabelOutOfRange { label: id, vocab });
            }
        }
        Ok(LabelSequence { ids, vocab })
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Temperature softmax over one logits row, computed with max-subtraction.
pub(crate) fn softmax_row(z: &[f64], t: f64) -> Vec<f64> {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = z.iter().map(|&v| ((v - max) / t).exp()).collect();
    let sum: f64 = out.iter().sum();
    for v in &mut out {
        *v /= sum;
    }
    out
}

/// `P(k) = exp(z_k / t) / sum_j exp(z_j / t)` for a 1-d logits tensor.
pub fn temp_softmax(z: &Tensor, t: f64) -> Result<Tensor> {
    if z.rank() != 1 {
        return Err(Error::InvalidShape {
            dims: z.dims().to_vec(),
            reason: "temp_softmax expects a 1-d logits vector".into(),
        });
    }
    if !(t > 0.0) {
        return Err(Error::InvalidArgument {
            context: "temp_softmax",
            reason: format!("temperature must be positive, got {t}"),
        });
    }
    Tensor::new(z.dims(), softmax_row(z.data(), t))
}

fn validate_distribution(p: &Tensor, name: &'static str) -> Result<()> {
    if p.rank() != 1 {
        return Err(Error::InvalidShape {
            dims: p.dims().to_vec(),
            reason: format!("{name} must be a 1-d probability vector"),
        });
    }
    if p.data().iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidArgument {
            context: "forward_kl",
            reason: format!("{name} has negative entries"),
        });
    }
    let sum: f64 = p.data().iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidArgument {
            context: "forward_kl",
            reason: format!("{name} sums to {sum}, expected 1"),
        });
    }
    Ok(())
}

/// KL over probability slices; terms with p_k = 0 contribute nothing and
/// the denominator is floored at `PROB_FLOOR`.
fn kl_slice(p: &[f64], q: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&pk, &qk) in p.iter().zip(q) {
        if pk > 0.0 {
            acc += pk * (pk / qk.max(PROB_FLOOR)).ln();
        }
    }
    acc
}

/// `KL(p || q)` between two explicit probability vectors.
pub fn forward_kl(p: &Tensor, q: &Tensor) -> Result<f64> {
    validate_distribution(p, "p")?;
    validate_distribution(q, "q")?;
    if p.len() != q.len() {
        return Err(Error::ShapeMismatch {
            op: "forward_kl",
            left: p.dims().to_vec(),
            right: q.dims().to_vec(),
        });
    }
    Ok(kl_slice(p.data(), q.data()))
}

/// Per-position temperature KL between teacher and student over a segment,
/// averaged across the segment's positions. Returns the loss and its
/// analytic gradient with respect to the student's raw logits in that
/// segment (`segment_len x V`).
pub fn segment_kl_loss(
    teacher: &SegmentedLogits,
    student: &SegmentedLogits,
    segment: Segment,
    t: f64,
    direction: KlDirection,
) -> Result<(f64, Tensor)> {
    if teacher.logits.dims() != student.logits.dims() || teacher.spans != student.spans {
        return Err(Error::ShapeMismatch {
            op: "segment_kl_loss",
            left: teacher.logits.dims().to_vec(),
            right: student.logits.dims().to_vec(),
        });
    }
    if !(t > 0.0) {
        return Err(Error::InvalidArgument {
            context: "segment_kl_loss",
            reason: format!("temperature must be positive, got {t}"),
        });
    }
    let range = teacher.spans.segment_range(segment);
    let n = range.len();
    let v = teacher.vocab();
    let mut grad = Tensor::zeros(&[n, v]);
    let mut total = 0.0;
    for (k, i) in range.enumerate() {
        let p = softmax_row(teacher.logits.row(i), t);
        let q = softmax_row(student.logits.row(i), t);
        match direction {
            KlDirection::Forward => {
                total += kl_slice(&p, &q);
                let row = grad.row_mut(k);
                for j in 0..v {
                    row[j] = (q[j] - p[j]) / t;
                }
            }
            KlDirection::Reverse => {
                let kl = kl_slice(&q, &p);
                total += kl;
                let row = grad.row_mut(k);
                for j in 0..v {
                    let log_ratio = (q[j] / p[j].max(PROB_FLOOR)).ln();
                    row[j] = q[j] * (log_ratio - kl) / t;
                }
            }
        }
    }
    let scale = 1.0 / n as f64;
    grad.scale(scale);
    Ok((total * scale, grad))
}

/// Cross-entropy of the student's response logits against the true token
/// ids, summed over response positions (temperature fixed at 1). Gradient
/// per position is `softmax(z_i) - onehot(y_i)`.
pub fn cross_entropy(
    student: &SegmentedLogits,
    labels: &LabelSequence,
) -> Result<(f64, Tensor)> {
    let range = student.spans.response_range();
    if labels.len() != range.len() {
        return Err(Error::ShapeMismatch {
            op: "cross_entropy",
            left: vec![labels.len()],
            right: vec![range.len()],
        });
    }
    if labels.vocab != student.vocab() {
        return Err(Error::ShapeMismatch {
            op: "cross_entropy",
            left: vec![labels.vocab],
            right: vec![student.vocab()],
        });
    }
    let v = student.vocab();
    let mut grad = Tensor::zeros(&[range.len(), v]);
    let mut total = 0.0;
    for (k, i) in range.enumerate() {
        let p = softmax_row(student.logits.row(i), 1.0);
        let y = labels.ids[k];
        total -= p[y].max(PROB_FLOOR).ln();
        let row = grad.row_mut(k);
        row.copy_from_slice(&p);
        row[y] -= 1.0;
    }
    Ok((total, grad))
}

/// The four loss components, their coefficients, and the composed total.
#[derive(Debug, Clone, Copy)]
pub struct LossBundle {
    pub ce: f64,
    pub dp: f64,
    pub da: f64,
    pub dr: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub temperature: f64,
    pub total: f64,
}

/// Compose `total = ce + alpha * dp + beta * da + gamma * dr`.
#[allow(clippy::too_many_arguments)]
pub fn total_loss(
    ce: f64,
    dp: f64,
    da: f64,
    dr: f64,
    alpha: f64,
    beta: f64,
    gamma: f64,
    temperature: f64,
) -> Result<LossBundle> {
    for (name, value) in [
        ("ce", ce),
        ("dp", dp),
        ("da", da),
        ("dr", dr),
        ("alpha", alpha),
        ("beta", beta),
        ("gamma", gamma),
        ("temperature", temperature),
    ] {
        if !value.is_finite() {
            return Err(Error::NonFiniteLoss {
                component: name,
                value,
            });
        }
    }
    Ok(LossBundle {
        ce,
        dp,
        da,
        dr,
        alpha,
        beta,
        gamma,
        temperature,
        total: ce + alpha * dp + beta * da + gamma * dr,
    })
}
