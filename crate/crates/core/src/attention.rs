//! Per-token importance weights extracted from a teacher attention map.
//!
//! The weights are the head-averaged attention scores from the response
//! query position(s) to the audio tokens, normalized to sum to one.

use crate::error::{Error, Result};
use crate::tensor::Tensor;
use std::ops::Range;

/// The two logits segments that participate in distillation. Prompt tokens
/// are deliberately not representable here.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segment {
    Audio,
    Response,
}

/// Contiguous audio / prompt / response spans covering a sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentSpans {
    audio_len: usize,
    prompt_len: usize,
    response_len: usize,
}

impl SegmentSpans {
    pub fn new(audio_len: usize, prompt_len: usize, response_len: usize) -> Result<Self> {
        if audio_len == 0 || response_len == 0 {
            return Err(Error::InvalidArgument {
                context: "SegmentSpans",
                reason: format!(
                    "audio and response spans must be non-empty (got L_a={audio_len}, L_r={response_len})"
                ),
            });
        }
        Ok(SegmentSpans {
            audio_len,
            prompt_len,
            response_len,
        })
    }

    pub fn audio_len(&self) -> usize {
        self.audio_len
    }

    pub fn prompt_len(&self) -> usize {
        self.prompt_len
    }

    pub fn response_len(&self) -> usize {
        self.response_len
    }

    pub fn total(&self) -> usize {
        self.audio_len + self.prompt_len + self.response_len
    }

    pub fn audio_range(&self) -> Range<usize> {
        0..self.audio_len
    }

    pub fn prompt_range(&self) -> Range<usize> {
        self.audio_len..self.audio_len + self.prompt_len
    }

    pub fn response_range(&self) -> Range<usize> {
        self.audio_len + self.prompt_len..self.total()
    }

    pub fn segment_range(&self, segment: Segment) -> Range<usize> {
        match segment {
            Segment::Audio => self.audio_range(),
            Segment::Response => self.response_range(),
        }
    }
}

/// Post-softmax attention scores, `heads x L x L`, rows are query positions.
#[derive(Debug, Clone)]
pub struct AttentionMap {
    scores: Tensor,
}

/// Row-sum tolerance for validating post-softmax attention.
const ROW_SUM_TOL: f64 = 1e-6;

impl AttentionMap {
    pub fn new(scores: Tensor) -> Result<Self> {
        if scores.rank() != 3 || scores.dims()[1] != scores.dims()[2] {
            return Err(Error::InvalidShape {
                dims: scores.dims().to_vec(),
                reason: "attention map must be heads x L x L".into(),
            });
        }
        if scores.data().iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::InvalidArgument {
                context: "AttentionMap",
                reason: "entries must lie in [0, 1] (post-softmax scores)".into(),
            });
        }
        let (heads, len) = (scores.dims()[0], scores.dims()[1]);
        for h in 0..heads {
            for q in 0..len {
                let sum: f64 = (0..len).map(|k| scores.at3(h, q, k)).sum();
                if (sum - 1.0).abs() > ROW_SUM_TOL {
                    return Err(Error::InvalidArgument {
                        context: "AttentionMap",
                        reason: format!("row (head {h}, query {q}) sums to {sum}, expected 1"),
                    });
                }
            }
        }
        Ok(AttentionMap { scores })
    }

    pub fn heads(&self) -> usize {
        self.scores.dims()[0]
    }

    pub fn seq_len(&self) -> usize {
        self.scores.dims()[1]
    }

    pub fn scores(&self) -> &Tensor {
        &self.scores
    }
}

/// Which query row(s) supply the raw attention scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryPolicy {
    /// The first response position. The natural choice when the response is
    /// a single token.
    #[default]
    FirstResponseToken,
    /// Mean over all response positions, for multi-token responses.
    MeanOverResponseTokens,
}

/// Normalized per-audio-token importance weights: non-negative, sum 1.
#[derive(Debug, Clone)]
pub struct TokenWeights {
    w: Tensor,
}

const WEIGHT_SUM_TOL: f64 = 1e-9;

impl TokenWeights {
    pub fn new(w: Tensor) -> Result<Self> {
        if w.rank() != 1 {
            return Err(Error::InvalidShape {
                dims: w.dims().to_vec(),
                reason: "token weights must be 1-d".into(),
            });
        }
        if w.data().iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidArgument {
                context: "TokenWeights",
                reason: "weights must be non-negative".into(),
            });
        }
        let sum: f64 = w.data().iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidArgument {
                context: "TokenWeights",
                reason: format!("weights sum to {sum}, expected 1"),
            });
        }
        Ok(TokenWeights { w })
    }

    /// Uniform weights 1/len.
    pub fn uniform(len: usize) -> Self {
        let mut t = Tensor::zeros(&[len]);
        let v = 1.0 / len as f64;
        for x in t.data_mut() {
            *x = v;
        }
        TokenWeights { w: t }
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        self.w.data()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.w.data()[i]
    }
}

/// Head-averaged attention from the response query position(s) to the audio
/// tokens. Returns the raw (unnormalized) score vector over the audio span.
pub fn extract_raw_scores(
    map: &AttentionMap,
    spans: &SegmentSpans,
    policy: QueryPolicy,
) -> Result<Tensor> {
    if spans.total() != map.seq_len() {
        return Err(Error::ShapeMismatch {
            op: "extract_raw_scores",
            left: vec![spans.total()],
            right: vec![map.seq_len()],
        });
    }
    let queries: Vec<usize> = match policy {
        QueryPolicy::FirstResponseToken => vec![spans.response_range().start],
        QueryPolicy::MeanOverResponseTokens => spans.response_range().collect(),
    };
    if queries.is_empty() {
        return Err(Error::InvalidArgument {
            context: "extract_raw_scores",
            reason: "response span is empty".into(),
        });
    }
    let heads = map.heads();
    let denom = (heads * queries.len()) as f64;
    let mut out = Tensor::zeros(&[spans.audio_len()]);
    for (j, slot) in spans.audio_range().zip(out.data_mut().iter_mut()) {
        let mut acc = 0.0;
        for h in 0..heads {
            for &q in &queries {
                acc += map.scores().at3(h, q, j);
            }
        }
        *slot = acc / denom;
    }
    Ok(out)
}

/// Divide a non-negative score vector by its sum: `w_i = a_i / sum(a)`.
pub fn normalize_weights(a: &Tensor) -> Result<TokenWeights> {
    if a.rank() != 1 {
        return Err(Error::InvalidShape {
            dims: a.dims().to_vec(),
            reason: "raw scores must be 1-d".into(),
        });
    }
    if a.data().iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidArgument {
            context: "normalize_weights",
            reason: "raw scores must be non-negative".into(),
        });
    }
    let sum: f64 = a.data().iter().sum();
    if sum <= 0.0 {
        return Err(Error::ZeroAttentionMass);
    }
    let mut w = a.clone();
    for v in w.data_mut() {
        *v /= sum;
    }
    TokenWeights::new(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    /// Build a valid random attention map: softmax over uniform noise.
    fn random_map(rng: &mut Rng, heads: usize, len: usize) -> AttentionMap {
        let mut scores = Tensor::zeros(&[heads, len, len]);
        for h in 0..heads {
            for q in 0..len {
                let raw: Vec<f64> = (0..len).map(|_| rng.next_f64()).collect();
                let sum: f64 = raw.iter().sum();
                for (k, &r) in raw.iter().enumerate() {
                    scores.set3(h, q, k, r / sum);
                }
            }
        }
        AttentionMap::new(scores).unwrap()
    }

    fn map_from_single_row(heads: usize, len: usize, query: usize, row: &[f64]) -> AttentionMap {
        let uniform = 1.0 / len as f64;
        let mut scores = Tensor::zeros(&[heads, len, len]);
        for h in 0..heads {
            for q in 0..len {
                for k in 0..len {
                    let v = if q == query { row[k] } else { uniform };
                    scores.set3(h, q, k, v);
                }
            }
        }
        AttentionMap::new(scores).unwrap()
    }

    #[test]
    fn single_head_single_response_selects_audio_columns() {
        let spans = SegmentSpans::new(3, 1, 1).unwrap();
        let row = [0.2, 0.3, 0.5, 0.0, 0.0];
        let map = map_from_single_row(1, 5, spans.response_range().start, &row);
        let a = extract_raw_scores(&map, &spans, QueryPolicy::FirstResponseToken).unwrap();
        assert_eq!(a.data(), &[0.2, 0.3, 0.5]);
    }

    #[test]
    fn identical_heads_average_to_one_head() {
        let spans = SegmentSpans::new(3, 1, 1).unwrap();
        let row = [0.1, 0.4, 0.3, 0.1, 0.1];
        let one = map_from_single_row(1, 5, spans.response_range().start, &row);
        let two = map_from_single_row(2, 5, spans.response_range().start, &row);
        let a1 = extract_raw_scores(&one, &spans, QueryPolicy::FirstResponseToken).unwrap();
        let a2 = extract_raw_scores(&two, &spans, QueryPolicy::FirstResponseToken).unwrap();
        for (x, y) in a1.data().iter().zip(a2.data()) {
            assert!((x - y).abs() <= 1e-15);
        }
    }

    #[test]
    fn mean_over_response_matches_double_mean_oracle() {
        let mut rng = Rng::seed_from_u64(17);
        let spans = SegmentSpans::new(4, 2, 2).unwrap();
        let map = random_map(&mut rng, 4, spans.total());
        let got = extract_raw_scores(&map, &spans, QueryPolicy::MeanOverResponseTokens).unwrap();

        // Oracle: explicit mean over heads, then mean over query rows.
        for j in 0..spans.audio_len() {
            let mut per_query = Vec::new();
            for q in spans.response_range() {
                let head_mean: f64 = (0..map.heads())
                    .map(|h| map.scores().at3(h, q, j))
                    .sum::<f64>()
                    / map.heads() as f64;
                per_query.push(head_mean);
            }
            let want = per_query.iter().sum::<f64>() / per_query.len() as f64;
            assert!((got.data()[j] - want).abs() <= 1e-12);
        }
    }

    #[test]
    fn normalize_basic() {
        let a = Tensor::new(&[3], vec![2.0, 3.0, 5.0]).unwrap();
        let w = normalize_weights(&a).unwrap();
        assert_eq!(w.values(), &[0.2, 0.3, 0.5]);
    }

    #[test]
    fn normalize_is_fixed_point_on_normalized_input() {
        let a = Tensor::new(&[4], vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let w = normalize_weights(&a).unwrap();
        for (x, y) in w.values().iter().zip(a.data()) {
            assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn normalize_sums_to_one_and_preserves_argmax() {
        let mut rng = Rng::seed_from_u64(4);
        let mut a = Tensor::zeros(&[16]);
        for v in a.data_mut() {
            *v = 0.01 + rng.next_f64();
        }
        let argmax_before = a
            .data()
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.partial_cmp(y.1).unwrap())
            .unwrap()
            .0;
        let w = normalize_weights(&a).unwrap();
        let sum: f64 = w.values().iter().sum();
        assert!((sum - 1.0).abs() <= 1e-12);
        let argmax_after = w
            .values()
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.partial_cmp(y.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(argmax_before, argmax_after);
    }

    #[test]
    fn normalize_rejects_zero_mass() {
        let a = Tensor::zeros(&[3]);
        let err = normalize_weights(&a).unwrap_err();
        assert!(err.to_string().contains("no attention mass"));
    }

    #[test]
    fn normalize_is_scale_invariant() {
        let mut rng = Rng::seed_from_u64(6);
        let mut a = Tensor::zeros(&[8]);
        for v in a.data_mut() {
            *v = rng.next_f64() + 0.05;
        }
        let w1 = normalize_weights(&a).unwrap();
        let w2 = normalize_weights(&a.scaled(37.5)).unwrap();
        for (x, y) in w1.values().iter().zip(w2.values()) {
            assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn extraction_preserves_ordering_and_weight_invariants() {
        let mut rng = Rng::seed_from_u64(8);
        for _ in 0..50 {
            let spans = SegmentSpans::new(2 + rng.below(6), rng.below(3), 1 + rng.below(2)).unwrap();
            let map = random_map(&mut rng, 1 + rng.below(4), spans.total());
            let a = extract_raw_scores(&map, &spans, QueryPolicy::FirstResponseToken).unwrap();
            let w = normalize_weights(&a).unwrap();
            let sum: f64 = w.values().iter().sum();
            assert!((sum - 1.0).abs() <= 1e-9);
            assert!(w.values().iter().all(|&v| v >= 0.0));
            // strict ordering carries over from raw scores to weights
            for i in 0..a.len() {
                for j in 0..a.len() {
                    if a.data()[i] > a.data()[j] {
                        assert!(w.get(i) > w.get(j));
                    }
                }
            }
        }
    }

    #[test]
    fn attention_map_validation() {
        // bad row sums
        let t = Tensor::new(&[1, 2, 2], vec![0.5, 0.4, 0.5, 0.5]).unwrap();
        assert!(AttentionMap::new(t).is_err());
        // negative entry
        let t = Tensor::new(&[1, 2, 2], vec![1.1, -0.1, 0.5, 0.5]).unwrap();
        assert!(AttentionMap::new(t).is_err());
        // wrong rank
        let t = Tensor::new(&[2, 2], vec![0.5, 0.5, 0.5, 0.5]).unwrap();
        assert!(AttentionMap::new(t).is_err());
    }

    #[test]
    fn spans_require_audio_and_response() {
        assert!(SegmentSpans::new(0, 1, 1).is_err());
        assert!(SegmentSpans::new(1, 0, 0).is_err());
        assert!(SegmentSpans::new(1, 0, 1).is_ok());
    }

    #[test]
    fn extract_rejects_mismatched_lengths() {
        let mut rng = Rng::seed_from_u64(9);
        let map = random_map(&mut rng, 1, 6);
        let spans = SegmentSpans::new(3, 1, 1).unwrap(); // total 5 != 6
        assert!(extract_raw_scores(&map, &spans, QueryPolicy::FirstResponseToken).is_err());
    }
}
