//! Distillation losses for audio-language models at desk scale: linear and
//! attention-weighted CKA over projector embeddings, temperature-scaled KL
//! over segmented logits, analytic gradients checked against a
//! finite-difference oracle, and a miniature teacher/student harness that
//! exercises the full objective end to end.

pub mod attention;
pub mod error;
pub mod gradcheck;
pub mod io;
pub mod losses;
pub mod metrics;
pub mod rng;
pub mod similarity;
pub mod tensor;
pub mod toy;

pub use attention::{
    extract_raw_scores, normalize_weights, AttentionMap, QueryPolicy, Segment, SegmentSpans,
    TokenWeights,
};
pub use error::{Error, Result};
pub use gradcheck::{finite_diff_grad, run_gradcheck, OpGradReport};
pub use losses::{
    cross_entropy, forward_kl, segment_kl_loss, temp_softmax, total_loss, KlDirection,
    LabelSequence, LossBundle, SegmentedLogits,
};
pub use metrics::{compute_metrics, MetricsReport};
pub use rng::Rng;
pub use similarity::{apply_weights, awcka, center_columns, linear_cka, pdist_loss, EmbeddingPair};
pub use tensor::Tensor;
