//! Synthetic SER-like sequence data: each sample hides a class-specific
//! pattern vector at a few cue time steps inside class-independent noise.

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::Tensor;
use crate::toy::PROMPT_LEN;

/// Knobs for the synthetic generator.
#[derive(Debug, Clone, Copy)]
pub struct GeneratorConfig {
    pub num_classes: usize,
    pub samples_per_class: usize,
    /// Feature dimension of the raw audio frames (equals the encoder input
    /// dimension).
    pub feature_dim: usize,
    /// Audio token count L_a.
    pub audio_len: usize,
    /// Number of time steps carrying the class pattern.
    pub cue_count: usize,
    /// Standard deviation of the Gaussian background noise.
    pub noise_sigma: f64,
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::InvalidArgument {
                context: "GeneratorConfig",
                reason: format!("need at least 2 classes, got {}", self.num_classes),
            });
        }
        if self.cue_count == 0 || self.cue_count > self.audio_len {
            return Err(Error::InvalidArgument {
                context: "GeneratorConfig",
                reason: format!(
                    "cue_count must be in 1..={} (audio_len), got {}",
                    self.audio_len, self.cue_count
                ),
            });
        }
        if self.samples_per_class < 5 {
            return Err(Error::InvalidArgument {
                context: "GeneratorConfig",
                reason: "need at least 5 samples per class for an 80/20 split".into(),
            });
        }
        if self.feature_dim == 0 || self.audio_len == 0 {
            return Err(Error::InvalidArgument {
                context: "GeneratorConfig",
                reason: "feature_dim and audio_len must be positive".into(),
            });
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::InvalidArgument {
                context: "GeneratorConfig",
                reason: format!("noise_sigma must be non-negative, got {}", self.noise_sigma),
            });
        }
        Ok(())
    }
}

/// One synthetic utterance: audio frames, the fixed prompt, and the class
/// token that plays the role of the response.
#[derive(Debug, Clone)]
pub struct SyntheticSample {
    pub id: usize,
    pub class_id: usize,
    /// `audio_len x feature_dim` frames.
    pub audio_features: Tensor,
    pub prompt_ids: Vec<usize>,
    pub response_id: usize,
    /// Time steps where the class pattern was injected, ascending.
    pub cue_positions: Vec<usize>,
}

/// Stratified 80/20 split of generated samples.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub train: Vec<SyntheticSample>,
    pub test: Vec<SyntheticSample>,
}

/// Fixed prompt token ids for a vocabulary laid out as
/// `[classes | prompt tokens | start token]`.
pub fn prompt_ids(num_classes: usize) -> Vec<usize> {
    (num_classes..num_classes + PROMPT_LEN).collect()
}

/// The start-of-response token id.
pub fn start_token(num_classes: usize) -> usize {
    num_classes + PROMPT_LEN
}

/// Generate a stratified dataset. Each sample's cue frames carry a
/// class-specific unit pattern plus noise; every other frame is pure noise,
/// so non-cue statistics are class-independent. Deterministic under the
/// generator's seed.
pub fn generate_dataset(cfg: &GeneratorConfig, rng: &mut Rng) -> Result<Dataset> {
    cfg.validate()?;
    // One unit-norm pattern per class.
    let mut patterns = Vec::with_capacity(cfg.num_classes);
    for _ in 0..cfg.num_classes {
        let mut p = rng.normal_tensor(&[cfg.feature_dim], 1.0);
        let norm = p.frobenius_norm();
        p.scale(1.0 / norm);
        patterns.push(p);
    }

    let prompt = prompt_ids(cfg.num_classes);
    let mut train = Vec::new();
    let mut test = Vec::new();
    let train_per_class = (cfg.samples_per_class * 4) / 5;
    let mut id = 0;
    for class_id in 0..cfg.num_classes {
        for s in 0..cfg.samples_per_class {
            let cue_positions = rng.distinct_below(cfg.audio_len, cfg.cue_count);
            let mut features = rng.normal_tensor(&[cfg.audio_len, cfg.feature_dim], cfg.noise_sigma);
            for &t in &cue_positions {
                for d in 0..cfg.feature_dim {
                    let v = features.at2(t, d) + patterns[class_id].data()[d];
                    features.set2(t, d, v);
                }
            }
            let sample = SyntheticSample {
                id,
                class_id,
                audio_features: features,
                prompt_ids: prompt.clone(),
                response_id: class_id,
                cue_positions,
            };
            if s < train_per_class {
                train.push(sample);
            } else {
                test.push(sample);
            }
            id += 1;
        }
    }
    Ok(Dataset { train, test })
}
