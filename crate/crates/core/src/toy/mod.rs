//! Shape-faithful miniature audio-language models: a frozen shared encoder,
//! a trainable linear projector, and a small pre-norm causal attention
//! decoder over a toy vocabulary, plus the synthetic data generator and the
//! distillation training loop.

pub mod data;
pub mod model;
pub mod train;

pub use data::{generate_dataset, Dataset, GeneratorConfig, SyntheticSample};
pub use model::{argmax_class, ForwardOutput, SharedEncoder, ToyLalm, ToyModelConfig, ToyParams};
pub use train::{
    batch_gradients, distill, evaluate, pretrain_teacher, run_experiment, teacher_cue_attention_mass,
    DistillOutcome, ExperimentSetup, PretrainConfig, RunOutcome, StepRecord, Strategy, TrainConfig,
};

/// Fixed synthetic prompt length. The prompt content is plumbing; its ids
/// sit directly after the class tokens in the vocabulary.
pub const PROMPT_LEN: usize = 3;

/// Response length produced by the harness: a single class token.
pub const RESPONSE_LEN: usize = 1;
