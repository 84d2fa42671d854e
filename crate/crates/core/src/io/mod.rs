//! On-disk formats: the `TNS1` binary tensor format, the experiment
//! configuration document, and named-parameter manifests.

mod config;
mod tensor_file;

pub use config::{
    parse_config, render_config, ExperimentConfig, GeneratorSection, ModelSection,
    PretrainSection, TrainSection,
};
pub use tensor_file::{
    load_params, load_tensor, parse_tensor, read_tensor_file, save_params, save_tensor,
    serialize_tensor, Dtype, TensorFile, MANIFEST_NAME,
};
