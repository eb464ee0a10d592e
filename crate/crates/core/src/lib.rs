//! Boilerplate detection over semantically represented text blocks.

mod error;
pub mod dataset;
pub mod dom;
pub mod embedding;
pub mod encoder;
pub mod labeler;
pub mod lexicalizer;
pub mod metrics;
pub mod model;
pub mod persist;
pub mod pipeline;
pub mod resources;
pub mod segmenter;
pub mod synth;
pub mod tensor;
pub mod trainer;

pub use error::Error;
