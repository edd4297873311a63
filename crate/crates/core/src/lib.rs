//! Text-attributed graph pipeline: prompt-based message passing through a
//! language-model gateway, language-based node vocabularies, instruction
//! corpora and prefix-tree constrained decoding.

pub mod decoder;
pub mod eval;
pub mod fsutil;
pub mod gateway;
pub mod gnn;
pub mod graph;
pub mod instruct;
pub mod pipeline;
pub mod scalar;
pub mod seed;
pub mod text;
pub mod vocab;

pub use scalar::{Exact, RealScalar, Scalar};

pub type DecodeResultF64 = decoder::DecodeResult<f64>;
pub type DecodeResultF32 = decoder::DecodeResult<f32>;
pub type DiscriminationRowF64 = eval::DiscriminationRow<f64>;
pub type DiscriminationRowF32 = eval::DiscriminationRow<f32>;
pub type BeamOptionsF64 = decoder::BeamOptions<f64>;
