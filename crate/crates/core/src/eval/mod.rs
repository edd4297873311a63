//! Metrics and analysis reports.

mod discrimination;
mod efficiency;
mod metrics;
mod permutation;
mod table;
mod transfer;

use thiserror::Error;

use crate::gnn::GnnError;
use crate::graph::GraphError;

pub use discrimination::{
    cosine, discrimination_report, pair_sets, BagOfTokens, DiscriminationRow, Embedder, FULL_ENUMERATION_MAX_NODES,
};
pub use efficiency::{efficiency_report, EfficiencyReport, EfficiencyRow, RunSample};
pub use metrics::{accuracy, hr_at_1, macro_f1, normalize, PredictionRecord, PredictionSet};
pub use permutation::{permutation_report, PermutationRow, PermutationSummary};
pub use table::render_table;
pub use transfer::{TransferConfig, TransferMode};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no predictions to score")]
    EmptyPredictions,
    #[error("class set is empty")]
    EmptyClassSet,
    #[error("target `{0}` is not in the class set")]
    UnknownClass(String),
    #[error("ranking {0} is empty")]
    EmptyRanking(usize),
    #[error("zero embedding for node `{node}` at layer {layer}")]
    DegenerateEmbedding { node: String, layer: usize },
    #[error("no {0} pairs to compare")]
    EmptyPairSet(&'static str),
    #[error("invalid transfer config: {0}")]
    InvalidTransfer(String),
    #[error(transparent)]
    Gnn(#[from] GnnError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}
