use thiserror::Error;

use crate::dataset::DatasetError;
use crate::dom::DomError;
use crate::embedding::EmbeddingError;
use crate::metrics::MetricsError;
use crate::model::ModelError;
use crate::persist::PersistError;
use crate::resources::TableError;
use crate::trainer::TrainError;

/// Any library error, prefixed with the module it came from.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dom: {0}")]
    Dom(#[from] DomError),
    #[error("resources: {0}")]
    Table(#[from] TableError),
    #[error("embedding: {0}")]
    Embedding(#[from] EmbeddingError),
    #[error("model: {0}")]
    Model(#[from] ModelError),
    #[error("persist: {0}")]
    Persist(#[from] PersistError),
    #[error("dataset: {0}")]
    Dataset(#[from] DatasetError),
    #[error("trainer: {0}")]
    Train(#[from] TrainError),
    #[error("metrics: {0}")]
    Metrics(#[from] MetricsError),
}
