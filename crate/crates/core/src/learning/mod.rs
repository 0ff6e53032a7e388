//! Desk-scale learning task: synthetic data, non-iid partitioning, local
//! training, federated averaging, and evaluation.

mod data;
mod model;
mod partition;

use thiserror::Error;

pub use data::{Dataset, Samples, SyntheticTask};
pub use model::{
    evaluate, fedavg, local_train, mean_gradient, mean_loss, LinearModel, LocalTraining,
    LocalUpdate,
};
pub use partition::{dirichlet_partition, largest_remainder, PartitionConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearningError {
    #[error("invalid dataset: {0}")]
    BadDataset(String),
    #[error("invalid partition: {0}")]
    BadPartition(String),
    #[error("parameter vector has length {got}, expected {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("model parameters became non-finite")]
    NonFinite,
}
