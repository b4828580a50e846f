//! Training/evaluation harness: builds runnable networks from
//! architecture graphs, owns the metrics (accuracy, mAP), and drives the
//! order-sensitivity experiment end to end.

pub mod data;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod network;
pub mod train;

pub use data::Dataset;
pub use error::{HarnessError, Result};
pub use experiment::{experiment_fig3, ExperimentRow, Fig3Config, Scale};
pub use metrics::{accuracy, average_precision, mean_average_precision, MapReport};
pub use network::{Forward, Gradients, Network};
pub use train::{
    build_network, evaluate, train, LossKind, MetricsRow, OptKind, TrainConfig, TrainOutcome,
};
