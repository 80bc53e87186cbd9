//! Pose classification and light-condition classification.
//!
//! - [`dataset`]: labeled feature rows and the stratified train/validation/test split
//! - [`select`]: correlation-based feature ranking with a redundancy filter
//! - [`mlp`]: single-hidden-layer network (tanh hidden, softmax output)
//! - [`eval`]: accuracy and confusion counts
//! - [`stump`]: single-threshold information-gain split on `rawmax`

pub mod dataset;
pub mod eval;
pub mod mlp;
pub mod select;
pub mod stump;

use thiserror::Error;

use crate::features::FeatureName;

pub use dataset::{split, LabeledDataset, PoseSample, SplitRatios};
pub use eval::{evaluate, EvalReport};
pub use mlp::{predict, train_mlp, PoseModel, Prediction, Topology, TrainConfig};
pub use select::select_features;
pub use stump::{train_stump, LightLabel, ScoredSample};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifierError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("rows do not share the dataset's feature list")]
    InconsistentFeatures,
    #[error("split ratios must be non-negative and sum to 1")]
    InvalidRatios,
    #[error("the {0} split is empty")]
    EmptySplit(&'static str),
    #[error("requested {requested} features but only {available} usable candidates")]
    TooFewFeatures { requested: usize, available: usize },
    #[error("training diverged: non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("feature vector lacks `{0}` required by the model")]
    FeatureSetMismatch(FeatureName),
    #[error("all samples carry the same label, no split possible")]
    SingleClass,
    #[error("all scores are identical, no threshold separates them")]
    Unsplittable,
}
