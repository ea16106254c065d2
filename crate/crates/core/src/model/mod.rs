//! Domain types: association matrices, feature matrices, quality vectors and
//! the dataset that ties them together.

pub mod association;
pub mod dataset;
pub mod features;
pub mod quality;
pub mod transfer;

pub use association::AssociationMatrix;
pub use dataset::{mask_labels, split_dataset, Dataset};
pub use features::{FeatureMatrix, Standardizer};
pub use quality::{normalize_scores, threshold_labels, QualityVector, ScoreScaling};
pub use transfer::transfer_features;
