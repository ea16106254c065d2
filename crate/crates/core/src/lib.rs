//! Joint prediction of question and answer quality on community Q&A sites.
//!
//! Questions and their answers are linked by a sparse association matrix.
//! Besides a separate per-side ridge baseline, the crate fits co-predictors
//! that share information across that link: an iterative method that feeds
//! each side's estimates into the other's features, and four variants of a
//! coupled objective that penalize disagreement between a question's score
//! and the mean score of its answers.
//!
//! ```
//! use cops::pipeline::{generate_synthetic, SynthSpec};
//! use cops::{Hyperparameters, Method, QualityModel, Task};
//!
//! let data = generate_synthetic(&SynthSpec { questions: 300, seed: 7, ..Default::default() })?;
//! let (train, test) = data.split(10.0, 7)?;
//! let model = QualityModel::fit(
//!     &train,
//!     "cops-qq".parse::<Method>()?,
//!     Task::Classification,
//!     &Hyperparameters::default(),
//!     Some(7),
//! )?;
//! let eval = model.evaluate(&test)?;
//! assert!(eval.answer_metric.unwrap() < 0.5);
//! # Ok::<(), cops::Error>(())
//! ```

pub mod coefficients;
pub mod error;
pub mod eval;
pub mod iterative;
pub mod joint;
mod linalg;
pub mod loss;
pub mod model;
pub mod pipeline;
pub mod predictor;
pub mod rng;
pub mod separate;

pub use coefficients::CoefficientPair;
pub use error::{Error, Result};
pub use eval::experiment::{run_experiment, ExperimentReport, Plan};
pub use joint::{JointProblem, JointVariant};
pub use loss::LossKind;
pub use model::{AssociationMatrix, Dataset, FeatureMatrix, QualityVector};
pub use predictor::{prepare, Hyperparameters, Method, QualityModel, Task};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/data-model.md")]
    mod data_model {}
    #[doc = include_str!("../../../book/src/separate.md")]
    mod separate {}
    #[doc = include_str!("../../../book/src/joint.md")]
    mod joint {}
    #[doc = include_str!("../../../book/src/iterative.md")]
    mod iterative {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
