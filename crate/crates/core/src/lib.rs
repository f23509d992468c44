//! Feature selection with the anisotropic general regression neural network.
//!
//! The GRNN predicts by a Gaussian-kernel weighted average of training
//! targets. Giving every input feature its own bandwidth and fitting those
//! bandwidths by leave-one-out error turns the fitted widths into a relevance
//! measure: a feature whose width grows past the threshold no longer affects
//! the prediction.
//!
//! ```
//! use agrnn::{datagen, select, OptimizerConfig};
//!
//! let data = datagen::gen_friedman(&datagen::FriedmanSpec::new(200, 7)).unwrap();
//! let result = select(&data, &OptimizerConfig::default(), 1.0).unwrap();
//! assert_eq!(result.relevant_mask.len(), 30);
//! ```

pub mod baselines;
pub mod benchmark;
pub mod datagen;
pub mod dataset;
pub mod error;
pub mod grnn;
pub mod io;
pub mod numeric;
pub mod optimizer;
pub mod selector;

pub use dataset::{Dataset, ScalingRecord};
pub use error::{Error, Result};
pub use grnn::{
    log_kernel, loo_loss, loo_loss_grad, predict, predict_batch, Bandwidths, LooObjective,
    LossReport,
};
pub use numeric::MeanCi;
pub use optimizer::{minimize, InitSigma, OptimResult, OptimizerConfig, TerminationReason};
pub use selector::{
    select, shuffle_importance, DataSource, ImportanceReport, SelectionResult, DEFAULT_THRESHOLD,
};
