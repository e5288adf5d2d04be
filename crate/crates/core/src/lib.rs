//! Diversity-aware analysis and pruning of binary classifier ensembles.
//!
//! The crate is organised around the data flow of an experiment:
//!
//! - [`data`]: CSV ingestion, stratified folds, bootstrap resampling and a
//!   synthetic two-Gaussian generator.
//! - [`learners`]: decision stumps and depth-limited trees, bagging and
//!   discrete AdaBoost, weighted plurality voting.
//! - [`diversity`]: the 0/1-loss decomposition `G = A - D`, per-instance
//!   diversity, the noise-adjusted ensemble margin and the margin-based
//!   risk estimator with its derivatives and critical points.
//! - [`pruning`]: diversity-guided pruning (EPBD) and the ranking-based
//!   baselines ES, KL, KP, OO and DREP.
//! - [`evaluation`]: cross-validation, tie-aware accuracy, paired t-tests
//!   and Friedman average ranks.
//! - [`cli`]: the `divprune` command-line front end.

pub mod cli;
pub mod data;
pub mod diversity;
mod error;
pub mod evaluation;
pub mod learners;
pub mod pruning;
pub mod seed;

pub use error::{Error, Result};
