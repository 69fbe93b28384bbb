//! Binary deep Boltzmann machines for weekly activity-tracker usage.
//!
//! The crate turns per-day step counts into a binary week-by-weekday matrix,
//! trains a DBM on it (greedy RBM pretraining followed by joint training with
//! mean-field and persistent Gibbs chains), and generates artificial weeks by
//! clamping the top hidden layer to expose usage patterns.
//!
//! ## Modules
//!
//! - [`data`]: CSV ingestion, dichotomization, week assembly
//! - [`rbm`]: two-layer blocks with persistent contrastive divergence
//! - [`dbm`]: energy, conditionals, mean-field, Gibbs sampling, training, persistence
//! - [`generation`]: clamped top-down generation and the usage heatmap
//! - [`oracle`]: exact enumeration of partition function, likelihood and gradient
//! - [`pipeline`]: the end-to-end fit used by the command-line tool
//!
//! Everything stochastic draws from a seeded ChaCha20 stream (see [`rng`]), so a
//! run is reproducible bit for bit from its seed.

pub mod data;
pub mod dbm;
mod error;
pub mod generation;
pub mod math;
pub mod oracle;
pub mod pipeline;
pub mod rbm;
pub mod rng;
pub mod synthetic;

pub use data::{dichotomize, StepRecord, WeekMatrix, WeekRow};
pub use dbm::{DbmModel, GibbsParticle, MeanFieldState, ModelMetadata};
pub use error::{Error, Result};
pub use generation::PatternTable;
pub use oracle::ExactSummary;
pub use pipeline::{FitReport, RunConfig};
pub use rbm::{RbmModel, Scale, TrainConfig};
