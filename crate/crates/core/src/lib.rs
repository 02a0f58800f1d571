//! MetaHMM: procedurally generated families of hidden Markov models with an
//! exact Bayes-optimal next-symbol oracle.
//!
//! A [`config::EnvironmentConfig`] and its seed determine an
//! [`bank::EnvironmentBank`] of shared building blocks; every latent code
//! selects one HMM from it. [`oracle`] filters a symbol sequence against
//! all tasks at once and reports the posterior predictive and the posterior
//! entropy at each position, [`eval`] scores any predictor against it, and
//! [`io`] defines the files that connect external predictors to the harness.

pub mod bank;
pub mod code;
pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod hmm;
pub mod io;
pub mod logspace;
pub mod oracle;
pub mod pipeline;
pub mod rng;

pub use bank::{generate_bank, EnvironmentBank};
pub use code::{CodeSpace, LatentCode};
pub use config::{environment_size, EnvironmentConfig};
pub use dataset::{generate_dataset, make_split, DatasetManifest, DatasetPlan, LengthMode, Split, TaskSubset};
pub use error::{Error, ErrorCategory, Result};
pub use eval::{div, evaluate, summarize, Curve, DivCurve, PositionStats, Summary};
pub use hmm::{sample_sequence, Hmm, SparseHmm};
pub use io::{PredictionFormat, PredictionReader, PredictionRecord, PredictionWriter, SequenceRecord};
pub use oracle::{conditional_predictive, mc_predict, oracle_run, McSamples, OracleState, PosteriorSnapshot, TaskSet};
