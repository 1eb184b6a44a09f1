//! Redundancy-aware encoding of tabular data into simulated quantum states.
//!
//! The crate pairs six simulated embeddings (basis, angle, IQP, QAOA,
//! displacement, squeezing) with five encoding strategies that differ only in
//! how much embedding work they reuse, plus the preprocessing, readout,
//! classifier and benchmarking layers needed to compare them end to end.

pub mod bench;
pub mod classifiers;
pub mod embeddings;
pub mod error;
pub mod preprocess;
pub mod readout;
pub mod strategies;
pub mod types;

pub use error::{QencError, Result};
pub use types::{
    dedup_key, row_key, CacheStats, DedupKey, EmbeddingKind, EmbeddingSpec, FeatureMatrix,
    Granularity, KeyPolicy, StrategyKind,
};
