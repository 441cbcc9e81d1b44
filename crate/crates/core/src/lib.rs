//! Hashtag-only corpus analytics.
//!
//! The pipeline runs in stages over archived tweet records (timestamp, text,
//! hashtags): ingestion and hashtag repair, phase bucketing, frequency
//! statistics, trend extraction, event sampling, LDA topic discovery with
//! coherence-based model selection, skip-gram hashtag embeddings, and
//! popularity/influence scoring of candidate battles.
//!
//! Core numeric routines are generic over the scalar type through
//! [`scalar::Real`]; `f64` aliases are exported at the crate root.

pub mod battles;
pub mod cli;
pub mod corpus;
pub mod embeddings;
pub mod events;
pub mod phases;
pub mod rng;
pub mod scalar;
pub mod stats;
pub mod topics;
pub mod trends;

pub use corpus::{CorpusStats, TweetRecord};
pub use phases::{PhaseId, PhaseSchedule};
pub use stats::{FrequencyTable, Histogram};

/// Default scalar for embedding training and coherence scoring.
pub type Scalar = f64;
/// Embedding matrix at the default training precision.
pub type Embeddings = embeddings::EmbeddingMatrix<Scalar>;
