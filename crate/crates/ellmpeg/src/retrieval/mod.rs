//! Embedding and exact nearest-neighbor retrieval.
//!
//! Chunks and queries are embedded by a pluggable provider and kept in two
//! tool-scoped flat vector stores. Search is exhaustive Euclidean top-k
//! with a bounded max-heap; no approximate index is used.

mod embedding;
mod store;

pub use embedding::{EmbeddingProvider, HttpEmbedder, MockEmbedder};
pub use store::{build_store, load_store, persist_store, search, StorePair, VectorStore};

use crate::corpus::Chunk;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum RetrievalError {
    #[error("empty input text")]
    EmptyInput,
    #[error("embedding request failed after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("non-finite value in embedding")]
    NonFinite,
    #[error("provider determinism probe failed: identical input produced different vectors")]
    NonDeterministicProvider,
    #[error("store i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt store file at byte offset {offset}: {message}")]
    CorruptStore { offset: u64, message: String },
    #[error("unsupported store version: {0}")]
    VersionMismatch(String),
}

/// Fixed-dimension dense vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector(pub Vec<f32>);

impl EmbeddingVector {
    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn validate(&self, expected_dim: usize) -> Result<(), RetrievalError> {
        if self.0.len() != expected_dim {
            return Err(RetrievalError::DimensionMismatch {
                expected: expected_dim,
                actual: self.0.len(),
            });
        }
        if self.0.iter().any(|v| !v.is_finite()) {
            return Err(RetrievalError::NonFinite);
        }
        Ok(())
    }
}

/// A retrieved chunk with its Euclidean distance to the query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredChunk {
    pub chunk: Chunk,
    pub distance: f64,
}

/// Euclidean (L2) distance in double precision.
pub fn l2_distance(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = f64::from(*x) - f64::from(*y);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}
