//! Embedding providers.
//!
//! The HTTP provider speaks a minimal wire protocol compatible with common
//! local model servers: POST `{"model": <name>, "input": [<texts>]}`,
//! response `{"embeddings": [[...]]}`. The mock provider is a seeded hash
//! of character trigrams projected to a fixed dimension, so the whole
//! pipeline runs with no model server.

use serde::{Deserialize, Serialize};

use super::{EmbeddingVector, RetrievalError};

pub trait EmbeddingProvider {
    fn dimension(&self) -> usize;

    fn embed(&self, text: &str) -> Result<EmbeddingVector, RetrievalError> {
        let mut out = self.embed_batch(&[text])?;
        Ok(out.remove(0))
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, RetrievalError>;

    /// Startup probe: identical input must embed to identical vectors
    /// within a session.
    fn probe_determinism(&self) -> Result<(), RetrievalError> {
        let probe = "determinism probe: rotate a video by 90 degrees";
        let a = self.embed(probe)?;
        let b = self.embed(probe)?;
        if a != b {
            return Err(RetrievalError::NonDeterministicProvider);
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    model: &'a str,
    input: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbedResponse {
    embeddings: Vec<Vec<f32>>,
}

/// Embedding over HTTP with retry on transport failures.
pub struct HttpEmbedder {
    pub endpoint: String,
    pub model_name: String,
    pub dimension: usize,
    pub max_retries: u32,
    client: reqwest::blocking::Client,
}

impl HttpEmbedder {
    pub fn new(endpoint: &str, model_name: &str, dimension: usize) -> Self {
        Self {
            endpoint: endpoint.trim_end_matches('/').to_string(),
            model_name: model_name.to_string(),
            dimension,
            max_retries: 2,
            client: reqwest::blocking::Client::new(),
        }
    }

    fn post(&self, texts: &[&str]) -> Result<EmbedResponse, RetrievalError> {
        let body = EmbedRequest {
            model: &self.model_name,
            input: texts,
        };
        let mut attempts = 0;
        loop {
            attempts += 1;
            let result = self
                .client
                .post(&self.endpoint)
                .json(&body)
                .send()
                .and_then(|r| r.error_for_status())
                .and_then(|r| r.json::<EmbedResponse>());
            match result {
                Ok(resp) => return Ok(resp),
                Err(e) if attempts <= self.max_retries => {
                    let backoff = std::time::Duration::from_millis(100 << attempts);
                    std::thread::sleep(backoff);
                    let _ = e;
                }
                Err(e) => {
                    return Err(RetrievalError::Transport {
                        attempts,
                        message: e.to_string(),
                    })
                }
            }
        }
    }
}

impl EmbeddingProvider for HttpEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, RetrievalError> {
        if texts.iter().any(|t| t.is_empty()) {
            return Err(RetrievalError::EmptyInput);
        }
        let resp = self.post(texts)?;
        let vectors: Vec<EmbeddingVector> = resp.embeddings.into_iter().map(EmbeddingVector).collect();
        for v in &vectors {
            // Dimension disagreement is a configuration error, not retryable.
            v.validate(self.dimension)?;
        }
        if vectors.len() != texts.len() {
            return Err(RetrievalError::Transport {
                attempts: 1,
                message: format!(
                    "server returned {} embeddings for {} inputs",
                    vectors.len(),
                    texts.len()
                ),
            });
        }
        Ok(vectors)
    }
}

/// Deterministic test/offline embedder: FNV-hashed character trigrams
/// accumulated into `dimension` buckets.
#[derive(Debug, Clone)]
pub struct MockEmbedder {
    pub seed: u64,
    pub dimension: usize,
}

impl MockEmbedder {
    pub fn new(seed: u64) -> Self {
        Self { seed, dimension: 32 }
    }

    pub fn with_dimension(seed: u64, dimension: usize) -> Self {
        Self { seed, dimension }
    }
}

fn fnv1a(seed: u64, bytes: &[u8]) -> u64 {
    let mut h = 0xcbf29ce484222325u64 ^ seed;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

impl EmbeddingProvider for MockEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, RetrievalError> {
        if texts.iter().any(|t| t.is_empty()) {
            return Err(RetrievalError::EmptyInput);
        }
        Ok(texts
            .iter()
            .map(|text| {
                let mut values = vec![0.0f32; self.dimension];
                let chars: Vec<char> = text.chars().collect();
                for gram in chars.windows(3.min(chars.len().max(1))) {
                    let s: String = gram.iter().collect();
                    let h = fnv1a(self.seed, s.as_bytes());
                    let bucket = (h % self.dimension as u64) as usize;
                    let weight = ((h >> 32) % 2001) as f32 / 1000.0 - 1.0;
                    values[bucket] += weight;
                }
                EmbeddingVector(values)
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mock_is_deterministic() {
        let e = MockEmbedder::new(42);
        let a = e.embed("rotate video").unwrap();
        let b = e.embed("rotate video").unwrap();
        assert_eq!(a, b);
        e.probe_determinism().unwrap();
    }

    #[test]
    fn mock_distinguishes_texts() {
        let e = MockEmbedder::new(42);
        let a = e.embed("rotate video").unwrap();
        let b = e.embed("encode with vvenc").unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn empty_string_errors_without_provider_call() {
        let e = MockEmbedder::new(42);
        assert!(matches!(e.embed(""), Err(RetrievalError::EmptyInput)));
    }

    #[test]
    fn seed_changes_vectors() {
        let a = MockEmbedder::new(1).embed("same text").unwrap();
        let b = MockEmbedder::new(2).embed("same text").unwrap();
        assert_ne!(a, b);
    }
}
