//! Text embedding and similarity scoring shared by all three retrievers.
//!
//! The built-in embedder is a feature-hashed TF-IDF model (FNV-1a buckets,
//! L2-normalized), fully deterministic for a fixed corpus. A learned encoder
//! can be plugged in through the external HTTP provider without changing any
//! retriever.

mod bm25;
mod external;
mod hashed;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bm25::{bm25_score, Bm25Doc};
pub use external::ExternalEmbedder;
pub use hashed::{build_corpus_stats, fnv1a, CorpusStats, HashedEmbedder};

pub const DEFAULT_DIMENSION: usize = 1024;
pub const DEFAULT_EXTERNAL_TIMEOUT_MS: u64 = 500;
pub const EXTERNAL_EMBEDDER_ENV: &str = "CSR_EMBEDDER_URL";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Cosine,
    Bm25,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedderKind {
    HashedTfidf,
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimilarityConfig {
    pub metric: Metric,
    pub embedder: EmbedderKind,
    pub dimension: usize,
    pub bm25_k1: f64,
    pub bm25_b: f64,
    /// Endpoint for [`EmbedderKind::External`]; falls back to `CSR_EMBEDDER_URL`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub external_url: Option<String>,
    pub external_timeout_ms: u64,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        Self {
            metric: Metric::Cosine,
            embedder: EmbedderKind::HashedTfidf,
            dimension: DEFAULT_DIMENSION,
            bm25_k1: 1.2,
            bm25_b: 0.75,
            external_url: None,
            external_timeout_ms: DEFAULT_EXTERNAL_TIMEOUT_MS,
        }
    }
}

impl SimilarityConfig {
    pub fn validate(&self) -> Result<(), SimilarityError> {
        if self.dimension < 64 {
            return Err(SimilarityError::InvalidConfig(format!(
                "dimension must be at least 64, got {}",
                self.dimension
            )));
        }
        if !(self.bm25_k1 > 0.0) {
            return Err(SimilarityError::InvalidConfig(format!(
                "bm25_k1 must be positive, got {}",
                self.bm25_k1
            )));
        }
        if !(0.0..=1.0).contains(&self.bm25_b) {
            return Err(SimilarityError::InvalidConfig(format!(
                "bm25_b must lie in [0, 1], got {}",
                self.bm25_b
            )));
        }
        Ok(())
    }

    /// Builds the embedder this config selects. `stats` feeds the IDF of the
    /// built-in embedder and is ignored by the external provider.
    pub fn embedder(&self, stats: Arc<CorpusStats>) -> Result<Embedder, SimilarityError> {
        self.validate()?;
        match self.embedder {
            EmbedderKind::HashedTfidf => Ok(Embedder::Hashed(HashedEmbedder::new(self.dimension, stats))),
            EmbedderKind::External => {
                let url = match &self.external_url {
                    Some(url) => url.clone(),
                    None => std::env::var(EXTERNAL_EMBEDDER_ENV).map_err(|_| {
                        SimilarityError::InvalidConfig(format!(
                            "external embedder selected but no url configured and {EXTERNAL_EMBEDDER_ENV} is unset"
                        ))
                    })?,
                };
                Ok(Embedder::External(Arc::new(ExternalEmbedder::new(
                    url,
                    self.dimension,
                    std::time::Duration::from_millis(self.external_timeout_ms),
                ))))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimilarityError {
    #[error("invalid similarity config: {0}")]
    InvalidConfig(String),
    #[error("vector dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("embedding provider unreachable: {0}")]
    Transport(String),
    #[error("embedding provider rejected the request: {0}")]
    Rejected(String),
}

/// Lowercases and splits on every non-alphanumeric character.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

/// Dense embedding; unit L2 norm, or all zeros for text without content terms.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    values: Vec<f32>,
    norm: f64,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f32>) -> Self {
        let norm = l2_norm(&values);
        Self { values, norm }
    }

    pub fn zeros(dimension: usize) -> Self {
        Self::new(vec![0.0; dimension])
    }

    /// Scales `values` to unit length; a zero input stays zero.
    pub fn normalized(mut values: Vec<f32>) -> Self {
        let norm = l2_norm(&values);
        if norm > 0.0 {
            for v in &mut values {
                *v = (*v as f64 / norm) as f32;
            }
        }
        Self::new(values)
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn is_zero(&self) -> bool {
        self.norm == 0.0
    }
}

fn l2_norm(values: &[f32]) -> f64 {
    values
        .iter()
        .map(|&v| (v as f64) * (v as f64))
        .sum::<f64>()
        .sqrt()
}

/// Cosine similarity; 0 when either side is the zero vector.
pub fn cosine_sim(u: &EmbeddingVector, v: &EmbeddingVector) -> Result<f64, SimilarityError> {
    if u.dimension() != v.dimension() {
        return Err(SimilarityError::DimensionMismatch {
            left: u.dimension(),
            right: v.dimension(),
        });
    }
    Ok(cosine_unchecked(u, v))
}

pub(crate) fn cosine_unchecked(u: &EmbeddingVector, v: &EmbeddingVector) -> f64 {
    if u.norm == 0.0 || v.norm == 0.0 {
        return 0.0;
    }
    let dot: f64 = u
        .values
        .iter()
        .zip(&v.values)
        .map(|(&a, &b)| a as f64 * b as f64)
        .sum();
    (dot / (u.norm * v.norm)).clamp(-1.0, 1.0)
}

#[derive(Debug, Clone)]
pub enum Embedder {
    Hashed(HashedEmbedder),
    External(Arc<ExternalEmbedder>),
}

impl Embedder {
    pub fn dimension(&self) -> usize {
        match self {
            Embedder::Hashed(h) => h.dimension(),
            Embedder::External(e) => e.dimension(),
        }
    }

    pub fn embed(&self, text: &str) -> Result<EmbeddingVector, SimilarityError> {
        match self {
            Embedder::Hashed(h) => Ok(h.embed(text)),
            Embedder::External(e) => Ok(e
                .embed_batch(&[text.to_string()])?
                .pop()
                .expect("provider returns one vector per text")),
        }
    }

    pub fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, SimilarityError> {
        match self {
            Embedder::Hashed(h) => Ok(texts.iter().map(|t| h.embed(t)).collect()),
            Embedder::External(e) => e.embed_batch(texts),
        }
    }
}

/// Convenience wrapper: builds the embedder for `config` over `stats` and embeds `text`.
pub fn embed(text: &str, config: &SimilarityConfig, stats: Arc<CorpusStats>) -> Result<EmbeddingVector, SimilarityError> {
    config.embedder(stats)?.embed(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizer_lowercases_and_splits() {
        assert_eq!(tokenize("Orders.ID, total_2x!"), vec!["orders", "id", "total", "2x"]);
        assert!(tokenize(" -- ").is_empty());
    }

    #[test]
    fn self_similarity_is_one() {
        let x = EmbeddingVector::new(vec![0.3, -1.2, 4.0]);
        assert!((cosine_sim(&x, &x).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn orthogonal_is_zero() {
        let a = EmbeddingVector::new(vec![1.0, 0.0]);
        let b = EmbeddingVector::new(vec![0.0, 1.0]);
        assert_eq!(cosine_sim(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn half_diagonal_against_axis() {
        let r = std::f32::consts::FRAC_1_SQRT_2;
        let u = EmbeddingVector::new(vec![r, r, 0.0]);
        let v = EmbeddingVector::new(vec![1.0, 0.0, 0.0]);
        let expected = 1.0 / 2f64.sqrt();
        assert!((cosine_sim(&u, &v).unwrap() - expected).abs() < 1e-4);
        assert!((cosine_sim(&u, &v).unwrap() - 0.7071).abs() < 1e-4);
    }

    #[test]
    fn zero_vector_scores_zero() {
        let z = EmbeddingVector::zeros(3);
        let v = EmbeddingVector::new(vec![1.0, 0.0, 0.0]);
        assert_eq!(cosine_sim(&z, &v).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = EmbeddingVector::zeros(3);
        let b = EmbeddingVector::zeros(4);
        assert_eq!(
            cosine_sim(&a, &b).unwrap_err(),
            SimilarityError::DimensionMismatch { left: 3, right: 4 }
        );
    }

    #[test]
    fn config_validation() {
        let mut c = SimilarityConfig::default();
        assert!(c.validate().is_ok());
        c.dimension = 32;
        assert!(c.validate().is_err());
        let c = SimilarityConfig { bm25_b: 1.5, ..Default::default() };
        assert!(c.validate().is_err());
        let c = SimilarityConfig { bm25_k1: 0.0, ..Default::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_json_uses_snake_case() {
        let c: SimilarityConfig = serde_json::from_str(r#"{"metric": "bm25", "dimension": 256}"#).unwrap();
        assert_eq!(c.metric, Metric::Bm25);
        assert_eq!(c.dimension, 256);
        assert_eq!(c.bm25_k1, 1.2);
    }
}
