use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{EmbeddingVector, SimilarityError};

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f32>>,
}

/// HTTP client for an external sentence encoder.
///
/// Protocol: `POST {"texts": [...]}` answered by `{"vectors": [[...], ...]}`.
/// Returned vectors are L2-normalized before use. The agent is shared across
/// threads; every call is bounded by the configured timeout.
#[derive(Debug)]
pub struct ExternalEmbedder {
    url: String,
    dimension: usize,
    agent: ureq::Agent,
}

impl ExternalEmbedder {
    pub fn new(url: impl Into<String>, dimension: usize, timeout: Duration) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout_connect(timeout)
            .timeout(timeout)
            .build();
        Self {
            url: url.into(),
            dimension,
            agent,
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    pub fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, SimilarityError> {
        let response = self
            .agent
            .post(&self.url)
            .send_json(EmbedRequest { texts })
            .map_err(|e| match e {
                ureq::Error::Status(code, resp) => SimilarityError::Rejected(format!(
                    "HTTP {code}: {}",
                    resp.into_string().unwrap_or_default().trim()
                )),
                ureq::Error::Transport(t) => SimilarityError::Transport(t.to_string()),
            })?;
        let body: EmbedResponse = response
            .into_json()
            .map_err(|e| SimilarityError::Rejected(format!("unreadable response payload: {e}")))?;
        if body.vectors.len() != texts.len() {
            return Err(SimilarityError::Rejected(format!(
                "expected {} vectors, got {}",
                texts.len(),
                body.vectors.len()
            )));
        }
        body.vectors
            .into_iter()
            .map(|v| {
                if v.len() != self.dimension {
                    Err(SimilarityError::DimensionMismatch {
                        left: self.dimension,
                        right: v.len(),
                    })
                } else {
                    Ok(EmbeddingVector::normalized(v))
                }
            })
            .collect()
    }
}
