use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{tokenize, EmbeddingVector};

/// Document statistics under the shared tokenizer.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub doc_count: usize,
    pub avg_doc_len: f64,
    pub doc_freq: BTreeMap<String, usize>,
}

impl CorpusStats {
    pub fn df(&self, term: &str) -> usize {
        self.doc_freq.get(term).copied().unwrap_or(0)
    }

    /// Smoothed IDF for embedding weights: `ln((1 + N) / (1 + df)) + 1`.
    /// Terms outside the corpus get the largest weight.
    pub fn embedding_idf(&self, term: &str) -> f64 {
        let n = self.doc_count as f64;
        ((1.0 + n) / (1.0 + self.df(term) as f64)).ln() + 1.0
    }

    /// BM25 IDF: `ln(1 + (N − n + 0.5) / (n + 0.5))`.
    pub fn bm25_idf(&self, term: &str) -> f64 {
        let n = self.doc_count as f64;
        let df = self.df(term) as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }
}

pub fn build_corpus_stats<S: AsRef<str>>(docs: &[S]) -> CorpusStats {
    let mut doc_freq = BTreeMap::new();
    let mut total_len = 0usize;
    for doc in docs {
        let mut tokens = tokenize(doc.as_ref());
        total_len += tokens.len();
        tokens.sort_unstable();
        tokens.dedup();
        for t in tokens {
            *doc_freq.entry(t).or_insert(0) += 1;
        }
    }
    CorpusStats {
        doc_count: docs.len(),
        avg_doc_len: if docs.is_empty() {
            0.0
        } else {
            total_len as f64 / docs.len() as f64
        },
        doc_freq,
    }
}

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    bytes.iter().fold(OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(PRIME))
}

// Function words carry no schema signal; text made only of these embeds to zero.
const STOPWORDS: &[&str] = &[
    "a", "all", "an", "and", "are", "as", "at", "be", "by", "each", "for", "from", "has", "have",
    "in", "is", "it", "its", "of", "on", "or", "that", "the", "their", "there", "these", "this",
    "those", "to", "was", "were", "what", "which", "with",
];

pub fn is_stopword(token: &str) -> bool {
    STOPWORDS.binary_search(&token).is_ok()
}

#[derive(Debug, Clone)]
pub struct HashedEmbedder {
    dimension: usize,
    stats: Arc<CorpusStats>,
}

impl HashedEmbedder {
    pub fn new(dimension: usize, stats: Arc<CorpusStats>) -> Self {
        Self { dimension, stats }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn stats(&self) -> &CorpusStats {
        &self.stats
    }

    pub fn bucket(&self, token: &str) -> usize {
        (fnv1a(token.as_bytes()) % self.dimension as u64) as usize
    }

    pub fn embed(&self, text: &str) -> EmbeddingVector {
        let mut tf: BTreeMap<String, u32> = BTreeMap::new();
        for t in tokenize(text) {
            if !is_stopword(&t) {
                *tf.entry(t).or_insert(0) += 1;
            }
        }
        let mut acc = vec![0f64; self.dimension];
        for (term, count) in &tf {
            acc[self.bucket(term)] += *count as f64 * self.stats.embedding_idf(term);
        }
        let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return EmbeddingVector::zeros(self.dimension);
        }
        EmbeddingVector::new(acc.into_iter().map(|v| (v / norm) as f32).collect())
    }
}
