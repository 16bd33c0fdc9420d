use std::collections::HashMap;

use super::{tokenize, CorpusStats};

/// A document pre-tokenized for repeated BM25 scoring.
#[derive(Debug, Clone, Default)]
pub struct Bm25Doc {
    tf: HashMap<String, u32>,
    len: usize,
}

impl Bm25Doc {
    pub fn new(text: &str) -> Self {
        let tokens = tokenize(text);
        let len = tokens.len();
        let mut tf = HashMap::new();
        for t in tokens {
            *tf.entry(t).or_insert(0) += 1;
        }
        Self { tf, len }
    }

    /// Okapi BM25, summed over query tokens (duplicates count again).
    pub fn score(&self, query_tokens: &[String], stats: &CorpusStats, k1: f64, b: f64) -> f64 {
        let norm = if stats.avg_doc_len > 0.0 {
            1.0 - b + b * self.len as f64 / stats.avg_doc_len
        } else {
            1.0
        };
        let mut score = 0.0;
        for term in query_tokens {
            let Some(&tf) = self.tf.get(term) else { continue };
            let tf = tf as f64;
            score += stats.bm25_idf(term) * tf * (k1 + 1.0) / (tf + k1 * norm);
        }
        score
    }
}

pub fn bm25_score(query: &str, doc: &str, stats: &CorpusStats, k1: f64, b: f64) -> f64 {
    Bm25Doc::new(doc).score(&tokenize(query), stats, k1, b)
}
