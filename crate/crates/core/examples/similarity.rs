//! The built-in scorers: hashed TF-IDF vectors with cosine, and BM25.

use std::sync::Arc;

use csr_rag::similarity::{bm25_score, build_corpus_stats, cosine_sim, HashedEmbedder};

fn main() {
    let docs = [
        "orders placed by customers with order date and status",
        "products and their list price within a category",
        "regions where customers live",
    ];
    let stats = Arc::new(build_corpus_stats(&docs));
    let embedder = HashedEmbedder::new(1024, stats.clone());
    let question = "which customers placed orders";
    let q = embedder.embed(question);
    for doc in docs {
        let cos = cosine_sim(&q, &embedder.embed(doc)).unwrap();
        let bm25 = bm25_score(question, doc, &stats, 1.2, 0.75);
        println!("cosine {cos:.3}  bm25 {bm25:.3}  {doc}");
    }
}
