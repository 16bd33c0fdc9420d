//! Structural retrieval over a deterministic schema knowledge graph.
//!
//! The graph holds exactly one `(column, "is a column of", table)` triplet per
//! catalog column. No language model is involved in building it, and it has
//! no foreign-key edges; join structure is the relational ranker's concern.

use std::collections::BTreeSet;
use std::ops::Range;
use std::sync::Arc;

use serde::Serialize;

use crate::catalog::{ColumnId, SchemaCatalog, TableId};
use crate::rank::{by_score_desc, top_k_by};
use crate::similarity::{
    build_corpus_stats, cosine_sim, tokenize, Bm25Doc, CorpusStats, Embedder, EmbeddingVector, Metric,
    SimilarityConfig, SimilarityError,
};

pub const RELATION: &str = "is a column of";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Triplet {
    pub field: ColumnId,
    pub table: TableId,
    pub surface: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructuralResult {
    /// (triplet index, score), best first.
    pub ranked_triplets: Vec<(usize, f64)>,
    pub tables: BTreeSet<TableId>,
}

#[derive(Debug)]
pub struct KnowledgeGraph {
    triplets: Vec<Triplet>,
    vectors: Vec<EmbeddingVector>,
    bm25_docs: Vec<Bm25Doc>,
    /// Triplets are stored in catalog order, so each table owns one contiguous range.
    table_ranges: Vec<Range<usize>>,
    config: SimilarityConfig,
    corpus_stats: Arc<CorpusStats>,
    embedder: Embedder,
}

/// `"<column> is a column of <table>. <column description> <table description>"`,
/// with empty descriptions left out.
pub fn triplet_surface(column: &str, column_desc: &str, table: &str, table_desc: &str) -> String {
    let mut s = format!("{column} {RELATION} {table}.");
    for d in [column_desc, table_desc] {
        if !d.is_empty() {
            s.push(' ');
            s.push_str(d);
        }
    }
    s
}

fn triplets_of(catalog: &SchemaCatalog) -> (Vec<Triplet>, Vec<Range<usize>>) {
    let mut triplets = Vec::with_capacity(catalog.column_count());
    let mut ranges = Vec::with_capacity(catalog.table_count());
    for table in catalog.tables() {
        let start = triplets.len();
        for col in &table.columns {
            triplets.push(Triplet {
                field: col.id,
                table: table.id,
                surface: triplet_surface(&col.name, &col.description, &table.name, &table.description),
            });
        }
        ranges.push(start..triplets.len());
    }
    (triplets, ranges)
}

impl KnowledgeGraph {
    pub fn build(catalog: &SchemaCatalog, config: &SimilarityConfig) -> Result<Self, SimilarityError> {
        config.validate()?;
        let (triplets, _) = triplets_of(catalog);
        let surfaces: Vec<String> = triplets.iter().map(|t| t.surface.clone()).collect();
        let stats = Arc::new(build_corpus_stats(&surfaces));
        let embedder = config.embedder(stats.clone())?;
        let vectors = embedder.embed_batch(&surfaces)?;
        Self::from_parts(catalog, vectors, config.clone(), stats, embedder)
    }

    /// Rebuilds triplets from the catalog and pairs them with stored vectors.
    pub fn from_parts(
        catalog: &SchemaCatalog,
        vectors: Vec<EmbeddingVector>,
        config: SimilarityConfig,
        corpus_stats: Arc<CorpusStats>,
        embedder: Embedder,
    ) -> Result<Self, SimilarityError> {
        let (triplets, table_ranges) = triplets_of(catalog);
        if vectors.len() != triplets.len() {
            return Err(SimilarityError::InvalidConfig(format!(
                "knowledge graph has {} triplets but {} vectors",
                triplets.len(),
                vectors.len()
            )));
        }
        let dim = embedder.dimension();
        if let Some(v) = vectors.iter().find(|v| v.dimension() != dim) {
            return Err(SimilarityError::DimensionMismatch {
                left: dim,
                right: v.dimension(),
            });
        }
        let bm25_docs = triplets.iter().map(|t| Bm25Doc::new(&t.surface)).collect();
        Ok(Self {
            triplets,
            vectors,
            bm25_docs,
            table_ranges,
            config,
            corpus_stats,
            embedder,
        })
    }

    pub fn triplets(&self) -> &[Triplet] {
        &self.triplets
    }

    pub fn vectors(&self) -> &[EmbeddingVector] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.triplets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triplets.is_empty()
    }

    pub fn config(&self) -> &SimilarityConfig {
        &self.config
    }

    pub fn corpus_stats(&self) -> &CorpusStats {
        &self.corpus_stats
    }

    pub fn embedder(&self) -> &Embedder {
        &self.embedder
    }

    /// Scores arbitrary text against a question with this graph's metric and
    /// vocabulary statistics.
    pub fn scorer(&self, question: &str) -> Result<TextScorer<'_>, SimilarityError> {
        Ok(match self.config.metric {
            Metric::Cosine => TextScorer::Cosine {
                query: self.embedder.embed(question)?,
                embedder: &self.embedder,
            },
            Metric::Bm25 => TextScorer::Bm25 {
                query: tokenize(question),
                stats: &self.corpus_stats,
                k1: self.config.bm25_k1,
                b: self.config.bm25_b,
            },
        })
    }

    fn score_triplet(&self, scorer: &TextScorer<'_>, i: usize) -> Result<f64, SimilarityError> {
        match scorer {
            TextScorer::Cosine { query, .. } => cosine_sim(query, &self.vectors[i]),
            TextScorer::Bm25 { query, stats, k1, b } => Ok(self.bm25_docs[i].score(query, stats, *k1, *b)),
        }
    }

    /// Top-`l` triplets for the question. With a scope, only triplets of
    /// in-scope tables are candidates.
    pub fn retrieve(
        &self,
        question: &str,
        l: usize,
        scope: Option<&BTreeSet<TableId>>,
    ) -> Result<StructuralResult, SimilarityError> {
        let scorer = self.scorer(question)?;
        let mut candidates = Vec::new();
        let mut push_range = |range: Range<usize>| -> Result<(), SimilarityError> {
            for i in range {
                let t = &self.triplets[i];
                candidates.push((self.score_triplet(&scorer, i)?, (t.table, t.field, i)));
            }
            Ok(())
        };
        match scope {
            Some(s) => {
                for tid in s {
                    if let Some(r) = self.table_ranges.get(tid.index()) {
                        push_range(r.clone())?;
                    }
                }
            }
            None => push_range(0..self.triplets.len())?,
        }
        let top = top_k_by(candidates, l, |a, b| by_score_desc(*a, *b));
        let tables = top.iter().map(|(_, (t, _, _))| *t).collect();
        Ok(StructuralResult {
            ranked_triplets: top.into_iter().map(|(s, (_, _, i))| (i, s)).collect(),
            tables,
        })
    }

    /// One `{column, table, surface}` object per line.
    pub fn export_jsonl(&self, catalog: &SchemaCatalog) -> String {
        let mut out = String::new();
        for t in &self.triplets {
            let line = serde_json::json!({
                "column": catalog.column(t.field).name,
                "table": catalog.table(t.table).name,
                "surface": t.surface,
            });
            out.push_str(&line.to_string());
            out.push('\n');
        }
        out
    }
}

/// A question prepared for scoring candidate texts.
pub enum TextScorer<'a> {
    Cosine {
        query: EmbeddingVector,
        embedder: &'a Embedder,
    },
    Bm25 {
        query: Vec<String>,
        stats: &'a CorpusStats,
        k1: f64,
        b: f64,
    },
}

impl TextScorer<'_> {
    pub fn score_text(&self, text: &str) -> Result<f64, SimilarityError> {
        match self {
            TextScorer::Cosine { query, embedder } => cosine_sim(query, &embedder.embed(text)?),
            TextScorer::Bm25 { query, stats, k1, b } => Ok(Bm25Doc::new(text).score(query, stats, *k1, *b)),
        }
    }
}

pub fn build_knowledge_graph(catalog: &SchemaCatalog, config: &SimilarityConfig) -> Result<KnowledgeGraph, SimilarityError> {
    KnowledgeGraph::build(catalog, config)
}

pub fn retrieve_structural(
    graph: &KnowledgeGraph,
    question: &str,
    l: usize,
    scope: Option<&BTreeSet<TableId>>,
) -> Result<StructuralResult, SimilarityError> {
    graph.retrieve(question, l, scope)
}
