//! Contextual retrieval over ground-truth (question, SQL) chunks.
//!
//! Each chunk's question is contextualized with the names and descriptions of
//! the tables and columns its SQL touches, embedded, and scanned exhaustively
//! at query time. The retrieved chunks vote their relevant tables into the
//! result.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{SchemaCatalog, TableId};
use crate::rank::{by_score_desc, top_k_by};
use crate::similarity::{
    build_corpus_stats, cosine_sim, tokenize, Bm25Doc, CorpusStats, Embedder, EmbeddingVector, Metric,
    SimilarityConfig, SimilarityError,
};
use crate::sql::{extract_relevant_set, RelevantSet, SqlError};

pub const CONTEXT_SEPARATOR: &str = " | ";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChunkId(pub u32);

/// One line of a trace file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub question: String,
    pub sql: String,
    /// Manual relevant-table override; replaces the tables parsed from `sql`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tables: Option<Vec<String>>,
}

impl TraceEntry {
    pub fn new(question: impl Into<String>, sql: impl Into<String>) -> Self {
        Self {
            question: question.into(),
            sql: sql.into(),
            tables: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum ContextualError {
    #[error("trace is empty")]
    EmptyTrace,
    #[error("trace entry {index}: {source}")]
    Sql {
        index: usize,
        #[source]
        source: SqlError,
    },
    #[error("trace entry {index}: override names unknown table '{table}'")]
    UnknownOverrideTable { index: usize, table: String },
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
}

#[derive(Debug, Clone)]
pub struct Chunk {
    pub id: ChunkId,
    pub question: String,
    pub sql: String,
    pub relevant: RelevantSet,
    pub contextualized: String,
    pub vector: EmbeddingVector,
}

/// How an iteration scope constrains contextual retrieval.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScopeMode {
    /// Rank all chunks, then intersect the voted tables with the scope.
    #[default]
    IntersectTables,
    /// Rank only chunks with at least one in-scope table, then intersect.
    FilterChunks,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContextualResult {
    pub ranked_chunks: Vec<(ChunkId, f64)>,
    pub tables: BTreeSet<TableId>,
}

#[derive(Debug)]
pub struct ChunkIndex {
    chunks: Vec<Chunk>,
    bm25_docs: Vec<Bm25Doc>,
    config: SimilarityConfig,
    corpus_stats: Arc<CorpusStats>,
    embedder: Embedder,
}

/// `desc(S, D)` rendering for a relevant set, in catalog order.
pub fn describe_relevant(relevant: &RelevantSet, catalog: &SchemaCatalog) -> String {
    let mut entries = Vec::with_capacity(relevant.tables.len());
    for &tid in &relevant.tables {
        let table = catalog.table(tid);
        let mut entry = table.name.clone();
        if !table.description.is_empty() {
            entry.push_str(": ");
            entry.push_str(&table.description);
        }
        let cols: Vec<String> = relevant
            .columns
            .range((tid, crate::catalog::ColumnId(0))..=(tid, crate::catalog::ColumnId(u32::MAX)))
            .map(|&(_, cid)| {
                let c = catalog.column(cid);
                if c.description.is_empty() {
                    c.name.clone()
                } else {
                    format!("{}({})", c.name, c.description)
                }
            })
            .collect();
        if !cols.is_empty() {
            entry.push_str("; ");
            entry.push_str(&cols.join(", "));
        }
        entries.push(entry);
    }
    entries.join(CONTEXT_SEPARATOR)
}

/// `φ(q) = q + desc(S, D)` with the relevant set already known.
pub fn contextualize_relevant(question: &str, relevant: &RelevantSet, catalog: &SchemaCatalog) -> String {
    format!("{question}{CONTEXT_SEPARATOR}{}", describe_relevant(relevant, catalog))
}

/// Contextualizes a question with the schema elements its SQL references.
/// SQL the scanner cannot read contributes an empty description.
pub fn contextualize(question: &str, sql: &str, catalog: &SchemaCatalog) -> String {
    let relevant = extract_relevant_set(sql, catalog).unwrap_or_default();
    contextualize_relevant(question, &relevant, catalog)
}

/// Relevant set of trace entry `index`: the override tables when given,
/// otherwise everything its SQL references.
pub fn label_entry(index: usize, entry: &TraceEntry, catalog: &SchemaCatalog) -> Result<RelevantSet, ContextualError> {
    let parsed = extract_relevant_set(&entry.sql, catalog);
    match &entry.tables {
        None => parsed.map_err(|source| ContextualError::Sql { index, source }),
        Some(names) => {
            let mut tables = BTreeSet::new();
            for name in names {
                let tid = catalog
                    .lookup_table(name)
                    .ok_or_else(|| ContextualError::UnknownOverrideTable {
                        index,
                        table: name.clone(),
                    })?;
                tables.insert(tid);
            }
            let columns = parsed
                .map(|rs| rs.columns)
                .unwrap_or_default()
                .into_iter()
                .filter(|(t, _)| tables.contains(t))
                .collect();
            Ok(RelevantSet { tables, columns })
        }
    }
}

impl ChunkIndex {
    pub fn build(
        trace: &[TraceEntry],
        catalog: &SchemaCatalog,
        config: &SimilarityConfig,
    ) -> Result<Self, ContextualError> {
        if trace.is_empty() {
            return Err(ContextualError::EmptyTrace);
        }
        config.validate()?;
        let mut labeled = Vec::with_capacity(trace.len());
        for (i, entry) in trace.iter().enumerate() {
            let relevant = label_entry(i, entry, catalog)?;
            let contextualized = contextualize_relevant(&entry.question, &relevant, catalog);
            labeled.push((entry, relevant, contextualized));
        }
        let texts: Vec<String> = labeled.iter().map(|(_, _, c)| c.clone()).collect();
        let stats = Arc::new(build_corpus_stats(&texts));
        let embedder = config.embedder(stats.clone())?;
        let vectors = embedder.embed_batch(&texts)?;
        let chunks = labeled
            .into_iter()
            .zip(vectors)
            .enumerate()
            .map(|(i, ((entry, relevant, contextualized), vector))| Chunk {
                id: ChunkId(i as u32),
                question: entry.question.clone(),
                sql: entry.sql.clone(),
                relevant,
                contextualized,
                vector,
            })
            .collect();
        Self::from_parts(chunks, config.clone(), stats, embedder)
    }

    /// Reassembles an index from persisted parts.
    pub fn from_parts(
        chunks: Vec<Chunk>,
        config: SimilarityConfig,
        corpus_stats: Arc<CorpusStats>,
        embedder: Embedder,
    ) -> Result<Self, ContextualError> {
        if chunks.is_empty() {
            return Err(ContextualError::EmptyTrace);
        }
        let dim = embedder.dimension();
        if let Some(bad) = chunks.iter().find(|c| c.vector.dimension() != dim) {
            return Err(SimilarityError::DimensionMismatch {
                left: dim,
                right: bad.vector.dimension(),
            }
            .into());
        }
        let bm25_docs = chunks.iter().map(|c| Bm25Doc::new(&c.contextualized)).collect();
        Ok(Self {
            chunks,
            bm25_docs,
            config,
            corpus_stats,
            embedder,
        })
    }

    pub fn chunks(&self) -> &[Chunk] {
        &self.chunks
    }

    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
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

    /// `Sim(question, C_i)` for every chunk, in chunk order.
    pub fn score_all(&self, question: &str) -> Result<Vec<f64>, SimilarityError> {
        match self.config.metric {
            Metric::Cosine => {
                let q = self.embedder.embed(question)?;
                self.chunks.iter().map(|c| cosine_sim(&q, &c.vector)).collect()
            }
            Metric::Bm25 => {
                let q = tokenize(question);
                Ok(self
                    .bm25_docs
                    .iter()
                    .map(|d| d.score(&q, &self.corpus_stats, self.config.bm25_k1, self.config.bm25_b))
                    .collect())
            }
        }
    }

    /// Top-`k` chunks by similarity (ties by ascending chunk id) and the union
    /// of their relevant tables, restricted to `scope` when given.
    pub fn retrieve(
        &self,
        question: &str,
        k: usize,
        scope: Option<&BTreeSet<TableId>>,
    ) -> Result<ContextualResult, SimilarityError> {
        self.retrieve_with_mode(question, k, scope, ScopeMode::default())
    }

    pub fn retrieve_with_mode(
        &self,
        question: &str,
        k: usize,
        scope: Option<&BTreeSet<TableId>>,
        mode: ScopeMode,
    ) -> Result<ContextualResult, SimilarityError> {
        let scores = self.score_all(question)?;
        let candidates: Vec<(f64, ChunkId)> = self
            .chunks
            .iter()
            .zip(scores)
            .filter(|(c, _)| match (scope, mode) {
                (Some(s), ScopeMode::FilterChunks) => c.relevant.tables.iter().any(|t| s.contains(t)),
                _ => true,
            })
            .map(|(c, s)| (s, c.id))
            .collect();
        let top = top_k_by(candidates, k, |a, b| by_score_desc(*a, *b));
        let mut tables = BTreeSet::new();
        for &(_, id) in &top {
            tables.extend(self.chunks[id.0 as usize].relevant.tables.iter().copied());
        }
        if let Some(s) = scope {
            tables.retain(|t| s.contains(t));
        }
        Ok(ContextualResult {
            ranked_chunks: top.into_iter().map(|(s, id)| (id, s)).collect(),
            tables,
        })
    }
}

pub fn build_chunk_index(
    trace: &[TraceEntry],
    catalog: &SchemaCatalog,
    config: &SimilarityConfig,
) -> Result<ChunkIndex, ContextualError> {
    ChunkIndex::build(trace, catalog, config)
}

pub fn retrieve_contextual(
    index: &ChunkIndex,
    question: &str,
    k: usize,
    scope: Option<&BTreeSet<TableId>>,
) -> Result<ContextualResult, SimilarityError> {
    index.retrieve(question, k, scope)
}

/// Reads a JSONL trace file.
pub fn parse_trace(jsonl: &str) -> Result<Vec<TraceEntry>, serde_json::Error> {
    jsonl
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}
