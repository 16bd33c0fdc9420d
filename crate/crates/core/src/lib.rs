//! Schema retrieval for text-to-SQL over large relational catalogs.
//!
//! A question is routed through two first-stage retrievers that run side by
//! side, a contextual one over a trace of past question/SQL pairs and a
//! structural one over a column-level knowledge graph. Their table sets narrow
//! an iteration scope, and a hypergraph ranker over join keys picks the final
//! schema entities.

pub mod api;
pub mod artifacts;
pub mod catalog;
pub mod cli;
pub mod contextual;
pub mod eval;
pub mod pipeline;
pub mod rank;
pub mod relational;
pub mod service;
pub mod similarity;
pub mod sql;
pub mod structural;

pub use catalog::{ColumnId, SchemaCatalog, TableId};
pub use contextual::{ChunkIndex, TraceEntry};
pub use pipeline::{run_pipeline, IterationSchedule, PipelineConfig, RetrievalIndexes, RetrievalOutput};
pub use relational::SemanticEntity;
pub use similarity::SimilarityConfig;
pub use structural::KnowledgeGraph;

/// Any failure surfaced by the library's top-level entry points.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Catalog(#[from] catalog::CatalogError),
    #[error(transparent)]
    Sql(#[from] sql::SqlError),
    #[error(transparent)]
    Contextual(#[from] contextual::ContextualError),
    #[error(transparent)]
    Similarity(#[from] similarity::SimilarityError),
    #[error(transparent)]
    Relational(#[from] relational::RelationalError),
    #[error(transparent)]
    Pipeline(#[from] pipeline::PipelineError),
    #[error(transparent)]
    Artifact(#[from] artifacts::ArtifactError),
    #[error(transparent)]
    Eval(#[from] eval::EvalError),
}
