//! Request and response payloads shared by the CLI and the HTTP service.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pipeline::{IterationSchedule, PipelineConfig, PipelineError, RetrievalIndexes, RetrievalOutput};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryRequest {
    pub question: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule_override: Option<IterationSchedule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_entities: Option<usize>,
}

impl QueryRequest {
    pub fn new(question: impl Into<String>) -> Self {
        Self {
            question: question.into(),
            schedule_override: None,
            max_entities: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityScore {
    /// `table.column`
    pub entity: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResponse {
    pub entities: Vec<EntityScore>,
    /// Names of the entities' tables, in catalog order.
    pub tables: Vec<String>,
    pub stage_timings_ms: BTreeMap<String, f64>,
    pub schema_version: String,
}

impl QueryResponse {
    /// The payload with timings cleared, for comparing two retrievals.
    pub fn without_timings(&self) -> Self {
        Self {
            stage_timings_ms: BTreeMap::new(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Error)]
pub enum QueryError {
    #[error("question is empty")]
    EmptyQuestion,
    #[error("max_entities must be at least 1")]
    ZeroEntities,
    #[error("{0}")]
    InvalidSchedule(String),
    #[error("scope collapsed at iteration {step}")]
    ScopeCollapsed { step: usize },
    #[error("{0}")]
    Internal(String),
}

impl QueryError {
    /// Stable machine-readable error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            QueryError::EmptyQuestion => "empty_question",
            QueryError::ZeroEntities => "invalid_request",
            QueryError::InvalidSchedule(_) => "invalid_schedule",
            QueryError::ScopeCollapsed { .. } => "scope_collapsed",
            QueryError::Internal(_) => "internal",
        }
    }

    pub fn is_client_error(&self) -> bool {
        matches!(
            self,
            QueryError::EmptyQuestion | QueryError::ZeroEntities | QueryError::InvalidSchedule(_)
        )
    }
}

impl From<PipelineError> for QueryError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::ScopeCollapsed { step } => QueryError::ScopeCollapsed { step },
            PipelineError::InvalidSchedule(m) => QueryError::InvalidSchedule(m),
            PipelineError::UnknownTable(_) => QueryError::InvalidSchedule(e.to_string()),
            other => QueryError::Internal(other.to_string()),
        }
    }
}

/// Converts a pipeline output into the wire payload.
pub fn to_response(
    indexes: &RetrievalIndexes,
    output: &RetrievalOutput,
    max_entities: Option<usize>,
    schema_version: &str,
) -> QueryResponse {
    let catalog = &indexes.catalog;
    let keep = max_entities.unwrap_or(usize::MAX).min(output.entities.len());
    let kept = &output.entities[..keep];
    let entities = kept
        .iter()
        .map(|e| EntityScore {
            entity: format!("{}.{}", catalog.table(e.table).name, catalog.column(e.column).name),
            score: e.score,
        })
        .collect();
    let tables: std::collections::BTreeSet<_> = kept.iter().map(|e| e.table).collect();
    QueryResponse {
        entities,
        tables: tables.iter().map(|&t| catalog.table(t).name.clone()).collect(),
        stage_timings_ms: output
            .timings
            .iter()
            .map(|(k, &us)| (k.clone(), us as f64 / 1e3))
            .collect(),
        schema_version: schema_version.to_string(),
    }
}

/// Answers one request against loaded indexes.
pub fn respond(
    indexes: &RetrievalIndexes,
    config: &PipelineConfig,
    schema_version: &str,
    request: &QueryRequest,
) -> Result<QueryResponse, QueryError> {
    let question = request.question.trim();
    if question.is_empty() {
        return Err(QueryError::EmptyQuestion);
    }
    if request.max_entities == Some(0) {
        return Err(QueryError::ZeroEntities);
    }
    let config = match &request.schedule_override {
        Some(s) => {
            s.validate()?;
            PipelineConfig {
                schedule: s.clone(),
                ..config.clone()
            }
        }
        None => config.clone(),
    };
    let output = indexes.run(question, &config)?;
    Ok(to_response(indexes, &output, request.max_entities, schema_version))
}
