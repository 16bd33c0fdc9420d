//! End-to-end retrieval: contextual and structural retrieval run side by side
//! for each scheduled iteration, their table sets are combined into the next
//! scope, and the final scope is handed to the relational ranker.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{SchemaCatalog, TableId};
use crate::contextual::{ChunkIndex, ContextualResult, ScopeMode};
use crate::relational::{build_hypergraph, hypergraph_rank, RankingConfig, RelationalError, SemanticEntity};
use crate::similarity::{SimilarityConfig, SimilarityError};
use crate::structural::{KnowledgeGraph, StructuralResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub k: usize,
    pub l: usize,
    pub h: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScopeCombine {
    #[default]
    Union,
    Intersection,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationSchedule {
    pub steps: Vec<Step>,
    #[serde(default)]
    pub scope_combine: ScopeCombine,
}

impl IterationSchedule {
    pub fn new(steps: Vec<Step>) -> Self {
        Self {
            steps,
            scope_combine: ScopeCombine::Union,
        }
    }

    /// Shorthand for `[(k, l, h), ...]` with union combine.
    pub fn from_triples(triples: &[(usize, usize, usize)]) -> Self {
        Self::new(triples.iter().map(|&(k, l, h)| Step { k, l, h }).collect())
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.steps.is_empty() {
            return Err(PipelineError::InvalidSchedule("schedule has no steps".into()));
        }
        for (i, s) in self.steps.iter().enumerate() {
            if s.k == 0 || s.l == 0 || s.h == 0 {
                return Err(PipelineError::InvalidSchedule(format!("step {}: k, l and h must be at least 1", i + 1)));
            }
        }
        for (i, w) in self.steps.windows(2).enumerate() {
            if w[1].k > w[0].k || w[1].l > w[0].l {
                return Err(PipelineError::InvalidSchedule(format!(
                    "step {}: k and l must not increase across steps",
                    i + 2
                )));
            }
        }
        Ok(())
    }

    pub fn final_step(&self) -> Step {
        *self.steps.last().expect("validated schedule has a step")
    }
}

/// Upper bound on relevant-set size assumed by [`default_schedule`].
pub const DEFAULT_RELEVANT_BOUND: usize = 8;

/// Three-step narrowing schedule scaled to the catalog size; final `h` is
/// twice [`DEFAULT_RELEVANT_BOUND`].
pub fn default_schedule(catalog_size: usize) -> IterationSchedule {
    default_schedule_with_bound(catalog_size, DEFAULT_RELEVANT_BOUND)
}

pub fn default_schedule_with_bound(catalog_size: usize, relevant_bound: usize) -> IterationSchedule {
    let n = catalog_size.max(1);
    let h = (2 * relevant_bound).max(1);
    let steps = [(4, 2), (8, 4), (16, 8)]
        .iter()
        .map(|&(kd, ld)| Step {
            k: (n / kd).max(1),
            l: (3 * n / ld).max(1),
            h,
        })
        .collect();
    IterationSchedule::new(steps)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

/// Everything that shapes one retrieval besides the question and indexes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub schedule: IterationSchedule,
    pub similarity: SimilarityConfig,
    pub ranking: RankingConfig,
    pub contextual_scope_mode: ScopeMode,
    /// Table names the relational ranker must treat as unavailable.
    pub unavailable_tables: Vec<String>,
    pub execution: Execution,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            schedule: IterationSchedule::from_triples(&[(64, 256, 16), (32, 128, 16), (16, 64, 16)]),
            similarity: SimilarityConfig::default(),
            ranking: RankingConfig::default(),
            contextual_scope_mode: ScopeMode::IntersectTables,
            unavailable_tables: Vec::new(),
            execution: Execution::Parallel,
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("scope collapsed at iteration {step}")]
    ScopeCollapsed { step: usize },
    #[error("unavailable_tables names unknown table '{0}'")]
    UnknownTable(String),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
    #[error(transparent)]
    Relational(#[from] RelationalError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageTrace {
    pub iteration: usize,
    pub contextual_tables: BTreeSet<TableId>,
    pub structural_tables: BTreeSet<TableId>,
    pub scope: BTreeSet<TableId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalOutput {
    pub entities: Vec<SemanticEntity>,
    pub tables: BTreeSet<TableId>,
    pub per_stage: Vec<StageTrace>,
    /// Stage name -> microseconds, summed over iterations.
    pub timings: BTreeMap<String, u64>,
}

impl RetrievalOutput {
    /// JSON of everything except timings; equal for equal retrievals.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(&(&self.entities, &self.tables, &self.per_stage)).expect("output serializes")
    }
}

pub const STAGE_CONTEXTUAL: &str = "contextual";
pub const STAGE_STRUCTURAL: &str = "structural";
pub const STAGE_RELATIONAL: &str = "relational";
pub const STAGE_TOTAL: &str = "total";

/// Catalog plus the two prebuilt indexes over it.
#[derive(Debug)]
pub struct RetrievalIndexes {
    pub catalog: SchemaCatalog,
    pub chunks: ChunkIndex,
    pub graph: KnowledgeGraph,
}

impl RetrievalIndexes {
    pub fn build(
        catalog: SchemaCatalog,
        trace: &[crate::contextual::TraceEntry],
        similarity: &SimilarityConfig,
    ) -> Result<Self, crate::contextual::ContextualError> {
        let chunks = ChunkIndex::build(trace, &catalog, similarity)?;
        let graph = KnowledgeGraph::build(&catalog, similarity)?;
        Ok(Self { catalog, chunks, graph })
    }

    pub fn run(&self, question: &str, config: &PipelineConfig) -> Result<RetrievalOutput, PipelineError> {
        run_pipeline(question, &self.chunks, &self.graph, &self.catalog, config)
    }
}

fn micros(start: Instant) -> u64 {
    start.elapsed().as_micros() as u64
}

type Timed<T> = (Result<T, SimilarityError>, u64);

fn first_stage(
    question: &str,
    chunks: &ChunkIndex,
    graph: &KnowledgeGraph,
    step: Step,
    scope: Option<&BTreeSet<TableId>>,
    config: &PipelineConfig,
) -> (Timed<ContextualResult>, Timed<StructuralResult>) {
    let contextual = || {
        let t = Instant::now();
        let r = chunks.retrieve_with_mode(question, step.k, scope, config.contextual_scope_mode);
        (r, micros(t))
    };
    let structural = || {
        let t = Instant::now();
        let r = graph.retrieve(question, step.l, scope);
        (r, micros(t))
    };
    match config.execution {
        Execution::Parallel => rayon::join(contextual, structural),
        Execution::Sequential => (contextual(), structural()),
    }
}

/// Runs every scheduled iteration and ranks the final scope.
pub fn run_pipeline(
    question: &str,
    chunks: &ChunkIndex,
    graph: &KnowledgeGraph,
    catalog: &SchemaCatalog,
    config: &PipelineConfig,
) -> Result<RetrievalOutput, PipelineError> {
    let started = Instant::now();
    let schedule = &config.schedule;
    schedule.validate()?;
    let unavailable = config
        .unavailable_tables
        .iter()
        .map(|name| catalog.lookup_table(name).ok_or_else(|| PipelineError::UnknownTable(name.clone())))
        .collect::<Result<Vec<_>, _>>()?;

    let mut timings: BTreeMap<String, u64> = [STAGE_CONTEXTUAL, STAGE_STRUCTURAL, STAGE_RELATIONAL]
        .iter()
        .map(|s| (s.to_string(), 0))
        .collect();
    let mut per_stage = Vec::with_capacity(schedule.steps.len());
    let mut scope: Option<BTreeSet<TableId>> = None;

    for (i, &step) in schedule.steps.iter().enumerate() {
        let ((ctx, ctx_us), (st, st_us)) = first_stage(question, chunks, graph, step, scope.as_ref(), config);
        let (ctx, st) = (ctx?, st?);
        *timings.get_mut(STAGE_CONTEXTUAL).unwrap() += ctx_us;
        *timings.get_mut(STAGE_STRUCTURAL).unwrap() += st_us;

        let combined: BTreeSet<TableId> = match schedule.scope_combine {
            ScopeCombine::Union => ctx.tables.union(&st.tables).copied().collect(),
            ScopeCombine::Intersection => ctx.tables.intersection(&st.tables).copied().collect(),
        };
        if combined.is_empty() {
            return Err(PipelineError::ScopeCollapsed { step: i + 1 });
        }
        per_stage.push(StageTrace {
            iteration: i + 1,
            contextual_tables: ctx.tables,
            structural_tables: st.tables,
            scope: combined.clone(),
        });
        scope = Some(combined);
    }

    let t = Instant::now();
    let final_scope = scope.expect("at least one step ran");
    let ranking = RankingConfig {
        h: schedule.final_step().h,
        ..config.ranking.clone()
    };
    let mut hypergraph = build_hypergraph(&final_scope, catalog, &ranking)?;
    for tid in unavailable {
        hypergraph.set_available(tid, false);
    }
    let scorer = graph.scorer(question)?;
    let entities = hypergraph_rank(&hypergraph, catalog, &scorer, &ranking)?;
    *timings.get_mut(STAGE_RELATIONAL).unwrap() += micros(t);
    timings.insert(STAGE_TOTAL.to_string(), micros(started));

    let tables = entities.iter().map(|e| e.table).collect();
    Ok(RetrievalOutput {
        entities,
        tables,
        per_stage,
        timings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_validation() {
        assert!(IterationSchedule::from_triples(&[]).validate().is_err());
        assert!(IterationSchedule::from_triples(&[(4, 8, 6), (2, 4, 4)]).validate().is_ok());
        assert!(IterationSchedule::from_triples(&[(2, 8, 6), (4, 4, 4)]).validate().is_err());
        assert!(IterationSchedule::from_triples(&[(2, 8, 6), (2, 9, 4)]).validate().is_err());
        assert!(IterationSchedule::from_triples(&[(0, 8, 6)]).validate().is_err());
    }

    #[test]
    fn default_schedule_shapes() {
        let s = default_schedule(50);
        assert_eq!(s.steps.len(), 3);
        assert!(s.validate().is_ok());
        assert!(s.steps.windows(2).all(|w| w[1].k <= w[0].k));
        assert_eq!(s.final_step().h, 2 * DEFAULT_RELEVANT_BOUND);

        let tiny = default_schedule(1);
        assert!(tiny.steps.iter().all(|st| st.k >= 1 && st.l >= 1 && st.h >= 1));
        assert!(tiny.validate().is_ok());

        let big = default_schedule(246);
        assert!(big.steps[0].k >= s.steps[0].k);
        assert!(big.steps[0].l >= s.steps[0].l);
    }

    #[test]
    fn config_json_defaults() {
        let c: PipelineConfig = serde_json::from_str(
            r#"{"schedule": {"steps": [{"k": 3, "l": 5, "h": 2}], "scope_combine": "intersection"},
                "unavailable_tables": ["orders"]}"#,
        )
        .unwrap();
        assert_eq!(c.schedule.scope_combine, ScopeCombine::Intersection);
        assert_eq!(c.similarity, SimilarityConfig::default());
        assert_eq!(c.unavailable_tables, vec!["orders"]);
    }
}
