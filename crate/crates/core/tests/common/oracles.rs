//! Brute-force references: full scans and full sorts, no shared selection code.

use std::collections::BTreeSet;

use csr_rag::catalog::{ColumnId, SchemaCatalog, TableId};
use csr_rag::contextual::{ChunkId, ChunkIndex, ScopeMode};
use csr_rag::relational::{render_entity, Hypergraph, Operator, SemanticEntity};
use csr_rag::similarity::{cosine_sim, tokenize, Bm25Doc, Metric};
use csr_rag::structural::{KnowledgeGraph, TextScorer};

fn desc_then_stable(v: &mut [(f64, usize)]) {
    v.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
}

pub fn contextual(
    index: &ChunkIndex,
    question: &str,
    k: usize,
    scope: Option<&BTreeSet<TableId>>,
    mode: ScopeMode,
) -> (Vec<(ChunkId, f64)>, BTreeSet<TableId>) {
    let cfg = index.config();
    let mut scored: Vec<(f64, usize)> = Vec::new();
    for (i, c) in index.chunks().iter().enumerate() {
        if let (Some(s), ScopeMode::FilterChunks) = (scope, mode) {
            if c.relevant.tables.is_disjoint(s) {
                continue;
            }
        }
        let score = match cfg.metric {
            Metric::Cosine => cosine_sim(&index.embedder().embed(question).unwrap(), &c.vector).unwrap(),
            Metric::Bm25 => Bm25Doc::new(&c.contextualized).score(&tokenize(question), index.corpus_stats(), cfg.bm25_k1, cfg.bm25_b),
        };
        scored.push((score, i));
    }
    desc_then_stable(&mut scored);
    scored.truncate(k);
    let mut tables = BTreeSet::new();
    for &(_, i) in &scored {
        for t in &index.chunks()[i].relevant.tables {
            if scope.map_or(true, |s| s.contains(t)) {
                tables.insert(*t);
            }
        }
    }
    (scored.into_iter().map(|(s, i)| (ChunkId(i as u32), s)).collect(), tables)
}

pub fn structural(
    graph: &KnowledgeGraph,
    question: &str,
    l: usize,
    scope: Option<&BTreeSet<TableId>>,
) -> (Vec<(usize, f64)>, BTreeSet<TableId>) {
    let cfg = graph.config();
    let q = graph.embedder().embed(question).unwrap();
    let mut scored = Vec::new();
    for (i, t) in graph.triplets().iter().enumerate() {
        if scope.map_or(false, |s| !s.contains(&t.table)) {
            continue;
        }
        let score = match cfg.metric {
            Metric::Cosine => cosine_sim(&q, &graph.embedder().embed(&t.surface).unwrap()).unwrap(),
            Metric::Bm25 => Bm25Doc::new(&t.surface).score(&tokenize(question), graph.corpus_stats(), cfg.bm25_k1, cfg.bm25_b),
        };
        scored.push((score, i));
    }
    desc_then_stable(&mut scored);
    scored.truncate(l);
    let tables = scored.iter().map(|&(_, i)| graph.triplets()[i].table).collect();
    (scored.into_iter().map(|(s, i)| (i, s)).collect(), tables)
}

/// Node-major walk over every (node, hyperedge) pair, keeping incident ones.
pub fn algorithm1(
    hg: &Hypergraph,
    catalog: &SchemaCatalog,
    scorer: &TextScorer<'_>,
    h: usize,
    operator: Operator,
) -> Vec<SemanticEntity> {
    let mut scored_nodes: Vec<SemanticEntity> = Vec::new();
    for &v in hg.nodes() {
        for e in hg.hyperedges() {
            let columns: Vec<ColumnId> = e.members.iter().filter(|(t, _)| *t == v).map(|&(_, c)| c).collect();
            for c in columns {
                if !hg.is_available(v) {
                    continue;
                }
                let surface = render_entity(catalog.table(v), catalog.column(c), operator);
                let upsilon = scorer.score_text(&surface).unwrap();
                let w_v = hg.weight(v);
                let score = if w_v > 0.0 { upsilon / w_v } else { 0.0 };
                scored_nodes.push(SemanticEntity {
                    table: v,
                    column: c,
                    surface,
                    score,
                });
            }
        }
    }
    scored_nodes.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap()
            .then(a.table.cmp(&b.table))
            .then(a.column.cmp(&b.column))
    });
    scored_nodes.into_iter().take(h).collect()
}
