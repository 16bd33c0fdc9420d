//! Relational ranking over a per-query join hypergraph.
//!
//! Tables in the narrowed scope are nodes; each join group of key columns is a
//! hyperedge. Every (table, member column) incidence is rendered as a
//! `table.column` semantic entity, scored against the question, divided by the
//! node weight, and the best `h` entities are returned.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{Column, ColumnId, SchemaCatalog, Table, TableId};
use crate::similarity::SimilarityError;
use crate::structural::TextScorer;

#[derive(Debug, Error, PartialEq)]
pub enum RelationalError {
    #[error("hypergraph scope is empty")]
    EmptyScope,
    #[error("table {0} is not in the catalog")]
    UnknownTable(TableId),
    #[error("invalid hypergraph: {0}")]
    Invalid(String),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operator {
    #[default]
    ConcatNames,
    ConcatWithDescriptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    /// `w_v = 1` for every node.
    #[default]
    Uniform,
    /// `w_v = 1 + |hyperedges incident to v|`; damps hub tables.
    HyperedgeDegree,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RankingConfig {
    pub h: usize,
    pub operator: Operator,
    pub weight_mode: WeightMode,
}

impl Default for RankingConfig {
    fn default() -> Self {
        Self {
            h: 16,
            operator: Operator::ConcatNames,
            weight_mode: WeightMode::Uniform,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Hyperedge {
    /// Normalized name of the group's first member.
    pub key: String,
    /// Sorted by (table, column).
    pub members: Vec<(TableId, ColumnId)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hypergraph {
    nodes: BTreeSet<TableId>,
    hyperedges: Vec<Hyperedge>,
    weights: BTreeMap<TableId, f64>,
    availability: BTreeMap<TableId, bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticEntity {
    pub table: TableId,
    pub column: ColumnId,
    pub surface: String,
    pub score: f64,
}

impl Hypergraph {
    /// Assembles a hypergraph from explicit parts, checking its invariants.
    pub fn new(
        nodes: BTreeSet<TableId>,
        hyperedges: Vec<Hyperedge>,
        weights: BTreeMap<TableId, f64>,
        availability: BTreeMap<TableId, bool>,
    ) -> Result<Self, RelationalError> {
        for (i, e) in hyperedges.iter().enumerate() {
            if e.members.is_empty() {
                return Err(RelationalError::Invalid(format!("hyperedge {i} has no members")));
            }
            if let Some((t, _)) = e.members.iter().find(|(t, _)| !nodes.contains(t)) {
                return Err(RelationalError::Invalid(format!("hyperedge {i} touches {t}, which is not a node")));
            }
        }
        for v in &nodes {
            match weights.get(v) {
                Some(w) if *w >= 0.0 => {}
                Some(w) => return Err(RelationalError::Invalid(format!("negative weight {w} for {v}"))),
                None => return Err(RelationalError::Invalid(format!("no weight for {v}"))),
            }
        }
        let availability = nodes
            .iter()
            .map(|v| (*v, availability.get(v).copied().unwrap_or(true)))
            .collect();
        Ok(Self {
            nodes,
            hyperedges,
            weights,
            availability,
        })
    }

    pub fn nodes(&self) -> &BTreeSet<TableId> {
        &self.nodes
    }

    pub fn hyperedges(&self) -> &[Hyperedge] {
        &self.hyperedges
    }

    pub fn weight(&self, v: TableId) -> f64 {
        self.weights.get(&v).copied().unwrap_or(0.0)
    }

    pub fn is_available(&self, v: TableId) -> bool {
        self.availability.get(&v).copied().unwrap_or(false)
    }

    pub fn set_available(&mut self, v: TableId, available: bool) {
        if let Some(a) = self.availability.get_mut(&v) {
            *a = available;
        }
    }

    pub fn set_weight(&mut self, v: TableId, weight: f64) {
        if self.nodes.contains(&v) {
            self.weights.insert(v, weight.max(0.0));
        }
    }

    /// Number of hyperedges with at least one member in `v`.
    pub fn degree(&self, v: TableId) -> usize {
        self.hyperedges
            .iter()
            .filter(|e| e.members.iter().any(|(t, _)| *t == v))
            .count()
    }

    /// Number of (node, member column) incidences.
    pub fn incidence_count(&self) -> usize {
        self.hyperedges.iter().map(|e| e.members.len()).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("hypergraph serializes")
    }
}

fn normalize(name: &str) -> String {
    name.to_ascii_lowercase()
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Smaller index wins so roots are stable.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Key columns of `table`: primary keys and any column on either end of a foreign key.
fn key_columns(table: &Table, fk_targets: &HashSet<ColumnId>) -> Vec<ColumnId> {
    let fk_sources: HashSet<ColumnId> = table.foreign_keys.iter().map(|fk| fk.from_column).collect();
    table
        .columns
        .iter()
        .filter(|c| c.is_primary_key || fk_sources.contains(&c.id) || fk_targets.contains(&c.id))
        .map(|c| c.id)
        .collect()
}

/// Builds the join hypergraph over `scope`.
///
/// Join groups come from a union-find over the scope's key columns: both
/// endpoints of every in-scope foreign key are merged, and key columns with the
/// same normalized name are merged across tables. A table without any key
/// column contributes its first column as a singleton group so that it stays
/// reachable by the ranking.
pub fn build_hypergraph(
    scope: &BTreeSet<TableId>,
    catalog: &SchemaCatalog,
    config: &RankingConfig,
) -> Result<Hypergraph, RelationalError> {
    if scope.is_empty() {
        return Err(RelationalError::EmptyScope);
    }
    if let Some(t) = scope.iter().find(|t| t.index() >= catalog.table_count()) {
        return Err(RelationalError::UnknownTable(*t));
    }

    let fk_targets: HashSet<ColumnId> = catalog
        .foreign_keys()
        .filter(|fk| scope.contains(&fk.from_table))
        .map(|fk| fk.to_column)
        .collect();

    let mut members: Vec<(TableId, ColumnId)> = Vec::new();
    for &tid in scope {
        let table = catalog.table(tid);
        let keys = key_columns(table, &fk_targets);
        if keys.is_empty() {
            members.push((tid, table.columns[0].id));
        } else {
            members.extend(keys.into_iter().map(|c| (tid, c)));
        }
    }
    let slot: HashMap<ColumnId, usize> = members.iter().enumerate().map(|(i, &(_, c))| (c, i)).collect();
    let mut uf = UnionFind::new(members.len());

    for &tid in scope {
        for fk in &catalog.table(tid).foreign_keys {
            if let (Some(&a), Some(&b)) = (slot.get(&fk.from_column), slot.get(&fk.to_column)) {
                uf.union(a, b);
            }
        }
    }
    let mut by_name: HashMap<String, usize> = HashMap::new();
    for (i, &(_, cid)) in members.iter().enumerate() {
        let name = normalize(&catalog.column(cid).name);
        match by_name.get(&name) {
            Some(&first) => uf.union(first, i),
            None => {
                by_name.insert(name, i);
            }
        }
    }

    // `members` is sorted by (table, column), so each group's first member is its minimum.
    let mut groups: BTreeMap<usize, Vec<(TableId, ColumnId)>> = BTreeMap::new();
    for i in 0..members.len() {
        let root = uf.find(i);
        groups.entry(root).or_default().push(members[i]);
    }
    let mut hyperedges: Vec<Hyperedge> = groups
        .into_values()
        .map(|m| Hyperedge {
            key: normalize(&catalog.column(m[0].1).name),
            members: m,
        })
        .collect();
    hyperedges.sort_by_key(|e| e.members[0]);

    let mut degree: BTreeMap<TableId, usize> = scope.iter().map(|&t| (t, 0)).collect();
    for e in &hyperedges {
        let touched: BTreeSet<TableId> = e.members.iter().map(|(t, _)| *t).collect();
        for t in touched {
            *degree.get_mut(&t).expect("member table is in scope") += 1;
        }
    }
    let weights = degree
        .into_iter()
        .map(|(t, d)| {
            let w = match config.weight_mode {
                WeightMode::Uniform => 1.0,
                WeightMode::HyperedgeDegree => 1.0 + d as f64,
            };
            (t, w)
        })
        .collect();

    Hypergraph::new(scope.clone(), hyperedges, weights, BTreeMap::new())
}

/// Renders `v ⊗ e`. With descriptions, each non-empty description is appended
/// after an em-dash separator (column description first).
pub fn render_entity(table: &Table, column: &Column, operator: Operator) -> String {
    let mut s = format!("{}.{}", table.name, column.name);
    if operator == Operator::ConcatWithDescriptions {
        for d in [&column.description, &table.description] {
            if !d.is_empty() {
                s.push_str(" — ");
                s.push_str(d);
            }
        }
    }
    s
}

/// Scores every available incidence and returns the best `config.h`.
///
/// `score = Υ(v, e) / w_v` when `w_v > 0`, else exactly 0. Unavailable nodes
/// are skipped. Ties are broken by ascending (table, column).
pub fn hypergraph_rank(
    hypergraph: &Hypergraph,
    catalog: &SchemaCatalog,
    scorer: &TextScorer<'_>,
    config: &RankingConfig,
) -> Result<Vec<SemanticEntity>, RelationalError> {
    let mut scored = Vec::with_capacity(hypergraph.incidence_count());
    for edge in hypergraph.hyperedges() {
        for &(v, c) in &edge.members {
            if !hypergraph.is_available(v) {
                continue;
            }
            let surface = render_entity(catalog.table(v), catalog.column(c), config.operator);
            let w = hypergraph.weight(v);
            let score = if w > 0.0 { scorer.score_text(&surface)? / w } else { 0.0 };
            scored.push(SemanticEntity {
                table: v,
                column: c,
                surface,
                score,
            });
        }
    }
    let cmp = |a: &SemanticEntity, b: &SemanticEntity| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| (a.table, a.column).cmp(&(b.table, b.column)))
    };
    Ok(crate::rank::top_k_by(scored, config.h, cmp))
}
