mod common;

use std::collections::{BTreeMap, BTreeSet};

use csr_rag::catalog::{SchemaCatalog, TableId};
use csr_rag::contextual::{ChunkIndex, ScopeMode};
use csr_rag::eval::{generate_synthetic, GeneratorProfile};
use csr_rag::pipeline::{Execution, IterationSchedule, PipelineConfig, RetrievalIndexes, ScopeCombine, Step};
use csr_rag::relational::{build_hypergraph, hypergraph_rank, Hypergraph, RankingConfig, WeightMode};
use csr_rag::similarity::{cosine_sim, EmbeddingVector, Metric, SimilarityConfig};
use csr_rag::sql::extract_relevant_set;
use csr_rag::structural::KnowledgeGraph;
use proptest::prelude::*;
use rand::Rng;

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 48,
        ..ProptestConfig::default()
    }
}

fn metric(bm25: bool) -> SimilarityConfig {
    SimilarityConfig {
        metric: if bm25 { Metric::Bm25 } else { Metric::Cosine },
        ..SimilarityConfig::default()
    }
}

fn random_scope(rng: &mut rand_chacha::ChaCha8Rng, catalog: &SchemaCatalog) -> BTreeSet<TableId> {
    let mut s: BTreeSet<TableId> = catalog.table_ids().filter(|_| rng.gen_bool(0.5)).collect();
    if s.is_empty() {
        s.insert(TableId(0));
    }
    s
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn catalog_round_trips(seed in any::<u64>()) {
        let cat = common::random_catalog(&mut common::rng(seed), 20);
        let again = SchemaCatalog::from_json(&cat.to_json()).unwrap();
        prop_assert_eq!(&again, &cat);
        let stats = cat.stats();
        prop_assert_eq!(stats.column_count, cat.tables().iter().map(|t| t.columns.len()).sum::<usize>());
    }

    #[test]
    fn extraction_ignores_layout_and_stays_in_catalog(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let cat = common::random_catalog(&mut rng, 12);
        for entry in common::random_trace(&mut rng, &cat, 8) {
            let base = extract_relevant_set(&entry.sql, &cat).unwrap();
            prop_assert!(base.tables.iter().all(|t| t.index() < cat.table_count()));
            prop_assert!(base.columns.iter().all(|&(t, c)| cat.column(c).table == t));
            let noisy = format!("/* lead */ {}\n  -- trailing\n", entry.sql.replace(' ', "  \n\t"));
            prop_assert_eq!(extract_relevant_set(&noisy, &cat).unwrap(), base);
        }
    }

    #[test]
    fn alias_and_table_qualifiers_agree(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let cat = common::random_catalog(&mut rng, 10);
        let t = &cat.tables()[rng.gen_range(0..cat.table_count())];
        let c = &t.columns[rng.gen_range(0..t.columns.len())].name;
        let plain = extract_relevant_set(&format!("SELECT {0}.{1} FROM {0}", t.name, c), &cat).unwrap();
        let aliased = extract_relevant_set(&format!("SELECT a.{1} FROM {0} AS a", t.name, c), &cat).unwrap();
        prop_assert_eq!(plain, aliased);
    }

    #[test]
    fn cosine_is_symmetric_and_scale_free(a in proptest::collection::vec(-4.0f32..4.0, 8),
                                          b in proptest::collection::vec(-4.0f32..4.0, 8),
                                          s in 0.25f32..8.0) {
        let (u, v) = (EmbeddingVector::new(a.clone()), EmbeddingVector::new(b));
        let uv = cosine_sim(&u, &v).unwrap();
        prop_assert_eq!(uv, cosine_sim(&v, &u).unwrap());
        prop_assert!((-1.0..=1.0).contains(&uv));
        let scaled = EmbeddingVector::new(a.iter().map(|x| x * s).collect());
        prop_assert!((cosine_sim(&scaled, &v).unwrap() - uv).abs() < 1e-6);
    }

    #[test]
    fn contextual_tables_grow_with_k_and_respect_scope(seed in any::<u64>(), bm25 in any::<bool>()) {
        let mut rng = common::rng(seed);
        let cat = common::random_catalog(&mut rng, 12);
        let trace = common::random_trace(&mut rng, &cat, 16);
        let idx = ChunkIndex::build(&trace, &cat, &metric(bm25)).unwrap();
        let q = common::random_text(&mut rng, 4);
        let mut prev = BTreeSet::new();
        for k in 1..=idx.len() + 1 {
            let r = idx.retrieve(&q, k, None).unwrap();
            prop_assert!(prev.is_subset(&r.tables));
            prev = r.tables;
        }
        let scope = random_scope(&mut rng, &cat);
        for mode in [ScopeMode::IntersectTables, ScopeMode::FilterChunks] {
            let r = idx.retrieve_with_mode(&q, 4, Some(&scope), mode).unwrap();
            prop_assert!(r.tables.is_subset(&scope));
        }
    }

    #[test]
    fn structural_tables_grow_with_l(seed in any::<u64>(), bm25 in any::<bool>()) {
        let mut rng = common::rng(seed);
        let cat = common::random_catalog(&mut rng, 12);
        let g = KnowledgeGraph::build(&cat, &metric(bm25)).unwrap();
        prop_assert_eq!(g.len(), cat.column_count());
        let q = common::random_text(&mut rng, 4);
        let mut prev = BTreeSet::new();
        for l in 1..=g.len() {
            let r = g.retrieve(&q, l, None).unwrap();
            prop_assert!(prev.is_subset(&r.tables));
            prev = r.tables;
        }
    }

    #[test]
    fn ranking_length_scope_and_scale(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let cat = common::random_catalog(&mut rng, 12);
        let g = KnowledgeGraph::build(&cat, &SimilarityConfig::default()).unwrap();
        let scorer = g.scorer(&common::random_text(&mut rng, 4)).unwrap();
        let scope = random_scope(&mut rng, &cat);
        let h = rng.gen_range(1..30);
        let cfg = RankingConfig { h, ..RankingConfig::default() };
        let mut hg = build_hypergraph(&scope, &cat, &cfg).unwrap();
        let out = hypergraph_rank(&hg, &cat, &scorer, &cfg).unwrap();
        prop_assert_eq!(out.len(), h.min(hg.incidence_count()));
        for e in &out {
            prop_assert!(scope.contains(&e.table));
            prop_assert_eq!(cat.column(e.column).table, e.table);
        }

        // Doubling one node's weight halves each of its scores.
        let v = *scope.iter().next().unwrap();
        let all = RankingConfig { h: usize::MAX, ..cfg.clone() };
        let before: BTreeMap<_, f64> = hypergraph_rank(&hg, &cat, &scorer, &all).unwrap().into_iter().map(|e| ((e.table, e.column), e.score)).collect();
        hg.set_weight(v, 2.0);
        let after = hypergraph_rank(&hg, &cat, &scorer, &all).unwrap();
        for e in after {
            let b = before[&(e.table, e.column)];
            if e.table == v { prop_assert_eq!(e.score, b / 2.0) } else { prop_assert_eq!(e.score, b) }
        }

        // A common weight value leaves the order unchanged.
        let uniform = |w: f64| {
            let mut hg = build_hypergraph(&scope, &cat, &cfg).unwrap();
            for &t in &scope { hg.set_weight(t, w); }
            hypergraph_rank(&hg, &cat, &scorer, &all).unwrap().into_iter().map(|e| (e.table, e.column)).collect::<Vec<_>>()
        };
        prop_assert_eq!(uniform(1.0), uniform(3.5));
    }

    #[test]
    fn degree_weights_are_one_plus_degree(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let cat = common::random_catalog(&mut rng, 12);
        let scope: BTreeSet<TableId> = cat.table_ids().collect();
        let cfg = RankingConfig { weight_mode: WeightMode::HyperedgeDegree, ..RankingConfig::default() };
        let hg: Hypergraph = build_hypergraph(&scope, &cat, &cfg).unwrap();
        for &v in hg.nodes() {
            prop_assert_eq!(hg.weight(v), 1.0 + hg.degree(v) as f64);
        }
    }

    #[test]
    fn pipeline_scopes_chain_and_modes_agree(seed in any::<u64>(), intersect in any::<bool>()) {
        let mut rng = common::rng(seed);
        let cat = common::random_catalog(&mut rng, 16);
        let trace = common::random_trace(&mut rng, &cat, 24);
        let idx = RetrievalIndexes::build(cat.clone(), &trace, &SimilarityConfig::default()).unwrap();
        let k0 = rng.gen_range(1..=trace.len());
        let l0 = rng.gen_range(1..=cat.column_count());
        let mut schedule = IterationSchedule::new(vec![
            Step { k: k0, l: l0, h: 8 },
            Step { k: (k0 / 2).max(1), l: (l0 / 2).max(1), h: 8 },
            Step { k: (k0 / 4).max(1), l: (l0 / 4).max(1), h: rng.gen_range(1..12) },
        ]);
        if intersect { schedule.scope_combine = ScopeCombine::Intersection; }
        let par = PipelineConfig { schedule, ..PipelineConfig::default() };
        let seq = PipelineConfig { execution: Execution::Sequential, ..par.clone() };
        let q = common::random_text(&mut rng, 5);
        match (idx.run(&q, &par), idx.run(&q, &seq)) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(a.canonical_json(), b.canonical_json());
                for w in a.per_stage.windows(2) {
                    prop_assert!(w[1].scope.is_subset(&w[0].scope));
                }
                let entity_tables: BTreeSet<TableId> = a.entities.iter().map(|e| e.table).collect();
                prop_assert_eq!(&a.tables, &entity_tables);
                prop_assert!(a.tables.is_subset(&a.per_stage.last().unwrap().scope));
            }
            (Err(a), Err(b)) => prop_assert_eq!(a.to_string(), b.to_string()),
            (a, b) => prop_assert!(false, "modes disagree: {:?} vs {:?}", a.is_ok(), b.is_ok()),
        }
    }
}

#[test]
fn generator_seeds_are_deterministic_and_distinct() {
    let p = GeneratorProfile {
        table_count: 25,
        columns_per_table_mean: 12.0,
        query_count: 50,
        ..GeneratorProfile::group(1)
    };
    let a = generate_synthetic(&p).unwrap();
    let b = generate_synthetic(&p).unwrap();
    assert_eq!(a.catalog, b.catalog);
    assert_eq!(a.trace, b.trace);
    let c = generate_synthetic(&p.clone().with_seed(p.seed + 1)).unwrap();
    assert!(a.catalog != c.catalog || a.trace != c.trace);
}
