//! Build the join hypergraph over a scope and rank table/column entities.

use csr_rag::relational::{build_hypergraph, hypergraph_rank, RankingConfig, WeightMode};
use csr_rag::structural::KnowledgeGraph;
use csr_rag::{SchemaCatalog, SimilarityConfig};

fn main() {
    let catalog = SchemaCatalog::from_json(include_str!("../tests/fixtures/shop/catalog.json")).unwrap();
    let graph = KnowledgeGraph::build(&catalog, &SimilarityConfig::default()).unwrap();
    let scope = catalog.table_ids().collect();
    let scorer = graph.scorer("customers and the regions they live in").unwrap();

    for mode in [WeightMode::Uniform, WeightMode::HyperedgeDegree] {
        let config = RankingConfig {
            h: 5,
            weight_mode: mode,
            ..RankingConfig::default()
        };
        let mut hg = build_hypergraph(&scope, &catalog, &config).unwrap();
        println!("{mode:?}: {} hyperedges", hg.hyperedges().len());
        for e in hg.hyperedges() {
            println!("  {} joins {} columns", e.key, e.members.len());
        }
        for e in hypergraph_rank(&hg, &catalog, &scorer, &config).unwrap() {
            println!("  {:.3}  {}", e.score, e.surface);
        }

        // An unavailable table drops out of the ranking entirely.
        hg.set_available(catalog.lookup_table("regions").unwrap(), false);
        let without: Vec<String> = hypergraph_rank(&hg, &catalog, &scorer, &config)
            .unwrap()
            .into_iter()
            .map(|e| e.surface)
            .collect();
        println!("  without regions: {}", without.join(" | "));
    }
}
