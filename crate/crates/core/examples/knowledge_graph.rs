//! Turn the schema into column triplets and search them.

use csr_rag::structural::KnowledgeGraph;
use csr_rag::{SchemaCatalog, SimilarityConfig};

fn main() {
    let catalog = SchemaCatalog::from_json(include_str!("../tests/fixtures/shop/catalog.json")).unwrap();
    let graph = KnowledgeGraph::build(&catalog, &SimilarityConfig::default()).unwrap();
    println!("{} triplets for {} columns", graph.len(), catalog.column_count());
    for t in graph.triplets().iter().take(3) {
        println!("  {}", t.surface);
    }

    let result = graph.retrieve("unit price of items in an order", 4, None).unwrap();
    for (i, score) in result.ranked_triplets {
        println!("{score:.3}  {}", graph.triplets()[i].surface);
    }
}
