//! Retrieve question/SQL chunks similar to a new question and collect the
//! tables their SQL touches.

use std::collections::BTreeSet;

use csr_rag::contextual::{parse_trace, ChunkIndex};
use csr_rag::{SchemaCatalog, SimilarityConfig};

fn main() {
    let catalog = SchemaCatalog::from_json(include_str!("../tests/fixtures/shop/catalog.json")).unwrap();
    let trace = parse_trace(include_str!("../tests/fixtures/shop/trace.jsonl")).unwrap();
    let index = ChunkIndex::build(&trace, &catalog, &SimilarityConfig::default()).unwrap();

    let question = "how much revenue did each product category bring in";
    let result = index.retrieve(question, 3, None).unwrap();
    for (id, score) in &result.ranked_chunks {
        let chunk = &index.chunks()[id.0 as usize];
        println!("{score:.3}  {}", chunk.question);
        println!("       {}", chunk.contextualized);
    }
    let names = |s: &BTreeSet<_>| s.iter().map(|t| catalog.table(*t).name.clone()).collect::<Vec<_>>().join(", ");
    println!("tables: {}", names(&result.tables));

    let scope = [catalog.lookup_table("products").unwrap(), catalog.lookup_table("categories").unwrap()].into();
    let narrowed = index.retrieve(question, 3, Some(&scope)).unwrap();
    println!("within products/categories: {}", names(&narrowed.tables));
}
