//! Run the full iterative retrieval and show how the scope narrows.

use csr_rag::contextual::parse_trace;
use csr_rag::pipeline::{IterationSchedule, PipelineConfig, RetrievalIndexes};
use csr_rag::{SchemaCatalog, SimilarityConfig};

fn main() {
    let catalog = SchemaCatalog::from_json(include_str!("../tests/fixtures/shop/catalog.json")).unwrap();
    let trace = parse_trace(include_str!("../tests/fixtures/shop/trace.jsonl")).unwrap();
    let indexes = RetrievalIndexes::build(catalog, &trace, &SimilarityConfig::default()).unwrap();
    let config = PipelineConfig {
        schedule: IterationSchedule::from_triples(&[(6, 12, 8), (3, 6, 6), (2, 4, 4)]),
        ..PipelineConfig::default()
    };

    let question = std::env::args().nth(1).unwrap_or_else(|| "units sold per region last year".into());
    let out = indexes.run(&question, &config).unwrap();
    let name = |t: &csr_rag::TableId| indexes.catalog.table(*t).name.clone();
    for stage in &out.per_stage {
        let scope: Vec<String> = stage.scope.iter().map(name).collect();
        println!("iteration {}: {}", stage.iteration, scope.join(", "));
    }
    for e in &out.entities {
        println!("{:.3}  {}", e.score, e.surface);
    }
    println!("timings (us): {:?}", out.timings);
}
