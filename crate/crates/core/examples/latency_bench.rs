//! Time end-to-end retrieval on the largest synthetic catalog.

use csr_rag::eval::{generate_synthetic, latency_bench, GeneratorProfile};
use csr_rag::pipeline::{default_schedule, PipelineConfig, RetrievalIndexes};
use csr_rag::SimilarityConfig;

fn main() {
    let workload = generate_synthetic(&GeneratorProfile::group(4)).unwrap();
    let indexes = RetrievalIndexes::build(workload.catalog.clone(), &workload.trace, &SimilarityConfig::default()).unwrap();
    let config = PipelineConfig {
        schedule: default_schedule(workload.catalog.table_count()),
        ..PipelineConfig::default()
    };
    let questions: Vec<String> = workload.trace.iter().map(|e| e.question.clone()).collect();
    let report = latency_bench(&indexes, &config, &questions, 200).unwrap();
    println!("p50 {:.2} ms  p90 {:.2} ms  p99 {:.2} ms  mean {:.2} ms", report.p50, report.p90, report.p99, report.mean);
    for (stage, ms) in &report.per_stage_means {
        println!("  {stage:<11} {ms:.2} ms");
    }
}
