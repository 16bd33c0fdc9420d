//! Write an index, serve it over HTTP and query it once.

use csr_rag::artifacts::{load_index, write_index};
use csr_rag::contextual::parse_trace;
use csr_rag::pipeline::{IterationSchedule, PipelineConfig, RetrievalIndexes};
use csr_rag::{service, SchemaCatalog, SimilarityConfig};

#[tokio::main]
async fn main() {
    let catalog = SchemaCatalog::from_json(include_str!("../tests/fixtures/shop/catalog.json")).unwrap();
    let trace = parse_trace(include_str!("../tests/fixtures/shop/trace.jsonl")).unwrap();
    let indexes = RetrievalIndexes::build(catalog, &trace, &SimilarityConfig::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let config = PipelineConfig {
        schedule: IterationSchedule::from_triples(&[(6, 12, 8), (3, 6, 6)]),
        ..PipelineConfig::default()
    };
    write_index(dir.path(), &indexes, &config).unwrap();

    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let url = format!("http://{}/v1/retrieve", listener.local_addr().unwrap());
    let (stop, stopped) = tokio::sync::oneshot::channel::<()>();
    let app = service::router(load_index(dir.path()).unwrap(), service::DEFAULT_MAX_CONCURRENCY);
    let server = tokio::spawn(service::serve(listener, app, async {
        let _ = stopped.await;
    }));

    let body = tokio::task::spawn_blocking(move || {
        ureq::post(&url)
            .send_json(serde_json::json!({ "question": "open orders by customer", "max_entities": 4 }))
            .unwrap()
            .into_string()
            .unwrap()
    })
    .await
    .unwrap();
    println!("{body}");

    let _ = stop.send(());
    server.await.unwrap().unwrap();
}
