#![allow(dead_code)]

pub mod oracles;

use std::path::PathBuf;

use csr_rag::contextual::parse_trace;
use csr_rag::pipeline::RetrievalIndexes;
use csr_rag::{SchemaCatalog, SimilarityConfig, TraceEntry};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn shop_catalog() -> SchemaCatalog {
    SchemaCatalog::from_path(fixture("shop/catalog.json")).unwrap()
}

pub fn shop_trace() -> Vec<TraceEntry> {
    parse_trace(&std::fs::read_to_string(fixture("shop/trace.jsonl")).unwrap()).unwrap()
}

pub fn shop_indexes() -> RetrievalIndexes {
    RetrievalIndexes::build(shop_catalog(), &shop_trace(), &SimilarityConfig::default()).unwrap()
}

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const WORDS: &[&str] = &[
    "orders", "customers", "region", "total", "amount", "status", "product", "price", "ship", "date",
    "open", "count", "name", "store", "supplier", "stock", "invoice", "paid", "late", "city",
];

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn random_text(rng: &mut ChaCha8Rng, max_words: usize) -> String {
    let n = rng.gen_range(1..=max_words);
    (0..n).map(|_| *WORDS.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}

/// Catalog of 1..=`max_tables` tables with key columns, shared column
/// names, foreign keys to earlier tables and sparse descriptions.
pub fn random_catalog(rng: &mut ChaCha8Rng, max_tables: usize) -> SchemaCatalog {
    let n = rng.gen_range(1..=max_tables);
    let mut tables = Vec::new();
    for i in 0..n {
        let name = format!("{}_{i}", WORDS.choose(rng).unwrap());
        let mut columns = vec![serde_json::json!({"name": format!("{name}_id"), "primary_key": rng.gen_bool(0.8)})];
        let mut fks = Vec::new();
        let mut used = std::collections::BTreeSet::from([format!("{name}_id")]);
        if i > 0 {
            for _ in 0..rng.gen_range(0..=2usize) {
                let t = rng.gen_range(0..i);
                let target = tables_name(&tables, t);
                let col = format!("{target}_id");
                if used.insert(col.clone()) {
                    columns.push(serde_json::json!({"name": col}));
                    fks.push(serde_json::json!({"column": col, "ref_table": target, "ref_column": col}));
                }
            }
        }
        for _ in 0..rng.gen_range(0..=4usize) {
            let col = WORDS.choose(rng).unwrap().to_string();
            if used.insert(col.clone()) {
                let mut c = serde_json::json!({"name": col});
                if rng.gen_bool(0.3) {
                    c["description"] = serde_json::json!(random_text(rng, 3));
                }
                columns.push(c);
            }
        }
        let mut t = serde_json::json!({"name": name, "columns": columns, "foreign_keys": fks});
        if rng.gen_bool(0.4) {
            t["description"] = serde_json::json!(random_text(rng, 4));
        }
        tables.push(t);
    }
    SchemaCatalog::from_json(&serde_json::json!({ "tables": tables }).to_string()).unwrap()
}

fn tables_name(tables: &[serde_json::Value], i: usize) -> String {
    tables[i]["name"].as_str().unwrap().to_string()
}

/// 1..=`max_chunks` entries, each selecting one column from 1..=3 random tables.
pub fn random_trace(rng: &mut ChaCha8Rng, catalog: &SchemaCatalog, max_chunks: usize) -> Vec<TraceEntry> {
    let n = rng.gen_range(1..=max_chunks);
    (0..n)
        .map(|_| {
            let mut ids: Vec<usize> = (0..catalog.table_count()).collect();
            ids.shuffle(rng);
            ids.truncate(rng.gen_range(1..=3.min(catalog.table_count())));
            let t0 = &catalog.tables()[ids[0]];
            let col = &t0.columns[rng.gen_range(0..t0.columns.len())].name;
            let from: Vec<&str> = ids.iter().map(|&i| catalog.tables()[i].name.as_str()).collect();
            TraceEntry::new(
                random_text(rng, 5),
                format!("SELECT {}.{col} FROM {}", t0.name, from.join(", ")),
            )
        })
        .collect()
}
