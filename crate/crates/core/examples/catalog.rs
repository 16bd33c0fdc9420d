//! Load a schema document and print its shape.

use csr_rag::SchemaCatalog;

fn main() {
    let catalog = SchemaCatalog::from_json(include_str!("../tests/fixtures/shop/catalog.json")).unwrap();
    for table in catalog.tables() {
        let cols: Vec<&str> = table.columns.iter().map(|c| c.name.as_str()).collect();
        println!("{:<12} {}", table.name, cols.join(", "));
    }
    for fk in catalog.foreign_keys() {
        println!(
            "fk {}.{} -> {}.{}",
            catalog.table(fk.from_table).name,
            catalog.column(fk.from_column).name,
            catalog.table(fk.to_table).name,
            catalog.column(fk.to_column).name
        );
    }
    let stats = catalog.stats();
    println!(
        "{} tables, {} columns, median FKs per table {}",
        stats.table_count, stats.column_count, stats.median_fk_per_table
    );
}
