//! Label SQL with the tables and columns it touches.

use csr_rag::sql::{extract_relevant_set, tokenize_sql};
use csr_rag::SchemaCatalog;

const QUERIES: &[&str] = &[
    "SELECT c.full_name, SUM(oi.quantity) FROM customers c JOIN orders o ON o.customer_id = c.customer_id \
     JOIN order_items AS oi ON oi.order_id = o.order_id GROUP BY c.full_name",
    "SELECT category_name FROM categories -- every category",
    "WITH big AS (SELECT * FROM orders WHERE status = 'open') SELECT region_name FROM regions, big",
];

fn main() {
    let catalog = SchemaCatalog::from_json(include_str!("../tests/fixtures/shop/catalog.json")).unwrap();
    for sql in QUERIES {
        println!("{sql}");
        println!("  {} tokens", tokenize_sql(sql).unwrap().len());
        match extract_relevant_set(sql, &catalog) {
            Ok(set) => {
                let tables: Vec<&str> = set.tables.iter().map(|t| catalog.table(*t).name.as_str()).collect();
                let columns: Vec<String> = set
                    .columns
                    .iter()
                    .map(|&(t, c)| format!("{}.{}", catalog.table(t).name, catalog.column(c).name))
                    .collect();
                println!("  tables:  {}", tables.join(", "));
                println!("  columns: {}", columns.join(", "));
            }
            Err(e) => println!("  error: {e}"),
        }
    }
}
