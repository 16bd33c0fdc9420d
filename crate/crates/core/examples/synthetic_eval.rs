//! Generate a synthetic enterprise workload and sweep schedules over it.
//!
//! `cargo run --release --example synthetic_eval -- 2` picks the group size.

use csr_rag::eval::{generate_synthetic, run_sweep, sweep_schedules, write_sweep_csv, GeneratorProfile, SweepConfig};

fn main() {
    let group = std::env::args().nth(1).and_then(|g| g.parse().ok()).unwrap_or(1);
    let workload = generate_synthetic(&GeneratorProfile::group(group)).unwrap();
    let stats = workload.catalog.stats();
    println!(
        "# {} tables, {} columns, {} queries",
        stats.table_count,
        stats.column_count,
        workload.trace.len()
    );
    let config = SweepConfig {
        group: format!("g{group}"),
        ..SweepConfig::default()
    };
    let schedules = sweep_schedules(workload.catalog.table_count());
    let rows = run_sweep(&workload.catalog, &workload.trace, &schedules, &config).unwrap();
    write_sweep_csv(&rows, std::io::stdout()).unwrap();
}
