//! Mean and spread of the held-out errors of every method over generated
//! replications, each tuned by cross-validation on its own training window.
//!
//! ```text
//! cargo run --release --example bootstrap_table -- [replications] [out_dir]
//! ```

use std::path::PathBuf;

use dyngraph::baselines::Method;
use dyngraph::dataset::write_table;
use dyngraph::evaluation::{bootstrap_table, paired_fraction, Metric, Summary, TableConfig};

fn main() -> dyngraph::Result<()> {
    let mut args = std::env::args().skip(1);
    let replications = args.next().map_or(5, |s| s.parse().expect("replications must be an integer"));
    let cfg = TableConfig {
        replications,
        ..Default::default()
    };
    let table = bootstrap_table(&cfg)?;

    let show = |s: Option<Summary>| s.map_or_else(|| "-".to_string(), |s| format!("{:.5} ± {:.5}", s.mean, s.std));
    println!("{:<16} {:>20} {:>20}", "method", "features", "graph");
    for row in &table.rows {
        println!("{:<16} {:>20} {:>20}", row.method.as_str(), show(row.feature), show(row.graph));
    }
    let share = |a, b, m| paired_fraction(&table.records, a, b, m, true).unwrap_or(f64::NAN);
    println!(
        "hybrid beats lambda=0 on features in {:.0}% of replications",
        100.0 * share(Method::Hybrid, Method::LambdaZero, Metric::Feature)
    );

    if let Some(dir) = args.next().map(PathBuf::from) {
        dyngraph::dataset::create_dir(&dir)?;
        write_table(&dir, &table)?;
        println!("wrote table.csv and records.csv to {}", dir.display());
    }
    Ok(())
}
