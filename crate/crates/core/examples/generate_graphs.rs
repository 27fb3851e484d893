//! Draws a synthetic dynamic graph from drifting latent factors and writes
//! it to disk.
//!
//! ```text
//! cargo run --release --example generate_graphs -- [out_dir] [seed]
//! ```

use std::path::PathBuf;

use dyngraph::dataset::{read_dataset, write_dataset, Dataset};
use dyngraph::linalg::{frobenius_norm, numerical_rank, singular_values};
use dyngraph::synthetic::{generate, GeneratorConfig, RNG_ID};

fn main() -> dyngraph::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("dyngraph-example-data"));
    let seed = args.next().map_or(0, |s| s.parse().expect("seed must be an integer"));

    let cfg = GeneratorConfig { seed, ..Default::default() };
    let (graphs, latent) = generate(&cfg)?;

    println!("{} snapshots of {} nodes (seed {seed})", graphs.len(), graphs.n());
    for t in [0, graphs.len() / 2, graphs.len() - 1] {
        let a = graphs.get(t).as_matrix();
        let clean = &latent.u[t] * latent.v[t].transpose();
        println!(
            "  A_{:<3} |A|_F = {:8.2}  noiseless rank = {}  numerical rank of A = {}",
            t + 1,
            frobenius_norm(a),
            numerical_rank(&singular_values(&clean)),
            numerical_rank(&singular_values(a)),
        );
    }

    let ds = Dataset::new(graphs, None)?;
    let meta = write_dataset(&out, &ds, RNG_ID, Some(seed))?;
    let (back, _) = read_dataset(&out)?;
    assert_eq!(back.graphs.last().as_matrix(), ds.graphs.last().as_matrix());
    println!("wrote {} snapshots to {} and read them back", meta.t, out.display());
    Ok(())
}
