//! Held-out errors of the joint method as the Laplacian weight `lambda`
//! (or, with `nu`, the graph weight at fixed `mu = tau / nu`) varies.
//!
//! ```text
//! cargo run --release --example parameter_sweep -- [lambda|nu] [replications] [epsilon]
//! ```

use dyngraph::evaluation::{median, sweep, SweepConfig, SweepParameter};
use dyngraph::synthetic::GeneratorConfig;

fn main() -> dyngraph::Result<()> {
    let mut args = std::env::args().skip(1);
    let parameter = match args.next().as_deref() {
        None | Some("lambda") => SweepParameter::Lambda,
        Some("nu") => SweepParameter::Nu,
        Some(other) => panic!("unknown parameter {other}; use lambda or nu"),
    };
    let replications = args.next().map_or(3, |s| s.parse().expect("replications must be an integer"));
    let epsilon = args.next().map_or(0.1, |s| s.parse().expect("epsilon must be a number"));
    let values = match parameter {
        SweepParameter::Lambda => vec![0.0, 1e-5, 1e-4, 1e-3, 1e-2],
        SweepParameter::Nu => vec![0.1, 0.5, 1.0, 2.0, 10.0],
    };
    let cfg = SweepConfig {
        generator: GeneratorConfig { epsilon, ..Default::default() },
        replications,
        values,
        ..Default::default()
    };
    let res = sweep(&cfg, parameter)?;
    println!("{parameter:?} sweep over seeds {:?} (epsilon {epsilon})", res.seeds);
    for p in &res.points {
        let f: Vec<f64> = p.feature.iter().flatten().copied().collect();
        let g: Vec<f64> = p.graph.iter().flatten().copied().collect();
        println!(
            "  {:9.3e}  median feature error {:.6}  median graph error {:.6}",
            p.value,
            median(&f).unwrap_or(f64::NAN),
            median(&g).unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
