//! Scores the joint method and each of its ablations on one held-out step.

use dyngraph::baselines::Method;
use dyngraph::dataset::Dataset;
use dyngraph::evaluation::{run_method, Holdout};
use dyngraph::features::FeatureSpec;
use dyngraph::objective::Hyperparameters;
use dyngraph::optimizer::OptimizerConfig;
use dyngraph::synthetic::{generate, GeneratorConfig};

fn main() -> dyngraph::Result<()> {
    let seed = std::env::args().nth(1).map_or(0, |s| s.parse().expect("seed must be an integer"));
    let (graphs, _) = generate(&GeneratorConfig { seed, ..Default::default() })?;
    let ds = Dataset::new(graphs, None)?;
    let holdout = Holdout::split(&ds, ds.graphs.len() - 1, &FeatureSpec::default())?;
    let h = Hyperparameters {
        tau: 1e-3,
        ..Default::default()
    };

    let show = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.6}"));
    println!("{:<16} {:>10} {:>10}", "method", "features", "graph");
    for method in Method::ALL {
        let run = run_method(method, &holdout, &h, &OptimizerConfig::default())?;
        println!("{:<16} {:>10} {:>10}", method.as_str(), show(run.entry.feature), show(run.entry.graph));
    }
    Ok(())
}
