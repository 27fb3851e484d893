//! Fits the joint model on a generated sequence, holding out the last
//! snapshot, and prints the optimization trace.
//!
//! ```text
//! cargo run --release --example fit_joint_model -- [tau] [lambda]
//! ```

use dyngraph::baselines::Method;
use dyngraph::dataset::Dataset;
use dyngraph::evaluation::{run_method, Holdout};
use dyngraph::features::FeatureSpec;
use dyngraph::objective::Hyperparameters;
use dyngraph::optimizer::{convexity_radius, OptimizerConfig};
use dyngraph::synthetic::{generate, GeneratorConfig};

fn main() -> dyngraph::Result<()> {
    let args: Vec<f64> = std::env::args()
        .skip(1)
        .map(|a| a.parse().expect("arguments are numbers"))
        .collect();
    let h = Hyperparameters {
        tau: args.first().copied().unwrap_or(1e-3),
        lambda: args.get(1).copied().unwrap_or(1e-3),
        ..Default::default()
    };

    let (graphs, _) = generate(&GeneratorConfig::default())?;
    let ds = Dataset::new(graphs, None)?;
    let holdout = Holdout::split(&ds, ds.graphs.len() - 1, &FeatureSpec::default())?;
    let data = &holdout.data;
    println!(
        "n = {}, T = {}, q = {}, d = {}, radius = {}",
        data.n(),
        data.horizon(),
        data.q(),
        data.d(),
        convexity_radius(&h, data.n()).map_or("none".to_string(), |r| format!("{r:.3}"))
    );

    let run = run_method(Method::Hybrid, &holdout, &h, &OptimizerConfig::default())?;
    let (state, trace) = run.fit.expect("the joint method returns its fit");
    let every = (trace.records.len() / 10).max(1);
    println!("{:>6} {:>14} {:>10} {:>10} {:>10}", "iter", "objective", "grad", "|W|", "held-out");
    for r in trace.records.iter().step_by(every).chain(trace.records.last()) {
        println!(
            "{:6} {:14.6e} {:10.3e} {:10.4} {:10.6}",
            r.iteration,
            r.breakdown.total,
            r.grad_norm,
            r.w_norm,
            r.validation_error.unwrap_or(f64::NAN)
        );
    }
    println!(
        "{:?} after {} iterations; min S entry {:.3e}",
        trace.termination,
        trace.iterations(),
        state.s.as_matrix().min()
    );
    println!(
        "held-out relative error: features {:.6}, graph {:.6}",
        run.entry.feature.unwrap_or(f64::NAN),
        run.entry.graph.unwrap_or(f64::NAN)
    );
    Ok(())
}
