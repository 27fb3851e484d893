//! Temporal cross-validation: `kappa` from ridge regression and `mu` from
//! shrinkage on an expanding window, then optionally `(nu, lambda)` for
//! the joint method.
//!
//! ```text
//! cargo run --release --example cross_validation -- [--joint]
//! ```

use dyngraph::dataset::Dataset;
use dyngraph::evaluation::{cross_validate, CvGrid};
use dyngraph::features::FeatureSpec;
use dyngraph::objective::Hyperparameters;
use dyngraph::optimizer::OptimizerConfig;
use dyngraph::synthetic::{generate, GeneratorConfig};

fn main() -> dyngraph::Result<()> {
    let joint = std::env::args().any(|a| a == "--joint");
    let (graphs, _) = generate(&GeneratorConfig::default())?;
    let ds = Dataset::new(graphs, None)?;
    // keep the last snapshot out of model selection
    let train = ds.prefix(ds.graphs.len() - 1)?;
    let grid = CvGrid {
        stage2: joint,
        ..Default::default()
    };
    let res = cross_validate(
        &train,
        &grid,
        &Hyperparameters::default(),
        &FeatureSpec::default(),
        &OptimizerConfig::default(),
    )?;

    println!("validation times: {:?}", res.validation_times);
    for (k, e) in &res.kappa_surface {
        println!("  kappa {k:9.3e}  ridge feature error {e:.6}");
    }
    for (m, e) in &res.mu_surface {
        println!("  mu    {m:9.3e}  shrinkage graph error {e:.6}");
    }
    for p in &res.joint_surface {
        println!(
            "  nu {:9.3e} lambda {:9.3e}  feature {:.6} graph {:.6}",
            p.nu, p.lambda, p.feature, p.graph
        );
    }
    let h = res.hyperparameters;
    println!(
        "selected: kappa {} mu {} -> tau {} nu {} lambda {}",
        res.kappa_cv, res.mu_cv, h.tau, h.nu, h.lambda
    );
    Ok(())
}
