//! Samples the curvature of the coupled part of the objective inside and
//! far outside the ball on which it is jointly convex.

use dyngraph::objective::Hyperparameters;
use dyngraph::optimizer::{check_convexity, convexity_radius};

fn main() -> dyngraph::Result<()> {
    let h = Hyperparameters {
        kappa: 1.0,
        nu: 1.0,
        lambda: 0.1,
        ..Default::default()
    };
    for n in [5, 20, 100] {
        let r = convexity_radius(&h, n)?;
        let report = check_convexity(&h, n, 200, 0)?;
        println!(
            "n {n:3}  R = {r:.4}  min curvature inside = {:.3e}  outside = {:.3e} ({} of {} negative)",
            report.min_curvature_inside,
            report.min_curvature_outside.unwrap_or(f64::NAN),
            report.negative_outside,
            report.samples
        );
        assert!(report.convex_inside());
    }
    Ok(())
}
