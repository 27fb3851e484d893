#![allow(dead_code)]

use dyngraph::features::build_feature_map;
use dyngraph::objective::{Hyperparameters, TrainingData};
use dyngraph::optimizer::{ConstraintSet, Trace};
use dyngraph::synthetic::{generate, GeneratorConfig};

/// Small synthetic training window: `n` nodes, `t` snapshots, `q = 5`.
pub fn small_data(n: usize, t: usize, seed: u64) -> TrainingData {
    let (graphs, _) = generate(&GeneratorConfig {
        n,
        t,
        seed,
        ..Default::default()
    })
    .unwrap();
    let map = build_feature_map(&graphs, 2, 2).unwrap();
    TrainingData::from_graphs(graphs, map).unwrap()
}

/// Checks the optimizer contract on a finished trace: the accepted
/// objectives never increase and every recorded iterate lies in the set.
pub fn check_contract(trace: &Trace, h: &Hyperparameters, n: usize) -> Result<(), String> {
    let set = ConstraintSet::new(h, n);
    let mut prev = f64::INFINITY;
    for r in &trace.records {
        if r.accepted {
            if r.breakdown.total > prev {
                return Err(format!(
                    "objective rose at iteration {}: {prev} -> {}",
                    r.iteration, r.breakdown.total
                ));
            }
            prev = r.breakdown.total;
        }
        if r.s_min < 0.0 {
            return Err(format!("negative S entry {} at iteration {}", r.s_min, r.iteration));
        }
        if let Some(radius) = set.radius {
            if r.w_norm > radius + 1e-12 {
                return Err(format!("|W| = {} > R = {radius} at iteration {}", r.w_norm, r.iteration));
            }
        }
    }
    Ok(())
}
