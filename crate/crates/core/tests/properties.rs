use dyngraph::baselines::{shrinkage_only, Method};
use dyngraph::dataset::{parse_records, parse_table, parse_triplets, render_records, render_table, render_triplets};
use dyngraph::evaluation::{relative_error, summarize, validation_times, SeedRecord, Summary};
use dyngraph::features::{apply_feature_map, build_descriptors, FeatureMap, FeatureSpec, GraphSequence};
use dyngraph::linalg::{
    laplacian, nuclear_norm, numerical_rank, project_sym_nonneg, shrink, singular_values, smoothed_nuclear,
    smoothed_nuclear_grad, Matrix, SymNonNegMatrix,
};
use dyngraph::objective::{laplacian_coupling, Hyperparameters, ModelState, PredictorTensor};
use dyngraph::optimizer::{convexity_radius, project, ConstraintSet};
use nalgebra::SymmetricEigen;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::Path;

fn matrix(rows: usize, cols: usize, seed: u64, scale: f64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Matrix::from_fn(rows, cols, |_, _| scale * (2.0 * rng.random::<f64>() - 1.0))
}

fn sym_nonneg(n: usize, seed: u64) -> SymNonNegMatrix {
    project_sym_nonneg(&matrix(n, n, seed, 1.0)).unwrap()
}

fn predictors(n: usize, d: usize, q: usize, seed: u64, scale: f64) -> PredictorTensor {
    PredictorTensor::from_blocks((0..n).map(|i| matrix(d, q, seed ^ (i as u64 * 7919), scale)).collect()).unwrap()
}

fn prox_value(s: &Matrix, a: &Matrix, mu: f64) -> f64 {
    0.5 * (s - a).norm_squared() + mu * nuclear_norm(s)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn smoothed_nuclear_is_sandwiched(rows in 1usize..8, cols in 1usize..8, seed: u64, eta in 1e-3f64..2.0) {
        let m = matrix(rows, cols, seed, 3.0);
        let g = smoothed_nuclear(&m, eta).unwrap();
        let nuc = nuclear_norm(&m);
        prop_assert!(g >= 0.0);
        prop_assert!(g <= nuc + 1e-12 * (1.0 + nuc));
        prop_assert!(nuc - g <= eta * rows.min(cols) as f64 / 2.0 + 1e-12 * (1.0 + nuc));
        let spectral = singular_values(&smoothed_nuclear_grad(&m, eta).unwrap()).first().copied().unwrap_or(0.0);
        prop_assert!(spectral <= 1.0 + 1e-10);
    }

    #[test]
    fn projection_is_idempotent_and_nonexpansive(n in 1usize..9, s1: u64, s2: u64) {
        let (m1, m2) = (matrix(n, n, s1, 2.0), matrix(n, n, s2, 2.0));
        let p1 = project_sym_nonneg(&m1).unwrap();
        let p2 = project_sym_nonneg(&m2).unwrap();
        prop_assert_eq!(project_sym_nonneg(p1.as_matrix()).unwrap(), p1.clone());
        prop_assert!((p1.as_matrix() - p2.as_matrix()).norm() <= (m1 - m2).norm() + 1e-12);
    }

    #[test]
    fn laplacian_is_positive_semidefinite(n in 1usize..10, seed: u64) {
        let s = sym_nonneg(n, seed);
        let eig = SymmetricEigen::new(laplacian(&s));
        prop_assert!(eig.eigenvalues.min() >= -1e-10 * (1.0 + s.as_matrix().norm()));
    }

    #[test]
    fn shrink_beats_nearby_points(n in 2usize..7, seed: u64, mu in 0.0f64..2.0) {
        let a = matrix(n, n, seed, 2.0);
        let s = shrink(&a, mu).unwrap();
        let best = prox_value(&s, &a, mu);
        for k in 0..20u64 {
            let r = matrix(n, n, seed.wrapping_add(k + 1), 1.0);
            prop_assert!(best <= prox_value(&(&s + 1e-3 * r), &a, mu) + 1e-12);
        }
    }

    #[test]
    fn shrinkage_reduces_nuclear_norm_by_mu_per_kept_direction(n in 2usize..8, seed: u64, mu in 0.0f64..1.5) {
        let a = sym_nonneg(n, seed);
        let out = shrinkage_only(a.as_matrix(), mu).unwrap();
        let rank = numerical_rank(&singular_values(&out));
        prop_assert!(nuclear_norm(&out) <= nuclear_norm(a.as_matrix()) - mu * rank as f64 + 1e-9);
    }

    #[test]
    fn coupling_is_nonnegative(n in 1usize..8, seed: u64) {
        let s = sym_nonneg(n, seed);
        let w = predictors(n, 3, 2, seed, 1.0);
        prop_assert!(laplacian_coupling(&w, &s).unwrap() >= 0.0);
    }

    #[test]
    fn constraint_projection_lands_in_set_and_is_idempotent(
        n in 1usize..8, seed: u64, scale in 0.01f64..100.0, lambda in 1e-3f64..10.0,
    ) {
        let h = Hyperparameters { lambda, ..Default::default() };
        let set = ConstraintSet::new(&h, n);
        let state = ModelState { w: predictors(n, 3, 2, seed, scale), s: sym_nonneg(n, seed) };
        let once = project(state, &set);
        prop_assert!(set.contains(&once));
        prop_assert!(once.w.norm() <= convexity_radius(&h, n).unwrap() * (1.0 + 1e-12));
        let twice = project(once.clone(), &set);
        prop_assert!((twice.w.norm() - once.w.norm()).abs() <= 1e-12 * (1.0 + once.w.norm()));
        prop_assert_eq!(twice.s, once.s);
    }

    #[test]
    fn relative_error_is_jointly_scale_invariant(rows in 1usize..6, cols in 1usize..6, seed: u64, c in 1e-3f64..1e3) {
        let truth = matrix(rows, cols, seed, 1.0);
        let pred = matrix(rows, cols, seed.wrapping_add(1), 1.0);
        let base = relative_error(&pred, &truth).unwrap().unwrap();
        let scaled = relative_error(&(c * &pred), &(c * &truth)).unwrap().unwrap();
        prop_assert!((base - scaled).abs() <= 1e-12 * base.max(1.0));
    }

    #[test]
    fn summary_ignores_replication_order(values in prop::collection::vec(0.0f64..10.0, 1..30), seed: u64) {
        let mut shuffled = values.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.random_range(0..=i));
        }
        prop_assert_eq!(Summary::of(&values), Summary::of(&shuffled));
    }

    #[test]
    fn validation_times_stay_inside_the_horizon(horizon in 4usize..200, fraction in 0.01f64..0.99) {
        let times = validation_times(horizon, fraction);
        prop_assert!(!times.is_empty());
        prop_assert!(times.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(times.iter().all(|&t| t >= 3 && t <= horizon));
        prop_assert_eq!(*times.last().unwrap(), horizon);
    }

    #[test]
    fn triplets_round_trip(n in 1usize..10, seed: u64) {
        let a = sym_nonneg(n, seed);
        let back = parse_triplets(Path::new("A_1.tsv"), &render_triplets(a.as_matrix()), n).unwrap();
        prop_assert_eq!(back, a);
    }

    #[test]
    fn table_and_records_round_trip(values in prop::collection::vec(0.0f64..5.0, 2..12)) {
        let records: Vec<SeedRecord> = values
            .iter()
            .enumerate()
            .flat_map(|(r, &v)| {
                [
                    SeedRecord { replication: r, seed: r as u64, method: Method::Hybrid, feature: Some(v), graph: Some(v / 3.0) },
                    SeedRecord { replication: r, seed: r as u64, method: Method::GraphOnly, feature: None, graph: Some(v * 0.7) },
                ]
            })
            .collect();
        let rows = summarize(&records, &[Method::Hybrid, Method::GraphOnly]);
        prop_assert_eq!(parse_table(Path::new("table.csv"), &render_table(&rows)).unwrap(), rows);
        prop_assert_eq!(parse_records(Path::new("records.csv"), &render_records(&records)).unwrap(), records);
    }

    #[test]
    fn descriptors_start_with_the_features(n in 3usize..8, t in 1usize..6, seed: u64) {
        let snapshots: Vec<SymNonNegMatrix> = (0..t).map(|k| sym_nonneg(n, seed.wrapping_add(k as u64))).collect();
        let graphs = GraphSequence::new(snapshots, false).unwrap();
        let spec = FeatureSpec { k_eig: 1, k_clusters: 1, ..Default::default() };
        let map = FeatureMap::build(graphs.last(), &spec).unwrap();
        let x = apply_feature_map(&graphs, &map).unwrap();
        let phi = build_descriptors(&x).unwrap();
        for (xf, pf) in x.frames.iter().zip(&phi.frames) {
            prop_assert_eq!(&pf.columns(0, x.q()).into_owned(), xf);
        }
    }
}
