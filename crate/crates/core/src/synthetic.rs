//! Latent-factor generator for dynamic graphs.
//!
//! Node factors drift through a smooth nonlinear field and pick up Gaussian
//! noise at every step:
//!
//! ```text
//! U_t^(i) = U_{t-1}^(i) + h(U_{t-1}^(i)) + u_{t,i},   u ~ N(0, delta^2 I_r)
//! V_t^(i) = V_{t-1}^(i) + h(V_{t-1}^(i)) + v_{t,i}
//! A_t     = U_t V_t^T + z_t,                           z_ij ~ N(0, sigma^2)
//! h(x)    = eps * ( exp(-|x-v1|^2/s1^2) (x-v1) + exp(-|x-v2|/s2) (x-v2) )
//! ```
//!
//! The raw `A_t` is projected onto symmetric nonnegative matrices and, in
//! monotone mode, replaced by the entrywise max with `A_{t-1}`.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::GraphSequence;
use crate::linalg::{project_sym_nonneg, Matrix, SymNonNegMatrix};

/// Identifier of the pinned generator, written into dataset metadata.
pub const RNG_ID: &str = "chacha8-rand_chacha-0.9-seed_from_u64";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub n: usize,
    pub r: usize,
    /// Number of snapshots emitted.
    pub t: usize,
    pub delta: f64,
    pub sigma_noise: f64,
    pub epsilon: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    /// Drift attractors; drawn uniform in `(0,1)^r` from the seed when absent.
    pub v1: Option<Vec<f64>>,
    pub v2: Option<Vec<f64>>,
    pub seed: u64,
    /// Square the norm and length-scale in the second exponential too.
    pub symmetric_drift: bool,
    /// Replace each snapshot by its entrywise max with the previous one.
    pub monotone: bool,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            n: 100,
            r: 4,
            t: 60,
            delta: 0.01,
            sigma_noise: 0.05,
            epsilon: 0.1,
            sigma1: 1.0,
            sigma2: 1.0,
            v1: None,
            v2: None,
            seed: 0,
            symmetric_drift: false,
            monotone: true,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("n", self.n), ("r", self.r), ("t", self.t)] {
            if v == 0 {
                return Err(Error::param(name, "must be at least 1"));
            }
        }
        for (name, v) in [
            ("delta", self.delta),
            ("sigma_noise", self.sigma_noise),
            ("epsilon", self.epsilon),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::param(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        for (name, v) in [("sigma1", self.sigma1), ("sigma2", self.sigma2)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        for (name, v) in [("v1", &self.v1), ("v2", &self.v2)] {
            if let Some(v) = v {
                if v.len() != self.r {
                    return Err(Error::param(name, format!("must have length r = {}, got {}", self.r, v.len())));
                }
                if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
                    return Err(Error::param(name, "entries must be finite and >= 0"));
                }
            }
        }
        Ok(())
    }
}

/// The drift field with resolved attractors.
#[derive(Debug, Clone, PartialEq)]
pub struct Drift {
    pub epsilon: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub v1: DVector<f64>,
    pub v2: DVector<f64>,
    pub symmetric: bool,
}

impl Drift {
    pub fn new(cfg: &GeneratorConfig, v1: DVector<f64>, v2: DVector<f64>) -> Result<Self> {
        if !(cfg.sigma1 > 0.0) || !(cfg.sigma2 > 0.0) {
            return Err(Error::param("sigma1/sigma2", "length-scales must be positive"));
        }
        Ok(Self {
            epsilon: cfg.epsilon,
            sigma1: cfg.sigma1,
            sigma2: cfg.sigma2,
            v1,
            v2,
            symmetric: cfg.symmetric_drift,
        })
    }

    pub fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.v1.len() || x.len() != self.v2.len() {
            return Err(Error::dims("drift input", self.v1.len(), x.len()));
        }
        if self.epsilon == 0.0 {
            return Ok(DVector::zeros(x.len()));
        }
        let d1 = x - &self.v1;
        let d2 = x - &self.v2;
        let w1 = (-d1.norm_squared() / (self.sigma1 * self.sigma1)).exp();
        let w2 = if self.symmetric {
            (-d2.norm_squared() / (self.sigma2 * self.sigma2)).exp()
        } else {
            (-d2.norm() / self.sigma2).exp()
        };
        Ok(self.epsilon * (w1 * d1 + w2 * d2))
    }
}

/// `h(x)` for a config whose attractors are given explicitly.
pub fn drift(x: &DVector<f64>, cfg: &GeneratorConfig) -> Result<DVector<f64>> {
    let (Some(v1), Some(v2)) = (&cfg.v1, &cfg.v2) else {
        return Err(Error::param("v1/v2", "drift needs explicit attractors"));
    };
    Drift::new(cfg, DVector::from_column_slice(v1), DVector::from_column_slice(v2))?.apply(x)
}

/// Latent factors behind a generated sequence. `u[0]`, `v[0]` are the
/// initial factors; `u[t]`, `v[t]` produce snapshot `t` (1-based).
#[derive(Debug, Clone)]
pub struct LatentTrace {
    pub u: Vec<Matrix>,
    pub v: Vec<Matrix>,
    /// `U_t V_t^T + z_t` before projection.
    pub raw: Vec<Matrix>,
    pub v1: DVector<f64>,
    pub v2: DVector<f64>,
}

fn uniform_open(rng: &mut impl Rng) -> f64 {
    loop {
        let x: f64 = rng.random();
        if x > 0.0 {
            return x;
        }
    }
}

fn step_factors(prev: &Matrix, drift: &Drift, delta: f64, rng: &mut impl Rng) -> Result<Matrix> {
    let (n, r) = prev.shape();
    let mut next = prev.clone();
    for i in 0..n {
        let row: DVector<f64> = prev.row(i).transpose();
        let h = drift.apply(&row)?;
        for k in 0..r {
            let noise: f64 = rng.sample(StandardNormal);
            next[(i, k)] += h[k] + delta * noise;
        }
    }
    Ok(next)
}

pub fn generate(cfg: &GeneratorConfig) -> Result<(GraphSequence, LatentTrace)> {
    cfg.validate()?;
    let (n, r) = (cfg.n, cfg.r);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let attractor = |given: &Option<Vec<f64>>, rng: &mut ChaCha8Rng| match given {
        Some(v) => DVector::from_column_slice(v),
        None => DVector::from_fn(r, |_, _| uniform_open(rng)),
    };
    let v1 = attractor(&cfg.v1, &mut rng);
    let v2 = attractor(&cfg.v2, &mut rng);
    let field = Drift::new(cfg, v1.clone(), v2.clone())?;

    let fill_uniform = |rng: &mut ChaCha8Rng| {
        let mut m = Matrix::zeros(n, r);
        for i in 0..n {
            for k in 0..r {
                m[(i, k)] = uniform_open(rng);
            }
        }
        m
    };
    let u0 = fill_uniform(&mut rng);
    let v0 = fill_uniform(&mut rng);

    let mut us = vec![u0];
    let mut vs = vec![v0];
    let mut raws = Vec::with_capacity(cfg.t);
    let mut snapshots: Vec<SymNonNegMatrix> = Vec::with_capacity(cfg.t);
    for _ in 0..cfg.t {
        let u = step_factors(us.last().unwrap(), &field, cfg.delta, &mut rng)?;
        let v = step_factors(vs.last().unwrap(), &field, cfg.delta, &mut rng)?;
        let mut raw = &u * v.transpose();
        for i in 0..n {
            for j in 0..n {
                let z: f64 = rng.sample(StandardNormal);
                raw[(i, j)] += cfg.sigma_noise * z;
            }
        }
        let mut a = project_sym_nonneg(&raw)?.into_inner();
        if cfg.monotone {
            if let Some(prev) = snapshots.last() {
                a.zip_apply(prev.as_matrix(), |x, p| *x = x.max(p));
            }
        }
        if a.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteIterate {
                what: "generated snapshot",
                iteration: snapshots.len() + 1,
            });
        }
        snapshots.push(SymNonNegMatrix::new(a)?);
        raws.push(raw);
        us.push(u);
        vs.push(v);
    }
    let graphs = GraphSequence::new(snapshots, cfg.monotone)?;
    Ok((
        graphs,
        LatentTrace {
            u: us,
            v: vs,
            raw: raws,
            v1,
            v2,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{numerical_rank, singular_values};

    fn cfg_with(v1: &[f64], v2: &[f64], eps: f64) -> GeneratorConfig {
        GeneratorConfig {
            r: v1.len(),
            epsilon: eps,
            v1: Some(v1.to_vec()),
            v2: Some(v2.to_vec()),
            ..Default::default()
        }
    }

    #[test]
    fn drift_vanishes_at_shared_attractor() {
        let v = [0.2, 0.4, 0.6];
        let cfg = cfg_with(&v, &v, 1.0);
        let h = drift(&DVector::from_column_slice(&v), &cfg).unwrap();
        assert_eq!(h.norm(), 0.0);
    }

    #[test]
    fn drift_off_when_epsilon_zero() {
        let cfg = cfg_with(&[0.1, 0.2], &[0.5, 0.5], 0.0);
        let h = drift(&DVector::from_column_slice(&[3.0, -1.0]), &cfg).unwrap();
        assert_eq!(h.norm(), 0.0);
    }

    #[test]
    fn drift_decays_far_away() {
        let cfg = GeneratorConfig {
            sigma1: 1.0,
            sigma2: 1.0,
            ..cfg_with(&[0.0, 0.0], &[0.0, 0.0], 1.0)
        };
        let h = drift(&DVector::from_column_slice(&[100.0, 0.0]), &cfg).unwrap();
        assert!(h.norm() <= 1e-6);
    }

    #[test]
    fn drift_matches_formula_including_asymmetry() {
        let cfg = GeneratorConfig {
            sigma1: 0.7,
            sigma2: 1.3,
            ..cfg_with(&[0.1, 0.9], &[0.6, 0.2], 0.5)
        };
        let x = DVector::from_column_slice(&[0.4, 0.3]);
        let d1 = DVector::from_column_slice(&[0.3, -0.6]);
        let d2 = DVector::from_column_slice(&[-0.2, 0.1]);
        let expected = 0.5
            * ((-(0.09 + 0.36) / 0.49_f64).exp() * &d1 + (-(0.04_f64 + 0.01).sqrt() / 1.3).exp() * &d2);
        assert!((drift(&x, &cfg).unwrap() - &expected).norm() < 1e-15);

        let sym = GeneratorConfig {
            symmetric_drift: true,
            ..cfg.clone()
        };
        let expected = 0.5 * ((-(0.09 + 0.36) / 0.49_f64).exp() * &d1 + (-(0.05) / 1.69_f64).exp() * &d2);
        assert!((drift(&x, &sym).unwrap() - expected).norm() < 1e-15);
    }

    #[test]
    fn zero_length_scale_rejected() {
        let cfg = GeneratorConfig {
            sigma2: 0.0,
            ..cfg_with(&[0.0], &[0.0], 1.0)
        };
        assert!(drift(&DVector::from_column_slice(&[1.0]), &cfg).is_err());
        assert!(generate(&cfg).is_err());
    }

    #[test]
    fn frozen_dynamics_are_constant() {
        let cfg = GeneratorConfig {
            n: 12,
            t: 5,
            delta: 0.0,
            sigma_noise: 0.0,
            epsilon: 0.0,
            seed: 3,
            ..Default::default()
        };
        let (g, trace) = generate(&cfg).unwrap();
        for a in g.snapshots() {
            assert_eq!(a, g.get(0));
            // symmetrizing U V^T can double the rank
            assert!(numerical_rank(&singular_values(a)) <= 2 * cfg.r);
        }
        assert!(trace.u.iter().all(|u| u == &trace.u[0]));
    }

    #[test]
    fn noise_free_factor_rank_bound() {
        let cfg = GeneratorConfig {
            n: 15,
            t: 6,
            delta: 0.0,
            sigma_noise: 0.0,
            epsilon: 0.3,
            seed: 4,
            ..Default::default()
        };
        let (_, trace) = generate(&cfg).unwrap();
        for raw in &trace.raw {
            let sv: Vec<f64> = singular_values(raw);
            let top = sv[0];
            let rank = sv.iter().filter(|&&s| s > 1e-10 * top).count();
            assert!(rank <= 4, "rank {rank}");
        }
    }

    #[test]
    fn initial_factors_in_unit_interval() {
        let (_, trace) = generate(&GeneratorConfig {
            n: 20,
            t: 1,
            ..Default::default()
        })
        .unwrap();
        assert!(trace.u[0].iter().chain(trace.v[0].iter()).all(|&x| x > 0.0 && x < 1.0));
        assert!(trace.v1.iter().chain(trace.v2.iter()).all(|&x| x > 0.0 && x < 1.0));
    }

    #[test]
    fn full_scale_run_is_valid_and_monotone() {
        let cfg = GeneratorConfig {
            seed: 11,
            ..Default::default()
        };
        let (g, _) = generate(&cfg).unwrap();
        assert_eq!(g.len(), 60);
        assert_eq!(g.n(), 100);
        for a in g.snapshots() {
            SymNonNegMatrix::new(a.as_matrix().clone()).unwrap();
        }
        for w in g.snapshots().windows(2) {
            assert!(w[1].iter().zip(w[0].iter()).all(|(b, a)| b >= a));
        }
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let cfg = GeneratorConfig {
            n: 10,
            t: 4,
            seed: 99,
            ..Default::default()
        };
        let (a, _) = generate(&cfg).unwrap();
        let (b, _) = generate(&cfg).unwrap();
        assert_eq!(a, b);
        let (c, _) = generate(&GeneratorConfig { seed: 100, ..cfg }).unwrap();
        assert_ne!(a, c);
    }
}
