//! Comparison methods: per-node ridge regression on the feature series,
//! singular value shrinkage of the last snapshot, and the joint method with
//! either the low-rank weight (`tau = 0`) or the coupling weight
//! (`lambda = 0`) switched off.

use std::fmt;

use nalgebra::Cholesky;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{DescriptorSeries, FeatureSeries};
use crate::linalg::{shrink, Matrix};
use crate::objective::{Hyperparameters, ModelState, Objective, PredictorTensor, TrainingData};
use crate::optimizer::{fit, OptimizerConfig, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "hybrid")]
    Hybrid,
    #[serde(rename = "lambda0")]
    LambdaZero,
    #[serde(rename = "rank-free")]
    RankFree,
    #[serde(rename = "regression-only")]
    RegressionOnly,
    #[serde(rename = "graph-only")]
    GraphOnly,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Hybrid,
        Method::LambdaZero,
        Method::RankFree,
        Method::RegressionOnly,
        Method::GraphOnly,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Hybrid => "hybrid",
            Method::LambdaZero => "lambda0",
            Method::RankFree => "rank-free",
            Method::RegressionOnly => "regression-only",
            Method::GraphOnly => "graph-only",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }

    /// Weights the joint method runs with, or `None` for the standalone baselines.
    pub fn joint_hyperparameters(&self, h: &Hyperparameters) -> Option<Hyperparameters> {
        match self {
            Method::Hybrid => Some(*h),
            Method::LambdaZero => Some(Hyperparameters { lambda: 0.0, ..*h }),
            Method::RankFree => Some(Hyperparameters { tau: 0.0, ..*h }),
            Method::RegressionOnly | Method::GraphOnly => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Predictions of one method; a method only reports the task it addresses.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineResult {
    pub method: Method,
    pub predicted_features: Option<Matrix>,
    pub predicted_graph: Option<Matrix>,
}

fn solve_spd(mut normal: Matrix, rhs: &Matrix, node: usize) -> Result<Matrix> {
    // symmetrize against rounding in the Gram accumulation
    normal = 0.5 * (&normal + normal.transpose());
    let chol = Cholesky::new(normal).ok_or(Error::SingularNormalMatrix { node })?;
    Ok(chol.solve(rhs))
}

/// Per-node closed form `W_i = (sum_{t<T} Phi_t^(i)T Phi_t^(i) + (kappa/2) I)^-1 sum_{t<T} Phi_t^(i)T X_{t+1}^(i)`.
pub fn ridge_fit(phi: &DescriptorSeries, x: &FeatureSeries, kappa: f64) -> Result<PredictorTensor> {
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return Err(Error::param("kappa", format!("must be finite and >= 0, got {kappa}")));
    }
    let horizon = phi.len();
    if horizon < 2 || x.len() != horizon {
        return Err(Error::InsufficientData(format!(
            "ridge needs T >= 2 aligned frames, got {} descriptors and {} feature frames",
            horizon,
            x.len()
        )));
    }
    let (n, d) = phi.frames[0].shape();
    let q = x.q();
    let mut blocks = Vec::with_capacity(n);
    for i in 0..n {
        let mut gram = Matrix::zeros(d, d);
        let mut cross = Matrix::zeros(d, q);
        for t in 0..horizon - 1 {
            let row = phi.frames[t].row(i);
            gram += row.transpose() * row;
            cross += row.transpose() * x.frames[t + 1].row(i);
        }
        for k in 0..d {
            gram[(k, k)] += 0.5 * kappa;
        }
        blocks.push(solve_spd(gram, &cross, i)?);
    }
    PredictorTensor::from_blocks(blocks)
}

/// Minimizer over `W` of the joint objective at a fixed `S` when
/// `lambda = 0`: ridge regression whose sample set also contains the pair
/// `(Phi_T, S Omega)`.
pub fn predictor_subproblem(data: &TrainingData, kappa: f64, s: &Matrix) -> Result<PredictorTensor> {
    let obj = Objective::new(
        data,
        Hyperparameters {
            kappa,
            tau: 0.0,
            nu: 0.0,
            lambda: 0.0,
            eta: 1.0,
        },
    )?;
    let phi_t = data.last_descriptor();
    let target = s * &data.feature_map.omega;
    let d = data.d();
    let mut blocks = Vec::with_capacity(data.n());
    for i in 0..data.n() {
        let row = phi_t.row(i);
        let mut normal = &obj.grams()[i] + row.transpose() * row;
        for k in 0..d {
            normal[(k, k)] += 0.5 * kappa;
        }
        let rhs = &obj.cross()[i] + row.transpose() * target.row(i);
        blocks.push(solve_spd(normal, &rhs, i)?);
    }
    PredictorTensor::from_blocks(blocks)
}

/// The joint method with `tau = 0`.
pub fn rank_free_fit(
    data: &TrainingData,
    h: &Hyperparameters,
    cfg: &OptimizerConfig,
) -> Result<(ModelState, Trace)> {
    fit(data.initial_state(), data, &Hyperparameters { tau: 0.0, ..*h }, cfg)
}

/// The joint method with `lambda = 0`.
pub fn lambda_zero_fit(
    data: &TrainingData,
    h: &Hyperparameters,
    cfg: &OptimizerConfig,
) -> Result<(ModelState, Trace)> {
    fit(data.initial_state(), data, &Hyperparameters { lambda: 0.0, ..*h }, cfg)
}

/// `argmin_S 0.5 |S - A_T|_F^2 + mu |S|_*`.
pub fn shrinkage_only(a_t: &Matrix, mu: f64) -> Result<Matrix> {
    shrink(a_t, mu)
}
