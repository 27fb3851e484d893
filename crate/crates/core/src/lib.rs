//! Joint prediction of node features and edges on a dynamic graph.
//!
//! Given adjacency snapshots `A_1..A_T` and node features `X_t = A_t Omega`,
//! the crate learns one linear predictor per node together with a low-rank
//! estimate `S` of the next adjacency matrix by minimizing a coupled
//! objective with projected gradient descent. Baselines, a latent-factor
//! generator and a temporal cross-validation harness come with it.

// `!(x > 0.0)` is used on purpose: it rejects NaN along with the bad range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod linalg;
pub mod objective;
pub mod optimizer;
pub mod synthetic;

pub use error::{Error, Result};
