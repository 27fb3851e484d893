//! The joint objective over node predictors `W` and the graph estimate `S`:
//!
//! ```text
//! L(W, S) = sum_{t<T} |Phi_t W - X_{t+1}|^2 + (kappa/2)|W|^2
//!         + |Phi_T W - S Omega|^2
//!         + tau g_eta(S) + (nu/2)|S - A_T|^2
//!         + lambda sum_ij S_ij |W_i - W_j|^2
//! ```
//!
//! where `Phi_t W` applies node `i`'s `d x q` predictor to row `i` of
//! `Phi_t`, and `g_eta` is the smoothed nuclear norm. Squared loss only.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{
    apply_feature_map, build_descriptors, DescriptorSeries, FeatureMap, FeatureSeries, GraphSequence,
};
use crate::linalg::{laplacian_of, smoothed_nuclear, smoothed_nuclear_with_grad, Matrix, SymNonNegMatrix};

/// One `d x q` linear predictor per node.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorTensor {
    blocks: Vec<Matrix>,
    d: usize,
    q: usize,
}

impl PredictorTensor {
    pub fn zeros(n: usize, d: usize, q: usize) -> Self {
        Self {
            blocks: vec![Matrix::zeros(d, q); n],
            d,
            q,
        }
    }

    pub fn from_blocks(blocks: Vec<Matrix>) -> Result<Self> {
        let Some(first) = blocks.first() else {
            return Err(Error::InsufficientData("predictor tensor needs at least one block".into()));
        };
        let (d, q) = first.shape();
        for (i, b) in blocks.iter().enumerate() {
            if b.shape() != (d, q) {
                return Err(Error::dims(
                    format!("predictor block {i}"),
                    format!("{d}x{q}"),
                    format!("{}x{}", b.nrows(), b.ncols()),
                ));
            }
        }
        Ok(Self { blocks, d, q })
    }

    pub fn n(&self) -> usize {
        self.blocks.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn block(&self, i: usize) -> &Matrix {
        &self.blocks[i]
    }

    pub fn blocks(&self) -> &[Matrix] {
        &self.blocks
    }

    pub fn blocks_mut(&mut self) -> &mut [Matrix] {
        &mut self.blocks
    }

    pub fn norm_squared(&self) -> f64 {
        self.blocks.iter().map(|b| b.norm_squared()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.blocks.iter().zip(&other.blocks).map(|(a, b)| a.dot(b)).sum()
    }

    pub fn scale_mut(&mut self, factor: f64) {
        for b in &mut self.blocks {
            b.scale_mut(factor);
        }
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &Self) {
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            a.zip_apply(b, |x, y| *x += alpha * y);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.blocks.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }

    /// Applies `perm` to the node index: block `i` of the result is block `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            blocks: perm.iter().map(|&p| self.blocks[p].clone()).collect(),
            d: self.d,
            q: self.q,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub w: PredictorTensor,
    pub s: SymNonNegMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparameters {
    pub kappa: f64,
    pub tau: f64,
    pub nu: f64,
    pub lambda: f64,
    pub eta: f64,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            kappa: 1.0,
            tau: 1.0,
            nu: 1.0,
            lambda: 1e-3,
            eta: 1e-2,
        }
    }
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("kappa", self.kappa),
            ("tau", self.tau),
            ("nu", self.nu),
            ("lambda", self.lambda),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::param(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        if !self.eta.is_finite() || self.eta <= 0.0 {
            return Err(Error::param("eta", format!("must be finite and > 0, got {}", self.eta)));
        }
        Ok(())
    }

    /// `tau / nu`, undefined when `nu == 0`.
    pub fn mu(&self) -> Option<f64> {
        (self.nu > 0.0).then(|| self.tau / self.nu)
    }
}

/// Weighted contributions of each term; `total` is their sum.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ObjectiveBreakdown {
    pub j1_fit: f64,
    pub j1_ridge: f64,
    pub j2_nuclear: f64,
    pub j2_prox: f64,
    pub j3_coupling: f64,
    pub j4_laplacian: f64,
    pub total: f64,
}

impl ObjectiveBreakdown {
    fn summed(mut self) -> Self {
        self.total = self.j1_fit
            + self.j1_ridge
            + self.j2_nuclear
            + self.j2_prox
            + self.j3_coupling
            + self.j4_laplacian;
        self
    }
}

/// Everything the objective needs from the observed horizon `1..=T`.
#[derive(Debug, Clone)]
pub struct TrainingData {
    pub graphs: GraphSequence,
    pub features: FeatureSeries,
    pub descriptors: DescriptorSeries,
    pub feature_map: FeatureMap,
}

impl TrainingData {
    /// Derives `X_t = A_t Omega` and the descriptors from the graphs.
    pub fn from_graphs(graphs: GraphSequence, feature_map: FeatureMap) -> Result<Self> {
        let features = apply_feature_map(&graphs, &feature_map)?;
        let descriptors = build_descriptors(&features)?;
        Self::new(graphs, features, descriptors, feature_map)
    }

    pub fn new(
        graphs: GraphSequence,
        features: FeatureSeries,
        descriptors: DescriptorSeries,
        feature_map: FeatureMap,
    ) -> Result<Self> {
        let n = graphs.n();
        let t = graphs.len();
        if t < 2 {
            return Err(Error::InsufficientData(format!(
                "training horizon needs T >= 2, got {t}"
            )));
        }
        if features.len() != t {
            return Err(Error::dims("feature frames", t, features.len()));
        }
        if descriptors.len() != t {
            return Err(Error::dims("descriptor frames", t, descriptors.len()));
        }
        if feature_map.n() != n {
            return Err(Error::dims("feature map rows", n, feature_map.n()));
        }
        let q = feature_map.q();
        for (k, x) in features.frames.iter().enumerate() {
            if x.shape() != (n, q) {
                return Err(Error::dims(
                    format!("X_{}", k + 1),
                    format!("{n}x{q}"),
                    format!("{}x{}", x.nrows(), x.ncols()),
                ));
            }
        }
        let d = descriptors.frames[0].ncols();
        for (k, phi) in descriptors.frames.iter().enumerate() {
            if phi.shape() != (n, d) {
                return Err(Error::dims(
                    format!("Phi_{}", k + 1),
                    format!("{n}x{d}"),
                    format!("{}x{}", phi.nrows(), phi.ncols()),
                ));
            }
        }
        Ok(Self {
            graphs,
            features,
            descriptors,
            feature_map,
        })
    }

    pub fn n(&self) -> usize {
        self.graphs.n()
    }

    pub fn horizon(&self) -> usize {
        self.graphs.len()
    }

    pub fn d(&self) -> usize {
        self.descriptors.frames[0].ncols()
    }

    pub fn q(&self) -> usize {
        self.feature_map.q()
    }

    pub fn last_graph(&self) -> &SymNonNegMatrix {
        self.graphs.last()
    }

    pub fn last_descriptor(&self) -> &Matrix {
        self.descriptors.frames.last().expect("T >= 2")
    }

    /// The initial point `W = 0`, `S = A_T`.
    pub fn initial_state(&self) -> ModelState {
        ModelState {
            w: PredictorTensor::zeros(self.n(), self.d(), self.q()),
            s: self.last_graph().clone(),
        }
    }
}

/// Row `i` of the output is `Phi^(i) W^(i)`.
pub fn predict(w: &PredictorTensor, phi: &Matrix) -> Result<Matrix> {
    if phi.nrows() != w.n() || phi.ncols() != w.d() {
        return Err(Error::dims(
            "descriptor matrix",
            format!("{}x{}", w.n(), w.d()),
            format!("{}x{}", phi.nrows(), phi.ncols()),
        ));
    }
    let mut out = Matrix::zeros(w.n(), w.q());
    for (i, b) in w.blocks().iter().enumerate() {
        out.set_row(i, &(phi.row(i) * b));
    }
    Ok(out)
}

/// `|P - X|_F^2`.
pub fn squared_loss(p: &Matrix, x: &Matrix) -> Result<f64> {
    if p.shape() != x.shape() {
        return Err(Error::dims(
            "squared loss operands",
            format!("{}x{}", x.nrows(), x.ncols()),
            format!("{}x{}", p.nrows(), p.ncols()),
        ));
    }
    Ok((p - x).norm_squared())
}

/// `Delta_ij = |W_i - W_j|_F^2`.
pub fn pairwise_dist(w: &PredictorTensor) -> SymNonNegMatrix {
    let n = w.n();
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (w.block(i) - w.block(j)).norm_squared();
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    SymNonNegMatrix::new(out).expect("distances are symmetric and nonnegative")
}

fn coupling_general(w: &PredictorTensor, s: &Matrix, delta: &Matrix) -> f64 {
    debug_assert_eq!(s.nrows(), w.n());
    s.dot(delta)
}

/// `Tr(S^T Delta(W)) = sum_ij S_ij |W_i - W_j|^2`.
pub fn laplacian_coupling(w: &PredictorTensor, s: &SymNonNegMatrix) -> Result<f64> {
    if s.n() != w.n() {
        return Err(Error::dims("graph estimate", w.n(), s.n()));
    }
    Ok(coupling_general(w, s, &pairwise_dist(w)))
}

/// `Q(W, Lambda, V) = sum_ij Lambda_ij Tr(W_i^T V_j)`.
pub fn quadratic_form(w: &PredictorTensor, lambda: &Matrix, v: &PredictorTensor) -> f64 {
    let mut acc = 0.0;
    for i in 0..w.n() {
        for j in 0..v.n() {
            let l = lambda[(i, j)];
            if l != 0.0 {
                acc += l * w.block(i).dot(v.block(j));
            }
        }
    }
    acc
}

/// Objective bound to one training set and one set of weights, with the
/// per-node regression data laid out once.
#[derive(Debug, Clone)]
pub struct Objective<'a> {
    data: &'a TrainingData,
    h: Hyperparameters,
    /// Per node: rows `Phi_t^(i)` for `t < T`, stacked `(T-1) x d`.
    designs: Vec<Matrix>,
    /// Per node: rows `X_{t+1}^(i)`, stacked `(T-1) x q`.
    targets: Vec<Matrix>,
    grams: Vec<Matrix>,
    cross: Vec<Matrix>,
}

impl<'a> Objective<'a> {
    pub fn new(data: &'a TrainingData, h: Hyperparameters) -> Result<Self> {
        h.validate()?;
        let n = data.n();
        let horizon = data.horizon();
        let (d, q) = (data.d(), data.q());
        let mut designs = Vec::with_capacity(n);
        let mut targets = Vec::with_capacity(n);
        for i in 0..n {
            let mut design = Matrix::zeros(horizon - 1, d);
            let mut target = Matrix::zeros(horizon - 1, q);
            for t in 0..horizon - 1 {
                design.set_row(t, &data.descriptors.frames[t].row(i));
                target.set_row(t, &data.features.frames[t + 1].row(i));
            }
            designs.push(design);
            targets.push(target);
        }
        let grams = designs.iter().map(|x| x.transpose() * x).collect();
        let cross = designs
            .iter()
            .zip(&targets)
            .map(|(x, y)| x.transpose() * y)
            .collect();
        Ok(Self {
            data,
            h,
            designs,
            targets,
            grams,
            cross,
        })
    }

    pub fn data(&self) -> &TrainingData {
        self.data
    }

    pub fn hyperparameters(&self) -> &Hyperparameters {
        &self.h
    }

    /// Per-node `sum_{t<T} Phi_t^(i)T Phi_t^(i)`.
    pub fn grams(&self) -> &[Matrix] {
        &self.grams
    }

    /// Per-node `sum_{t<T} Phi_t^(i)T X_{t+1}^(i)`.
    pub fn cross(&self) -> &[Matrix] {
        &self.cross
    }

    fn check(&self, w: &PredictorTensor, s: &Matrix) -> Result<()> {
        let (n, d, q) = (self.data.n(), self.data.d(), self.data.q());
        if w.n() != n || w.d() != d || w.q() != q {
            return Err(Error::dims(
                "predictor tensor",
                format!("{n}x{d}x{q}"),
                format!("{}x{}x{}", w.n(), w.d(), w.q()),
            ));
        }
        if s.shape() != (n, n) {
            return Err(Error::dims(
                "graph estimate",
                format!("{n}x{n}"),
                format!("{}x{}", s.nrows(), s.ncols()),
            ));
        }
        Ok(())
    }

    /// Term values at `(W, S)`. `S` may be any `n x n` matrix here.
    pub fn breakdown_at(&self, w: &PredictorTensor, s: &Matrix) -> Result<ObjectiveBreakdown> {
        self.check(w, s)?;
        let h = &self.h;
        let j1_fit = self
            .designs
            .iter()
            .zip(&self.targets)
            .zip(w.blocks())
            .map(|((x, y), b)| (x * b - y).norm_squared())
            .sum();
        let pred = predict(w, self.data.last_descriptor())?;
        let j3 = (s * &self.data.feature_map.omega - pred).norm_squared();
        let nuclear = if h.tau > 0.0 { h.tau * smoothed_nuclear(s, h.eta)? } else { 0.0 };
        let j4 = if h.lambda > 0.0 {
            h.lambda * coupling_general(w, s, &pairwise_dist(w))
        } else {
            0.0
        };
        Ok(ObjectiveBreakdown {
            j1_fit,
            j1_ridge: 0.5 * h.kappa * w.norm_squared(),
            j2_nuclear: nuclear,
            j2_prox: 0.5 * h.nu * (s - self.data.last_graph().as_matrix()).norm_squared(),
            j3_coupling: j3,
            j4_laplacian: j4,
            total: 0.0,
        }
        .summed())
    }

    pub fn value_at(&self, w: &PredictorTensor, s: &Matrix) -> Result<f64> {
        Ok(self.breakdown_at(w, s)?.total)
    }

    /// Gradients with respect to every entry of `W` and of `S`, the latter
    /// treated as a general `n x n` matrix.
    pub fn gradient_at(&self, w: &PredictorTensor, s: &Matrix) -> Result<(PredictorTensor, Matrix)> {
        self.check(w, s)?;
        let h = &self.h;
        let omega = &self.data.feature_map.omega;
        let phi_t = self.data.last_descriptor();
        let pred = predict(w, phi_t)?;
        let residual = s * omega - &pred;

        let sym = s + s.transpose();
        let mut grad_w = Vec::with_capacity(w.n());
        for (i, b) in w.blocks().iter().enumerate() {
            let mut g = 2.0 * (&self.grams[i] * b - &self.cross[i]);
            let row = phi_t.row(i);
            // 2 Phi_T^(i)T (Phi_T^(i) W^(i) - (S Omega)^(i))
            g -= 2.0 * row.transpose() * residual.row(i);
            g += h.kappa * b;
            if h.lambda > 0.0 {
                for j in 0..w.n() {
                    let m = sym[(i, j)];
                    if j != i && m != 0.0 {
                        g += (2.0 * h.lambda * m) * (b - w.block(j));
                    }
                }
            }
            grad_w.push(g);
        }

        let mut grad_s = 2.0 * &residual * omega.transpose();
        if h.lambda > 0.0 {
            grad_s += h.lambda * pairwise_dist(w).as_matrix();
        }
        grad_s += h.nu * (s - self.data.last_graph().as_matrix());
        if h.tau > 0.0 {
            let (_, g) = smoothed_nuclear_with_grad(s, h.eta)?;
            grad_s += h.tau * g;
        }
        Ok((PredictorTensor::from_blocks(grad_w)?, grad_s))
    }

    pub fn evaluate(&self, state: &ModelState) -> Result<ObjectiveBreakdown> {
        self.breakdown_at(&state.w, &state.s)
    }

    pub fn gradient(&self, state: &ModelState) -> Result<(PredictorTensor, Matrix)> {
        self.gradient_at(&state.w, &state.s)
    }
}

pub fn evaluate(state: &ModelState, data: &TrainingData, h: &Hyperparameters) -> Result<ObjectiveBreakdown> {
    Objective::new(data, *h)?.evaluate(state)
}

pub fn gradient(
    state: &ModelState,
    data: &TrainingData,
    h: &Hyperparameters,
) -> Result<(PredictorTensor, Matrix)> {
    Objective::new(data, *h)?.gradient(state)
}

/// The Laplacian form of the coupling, `2 Q(W, Lambda(S), W)`.
pub fn coupling_via_laplacian(w: &PredictorTensor, s: &SymNonNegMatrix) -> f64 {
    2.0 * quadratic_form(w, &laplacian_of(s), w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{ColumnKind, FeatureMap};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_tensor(n: usize, d: usize, q: usize, rng: &mut impl Rng) -> PredictorTensor {
        PredictorTensor::from_blocks(
            (0..n)
                .map(|_| Matrix::from_fn(d, q, |_, _| rng.random_range(-1.0..1.0)))
                .collect(),
        )
        .unwrap()
    }

    fn random_sym_nonneg(n: usize, rng: &mut impl Rng) -> SymNonNegMatrix {
        let m = Matrix::from_fn(n, n, |_, _| rng.random_range(0.0..1.0));
        SymNonNegMatrix::new(0.5 * (&m + m.transpose())).unwrap()
    }

    pub(crate) fn random_data(n: usize, q: usize, horizon: usize, rng: &mut impl Rng) -> TrainingData {
        let mut snaps = vec![random_sym_nonneg(n, rng)];
        for _ in 1..horizon {
            let next = snaps.last().unwrap().as_matrix() + random_sym_nonneg(n, rng).as_matrix() * 0.3;
            snaps.push(SymNonNegMatrix::new(next).unwrap());
        }
        let graphs = GraphSequence::new(snaps, true).unwrap();
        let map = FeatureMap {
            omega: Matrix::from_fn(n, q, |_, _| rng.random_range(-1.0..1.0)),
            columns: vec![ColumnKind::Constant; q],
        };
        TrainingData::from_graphs(graphs, map).unwrap()
    }

    #[test]
    fn predict_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let phi = Matrix::from_fn(4, 3, |_, _| rng.random_range(-1.0..1.0));
        assert_eq!(predict(&PredictorTensor::zeros(4, 3, 2), &phi).unwrap(), Matrix::zeros(4, 2));

        let ident = PredictorTensor::from_blocks(vec![Matrix::identity(3, 3); 4]).unwrap();
        assert_eq!(predict(&ident, &phi).unwrap(), phi);

        let w = random_tensor(4, 3, 2, &mut rng);
        let p = predict(&w, &phi).unwrap();
        for i in 0..4 {
            for c in 0..2 {
                let mut acc = 0.0;
                for k in 0..3 {
                    acc += phi[(i, k)] * w.block(i)[(k, c)];
                }
                assert!((acc - p[(i, c)]).abs() < 1e-14);
            }
        }
        assert!(predict(&w, &Matrix::zeros(4, 2)).is_err());
    }

    #[test]
    fn squared_loss_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = Matrix::from_fn(3, 2, |_, _| rng.random_range(-1.0..1.0));
        let p = Matrix::from_fn(3, 2, |_, _| rng.random_range(-1.0..1.0));
        assert_eq!(squared_loss(&x, &x).unwrap(), 0.0);
        assert!((squared_loss(&Matrix::zeros(3, 2), &x).unwrap() - x.norm_squared()).abs() < 1e-14);
        let oracle = crate::linalg::frobenius_norm(&(&p - &x)).powi(2);
        assert!((squared_loss(&p, &x).unwrap() - oracle).abs() < 1e-13);
        assert!(squared_loss(&p, &Matrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn pairwise_dist_cases() {
        let same = PredictorTensor::from_blocks(vec![Matrix::from_element(2, 2, 0.3); 3]).unwrap();
        assert_eq!(*pairwise_dist(&same), Matrix::zeros(3, 3));

        let mut b = Matrix::zeros(2, 2);
        b[(0, 0)] = 3.0;
        let two = PredictorTensor::from_blocks(vec![Matrix::zeros(2, 2), b]).unwrap();
        assert_eq!(*pairwise_dist(&two), Matrix::from_row_slice(2, 2, &[0.0, 9.0, 9.0, 0.0]));

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = random_tensor(5, 3, 2, &mut rng);
        let delta = pairwise_dist(&w);
        for i in 0..5 {
            for j in 0..5 {
                let mut acc = 0.0;
                for (x, y) in w.block(i).iter().zip(w.block(j).iter()) {
                    acc += (x - y) * (x - y);
                }
                assert!((delta[(i, j)] - acc).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn coupling_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let w = random_tensor(3, 2, 2, &mut rng);
        assert_eq!(laplacian_coupling(&w, &SymNonNegMatrix::zeros(3)).unwrap(), 0.0);
        let same = PredictorTensor::from_blocks(vec![Matrix::identity(2, 2); 3]).unwrap();
        assert_eq!(laplacian_coupling(&same, &random_sym_nonneg(3, &mut rng)).unwrap(), 0.0);

        let mut b = Matrix::zeros(2, 2);
        b[(1, 1)] = 2.0;
        let two = PredictorTensor::from_blocks(vec![Matrix::zeros(2, 2), b]).unwrap();
        let s = SymNonNegMatrix::new(Matrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        assert_eq!(laplacian_coupling(&two, &s).unwrap(), 8.0);

        for _ in 0..10 {
            let w = random_tensor(6, 3, 2, &mut rng);
            let s = random_sym_nonneg(6, &mut rng);
            let direct = laplacian_coupling(&w, &s).unwrap();
            let via_q = coupling_via_laplacian(&w, &s);
            assert!((direct - via_q).abs() < 1e-10 * direct.max(1.0));
            assert!(direct >= 0.0);
        }
    }

    #[test]
    fn coupling_vanishes_iff_constant_on_components() {
        // two components {0,1,2} and {3,4}
        let mut a = Matrix::zeros(5, 5);
        for &(i, j) in &[(0, 1), (1, 2), (3, 4)] {
            a[(i, j)] = 1.0;
            a[(j, i)] = 1.0;
        }
        let s = SymNonNegMatrix::new(a).unwrap();
        let p = Matrix::from_element(2, 2, 1.0);
        let r = Matrix::from_element(2, 2, -2.0);
        let piecewise =
            PredictorTensor::from_blocks(vec![p.clone(), p.clone(), p.clone(), r.clone(), r.clone()]).unwrap();
        assert_eq!(laplacian_coupling(&piecewise, &s).unwrap(), 0.0);
        let broken = PredictorTensor::from_blocks(vec![p.clone(), p.clone(), r.clone(), r.clone(), r]).unwrap();
        assert!(laplacian_coupling(&broken, &s).unwrap() > 0.0);
    }

    #[test]
    fn evaluate_zero_predictor_case() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let data = random_data(5, 2, 4, &mut rng);
        let h = Hyperparameters {
            kappa: 0.7,
            tau: 0.0,
            nu: 1.3,
            lambda: 5.0,
            eta: 0.1,
        };
        let b = evaluate(&data.initial_state(), &data, &h).unwrap();
        let expected: f64 = data.features.frames[1..].iter().map(|x| x.norm_squared()).sum::<f64>()
            + (data.last_graph().as_matrix() * &data.feature_map.omega).norm_squared();
        assert!((b.total - expected).abs() < 1e-10 * expected);
        assert_eq!(b.j4_laplacian, 0.0);
        assert_eq!(b.j2_prox, 0.0);
    }

    #[test]
    fn evaluate_term_by_term() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let data = random_data(5, 2, 4, &mut rng);
        let d = data.d();
        let state = ModelState {
            w: random_tensor(5, d, 2, &mut rng),
            s: random_sym_nonneg(5, &mut rng),
        };
        let h = Hyperparameters {
            kappa: 0.4,
            tau: 0.9,
            nu: 1.7,
            lambda: 0.3,
            eta: 0.05,
        };
        let b = evaluate(&state, &data, &h).unwrap();

        let mut fit = 0.0;
        for t in 0..3 {
            for i in 0..5 {
                let pred = data.descriptors.frames[t].row(i) * state.w.block(i);
                fit += (pred - data.features.frames[t + 1].row(i)).norm_squared();
            }
        }
        let ridge = 0.5 * h.kappa * state.w.blocks().iter().map(|b| b.norm_squared()).sum::<f64>();
        let mut j3 = 0.0;
        let so = state.s.as_matrix() * &data.feature_map.omega;
        for i in 0..5 {
            let pred = data.descriptors.frames[3].row(i) * state.w.block(i);
            j3 += (pred - so.row(i)).norm_squared();
        }
        let nuclear = h.tau * crate::linalg::smoothed_nuclear(&state.s, h.eta).unwrap();
        let prox = 0.5 * h.nu * (state.s.as_matrix() - data.last_graph().as_matrix()).norm_squared();
        let mut lap = 0.0;
        for i in 0..5 {
            for j in 0..5 {
                lap += state.s[(i, j)] * (state.w.block(i) - state.w.block(j)).norm_squared();
            }
        }
        let lap = h.lambda * lap;
        let expected = fit + ridge + j3 + nuclear + prox + lap;
        assert!((b.j1_fit - fit).abs() < 1e-10 * fit);
        assert!((b.j3_coupling - j3).abs() < 1e-10 * j3.max(1.0));
        assert!((b.j4_laplacian - lap).abs() < 1e-10 * lap.max(1.0));
        assert!((b.total - expected).abs() < 1e-10 * expected);

        let off = Hyperparameters {
            kappa: 0.0,
            tau: 0.0,
            nu: 0.0,
            lambda: 0.0,
            eta: 0.05,
        };
        let b0 = evaluate(&state, &data, &off).unwrap();
        assert!((b0.total - (fit + j3)).abs() < 1e-10 * (fit + j3));
    }

    #[test]
    fn evaluate_rejects_short_horizon_and_bad_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let data = random_data(4, 2, 3, &mut rng);
        let bad = ModelState {
            w: PredictorTensor::zeros(4, 5, 2),
            s: SymNonNegMatrix::zeros(4),
        };
        assert!(evaluate(&bad, &data, &Hyperparameters::default()).is_err());
        let single = data.graphs.prefix(1).unwrap();
        assert!(TrainingData::from_graphs(single, data.feature_map.clone()).is_err());
    }

    #[test]
    fn gradient_at_initial_point_without_coupling() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let data = random_data(5, 2, 4, &mut rng);
        let h = Hyperparameters {
            kappa: 1.0,
            tau: 0.6,
            nu: 2.0,
            lambda: 0.0,
            eta: 0.1,
        };
        let (_, gs) = gradient(&data.initial_state(), &data, &h).unwrap();
        let a = data.last_graph().as_matrix();
        let omega = &data.feature_map.omega;
        let expected = 2.0 * (a * omega) * omega.transpose()
            + h.tau * crate::linalg::smoothed_nuclear_grad(a, h.eta).unwrap();
        assert!((&gs - &expected).norm() < 1e-10 * expected.norm());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let data = random_data(6, 3, 5, &mut rng);
        let d = data.d();
        assert_eq!(d, 9);
        let w = random_tensor(6, d, 3, &mut rng);
        let s = random_sym_nonneg(6, &mut rng);
        let h = Hyperparameters {
            kappa: 0.5,
            tau: 0.8,
            nu: 1.2,
            lambda: 0.4,
            eta: 0.2,
        };
        let obj = Objective::new(&data, h).unwrap();
        let (gw, gs) = obj.gradient_at(&w, &s).unwrap();
        let step = 1e-5;
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..6 {
            for k in 0..gw.block(i).len() {
                let mut p = w.clone();
                p.blocks_mut()[i][k] += step;
                let mut m = w.clone();
                m.blocks_mut()[i][k] -= step;
                let fd = (obj.value_at(&p, &s).unwrap() - obj.value_at(&m, &s).unwrap()) / (2.0 * step);
                num += (fd - gw.block(i)[k]).powi(2);
                den += fd * fd;
            }
        }
        for k in 0..36 {
            let mut p = s.as_matrix().clone();
            p[k] += step;
            let mut m = s.as_matrix().clone();
            m[k] -= step;
            let fd = (obj.value_at(&w, &p).unwrap() - obj.value_at(&w, &m).unwrap()) / (2.0 * step);
            num += (fd - gs[k]).powi(2);
            den += fd * fd;
        }
        assert!((num / den).sqrt() < 1e-5, "{}", (num / den).sqrt());
    }

    #[test]
    fn evaluate_is_permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let data = random_data(6, 2, 4, &mut rng);
        let state = ModelState {
            w: random_tensor(6, data.d(), 2, &mut rng),
            s: random_sym_nonneg(6, &mut rng),
        };
        let h = Hyperparameters {
            kappa: 0.3,
            tau: 0.5,
            nu: 0.7,
            lambda: 0.2,
            eta: 0.1,
        };
        let perm = [3, 0, 5, 1, 4, 2];
        let permute = |m: &Matrix| Matrix::from_fn(6, 6, |i, j| m[(perm[i], perm[j])]);
        let permute_rows = |m: &Matrix| Matrix::from_fn(6, m.ncols(), |i, j| m[(perm[i], j)]);
        let graphs = GraphSequence::new(
            data.graphs
                .snapshots()
                .iter()
                .map(|a| SymNonNegMatrix::new(permute(a)).unwrap())
                .collect(),
            true,
        )
        .unwrap();
        let map = FeatureMap {
            omega: permute_rows(&data.feature_map.omega),
            columns: data.feature_map.columns.clone(),
        };
        let pdata = TrainingData::from_graphs(graphs, map).unwrap();
        let pstate = ModelState {
            w: state.w.permuted(&perm),
            s: SymNonNegMatrix::new(permute(&state.s)).unwrap(),
        };
        let a = evaluate(&state, &data, &h).unwrap().total;
        let b = evaluate(&pstate, &pdata, &h).unwrap().total;
        assert!((a - b).abs() < 1e-10 * a.max(1.0), "{a} vs {b}");
    }

    #[test]
    fn separately_convex_without_coupling_and_nuclear() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let data = random_data(5, 2, 4, &mut rng);
        let h = Hyperparameters {
            kappa: 0.3,
            tau: 0.0,
            nu: 0.6,
            lambda: 0.0,
            eta: 0.1,
        };
        let obj = Objective::new(&data, h).unwrap();
        for _ in 0..20 {
            let s = random_sym_nonneg(5, &mut rng);
            let wa = random_tensor(5, data.d(), 2, &mut rng);
            let wb = random_tensor(5, data.d(), 2, &mut rng);
            let mut mid = wa.clone();
            mid.axpy(1.0, &wb);
            mid.scale_mut(0.5);
            let fa = obj.value_at(&wa, &s).unwrap();
            let fb = obj.value_at(&wb, &s).unwrap();
            let fm = obj.value_at(&mid, &s).unwrap();
            assert!(0.5 * fa + 0.5 * fb >= fm - 1e-10 * fm.abs());

            let sa = random_sym_nonneg(5, &mut rng);
            let sb = random_sym_nonneg(5, &mut rng);
            let sm = 0.5 * (sa.as_matrix() + sb.as_matrix());
            let fa = obj.value_at(&wa, &sa).unwrap();
            let fb = obj.value_at(&wa, &sb).unwrap();
            let fm = obj.value_at(&wa, &sm).unwrap();
            assert!(0.5 * fa + 0.5 * fb >= fm - 1e-10 * fm.abs());
        }
    }
}
