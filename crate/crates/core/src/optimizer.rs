//! Projected gradient descent on the joint objective over the set
//!
//! ```text
//! E = { S symmetric, S >= 0 entrywise,  |W|_F <= sqrt(nu kappa) / (2 lambda (sqrt(n) + 1)) }
//! ```
//!
//! inside which the coupled quadratic part of the objective is convex.

use log::warn;
use nalgebra::{Cholesky, Dyn, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{laplacian_of, project_sym_nonneg, Matrix, SymNonNegMatrix};
use crate::objective::{
    quadratic_form, Hyperparameters, ModelState, Objective, ObjectiveBreakdown, PredictorTensor,
    TrainingData,
};

/// `sqrt(nu kappa) / (2 lambda (sqrt(n) + 1))`.
pub fn convexity_radius(h: &Hyperparameters, n: usize) -> Result<f64> {
    for (name, v) in [("nu", h.nu), ("kappa", h.kappa), ("lambda", h.lambda)] {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::param(name, format!("must be positive for a convexity radius, got {v}")));
        }
    }
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    Ok((h.nu * h.kappa).sqrt() / (2.0 * h.lambda * ((n as f64).sqrt() + 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintSet {
    /// `None` when one of `nu`, `kappa`, `lambda` is zero; only `S >= 0` applies then.
    pub radius: Option<f64>,
    pub n: usize,
}

impl ConstraintSet {
    pub fn new(h: &Hyperparameters, n: usize) -> Self {
        let radius = convexity_radius(h, n).ok();
        if radius.is_none() && h.lambda > 0.0 {
            warn!(
                "convexity radius undefined (kappa={}, nu={}, lambda={}); dropping the predictor-norm constraint",
                h.kappa, h.nu, h.lambda
            );
        }
        Self { radius, n }
    }

    /// Exact for `S`; the norm bound is checked with slack `1e-12`.
    pub fn contains(&self, state: &ModelState) -> bool {
        let s_ok = state.s.iter().all(|&v| v >= 0.0);
        let w_ok = self.radius.is_none_or(|r| state.w.norm() <= r + 1e-12);
        s_ok && w_ok
    }

    fn project_w(&self, w: &mut PredictorTensor) {
        if let Some(r) = self.radius {
            let norm = w.norm();
            if norm > r {
                w.scale_mut(r / norm);
            }
        }
    }
}

/// Euclidean projection of `(W, S)` onto the set; `S` may be any square matrix.
pub fn project_parts(mut w: PredictorTensor, s: &Matrix, set: &ConstraintSet) -> Result<ModelState> {
    set.project_w(&mut w);
    Ok(ModelState {
        w,
        s: project_sym_nonneg(s)?,
    })
}

pub fn project(state: ModelState, set: &ConstraintSet) -> ModelState {
    let ModelState { mut w, s } = state;
    set.project_w(&mut w);
    ModelState { w, s }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    /// Largest step tried by the line search.
    pub step_size: f64,
    pub max_iters: usize,
    /// Stop when the projected-gradient norm is at most `grad_tolerance * (1 + |L|)`.
    pub grad_tolerance: f64,
    /// Backtracking factor.
    pub beta: f64,
    /// Sufficient-decrease constant.
    pub c: f64,
    pub max_backtracks: usize,
    /// Alternate a `W` step and an `S` step, each scaled by the curvature of
    /// the quadratic terms of its block, instead of taking one joint
    /// Euclidean step. A block falls back to its plain gradient whenever the
    /// scaled step fails the decrease test. While the predictor-norm bound
    /// is active, the `W` step also tries the scaled direction along the
    /// sphere and keeps whichever candidate decreases the objective most.
    pub preconditioned: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            step_size: 1.0,
            max_iters: 5000,
            grad_tolerance: 1e-6,
            beta: 0.5,
            c: 1e-4,
            max_backtracks: 60,
            preconditioned: true,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0) || !self.step_size.is_finite() {
            return Err(Error::param("step_size", format!("must be positive, got {}", self.step_size)));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::param("beta", format!("must lie in (0,1), got {}", self.beta)));
        }
        if !(self.c > 0.0 && self.c < 1.0) {
            return Err(Error::param("c", format!("must lie in (0,1), got {}", self.c)));
        }
        if !(self.grad_tolerance > 0.0) {
            return Err(Error::param("grad_tolerance", "must be positive"));
        }
        if self.max_backtracks == 0 {
            return Err(Error::param("max_backtracks", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub breakdown: ObjectiveBreakdown,
    pub grad_norm: f64,
    /// Joint step, or the `W` step when alternating; 0 for the starting
    /// point and for a block that did not move.
    pub step: f64,
    /// `S` step when alternating; equals `step` for joint steps.
    pub s_step: f64,
    pub accepted: bool,
    pub w_norm: f64,
    pub s_min: f64,
    pub validation_error: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    Converged,
    MaxIterations,
    /// No step along any direction decreased the objective.
    Stalled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub records: Vec<IterationRecord>,
    pub termination: Termination,
}

impl Trace {
    pub fn final_objective(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.breakdown.total)
    }

    /// Number of accepted steps.
    pub fn iterations(&self) -> usize {
        self.records.iter().skip(1).filter(|r| r.accepted).count()
    }

    pub fn accepted_objectives(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().filter(|r| r.accepted).map(|r| r.breakdown.total)
    }
}

/// Curvature of the quadratic terms, block by block: a `d x d` factor per
/// node for `W`, and for `S` the operator `D -> (D M + M D) / 2` on
/// symmetric matrices with `M = 2 Omega Omega^T + nu I`, inverted in the
/// eigenbasis of `M`.
struct Preconditioner {
    w_factors: Vec<Cholesky<f64, Dyn>>,
    m_basis: Matrix,
    m_values: Vec<f64>,
}

impl Preconditioner {
    fn new(obj: &Objective<'_>) -> Result<Self> {
        let data = obj.data();
        let h = obj.hyperparameters();
        let phi_t = data.last_descriptor();
        let a_t = data.last_graph();
        let d = data.d();
        let mut w_factors = Vec::with_capacity(data.n());
        for (i, gram) in obj.grams().iter().enumerate() {
            let row = phi_t.row(i);
            let mut hess = 2.0 * (gram + row.transpose() * row);
            let shift = h.kappa + 4.0 * h.lambda * a_t.row(i).sum();
            let floor = 1e-10 * (hess.trace() / d as f64 + 1.0);
            for k in 0..d {
                hess[(k, k)] += shift.max(floor);
            }
            let chol = Cholesky::new(hess).ok_or(Error::SingularNormalMatrix { node: i })?;
            w_factors.push(chol);
        }

        let n = data.n();
        let omega = &data.feature_map.omega;
        let m = 2.0 * omega * omega.transpose();
        let floor = 1e-10 * (m.trace() / n as f64 + 1.0);
        let eig = SymmetricEigen::new(m);
        let m_values = eig.eigenvalues.iter().map(|&v| v.max(0.0) + h.nu.max(floor)).collect();
        Ok(Self {
            w_factors,
            m_basis: eig.eigenvectors,
            m_values,
        })
    }

    fn scale_w(&self, gw: &PredictorTensor) -> PredictorTensor {
        let blocks = gw
            .blocks()
            .iter()
            .zip(&self.w_factors)
            .map(|(g, chol)| chol.solve(g))
            .collect();
        PredictorTensor::from_blocks(blocks).expect("same shapes as the gradient")
    }

    /// On the boundary of the norm ball, when the scaled step `-D` would
    /// leave it, the scaled direction restricted to the tangent space of
    /// the sphere: `D = P^-1 (g - theta W)` with `theta` chosen so that
    /// `<W, D> = 0`. It stays a descent direction, and the radial
    /// projection after the step only corrects to second order, whereas
    /// projecting the plain scaled step mixes the two metrics and can
    /// fail to descend at all.
    fn tangent_w(&self, w: &PredictorTensor, scaled: &PredictorTensor, set: &ConstraintSet) -> Option<PredictorTensor> {
        let r = set.radius?;
        let outward = w.dot(scaled);
        if w.norm() < r * (1.0 - 1e-9) || outward >= 0.0 {
            return None;
        }
        let pw = self.scale_w(w);
        let theta = outward / w.dot(&pw);
        let mut d = scaled.clone();
        d.axpy(-theta, &pw);
        Some(d)
    }

    fn scale_s(&self, gs: &Matrix) -> Matrix {
        let q = &self.m_basis;
        let sym = 0.5 * (gs + gs.transpose());
        let mut rotated = q.transpose() * sym * q;
        for j in 0..rotated.ncols() {
            for i in 0..rotated.nrows() {
                rotated[(i, j)] *= 2.0 / (self.m_values[i] + self.m_values[j]);
            }
        }
        q * rotated * q.transpose()
    }
}

/// Norm of the gradient with its outward normal-cone components removed:
/// entries of `S` sitting at zero whose gradient pushes them negative, and
/// the radial part of the `W` gradient when the norm bound is active and
/// descent points outward. Equals the gradient norm in the interior.
fn projected_gradient_norm(state: &ModelState, gw: &PredictorTensor, gs: &Matrix, set: &ConstraintSet) -> f64 {
    // S only moves within symmetric matrices
    let sym = 0.5 * (gs + gs.transpose());
    let s_part: f64 = sym
        .iter()
        .zip(state.s.iter())
        .filter(|(g, s)| !(**s <= 0.0 && **g > 0.0))
        .map(|(g, _)| g * g)
        .sum();
    let mut w_part = gw.norm_squared();
    if let Some(r) = set.radius {
        let wn2 = state.w.norm_squared();
        let radial = gw.dot(&state.w);
        if wn2 > 0.0 && wn2.sqrt() >= r * (1.0 - 1e-9) && radial < 0.0 {
            w_part = (w_part - radial * radial / wn2).max(0.0);
        }
    }
    (s_part + w_part).sqrt()
}

fn check_finite(b: &ObjectiveBreakdown, iteration: usize) -> Result<()> {
    if b.total.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFiniteIterate {
            what: "objective",
            iteration,
        })
    }
}

fn checked_gradient(obj: &Objective<'_>, state: &ModelState, iteration: usize) -> Result<(PredictorTensor, Matrix)> {
    let (gw, gs) = obj.gradient(state)?;
    if !gw.is_finite() || gs.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteIterate {
            what: "gradient",
            iteration,
        });
    }
    Ok((gw, gs))
}

struct Accepted {
    state: ModelState,
    value: ObjectiveBreakdown,
    step: f64,
}

/// Backtracks along each direction in turn until the projected move passes
/// the sufficient-decrease test against the first-order prediction.
///
/// A direction starts from its last accepted step divided by `cfg.beta`
/// (capped at `cfg.step_size`); a direction that fails outright starts from the cap
/// again next time.
#[allow(clippy::too_many_arguments)]
fn line_search<D>(
    obj: &Objective<'_>,
    state: &ModelState,
    current: f64,
    grad: (&PredictorTensor, &Matrix),
    directions: &[(usize, D)],
    trial_steps: &mut [f64],
    cfg: &OptimizerConfig,
    iteration: usize,
    mut move_to: impl FnMut(&D, f64) -> Result<ModelState>,
) -> Result<Option<Accepted>> {
    for (slot, dir) in directions {
        let mut step = (trial_steps[*slot] / cfg.beta).min(cfg.step_size);
        for _ in 0..cfg.max_backtracks {
            let trial = move_to(dir, step)?;
            let mut dw = state.w.clone();
            dw.axpy(-1.0, &trial.w);
            let predicted = grad.0.dot(&dw) + grad.1.dot(&(state.s.as_matrix() - trial.s.as_matrix()));
            if predicted <= 0.0 {
                step *= cfg.beta;
                continue;
            }
            // below this the decrease test only compares rounding errors
            if predicted <= 1e-14 * (1.0 + current.abs()) {
                break;
            }
            let value = obj.evaluate(&trial)?;
            check_finite(&value, iteration)?;
            if value.total <= current - cfg.c * predicted {
                trial_steps[*slot] = step;
                return Ok(Some(Accepted {
                    state: trial,
                    value,
                    step,
                }));
            }
            step *= cfg.beta;
        }
        trial_steps[*slot] = cfg.step_size;
    }
    Ok(None)
}

#[allow(clippy::too_many_arguments)]
fn record(
    iteration: usize,
    state: &ModelState,
    breakdown: ObjectiveBreakdown,
    grad_norm: f64,
    step: f64,
    s_step: f64,
    accepted: bool,
) -> IterationRecord {
    IterationRecord {
        iteration,
        breakdown,
        grad_norm,
        step,
        s_step,
        accepted,
        w_norm: state.w.norm(),
        s_min: state.s.iter().copied().fold(f64::INFINITY, f64::min),
        validation_error: None,
    }
}

pub fn fit(
    initial: ModelState,
    data: &TrainingData,
    h: &Hyperparameters,
    cfg: &OptimizerConfig,
) -> Result<(ModelState, Trace)> {
    fit_with_monitor(initial, data, h, cfg, None)
}

// trial-step slots
const JOINT: usize = 0;
const W_SCALED: usize = 1;
const W_PLAIN: usize = 2;
const S_SCALED: usize = 3;
const S_PLAIN: usize = 4;
const W_TANGENT: usize = 5;

/// As [`fit`], additionally calling `monitor` on every recorded iterate
/// (e.g. to track a validation error).
pub fn fit_with_monitor(
    initial: ModelState,
    data: &TrainingData,
    h: &Hyperparameters,
    cfg: &OptimizerConfig,
    mut monitor: Option<&mut dyn FnMut(&ModelState) -> f64>,
) -> Result<(ModelState, Trace)> {
    cfg.validate()?;
    let obj = Objective::new(data, *h)?;
    let set = ConstraintSet::new(h, data.n());
    let mut state = project(initial, &set);
    let precond = if cfg.preconditioned { Some(Preconditioner::new(&obj)?) } else { None };

    let mut current = obj.evaluate(&state)?;
    check_finite(&current, 0)?;
    let mut records = Vec::new();
    let (mut last_step, mut last_s_step, mut last_accepted) = (0.0, 0.0, true);
    let mut trial_steps = [cfg.step_size; 6];

    let mut iteration = 0;
    let termination = loop {
        let (gw, gs) = checked_gradient(&obj, &state, iteration)?;
        let gnorm = projected_gradient_norm(&state, &gw, &gs, &set);
        let mut rec = record(iteration, &state, current, gnorm, last_step, last_s_step, last_accepted);
        if let Some(m) = monitor.as_mut() {
            rec.validation_error = Some(m(&state));
        }
        records.push(rec);

        if !last_accepted {
            break Termination::Stalled;
        }
        if gnorm <= cfg.grad_tolerance * (1.0 + current.total.abs()) {
            break Termination::Converged;
        }
        if iteration >= cfg.max_iters {
            break Termination::MaxIterations;
        }
        iteration += 1;
        last_step = 0.0;
        last_s_step = 0.0;
        last_accepted = false;

        let Some(p) = &precond else {
            let dirs = [(JOINT, (gw.clone(), gs.clone()))];
            let found = line_search(&obj, &state, current.total, (&gw, &gs), &dirs, &mut trial_steps, cfg, iteration, |(dw, ds), step| {
                let mut w = state.w.clone();
                w.axpy(-step, dw);
                project_parts(w, &(state.s.as_matrix() - step * ds), &set)
            })?;
            if let Some(acc) = found {
                (state, current, last_step, last_s_step, last_accepted) = (acc.state, acc.value, acc.step, acc.step, true);
            }
            continue;
        };

        let scaled = p.scale_w(&gw);
        let tangent = p.tangent_w(&state.w, &scaled, &set);
        let w_move = |dw: &PredictorTensor, step: f64| {
            let mut w = state.w.clone();
            w.axpy(-step, dw);
            set.project_w(&mut w);
            Ok(ModelState { w, s: state.s.clone() })
        };
        let found = match tangent {
            None => {
                let dirs = [(W_SCALED, scaled), (W_PLAIN, gw.clone())];
                line_search(&obj, &state, current.total, (&gw, &gs), &dirs, &mut trial_steps, cfg, iteration, w_move)?
            }
            Some(t) => {
                let mut best: Option<Accepted> = None;
                for (slot, dir) in [(W_SCALED, scaled), (W_TANGENT, t), (W_PLAIN, gw.clone())] {
                    let acc = line_search(&obj, &state, current.total, (&gw, &gs), &[(slot, dir)], &mut trial_steps, cfg, iteration, w_move)?;
                    if let Some(a) = acc {
                        if best.as_ref().is_none_or(|b| a.value.total < b.value.total) {
                            best = Some(a);
                        }
                    }
                }
                best
            }
        };
        if let Some(acc) = found {
            (state, current, last_step, last_accepted) = (acc.state, acc.value, acc.step, true);
        }

        let (gw, gs) = checked_gradient(&obj, &state, iteration)?;
        let dirs = [(S_SCALED, p.scale_s(&gs)), (S_PLAIN, gs.clone())];
        let found = line_search(&obj, &state, current.total, (&gw, &gs), &dirs, &mut trial_steps, cfg, iteration, |ds, step| {
            Ok(ModelState {
                w: state.w.clone(),
                s: project_sym_nonneg(&(state.s.as_matrix() - step * ds))?,
            })
        })?;
        if let Some(acc) = found {
            (state, current, last_s_step, last_accepted) = (acc.state, acc.value, acc.step, true);
        }
    };

    Ok((
        state,
        Trace {
            records,
            termination,
        },
    ))
}

/// Outcome of sampling the curvature of the coupled quadratic part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub radius: Option<f64>,
    pub samples: usize,
    pub min_curvature_inside: f64,
    /// Samples with `|W|_F = 100 R`; `None` when the radius is undefined.
    pub min_curvature_outside: Option<f64>,
    pub negative_outside: usize,
    pub tolerance: f64,
}

impl ConvexityReport {
    pub fn convex_inside(&self) -> bool {
        self.min_curvature_inside >= -self.tolerance
    }
}

/// `(kappa/2)|W|^2 + (nu/2)|S - A|^2 + lambda Q(W, Lambda(S), W)`.
pub fn coupled_quadratic(h: &Hyperparameters, anchor: &Matrix, s: &Matrix, w: &PredictorTensor) -> f64 {
    0.5 * h.kappa * w.norm_squared()
        + 0.5 * h.nu * (s - anchor).norm_squared()
        + h.lambda * quadratic_form(w, &laplacian_of(s), w)
}

/// Second derivative of the coupled quadratic along `(ds, dw)` at `(s, w)`.
///
/// The function is a cubic polynomial along any line, so the symmetric
/// second difference is exact for every step length; a unit step keeps the
/// rounding error at the level of the function values.
pub fn second_difference(
    h: &Hyperparameters,
    anchor: &Matrix,
    s: &Matrix,
    w: &PredictorTensor,
    ds: &Matrix,
    dw: &PredictorTensor,
) -> f64 {
    let step = 1.0;
    let at = |sign: f64| {
        let mut wt = w.clone();
        wt.axpy(sign * step, dw);
        coupled_quadratic(h, anchor, &(s + sign * step * ds), &wt)
    };
    (at(1.0) - 2.0 * at(0.0) + at(-1.0)) / (step * step)
}

/// Samples points of the set (and points at 100x the radius) with random
/// unit directions, reporting the smallest second directional difference.
pub fn check_convexity(h: &Hyperparameters, n: usize, samples: usize, seed: u64) -> Result<ConvexityReport> {
    h.validate()?;
    if n == 0 || samples == 0 {
        return Err(Error::param("n/samples", "must be at least 1"));
    }
    let radius = convexity_radius(h, n).ok();
    if radius.is_none() && h.lambda > 0.0 {
        return Err(convexity_radius(h, n).unwrap_err());
    }
    let (d, q) = (3, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tolerance = 1e-8;

    let random_sym_nonneg = |rng: &mut ChaCha8Rng| {
        let m = Matrix::from_fn(n, n, |_, _| rng.random_range(0.0..1.0));
        SymNonNegMatrix::new(0.5 * (&m + m.transpose())).expect("symmetric by construction")
    };
    let random_tensor = |rng: &mut ChaCha8Rng| {
        PredictorTensor::from_blocks(
            (0..n)
                .map(|_| Matrix::from_fn(d, q, |_, _| rng.random_range(-1.0..1.0)))
                .collect(),
        )
        .expect("uniform shapes")
    };

    let mut min_inside = f64::INFINITY;
    let mut min_outside: Option<f64> = None;
    let mut negative_outside = 0;
    for _ in 0..samples {
        let anchor = random_sym_nonneg(&mut rng);
        let s = random_sym_nonneg(&mut rng);
        let mut w = random_tensor(&mut rng);
        let target = radius.unwrap_or(1.0) * rng.random_range(0.0..1.0);
        let norm = w.norm();
        w.scale_mut(target / norm);

        let raw = Matrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let mut ds = 0.5 * (&raw + raw.transpose());
        let mut dw = random_tensor(&mut rng);
        let scale = (ds.norm_squared() + dw.norm_squared()).sqrt();
        ds /= scale;
        dw.scale_mut(1.0 / scale);

        let c = second_difference(h, &anchor, &s, &w, &ds, &dw);
        min_inside = min_inside.min(c);

        if let Some(r) = radius {
            let mut far = w.clone();
            let norm = far.norm().max(f64::MIN_POSITIVE);
            far.scale_mut(100.0 * r / norm);
            let c = second_difference(h, &anchor, &s, &far, &ds, &dw);
            if c < -tolerance {
                negative_outside += 1;
            }
            min_outside = Some(min_outside.map_or(c, |m| m.min(c)));
        }
    }
    Ok(ConvexityReport {
        radius,
        samples,
        min_curvature_inside: min_inside,
        min_curvature_outside: min_outside,
        negative_outside,
        tolerance,
    })
}
