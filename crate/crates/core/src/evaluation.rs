//! Held-out relative errors, two-stage temporal cross-validation, and
//! replicated comparisons on generated data.

use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{ridge_fit, shrinkage_only, BaselineResult, Method};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::features::{apply_feature_map, build_descriptors, FeatureMap, FeatureSpec};
use crate::linalg::{shrink, Matrix};
use crate::objective::{predict, Hyperparameters, ModelState, TrainingData};
use crate::optimizer::{fit_with_monitor, OptimizerConfig, Trace};
use crate::synthetic::{generate, GeneratorConfig};

/// `|pred - truth|_F / |truth|_F`, or `None` when the truth is zero.
pub fn relative_error(pred: &Matrix, truth: &Matrix) -> Result<Option<f64>> {
    if pred.shape() != truth.shape() {
        return Err(Error::dims(
            "prediction",
            format!("{}x{}", truth.nrows(), truth.ncols()),
            format!("{}x{}", pred.nrows(), pred.ncols()),
        ));
    }
    let denom = truth.norm();
    if denom == 0.0 {
        return Ok(None);
    }
    Ok(Some((pred - truth).norm() / denom))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalEntry {
    pub method: Method,
    pub feature: Option<f64>,
    pub graph: Option<f64>,
}

/// Errors of whichever predictions the method made.
pub fn relative_errors(result: &BaselineResult, next_features: &Matrix, next_graph: &Matrix) -> Result<EvalEntry> {
    let feature = match &result.predicted_features {
        Some(p) => relative_error(p, next_features)?,
        None => None,
    };
    let graph = match &result.predicted_graph {
        Some(p) => relative_error(p, next_graph)?,
        None => None,
    };
    Ok(EvalEntry {
        method: result.method,
        feature,
        graph,
    })
}

/// Training data from the first `T` snapshots and the truth at `T + 1`.
#[derive(Debug, Clone)]
pub struct Holdout {
    pub data: TrainingData,
    pub next_features: Matrix,
    pub next_graph: Matrix,
}

impl Holdout {
    /// `Omega` is built from `A_T`, the last training snapshot, so nothing
    /// at or after the held-out time is seen.
    pub fn split(ds: &Dataset, train_len: usize, spec: &FeatureSpec) -> Result<Self> {
        if train_len < 2 || train_len >= ds.graphs.len() {
            return Err(Error::InsufficientData(format!(
                "holdout needs 2 <= T < {} snapshots, got T = {train_len}",
                ds.graphs.len()
            )));
        }
        let graphs = ds.graphs.prefix(train_len)?;
        let map = FeatureMap::build(graphs.last(), spec)?;
        let next_graph = ds.graphs.get(train_len).as_matrix().clone();
        let (features, next_features) = match &ds.features {
            Some(x) => (
                crate::features::FeatureSeries {
                    frames: x.frames[..train_len].to_vec(),
                },
                x.frames[train_len].clone(),
            ),
            None => (apply_feature_map(&graphs, &map)?, &next_graph * &map.omega),
        };
        let descriptors = build_descriptors(&features)?;
        let data = TrainingData::new(graphs, features, descriptors, map)?;
        Ok(Self {
            data,
            next_features,
            next_graph,
        })
    }
}

#[derive(Debug, Clone)]
pub struct MethodRun {
    pub entry: EvalEntry,
    pub prediction: BaselineResult,
    /// Final state and trace of the joint methods.
    pub fit: Option<(ModelState, Trace)>,
}

/// Fits `method` on the training window and scores it on the held-out step.
/// Joint fits record the held-out feature error of every iterate.
pub fn run_method(method: Method, holdout: &Holdout, h: &Hyperparameters, opt: &OptimizerConfig) -> Result<MethodRun> {
    let data = &holdout.data;
    let phi_t = data.last_descriptor();
    let (prediction, fit) = match method.joint_hyperparameters(h) {
        Some(hj) => {
            let mut monitor = |st: &ModelState| {
                predict(&st.w, phi_t)
                    .ok()
                    .and_then(|p| relative_error(&p, &holdout.next_features).ok().flatten())
                    .unwrap_or(f64::NAN)
            };
            let (state, trace) = fit_with_monitor(data.initial_state(), data, &hj, opt, Some(&mut monitor))?;
            let prediction = BaselineResult {
                method,
                predicted_features: Some(predict(&state.w, phi_t)?),
                predicted_graph: Some(state.s.as_matrix().clone()),
            };
            (prediction, Some((state, trace)))
        }
        None if method == Method::RegressionOnly => {
            let w = ridge_fit(&data.descriptors, &data.features, h.kappa)?;
            let prediction = BaselineResult {
                method,
                predicted_features: Some(predict(&w, phi_t)?),
                predicted_graph: None,
            };
            (prediction, None)
        }
        None => {
            let mu = h
                .mu()
                .ok_or_else(|| Error::param("nu", "shrinkage needs nu > 0 to define mu = tau / nu"))?;
            let prediction = BaselineResult {
                method,
                predicted_features: None,
                predicted_graph: Some(shrinkage_only(data.last_graph(), mu)?),
            };
            (prediction, None)
        }
    };
    let entry = relative_errors(&prediction, &holdout.next_features, &holdout.next_graph)?;
    Ok(MethodRun { entry, prediction, fit })
}

/// `points` values spaced evenly in log scale from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            let mut v: Vec<f64> = (0..points)
                .map(|k| (a + (b - a) * k as f64 / (points - 1) as f64).exp())
                .collect();
            v[0] = lo;
            v[points - 1] = hi;
            v
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Selection {
    Feature,
    Graph,
    Sum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvGrid {
    pub kappa: Vec<f64>,
    pub mu: Vec<f64>,
    pub nu: Vec<f64>,
    pub lambda: Vec<f64>,
    /// Share of the training horizon used as validation times.
    pub validation_fraction: f64,
    /// Also search `(nu, lambda)` with the joint method at `tau = nu * mu_cv`.
    pub stage2: bool,
    /// Number of validation times, counted from the end, used by stage 2.
    pub stage2_folds: usize,
    pub selection: Selection,
}

impl Default for CvGrid {
    fn default() -> Self {
        Self {
            kappa: log_grid(1e-3, 1e1, 7),
            mu: log_grid(1e-3, 1e1, 7),
            nu: log_grid(1e-2, 1e1, 5),
            lambda: log_grid(1e-2, 1e1, 5),
            validation_fraction: 0.2,
            stage2: false,
            stage2_folds: 1,
            selection: Selection::Sum,
        }
    }
}

impl CvGrid {
    pub fn validate(&self) -> Result<()> {
        let mut grids = vec![("kappa", &self.kappa), ("mu", &self.mu)];
        if self.stage2 {
            grids.push(("nu", &self.nu));
            grids.push(("lambda", &self.lambda));
        }
        for (name, g) in grids {
            if g.is_empty() {
                return Err(Error::param(name, "grid must not be empty"));
            }
            if g.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::param(name, "grid values must be finite and >= 0"));
            }
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction <= 1.0) {
            return Err(Error::param("validation_fraction", "must lie in (0, 1]"));
        }
        if self.stage2 && self.stage2_folds == 0 {
            return Err(Error::param("stage2_folds", "must be at least 1"));
        }
        Ok(())
    }
}

/// Validation times (1-based) in the last `ceil(fraction * horizon)` steps
/// that leave at least two training snapshots before them.
pub fn validation_times(horizon: usize, fraction: f64) -> Vec<usize> {
    let count = ((fraction * horizon as f64).ceil() as usize).clamp(1, horizon);
    (horizon - count + 1..=horizon).filter(|&t| t >= 3).collect()
}

/// Expanding-window folds: for each validation time `t_v`, train on
/// `1..t_v-1` and hold out `t_v`.
pub fn cv_folds(ds: &Dataset, fraction: f64, spec: &FeatureSpec) -> Result<Vec<(usize, Holdout)>> {
    let times = validation_times(ds.graphs.len(), fraction);
    if times.is_empty() {
        return Err(Error::InsufficientData(format!(
            "cross-validation needs at least 3 snapshots, got {}",
            ds.graphs.len()
        )));
    }
    times
        .into_iter()
        .map(|tv| Ok((tv, Holdout::split(&ds.prefix(tv)?, tv - 1, spec)?)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointPoint {
    pub nu: f64,
    pub lambda: f64,
    pub feature: f64,
    pub graph: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub hyperparameters: Hyperparameters,
    pub kappa_cv: f64,
    pub mu_cv: f64,
    pub validation_times: Vec<usize>,
    /// `(kappa, mean validation feature error of ridge regression)`.
    pub kappa_surface: Vec<(f64, f64)>,
    /// `(mu, mean validation graph error of shrinkage)`.
    pub mu_surface: Vec<(f64, f64)>,
    pub joint_surface: Vec<JointPoint>,
}

fn mean_defined(values: impl Iterator<Item = Option<f64>>) -> f64 {
    let v: Vec<f64> = values.flatten().collect();
    if v.is_empty() {
        f64::INFINITY
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// First index of the smallest value; NaN never wins.
fn argmin(values: impl Iterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.enumerate() {
        let v = if v.is_nan() { f64::INFINITY } else { v };
        if best.is_none_or(|(_, b)| v < b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// Stage 1 picks `kappa` by ridge regression alone and `mu` by shrinkage
/// alone; stage 2 (optional) searches `(nu, lambda)` for the joint method
/// with `tau = nu * mu_cv`. `base` supplies `eta` and, without stage 2,
/// `nu` and `lambda`.
pub fn cross_validate(
    ds: &Dataset,
    grid: &CvGrid,
    base: &Hyperparameters,
    spec: &FeatureSpec,
    opt: &OptimizerConfig,
) -> Result<CvResult> {
    grid.validate()?;
    let folds = cv_folds(ds, grid.validation_fraction, spec)?;

    let mut kappa_surface = Vec::with_capacity(grid.kappa.len());
    for &kappa in &grid.kappa {
        let mut errs = Vec::with_capacity(folds.len());
        for (_, f) in &folds {
            let w = ridge_fit(&f.data.descriptors, &f.data.features, kappa)?;
            let p = predict(&w, f.data.last_descriptor())?;
            errs.push(relative_error(&p, &f.next_features)?);
        }
        kappa_surface.push((kappa, mean_defined(errs.into_iter())));
    }
    let mut mu_surface = Vec::with_capacity(grid.mu.len());
    for &mu in &grid.mu {
        let mut errs = Vec::with_capacity(folds.len());
        for (_, f) in &folds {
            let s = shrink(f.data.last_graph(), mu)?;
            errs.push(relative_error(&s, &f.next_graph)?);
        }
        mu_surface.push((mu, mean_defined(errs.into_iter())));
    }
    let kappa_cv = kappa_surface[argmin(kappa_surface.iter().map(|p| p.1)).expect("nonempty grid")].0;
    let mu_cv = mu_surface[argmin(mu_surface.iter().map(|p| p.1)).expect("nonempty grid")].0;
    info!("stage 1: kappa_cv = {kappa_cv}, mu_cv = {mu_cv}");

    let mut h = Hyperparameters {
        kappa: kappa_cv,
        tau: base.nu * mu_cv,
        ..*base
    };
    let mut joint_surface = Vec::new();
    if grid.stage2 {
        let used = &folds[folds.len().saturating_sub(grid.stage2_folds)..];
        for &nu in &grid.nu {
            for &lambda in &grid.lambda {
                let hp = Hyperparameters {
                    kappa: kappa_cv,
                    tau: nu * mu_cv,
                    nu,
                    lambda,
                    eta: base.eta,
                };
                let (mut fe, mut ge) = (Vec::new(), Vec::new());
                for (_, f) in used {
                    let run = run_method(Method::Hybrid, f, &hp, opt)?;
                    fe.push(run.entry.feature);
                    ge.push(run.entry.graph);
                }
                joint_surface.push(JointPoint {
                    nu,
                    lambda,
                    feature: mean_defined(fe.into_iter()),
                    graph: mean_defined(ge.into_iter()),
                });
            }
        }
        let score = |p: &JointPoint| match grid.selection {
            Selection::Feature => p.feature,
            Selection::Graph => p.graph,
            Selection::Sum => p.feature + p.graph,
        };
        let best = joint_surface[argmin(joint_surface.iter().map(score)).expect("nonempty grid")];
        info!("stage 2: nu = {}, lambda = {}", best.nu, best.lambda);
        h.nu = best.nu;
        h.lambda = best.lambda;
        h.tau = best.nu * mu_cv;
    }
    Ok(CvResult {
        hyperparameters: h,
        kappa_cv,
        mu_cv,
        validation_times: folds.iter().map(|(t, _)| *t).collect(),
        kappa_surface,
        mu_surface,
        joint_surface,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation across replications.
    pub std: f64,
    /// `std / sqrt(count)`.
    pub stderr: f64,
    pub count: usize,
}

impl Summary {
    /// Sums in sorted order so the result does not depend on the order of
    /// `values`.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let mut dev: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
        dev.sort_by(f64::total_cmp);
        let std = if v.len() > 1 { (dev.iter().sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
        Some(Self {
            mean,
            std,
            stderr: std / n.sqrt(),
            count: v.len(),
        })
    }
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

/// Standard deviation of the mean over `resamples` bootstrap resamples.
pub fn bootstrap_std(values: &[f64], resamples: usize, seed: u64) -> f64 {
    if values.len() < 2 || resamples < 2 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let means: Vec<f64> = (0..resamples)
        .map(|_| (0..values.len()).map(|_| values[rng.random_range(0..values.len())]).sum::<f64>() / values.len() as f64)
        .collect();
    Summary::of(&means).map_or(0.0, |s| s.std)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    Feature,
    Graph,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub replication: usize,
    pub seed: u64,
    pub method: Method,
    pub feature: Option<f64>,
    pub graph: Option<f64>,
}

impl SeedRecord {
    pub fn metric(&self, m: Metric) -> Option<f64> {
        match m {
            Metric::Feature => self.feature,
            Metric::Graph => self.graph,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub method: Method,
    pub feature: Option<Summary>,
    pub graph: Option<Summary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapTable {
    pub rows: Vec<TableRow>,
    pub records: Vec<SeedRecord>,
}

pub fn summarize(records: &[SeedRecord], methods: &[Method]) -> Vec<TableRow> {
    methods
        .iter()
        .map(|&method| {
            let of = |m: Metric| {
                let v: Vec<f64> = records
                    .iter()
                    .filter(|r| r.method == method)
                    .filter_map(|r| r.metric(m))
                    .collect();
                Summary::of(&v)
            };
            TableRow {
                method,
                feature: of(Metric::Feature),
                graph: of(Metric::Graph),
            }
        })
        .collect()
}

/// Share of replications where `a` beats `b` on `metric` (strictly, or
/// with ties counted as wins when `strict` is false). Replications where
/// either value is missing are skipped.
pub fn paired_fraction(records: &[SeedRecord], a: Method, b: Method, metric: Metric, strict: bool) -> Option<f64> {
    let value = |rep: usize, m: Method| {
        records
            .iter()
            .find(|r| r.replication == rep && r.method == m)
            .and_then(|r| r.metric(metric))
    };
    let mut reps: Vec<usize> = records.iter().map(|r| r.replication).collect();
    reps.sort_unstable();
    reps.dedup();
    let pairs: Vec<(f64, f64)> = reps
        .into_iter()
        .filter_map(|rep| Some((value(rep, a)?, value(rep, b)?)))
        .collect();
    if pairs.is_empty() {
        return None;
    }
    let wins = pairs
        .iter()
        .filter(|(x, y)| if strict { x < y } else { x <= y })
        .count();
    Some(wins as f64 / pairs.len() as f64)
}

/// Generated replications: replication `r` uses generator seed `seed + r`,
/// trains on the first `T - 1` snapshots and scores the last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TableConfig {
    pub generator: GeneratorConfig,
    pub replications: usize,
    pub methods: Vec<Method>,
    pub hyperparameters: Hyperparameters,
    /// Cross-validate on each replication's training window; fixed
    /// hyperparameters otherwise.
    pub cv: Option<CvGrid>,
    pub features: FeatureSpec,
    pub optimizer: OptimizerConfig,
}

impl Default for TableConfig {
    fn default() -> Self {
        Self {
            generator: GeneratorConfig::default(),
            replications: 50,
            methods: Method::ALL.to_vec(),
            hyperparameters: Hyperparameters::default(),
            cv: Some(CvGrid::default()),
            features: FeatureSpec::default(),
            optimizer: OptimizerConfig::default(),
        }
    }
}

/// One generated replication: its data split and tuned hyperparameters.
#[derive(Debug, Clone)]
pub struct Replication {
    pub seed: u64,
    pub holdout: Holdout,
    pub hyperparameters: Hyperparameters,
    pub cv: Option<CvResult>,
}

pub fn replicate(
    generator: &GeneratorConfig,
    seed: u64,
    base: &Hyperparameters,
    cv: Option<&CvGrid>,
    spec: &FeatureSpec,
    opt: &OptimizerConfig,
) -> Result<Replication> {
    let (graphs, _) = generate(&GeneratorConfig { seed, ..generator.clone() })?;
    let ds = Dataset::new(graphs, None)?;
    let train_len = ds.graphs.len() - 1;
    let holdout = Holdout::split(&ds, train_len, spec)?;
    let (hyperparameters, cv) = match cv {
        Some(grid) => {
            let res = cross_validate(&ds.prefix(train_len)?, grid, base, spec, opt)?;
            (res.hyperparameters, Some(res))
        }
        None => (*base, None),
    };
    Ok(Replication {
        seed,
        holdout,
        hyperparameters,
        cv,
    })
}

pub fn bootstrap_table(cfg: &TableConfig) -> Result<BootstrapTable> {
    if cfg.replications < 2 {
        return Err(Error::param("replications", "must be at least 2"));
    }
    if cfg.methods.is_empty() {
        return Err(Error::param("methods", "must not be empty"));
    }
    cfg.hyperparameters.validate()?;
    let mut records = Vec::with_capacity(cfg.replications * cfg.methods.len());
    for r in 0..cfg.replications {
        let seed = cfg.generator.seed.wrapping_add(r as u64);
        let rep = replicate(&cfg.generator, seed, &cfg.hyperparameters, cfg.cv.as_ref(), &cfg.features, &cfg.optimizer)?;
        for &method in &cfg.methods {
            let run = run_method(method, &rep.holdout, &rep.hyperparameters, &cfg.optimizer)?;
            records.push(SeedRecord {
                replication: r,
                seed,
                method,
                feature: run.entry.feature,
                graph: run.entry.graph,
            });
        }
        info!("replication {}/{} (seed {seed}) done", r + 1, cfg.replications);
    }
    Ok(BootstrapTable {
        rows: summarize(&records, &cfg.methods),
        records,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParameter {
    /// Vary `lambda` with the other weights fixed.
    Lambda,
    /// Vary `nu` with `tau = nu * mu`.
    Nu,
}

/// Held-out errors of the joint method along one parameter.
pub fn sweep_holdout(
    holdout: &Holdout,
    base: &Hyperparameters,
    parameter: SweepParameter,
    values: &[f64],
    opt: &OptimizerConfig,
) -> Result<Vec<EvalEntry>> {
    let mu = base.mu();
    values
        .iter()
        .map(|&v| {
            let h = match parameter {
                SweepParameter::Lambda => Hyperparameters { lambda: v, ..*base },
                SweepParameter::Nu => {
                    let mu = mu.ok_or_else(|| Error::param("nu", "the base nu must be positive to fix mu"))?;
                    Hyperparameters { nu: v, tau: v * mu, ..*base }
                }
            };
            Ok(run_method(Method::Hybrid, holdout, &h, opt)?.entry)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub generator: GeneratorConfig,
    pub replications: usize,
    pub values: Vec<f64>,
    pub hyperparameters: Hyperparameters,
    /// Stage-1 cross-validation per replication, setting `kappa` and `mu`.
    pub cv: Option<CvGrid>,
    pub features: FeatureSpec,
    pub optimizer: OptimizerConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            generator: GeneratorConfig::default(),
            replications: 10,
            values: vec![0.0, 1e-4, 1e-3, 1e-2, 1e-1],
            hyperparameters: Hyperparameters::default(),
            cv: Some(CvGrid::default()),
            features: FeatureSpec::default(),
            optimizer: OptimizerConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    /// Per replication, in replication order.
    pub feature: Vec<Option<f64>>,
    pub graph: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub parameter: SweepParameter,
    pub seeds: Vec<u64>,
    pub points: Vec<SweepPoint>,
}

pub fn sweep(cfg: &SweepConfig, parameter: SweepParameter) -> Result<SweepResult> {
    if cfg.values.is_empty() {
        return Err(Error::param("values", "must not be empty"));
    }
    let mut points: Vec<SweepPoint> = cfg
        .values
        .iter()
        .map(|&value| SweepPoint {
            value,
            feature: Vec::new(),
            graph: Vec::new(),
        })
        .collect();
    let mut seeds = Vec::with_capacity(cfg.replications);
    for r in 0..cfg.replications {
        let seed = cfg.generator.seed.wrapping_add(r as u64);
        let mut cv = cfg.cv.clone();
        if let Some(g) = cv.as_mut() {
            g.stage2 = false;
        }
        let rep = replicate(&cfg.generator, seed, &cfg.hyperparameters, cv.as_ref(), &cfg.features, &cfg.optimizer)?;
        let entries = sweep_holdout(&rep.holdout, &rep.hyperparameters, parameter, &cfg.values, &cfg.optimizer)?;
        for (p, e) in points.iter_mut().zip(entries) {
            p.feature.push(e.feature);
            p.graph.push(e.graph);
        }
        seeds.push(seed);
        info!("sweep replication {}/{} (seed {seed}) done", r + 1, cfg.replications);
    }
    Ok(SweepResult {
        parameter,
        seeds,
        points,
    })
}
