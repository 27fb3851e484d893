//! The commands behind the `dyngraph` binary.
//!
//! Each command takes its resolved configuration, writes its outputs into
//! an output directory together with a `config.json` echoing that
//! configuration, and is deterministic: rerunning it with the same inputs
//! reproduces every file byte for byte.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::info;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::baselines::Method;
use crate::dataset::{
    create_dir, fmt_f64, read_dataset, read_text, render_cv, render_predictors, render_report, render_trace,
    render_triplets, write_atomic, write_dataset, write_json, write_table, Dataset,
};
use crate::error::{Error, Result};
use crate::evaluation::{
    bootstrap_table, cross_validate, run_method, sweep_holdout, BootstrapTable, CvGrid, CvResult, EvalEntry,
    Holdout, SweepParameter, TableConfig,
};
use crate::features::FeatureSpec;
use crate::objective::Hyperparameters;
use crate::optimizer::{OptimizerConfig, Termination};
use crate::synthetic::{generate, GeneratorConfig, RNG_ID};

/// Reads a JSON config; missing fields take their defaults and `None`
/// yields the default config.
pub fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = read_text(p)?;
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
        }
    }
}

/// Default training window: everything but the last snapshot.
fn resolve_train_len(train_len: Option<usize>, ds: &Dataset) -> usize {
    train_len.unwrap_or_else(|| ds.graphs.len().saturating_sub(1))
}

pub fn cmd_generate(cfg: &GeneratorConfig, out: &Path) -> Result<()> {
    let (graphs, _) = generate(cfg)?;
    let ds = Dataset::new(graphs, None)?;
    create_dir(out)?;
    write_dataset(out, &ds, RNG_ID, Some(cfg.seed))?;
    write_json(&out.join("config.json"), cfg)?;
    info!("wrote {} snapshots of {} nodes to {}", cfg.t, cfg.n, out.display());
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub data: PathBuf,
    pub hyperparameters: Hyperparameters,
    pub features: FeatureSpec,
    pub optimizer: OptimizerConfig,
    /// Snapshots used for training; the next one is held out and scored.
    /// Defaults to all but the last.
    pub train_len: Option<usize>,
    /// Fit once per value instead and write `sweep.csv`.
    pub sweep: Option<SweepSpec>,
}

/// What a single fit produced.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub entry: EvalEntry,
    pub termination: Termination,
    pub iterations: usize,
}

fn render_sweep(parameter: SweepParameter, values: &[f64], entries: &[EvalEntry]) -> String {
    let name = match parameter {
        SweepParameter::Lambda => "lambda",
        SweepParameter::Nu => "nu",
    };
    let mut out = format!("{name},feature_rel_error,graph_rel_error\n");
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    for (v, e) in values.iter().zip(entries) {
        let _ = writeln!(out, "{},{},{}", fmt_f64(*v), opt(e.feature), opt(e.graph));
    }
    out
}

/// Fits the joint model and writes `W.tsv`, `S.tsv`, `trace.csv` and
/// `report.csv`, or only `sweep.csv` in sweep mode. Returns `None` in
/// sweep mode.
pub fn cmd_fit(cfg: &FitConfig, out: &Path) -> Result<Option<FitOutcome>> {
    let (ds, _) = read_dataset(&cfg.data)?;
    let resolved = FitConfig {
        train_len: Some(resolve_train_len(cfg.train_len, &ds)),
        ..cfg.clone()
    };
    let holdout = Holdout::split(&ds, resolved.train_len.unwrap_or_default(), &cfg.features)?;
    create_dir(out)?;
    write_json(&out.join("config.json"), &resolved)?;
    if let Some(sw) = &cfg.sweep {
        let entries = sweep_holdout(&holdout, &cfg.hyperparameters, sw.parameter, &sw.values, &cfg.optimizer)?;
        write_atomic(&out.join("sweep.csv"), render_sweep(sw.parameter, &sw.values, &entries).as_bytes())?;
        return Ok(None);
    }
    let run = run_method(Method::Hybrid, &holdout, &cfg.hyperparameters, &cfg.optimizer)?;
    let (state, trace) = run
        .fit
        .ok_or_else(|| Error::Config("the joint method returned no fit".into()))?;
    write_atomic(&out.join("W.tsv"), render_predictors(&state.w).as_bytes())?;
    write_atomic(&out.join("S.tsv"), render_triplets(state.s.as_matrix()).as_bytes())?;
    write_atomic(&out.join("trace.csv"), render_trace(&trace).as_bytes())?;
    write_atomic(&out.join("report.csv"), render_report(std::slice::from_ref(&run.entry)).as_bytes())?;
    Ok(Some(FitOutcome {
        entry: run.entry,
        termination: trace.termination,
        iterations: trace.iterations(),
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub data: PathBuf,
    pub methods: Vec<Method>,
    pub hyperparameters: Hyperparameters,
    pub features: FeatureSpec,
    pub optimizer: OptimizerConfig,
    pub train_len: Option<usize>,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            data: PathBuf::new(),
            methods: Method::ALL.to_vec(),
            hyperparameters: Hyperparameters::default(),
            features: FeatureSpec::default(),
            optimizer: OptimizerConfig::default(),
            train_len: None,
        }
    }
}

/// Scores every configured method on the held-out step; writes `report.csv`.
pub fn cmd_baseline(cfg: &BaselineConfig, out: &Path) -> Result<Vec<EvalEntry>> {
    if cfg.methods.is_empty() {
        return Err(Error::param("methods", "must not be empty"));
    }
    let (ds, _) = read_dataset(&cfg.data)?;
    let resolved = BaselineConfig {
        train_len: Some(resolve_train_len(cfg.train_len, &ds)),
        ..cfg.clone()
    };
    let holdout = Holdout::split(&ds, resolved.train_len.unwrap_or_default(), &cfg.features)?;
    let entries = cfg
        .methods
        .iter()
        .map(|&m| run_method(m, &holdout, &cfg.hyperparameters, &cfg.optimizer).map(|r| r.entry))
        .collect::<Result<Vec<_>>>()?;
    create_dir(out)?;
    write_json(&out.join("config.json"), &resolved)?;
    write_atomic(&out.join("report.csv"), render_report(&entries).as_bytes())?;
    Ok(entries)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvConfig {
    pub data: PathBuf,
    pub grid: CvGrid,
    /// Supplies `eta`, and `nu` and `lambda` when stage 2 is off.
    pub hyperparameters: Hyperparameters,
    pub features: FeatureSpec,
    pub optimizer: OptimizerConfig,
    /// Only these leading snapshots are cross-validated on, so the step
    /// `fit` holds out stays unseen. Defaults to all but the last.
    pub train_len: Option<usize>,
}

/// Writes the searched surfaces to `cv.csv` and the selection to
/// `hyperparameters.json`, which `fit` and `baseline` accept as is.
pub fn cmd_cv(cfg: &CvConfig, out: &Path) -> Result<CvResult> {
    let (ds, _) = read_dataset(&cfg.data)?;
    let train_len = resolve_train_len(cfg.train_len, &ds);
    let resolved = CvConfig {
        train_len: Some(train_len),
        ..cfg.clone()
    };
    let res = cross_validate(&ds.prefix(train_len)?, &cfg.grid, &cfg.hyperparameters, &cfg.features, &cfg.optimizer)?;
    create_dir(out)?;
    write_json(&out.join("config.json"), &resolved)?;
    write_atomic(&out.join("cv.csv"), render_cv(&res).as_bytes())?;
    write_json(&out.join("hyperparameters.json"), &res.hyperparameters)?;
    Ok(res)
}

/// Writes the summary to `table.csv` and the per-replication errors to
/// `records.csv`.
pub fn cmd_table(cfg: &TableConfig, out: &Path) -> Result<BootstrapTable> {
    let table = bootstrap_table(cfg)?;
    create_dir(out)?;
    write_json(&out.join("config.json"), cfg)?;
    write_table(out, &table)?;
    Ok(table)
}
