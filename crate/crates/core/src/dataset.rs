//! On-disk formats.
//!
//! A dataset is a directory holding a `meta` file of `key value` lines
//! (`n`, `T`, `q`, `monotone`, `rng`, `seed`), one `A_<t>.tsv` per snapshot
//! with sparse `i<TAB>j<TAB>weight` lines (0-based, `i <= j`, omitted
//! entries zero) and, when the node features are external, one dense
//! `X_<t>.tsv` per snapshot. `q` is 0 when features are derived from the
//! graphs. Numbers are written with 17 significant digits and every file is
//! written to a temporary name and renamed into place.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::baselines::Method;
use crate::error::{Error, Result};
use crate::evaluation::{BootstrapTable, CvResult, EvalEntry, SeedRecord, Summary, TableRow};
use crate::features::{FeatureSeries, GraphSequence};
use crate::linalg::{Matrix, SymNonNegMatrix};
use crate::objective::{ObjectiveBreakdown, PredictorTensor};
use crate::optimizer::{IterationRecord, Termination, Trace};

/// Graphs plus, optionally, externally supplied node features.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub graphs: GraphSequence,
    pub features: Option<FeatureSeries>,
}

impl Dataset {
    pub fn new(graphs: GraphSequence, features: Option<FeatureSeries>) -> Result<Self> {
        if let Some(x) = &features {
            if x.len() != graphs.len() {
                return Err(Error::dims("feature frames", graphs.len(), x.len()));
            }
            for (k, f) in x.frames.iter().enumerate() {
                if f.nrows() != graphs.n() || f.ncols() != x.q() {
                    return Err(Error::dims(
                        format!("X_{}", k + 1),
                        format!("{}x{}", graphs.n(), x.q()),
                        format!("{}x{}", f.nrows(), f.ncols()),
                    ));
                }
            }
        }
        Ok(Self { graphs, features })
    }

    /// The first `len` snapshots.
    pub fn prefix(&self, len: usize) -> Result<Self> {
        Ok(Self {
            graphs: self.graphs.prefix(len)?,
            features: self.features.as_ref().map(|x| FeatureSeries {
                frames: x.frames[..len].to_vec(),
            }),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetMeta {
    pub n: usize,
    pub t: usize,
    pub q: usize,
    pub monotone: bool,
    pub rng: String,
    pub seed: Option<u64>,
}

impl DatasetMeta {
    fn render(&self) -> String {
        let seed = self.seed.map_or_else(|| "none".to_string(), |s| s.to_string());
        format!(
            "n {}\nT {}\nq {}\nmonotone {}\nrng {}\nseed {}\n",
            self.n, self.t, self.q, self.monotone, self.rng, seed
        )
    }

    fn parse(path: &Path, text: &str) -> Result<Self> {
        let mut kv = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once(char::is_whitespace)
                .ok_or_else(|| format_err(path, lineno, "expected `key value`"))?;
            kv.insert(k.to_string(), v.trim().to_string());
        }
        let get = |k: &str| {
            kv.get(k)
                .ok_or_else(|| Error::Format {
                    path: path.to_path_buf(),
                    reason: format!("missing key `{k}`"),
                })
        };
        let num = |k: &str| -> Result<usize> {
            get(k)?.parse().map_err(|_| Error::Format {
                path: path.to_path_buf(),
                reason: format!("`{k}` is not a count"),
            })
        };
        let monotone = match get("monotone")?.as_str() {
            "true" => true,
            "false" => false,
            other => {
                return Err(Error::Format {
                    path: path.to_path_buf(),
                    reason: format!("`monotone` must be true or false, got `{other}`"),
                })
            }
        };
        let seed = match kv.get("seed").map(String::as_str) {
            None | Some("none") => None,
            Some(s) => Some(s.parse().map_err(|_| Error::Format {
                path: path.to_path_buf(),
                reason: format!("`seed` is not an integer: `{s}`"),
            })?),
        };
        Ok(Self {
            n: num("n")?,
            t: num("T")?,
            q: num("q")?,
            monotone,
            rng: kv.get("rng").cloned().unwrap_or_else(|| "none".into()),
            seed,
        })
    }
}

fn format_err(path: &Path, lineno: usize, reason: impl std::fmt::Display) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        reason: format!("line {}: {reason}", lineno + 1),
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn parse_f64(path: &Path, lineno: usize, s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| format_err(path, lineno, format!("`{s}` is not a number")))
}

fn parse_opt(path: &Path, lineno: usize, s: &str) -> Result<Option<f64>> {
    if s.trim().is_empty() {
        Ok(None)
    } else {
        parse_f64(path, lineno, s).map(Some)
    }
}

fn parse_usize(path: &Path, lineno: usize, s: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| format_err(path, lineno, format!("`{s}` is not an index")))
}

/// Writes `contents` beside `path` under a temporary name, then renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("`{}` has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Upper triangle of a symmetric matrix as sparse triplets.
pub fn render_triplets(a: &Matrix) -> String {
    let mut out = String::new();
    for i in 0..a.nrows() {
        for j in i..a.ncols() {
            let w = a[(i, j)];
            if w != 0.0 {
                let _ = writeln!(out, "{i}\t{j}\t{}", fmt_f64(w));
            }
        }
    }
    out
}

pub fn parse_triplets(path: &Path, text: &str, n: usize) -> Result<SymNonNegMatrix> {
    let mut a = Matrix::zeros(n, n);
    let mut seen = std::collections::HashSet::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(format_err(path, lineno, format!("expected 3 tab-separated fields, got {}", fields.len())));
        }
        let i = parse_usize(path, lineno, fields[0])?;
        let j = parse_usize(path, lineno, fields[1])?;
        let w = parse_f64(path, lineno, fields[2])?;
        if i >= n || j >= n {
            return Err(format_err(path, lineno, format!("index ({i}, {j}) out of range for n = {n}")));
        }
        if i > j {
            return Err(format_err(path, lineno, format!("expected i <= j, got ({i}, {j})")));
        }
        if !seen.insert((i, j)) {
            return Err(format_err(path, lineno, format!("duplicate entry ({i}, {j})")));
        }
        a[(i, j)] = w;
        a[(j, i)] = w;
    }
    SymNonNegMatrix::new(a).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

pub fn render_dense(m: &Matrix) -> String {
    let mut out = String::new();
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&cells.join("\t"));
        out.push('\n');
    }
    out
}

pub fn parse_dense(path: &Path, text: &str, rows: usize, cols: usize) -> Result<Matrix> {
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    if lines.len() != rows {
        return Err(Error::Format {
            path: path.to_path_buf(),
            reason: format!("expected {rows} rows, found {}", lines.len()),
        });
    }
    let mut m = Matrix::zeros(rows, cols);
    for (i, line) in lines.iter().enumerate() {
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() != cols {
            return Err(format_err(path, i, format!("expected {cols} columns, found {}", cells.len())));
        }
        for (j, c) in cells.iter().enumerate() {
            m[(i, j)] = parse_f64(path, i, c)?;
        }
    }
    Ok(m)
}

fn snapshot_path(dir: &Path, prefix: &str, t: usize) -> PathBuf {
    dir.join(format!("{prefix}_{t}.tsv"))
}

pub fn write_dataset(dir: &Path, ds: &Dataset, rng: &str, seed: Option<u64>) -> Result<DatasetMeta> {
    create_dir(dir)?;
    let meta = DatasetMeta {
        n: ds.graphs.n(),
        t: ds.graphs.len(),
        q: ds.features.as_ref().map_or(0, |x| x.q()),
        monotone: ds.graphs.is_monotone(),
        rng: rng.to_string(),
        seed,
    };
    for (k, a) in ds.graphs.snapshots().iter().enumerate() {
        write_atomic(&snapshot_path(dir, "A", k + 1), render_triplets(a).as_bytes())?;
    }
    if let Some(x) = &ds.features {
        for (k, f) in x.frames.iter().enumerate() {
            write_atomic(&snapshot_path(dir, "X", k + 1), render_dense(f).as_bytes())?;
        }
    }
    // meta last: a directory with a meta file is complete
    write_atomic(&dir.join("meta"), meta.render().as_bytes())?;
    Ok(meta)
}

pub fn read_dataset(dir: &Path) -> Result<(Dataset, DatasetMeta)> {
    let meta_path = dir.join("meta");
    let meta = DatasetMeta::parse(&meta_path, &read_text(&meta_path)?)?;
    if meta.n == 0 || meta.t == 0 {
        return Err(Error::Format {
            path: meta_path,
            reason: "n and T must be at least 1".into(),
        });
    }
    let mut snapshots = Vec::with_capacity(meta.t);
    for t in 1..=meta.t {
        let path = snapshot_path(dir, "A", t);
        snapshots.push(parse_triplets(&path, &read_text(&path)?, meta.n)?);
    }
    let graphs = GraphSequence::new(snapshots, meta.monotone).map_err(|e| Error::Format {
        path: dir.to_path_buf(),
        reason: e.to_string(),
    })?;
    let features = if meta.q > 0 {
        let mut frames = Vec::with_capacity(meta.t);
        for t in 1..=meta.t {
            let path = snapshot_path(dir, "X", t);
            frames.push(parse_dense(&path, &read_text(&path)?, meta.n, meta.q)?);
        }
        Some(FeatureSeries { frames })
    } else {
        None
    };
    Ok((Dataset::new(graphs, features)?, meta))
}

/// One line per `(node, descriptor row)`: `i<TAB>k<TAB>` then the `q` entries.
pub fn render_predictors(w: &PredictorTensor) -> String {
    let mut out = String::new();
    for (i, b) in w.blocks().iter().enumerate() {
        for k in 0..b.nrows() {
            let cells: Vec<String> = b.row(k).iter().map(|&v| fmt_f64(v)).collect();
            let _ = writeln!(out, "{i}\t{k}\t{}", cells.join("\t"));
        }
    }
    out
}

pub fn parse_predictors(path: &Path, text: &str, n: usize, d: usize, q: usize) -> Result<PredictorTensor> {
    let mut blocks = vec![Matrix::zeros(d, q); n];
    let mut count = 0;
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() != q + 2 {
            return Err(format_err(path, lineno, format!("expected {} fields, got {}", q + 2, cells.len())));
        }
        let i = parse_usize(path, lineno, cells[0])?;
        let k = parse_usize(path, lineno, cells[1])?;
        if i >= n || k >= d {
            return Err(format_err(path, lineno, format!("index ({i}, {k}) out of range")));
        }
        for (l, c) in cells[2..].iter().enumerate() {
            blocks[i][(k, l)] = parse_f64(path, lineno, c)?;
        }
        count += 1;
    }
    if count != n * d {
        return Err(Error::Format {
            path: path.to_path_buf(),
            reason: format!("expected {} rows, found {count}", n * d),
        });
    }
    PredictorTensor::from_blocks(blocks)
}

const TRACE_HEADER: &str = "iteration,objective,j1_fit,j1_ridge,j2_nuclear,j2_prox,j3_coupling,j4_laplacian,grad_norm,step,s_step,accepted,w_norm,s_min,validation_error";

pub fn termination_name(t: Termination) -> &'static str {
    match t {
        Termination::Converged => "converged",
        Termination::MaxIterations => "max-iterations",
        Termination::Stalled => "stalled",
    }
}

fn parse_termination(path: &Path, s: &str) -> Result<Termination> {
    match s {
        "converged" => Ok(Termination::Converged),
        "max-iterations" => Ok(Termination::MaxIterations),
        "stalled" => Ok(Termination::Stalled),
        other => Err(Error::Format {
            path: path.to_path_buf(),
            reason: format!("unknown termination `{other}`"),
        }),
    }
}

/// Per-iteration objective terms; the last line records the termination.
pub fn render_trace(trace: &Trace) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in &trace.records {
        let b = &r.breakdown;
        let cells = [
            r.iteration.to_string(),
            fmt_f64(b.total),
            fmt_f64(b.j1_fit),
            fmt_f64(b.j1_ridge),
            fmt_f64(b.j2_nuclear),
            fmt_f64(b.j2_prox),
            fmt_f64(b.j3_coupling),
            fmt_f64(b.j4_laplacian),
            fmt_f64(r.grad_norm),
            fmt_f64(r.step),
            fmt_f64(r.s_step),
            r.accepted.to_string(),
            fmt_f64(r.w_norm),
            fmt_f64(r.s_min),
            fmt_opt(r.validation_error),
        ];
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    let _ = writeln!(out, "# termination {}", termination_name(trace.termination));
    out
}

pub fn parse_trace(path: &Path, text: &str) -> Result<Trace> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == TRACE_HEADER => {}
        _ => {
            return Err(Error::Format {
                path: path.to_path_buf(),
                reason: "missing trace header".into(),
            })
        }
    }
    let mut records = Vec::new();
    let mut termination = None;
    for (lineno, line) in lines {
        if let Some(rest) = line.strip_prefix("# termination ") {
            termination = Some(parse_termination(path, rest.trim())?);
            continue;
        }
        let c: Vec<&str> = line.split(',').collect();
        if c.len() != 15 {
            return Err(format_err(path, lineno, format!("expected 15 fields, got {}", c.len())));
        }
        let f = |k: usize| parse_f64(path, lineno, c[k]);
        let accepted = match c[11] {
            "true" => true,
            "false" => false,
            other => return Err(format_err(path, lineno, format!("`{other}` is not a boolean"))),
        };
        records.push(IterationRecord {
            iteration: parse_usize(path, lineno, c[0])?,
            breakdown: ObjectiveBreakdown {
                total: f(1)?,
                j1_fit: f(2)?,
                j1_ridge: f(3)?,
                j2_nuclear: f(4)?,
                j2_prox: f(5)?,
                j3_coupling: f(6)?,
                j4_laplacian: f(7)?,
            },
            grad_norm: f(8)?,
            step: f(9)?,
            s_step: f(10)?,
            accepted,
            w_norm: f(12)?,
            s_min: f(13)?,
            validation_error: parse_opt(path, lineno, c[14])?,
        });
    }
    let termination = termination.ok_or_else(|| Error::Format {
        path: path.to_path_buf(),
        reason: "missing termination line".into(),
    })?;
    Ok(Trace { records, termination })
}

const REPORT_HEADER: &str = "method,feature_rel_error,graph_rel_error";

/// Empty cells stand for metrics a method does not report.
pub fn render_report(entries: &[EvalEntry]) -> String {
    let mut out = format!("{REPORT_HEADER}\n");
    for e in entries {
        let _ = writeln!(out, "{},{},{}", e.method, fmt_opt(e.feature), fmt_opt(e.graph));
    }
    out
}

fn parse_method(path: &Path, lineno: usize, s: &str) -> Result<Method> {
    Method::parse(s).map_err(|_| format_err(path, lineno, format!("unknown method `{s}`")))
}

fn check_header(path: &Path, text: &str, header: &str) -> Result<()> {
    if text.lines().next() == Some(header) {
        Ok(())
    } else {
        Err(Error::Format {
            path: path.to_path_buf(),
            reason: format!("expected header `{header}`"),
        })
    }
}

fn split_fields<'a>(path: &Path, lineno: usize, line: &'a str, count: usize) -> Result<Vec<&'a str>> {
    let c: Vec<&str> = line.split(',').collect();
    if c.len() != count {
        return Err(format_err(path, lineno, format!("expected {count} fields, got {}", c.len())));
    }
    Ok(c)
}

pub fn parse_report(path: &Path, text: &str) -> Result<Vec<EvalEntry>> {
    check_header(path, text, REPORT_HEADER)?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate().skip(1) {
        let c = split_fields(path, lineno, line, 3)?;
        out.push(EvalEntry {
            method: parse_method(path, lineno, c[0])?,
            feature: parse_opt(path, lineno, c[1])?,
            graph: parse_opt(path, lineno, c[2])?,
        });
    }
    Ok(out)
}

const TABLE_HEADER: &str = "method,metric,mean,std,stderr,count";

/// Table rows in long form; metrics a method does not report are omitted.
pub fn render_table(rows: &[TableRow]) -> String {
    let mut out = format!("{TABLE_HEADER}\n");
    for row in rows {
        for (metric, s) in [("feature", &row.feature), ("graph", &row.graph)] {
            if let Some(s) = s {
                let _ = writeln!(
                    out,
                    "{},{metric},{},{},{},{}",
                    row.method,
                    fmt_f64(s.mean),
                    fmt_f64(s.std),
                    fmt_f64(s.stderr),
                    s.count
                );
            }
        }
    }
    out
}

pub fn parse_table(path: &Path, text: &str) -> Result<Vec<TableRow>> {
    check_header(path, text, TABLE_HEADER)?;
    let mut rows: Vec<TableRow> = Vec::new();
    for (lineno, line) in text.lines().enumerate().skip(1) {
        let c = split_fields(path, lineno, line, 6)?;
        let method = parse_method(path, lineno, c[0])?;
        let summary = Summary {
            mean: parse_f64(path, lineno, c[2])?,
            std: parse_f64(path, lineno, c[3])?,
            stderr: parse_f64(path, lineno, c[4])?,
            count: parse_usize(path, lineno, c[5])?,
        };
        let idx = match rows.iter().position(|r| r.method == method) {
            Some(i) => i,
            None => {
                rows.push(TableRow {
                    method,
                    feature: None,
                    graph: None,
                });
                rows.len() - 1
            }
        };
        match c[1] {
            "feature" => rows[idx].feature = Some(summary),
            "graph" => rows[idx].graph = Some(summary),
            other => return Err(format_err(path, lineno, format!("unknown metric `{other}`"))),
        }
    }
    Ok(rows)
}

const RECORDS_HEADER: &str = "replication,seed,method,feature_rel_error,graph_rel_error";

pub fn render_records(records: &[SeedRecord]) -> String {
    let mut out = format!("{RECORDS_HEADER}\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.replication,
            r.seed,
            r.method,
            fmt_opt(r.feature),
            fmt_opt(r.graph)
        );
    }
    out
}

pub fn parse_records(path: &Path, text: &str) -> Result<Vec<SeedRecord>> {
    check_header(path, text, RECORDS_HEADER)?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate().skip(1) {
        let c = split_fields(path, lineno, line, 5)?;
        out.push(SeedRecord {
            replication: parse_usize(path, lineno, c[0])?,
            seed: c[1]
                .parse()
                .map_err(|_| format_err(path, lineno, format!("`{}` is not a seed", c[1])))?,
            method: parse_method(path, lineno, c[2])?,
            feature: parse_opt(path, lineno, c[3])?,
            graph: parse_opt(path, lineno, c[4])?,
        });
    }
    Ok(out)
}

pub fn write_table(dir: &Path, table: &BootstrapTable) -> Result<()> {
    write_atomic(&dir.join("table.csv"), render_table(&table.rows).as_bytes())?;
    write_atomic(&dir.join("records.csv"), render_records(&table.records).as_bytes())
}

const CV_HEADER: &str = "stage,kappa,mu,nu,lambda,feature_rel_error,graph_rel_error";

/// One line per evaluated grid point; stage 1 fills only the searched column.
pub fn render_cv(cv: &CvResult) -> String {
    let mut out = format!("{CV_HEADER}\n");
    for (k, e) in &cv.kappa_surface {
        let _ = writeln!(out, "kappa,{},,,,{},", fmt_f64(*k), fmt_f64(*e));
    }
    for (m, e) in &cv.mu_surface {
        let _ = writeln!(out, "mu,,{},,,,{}", fmt_f64(*m), fmt_f64(*e));
    }
    for p in &cv.joint_surface {
        let _ = writeln!(
            out,
            "joint,{},{},{},{},{},{}",
            fmt_f64(cv.kappa_cv),
            fmt_f64(cv.mu_cv),
            fmt_f64(p.nu),
            fmt_f64(p.lambda),
            fmt_f64(p.feature),
            fmt_f64(p.graph)
        );
    }
    out
}
