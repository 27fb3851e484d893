//! Graph sequences, the linear node-feature map `X_t = A_t Omega`, and the
//! value/velocity/acceleration descriptors built from the feature series.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{top_eigenvectors, Matrix, SymNonNegMatrix};

/// Ordered adjacency matrices `A_1..A_T` on a fixed node set.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSequence {
    snapshots: Vec<SymNonNegMatrix>,
    monotone: bool,
}

impl GraphSequence {
    /// Validates node counts and, when `monotone` is set, that every edge
    /// weight is nondecreasing in time.
    pub fn new(snapshots: Vec<SymNonNegMatrix>, monotone: bool) -> Result<Self> {
        let Some(first) = snapshots.first() else {
            return Err(Error::InsufficientData("empty graph sequence".into()));
        };
        let n = first.n();
        for (t, a) in snapshots.iter().enumerate() {
            if a.n() != n {
                return Err(Error::dims(format!("snapshot A_{}", t + 1), n, a.n()));
            }
        }
        if monotone {
            for (t, pair) in snapshots.windows(2).enumerate() {
                let (prev, next) = (&pair[0], &pair[1]);
                for j in 0..n {
                    for i in 0..n {
                        if next[(i, j)] < prev[(i, j)] {
                            return Err(Error::NotMonotone {
                                t: t + 2,
                                i,
                                j,
                                before: prev[(i, j)],
                                after: next[(i, j)],
                            });
                        }
                    }
                }
            }
        }
        Ok(Self {
            snapshots,
            monotone,
        })
    }

    pub fn n(&self) -> usize {
        self.snapshots[0].n()
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn is_monotone(&self) -> bool {
        self.monotone
    }

    pub fn snapshots(&self) -> &[SymNonNegMatrix] {
        &self.snapshots
    }

    /// Zero-based access: `get(0)` is `A_1`.
    pub fn get(&self, idx: usize) -> &SymNonNegMatrix {
        &self.snapshots[idx]
    }

    pub fn last(&self) -> &SymNonNegMatrix {
        self.snapshots.last().expect("nonempty by construction")
    }

    /// The first `len` snapshots.
    pub fn prefix(&self, len: usize) -> Result<Self> {
        if len == 0 || len > self.len() {
            return Err(Error::param(
                "len",
                format!("prefix length must be in 1..={}, got {len}", self.len()),
            ));
        }
        Ok(Self {
            snapshots: self.snapshots[..len].to_vec(),
            monotone: self.monotone,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnKind {
    Constant,
    ClusterIndicator(usize),
    Eigenvector(usize),
}

/// The `n x q` matrix `Omega` with a description of each column.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub omega: Matrix,
    pub columns: Vec<ColumnKind>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureSpec {
    pub k_eig: usize,
    pub k_clusters: usize,
    pub kmeans_restarts: usize,
    pub seed: u64,
}

impl Default for FeatureSpec {
    fn default() -> Self {
        Self {
            k_eig: 5,
            k_clusters: 4,
            kmeans_restarts: 20,
            seed: 0,
        }
    }
}

impl FeatureMap {
    /// Columns `[1_n | cluster indicators | top eigenvectors]`, all computed
    /// from the single reference matrix.
    pub fn build(reference: &Matrix, spec: &FeatureSpec) -> Result<Self> {
        let n = reference.nrows();
        let q = 1 + spec.k_clusters + spec.k_eig;
        if q > n {
            return Err(Error::param(
                "k_eig + k_clusters",
                format!("1 + {} + {} exceeds node count {n}", spec.k_clusters, spec.k_eig),
            ));
        }
        let mut omega = Matrix::zeros(n, q);
        let mut columns = Vec::with_capacity(q);
        omega.column_mut(0).fill(1.0);
        columns.push(ColumnKind::Constant);

        if spec.k_clusters > 0 {
            let labels = spectral_clusters(reference, spec.k_clusters, spec.kmeans_restarts, spec.seed)?;
            for c in 0..spec.k_clusters {
                for (i, &l) in labels.iter().enumerate() {
                    if l == c {
                        omega[(i, 1 + c)] = 1.0;
                    }
                }
                columns.push(ColumnKind::ClusterIndicator(c));
            }
        }
        if spec.k_eig > 0 {
            let (vecs, _) = top_eigenvectors(reference, spec.k_eig)?;
            for k in 0..spec.k_eig {
                omega.set_column(1 + spec.k_clusters + k, &vecs.column(k));
                columns.push(ColumnKind::Eigenvector(k));
            }
        }
        Ok(Self { omega, columns })
    }

    pub fn n(&self) -> usize {
        self.omega.nrows()
    }

    pub fn q(&self) -> usize {
        self.omega.ncols()
    }
}

/// Feature map from the last snapshot of `graphs`.
pub fn build_feature_map(graphs: &GraphSequence, k_eig: usize, k_clusters: usize) -> Result<FeatureMap> {
    FeatureMap::build(
        graphs.last(),
        &FeatureSpec {
            k_eig,
            k_clusters,
            ..FeatureSpec::default()
        },
    )
}

/// Cluster labels in `0..k`, numbered by the smallest node index in each cluster.
fn spectral_clusters(reference: &Matrix, k: usize, restarts: usize, seed: u64) -> Result<Vec<usize>> {
    let n = reference.nrows();
    if k == 1 {
        return Ok(vec![0; n]);
    }
    let (embedding, _) = top_eigenvectors(reference, k)?;
    let points: Vec<DVector<f64>> = (0..n).map(|i| embedding.row(i).transpose()).collect();
    let raw = kmeans(&points, k, restarts.max(1), seed);

    let mut relabel = vec![usize::MAX; k];
    let mut next = 0;
    for &l in &raw {
        if relabel[l] == usize::MAX {
            relabel[l] = next;
            next += 1;
        }
    }
    for r in relabel.iter_mut().filter(|r| **r == usize::MAX) {
        *r = next;
        next += 1;
    }
    Ok(raw.into_iter().map(|l| relabel[l]).collect())
}

/// Lloyd's algorithm with k-means++ seeding; keeps the restart with the
/// lowest within-cluster sum of squares.
fn kmeans(points: &[DVector<f64>], k: usize, restarts: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..restarts {
        let mut centers = kmeans_pp_init(points, k, &mut rng);
        let mut labels = vec![0usize; points.len()];
        for _ in 0..300 {
            let mut changed = false;
            for (i, p) in points.iter().enumerate() {
                let l = nearest(p, &centers).0;
                if l != labels[i] {
                    labels[i] = l;
                    changed = true;
                }
            }
            for (c, center) in centers.iter_mut().enumerate() {
                let members: Vec<&DVector<f64>> = points
                    .iter()
                    .zip(&labels)
                    .filter(|(_, &l)| l == c)
                    .map(|(p, _)| p)
                    .collect();
                if !members.is_empty() {
                    let mut sum = DVector::zeros(center.len());
                    for m in &members {
                        sum += *m;
                    }
                    *center = sum / members.len() as f64;
                }
            }
            if !changed {
                break;
            }
        }
        let inertia: f64 = points.iter().map(|p| nearest(p, &centers).1).sum();
        if best.as_ref().is_none_or(|(b, _)| inertia < *b) {
            best = Some((inertia, labels));
        }
    }
    best.map(|(_, l)| l).unwrap_or_default()
}

fn nearest(p: &DVector<f64>, centers: &[DVector<f64>]) -> (usize, f64) {
    centers
        .iter()
        .enumerate()
        .map(|(c, x)| (c, (p - x).norm_squared()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one center")
}

fn kmeans_pp_init(points: &[DVector<f64>], k: usize, rng: &mut impl Rng) -> Vec<DVector<f64>> {
    let mut centers = vec![points[rng.random_range(0..points.len())].clone()];
    while centers.len() < k {
        let d2: Vec<f64> = points.iter().map(|p| nearest(p, &centers).1).collect();
        let total: f64 = d2.iter().sum();
        if total <= 0.0 {
            centers.push(points[rng.random_range(0..points.len())].clone());
            continue;
        }
        let mut target = rng.random::<f64>() * total;
        let mut pick = points.len() - 1;
        for (i, d) in d2.iter().enumerate() {
            if target < *d {
                pick = i;
                break;
            }
            target -= d;
        }
        centers.push(points[pick].clone());
    }
    centers
}

/// Node-feature matrices `X_1..X_T`, each `n x q`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSeries {
    pub frames: Vec<Matrix>,
}

impl FeatureSeries {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn q(&self) -> usize {
        self.frames.first().map_or(0, |x| x.ncols())
    }
}

pub fn apply_feature_map(graphs: &GraphSequence, map: &FeatureMap) -> Result<FeatureSeries> {
    if graphs.n() != map.n() {
        return Err(Error::dims("feature map rows", graphs.n(), map.n()));
    }
    Ok(FeatureSeries {
        frames: graphs
            .snapshots()
            .iter()
            .map(|a| a.as_matrix() * &map.omega)
            .collect(),
    })
}

/// Descriptor matrices `Phi_t = [X_t | X_t - X_{t-1} | X_t - 2X_{t-1} + X_{t-2}]`,
/// each `n x 3q`. Frames before the first one are taken equal to `X_1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorSeries {
    pub q: usize,
    pub frames: Vec<Matrix>,
}

impl DescriptorSeries {
    pub fn d(&self) -> usize {
        3 * self.q
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

pub fn build_descriptors(x: &FeatureSeries) -> Result<DescriptorSeries> {
    if x.is_empty() {
        return Err(Error::InsufficientData("descriptors need at least one frame".into()));
    }
    let (n, q) = x.frames[0].shape();
    let frames = (0..x.len())
        .map(|t| {
            let cur = &x.frames[t];
            let prev = &x.frames[t.saturating_sub(1)];
            let prev2 = &x.frames[t.saturating_sub(2)];
            let mut phi = Matrix::zeros(n, 3 * q);
            phi.columns_mut(0, q).copy_from(cur);
            phi.columns_mut(q, q).copy_from(&(cur - prev));
            phi.columns_mut(2 * q, q)
                .copy_from(&(cur - 2.0 * prev + prev2));
            phi
        })
        .collect();
    Ok(DescriptorSeries { q, frames })
}
