//! Dense matrix primitives: norms, graph Laplacian, SVD-derived operators,
//! the smoothed nuclear norm and its gradient, singular value shrinkage,
//! and the projection onto symmetric nonnegative matrices.
//!
//! Everything here is a pure function of its inputs. Matrices are
//! `nalgebra::DMatrix<f64>`.

use std::ops::Deref;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;

/// Singular values below `RANK_CUTOFF * sigma_1` count as zero.
pub const RANK_CUTOFF: f64 = 1e-12;

/// A square matrix that is exactly symmetric with nonnegative entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SymNonNegMatrix(Matrix);

impl SymNonNegMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        let n = m.nrows();
        for j in 0..n {
            for i in 0..n {
                let v = m[(i, j)];
                if !v.is_finite() {
                    return Err(Error::NonFinite { i, j });
                }
                if v < 0.0 {
                    return Err(Error::NegativeEntry { i, j, value: v });
                }
                if v != m[(j, i)] {
                    return Err(Error::NotSymmetric { i, j });
                }
            }
        }
        Ok(Self(m))
    }

    pub fn zeros(n: usize) -> Self {
        Self(Matrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Self(Matrix::identity(n, n))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_inner(self) -> Matrix {
        self.0
    }
}

impl Deref for SymNonNegMatrix {
    type Target = Matrix;

    fn deref(&self) -> &Matrix {
        &self.0
    }
}

impl From<SymNonNegMatrix> for Matrix {
    fn from(s: SymNonNegMatrix) -> Matrix {
        s.0
    }
}

/// Thin SVD `M = U diag(sigma) V^T` with singular values sorted nonincreasing.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: Matrix,
    pub singular_values: DVector<f64>,
    pub v: Matrix,
}

impl SvdFactors {
    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        for (k, s) in self.singular_values.iter().enumerate() {
            us.column_mut(k).scale_mut(*s);
        }
        us * self.v.transpose()
    }

    /// Number of singular values above the relative cutoff.
    pub fn rank(&self) -> usize {
        numerical_rank(self.singular_values.as_slice())
    }

    /// `U diag(f(sigma_k)) V^T`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let mut us = self.u.clone();
        for (k, s) in self.singular_values.iter().enumerate() {
            us.column_mut(k).scale_mut(f(*s));
        }
        us * self.v.transpose()
    }
}

pub fn numerical_rank(sorted_singular_values: &[f64]) -> usize {
    let Some(&top) = sorted_singular_values.first() else {
        return 0;
    };
    if top <= 0.0 {
        return 0;
    }
    sorted_singular_values
        .iter()
        .take_while(|&&s| s > RANK_CUTOFF * top)
        .count()
}

fn is_exactly_symmetric(m: &Matrix) -> bool {
    if !m.is_square() {
        return false;
    }
    let n = m.nrows();
    (0..n).all(|j| (j + 1..n).all(|i| m[(i, j)] == m[(j, i)]))
}

/// Thin SVD. Exactly symmetric inputs go through the symmetric eigensolver:
/// `S = sum_k l_k x_k x_k^T` gives `sigma_k = |l_k|`, `u_k = x_k`,
/// `v_k = sign(l_k) x_k`.
pub fn svd(m: &Matrix) -> SvdFactors {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return SvdFactors {
            u: Matrix::zeros(rows, 0),
            singular_values: DVector::zeros(0),
            v: Matrix::zeros(cols, 0),
        };
    }
    if is_exactly_symmetric(m) {
        let eig = SymmetricEigen::new(m.clone());
        let n = rows;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .abs()
                .total_cmp(&eig.eigenvalues[a].abs())
                .then(a.cmp(&b))
        });
        let mut u = Matrix::zeros(n, n);
        let mut v = Matrix::zeros(n, n);
        let mut sv = DVector::zeros(n);
        for (k, &idx) in order.iter().enumerate() {
            let l = eig.eigenvalues[idx];
            let col = eig.eigenvectors.column(idx);
            u.set_column(k, &col);
            if l < 0.0 {
                v.set_column(k, &(-col));
            } else {
                v.set_column(k, &col);
            }
            sv[k] = l.abs();
        }
        return SvdFactors {
            u,
            singular_values: sv,
            v,
        };
    }
    let dec = m.clone().svd(true, true);
    let u = dec.u.expect("requested U");
    let v_t = dec.v_t.expect("requested V^T");
    let k = dec.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        dec.singular_values[b]
            .total_cmp(&dec.singular_values[a])
            .then(a.cmp(&b))
    });
    let mut us = Matrix::zeros(rows, k);
    let mut vs = Matrix::zeros(cols, k);
    let mut sv = DVector::zeros(k);
    for (dst, &src) in order.iter().enumerate() {
        us.set_column(dst, &u.column(src));
        vs.set_column(dst, &v_t.row(src).transpose());
        sv[dst] = dec.singular_values[src];
    }
    SvdFactors {
        u: us,
        singular_values: sv,
        v: vs,
    }
}

/// Singular values in nonincreasing order.
pub fn singular_values(m: &Matrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = if is_exactly_symmetric(m) {
        m.clone()
            .symmetric_eigenvalues()
            .iter()
            .map(|l| l.abs())
            .collect()
    } else {
        m.singular_values().iter().copied().collect()
    };
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

pub fn frobenius_norm(m: &Matrix) -> f64 {
    m.norm()
}

pub fn nuclear_norm(m: &Matrix) -> f64 {
    singular_values(m).iter().sum()
}

/// `D - S` where `D` holds the row sums. Defined for any square matrix.
pub fn laplacian_of(s: &Matrix) -> Matrix {
    let mut l = -s.clone();
    for i in 0..s.nrows() {
        l[(i, i)] += s.row(i).sum();
    }
    l
}

pub fn laplacian(s: &SymNonNegMatrix) -> Matrix {
    laplacian_of(s)
}

fn check_eta(eta: f64) -> Result<()> {
    if eta.is_finite() && eta > 0.0 {
        Ok(())
    } else {
        Err(Error::param("eta", format!("must be positive, got {eta}")))
    }
}

/// Huber-type per-singular-value value of the smoothed nuclear norm.
fn smoothed_value(sigma: f64, eta: f64) -> f64 {
    if sigma < eta {
        sigma * sigma / (2.0 * eta)
    } else {
        sigma - eta / 2.0
    }
}

/// Closed form of `max_Z { <S,Z> - (eta/2)|Z|_F^2 : sigma_1(Z) <= 1 }`.
pub fn smoothed_nuclear(s: &Matrix, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    Ok(singular_values(s)
        .into_iter()
        .map(|sigma| smoothed_value(sigma, eta))
        .sum())
}

/// `U diag(min(1, sigma_i / eta)) V^T`.
pub fn smoothed_nuclear_grad(s: &Matrix, eta: f64) -> Result<Matrix> {
    check_eta(eta)?;
    if s.is_empty() {
        return Ok(s.clone());
    }
    Ok(svd(s).map_spectrum(|sigma| (sigma / eta).min(1.0)))
}

/// Value and gradient from a single decomposition.
pub fn smoothed_nuclear_with_grad(s: &Matrix, eta: f64) -> Result<(f64, Matrix)> {
    check_eta(eta)?;
    if s.is_empty() {
        return Ok((0.0, s.clone()));
    }
    let f = svd(s);
    let value = f.singular_values.iter().map(|&x| smoothed_value(x, eta)).sum();
    Ok((value, f.map_spectrum(|sigma| (sigma / eta).min(1.0))))
}

/// Singular value soft-thresholding `U diag((sigma_i - mu)_+) V^T`, the
/// minimizer of `0.5 |S - A|_F^2 + mu |S|_*`.
pub fn shrink(a: &Matrix, mu: f64) -> Result<Matrix> {
    if !(mu >= 0.0) || !mu.is_finite() {
        return Err(Error::param("mu", format!("must be nonnegative, got {mu}")));
    }
    if mu == 0.0 {
        return Ok(a.clone());
    }
    if a.is_empty() {
        return Ok(a.clone());
    }
    let f = svd(a);
    if f.singular_values.iter().all(|&s| s <= mu) {
        return Ok(Matrix::zeros(a.nrows(), a.ncols()));
    }
    Ok(f.map_spectrum(|sigma| (sigma - mu).max(0.0)))
}

/// Frobenius projection onto symmetric matrices with nonnegative entries:
/// symmetrize, then clamp at zero.
pub fn project_sym_nonneg(m: &Matrix) -> Result<SymNonNegMatrix> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let n = m.nrows();
    let mut out = Matrix::zeros(n, n);
    for j in 0..n {
        for i in j..n {
            let v = (0.5 * (m[(i, j)] + m[(j, i)])).max(0.0);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok(SymNonNegMatrix(out))
}

/// Orthonormal eigenvectors for the `k` eigenvalues of largest magnitude,
/// as columns of an `n x k` matrix, with the eigenvalues alongside.
///
/// Each vector's first nonzero component is made positive. Ties in
/// eigenvalue magnitude are ordered by the index of the dominant component.
pub fn top_eigenvectors(s: &Matrix, k: usize) -> Result<(Matrix, Vec<f64>)> {
    if !s.is_square() {
        return Err(Error::NotSquare {
            rows: s.nrows(),
            cols: s.ncols(),
        });
    }
    let n = s.nrows();
    if k == 0 || k > n {
        return Err(Error::param("k", format!("must be in 1..={n}, got {k}")));
    }
    let sym = 0.5 * (s + s.transpose());
    let eig = SymmetricEigen::new(sym);
    let scale = eig
        .eigenvalues
        .iter()
        .fold(0.0_f64, |acc, l| acc.max(l.abs()))
        .max(f64::MIN_POSITIVE);

    let mut cols: Vec<(f64, usize, DVector<f64>)> = (0..n)
        .map(|idx| {
            let mut v: DVector<f64> = eig.eigenvectors.column(idx).into_owned();
            let vmax = v.amax();
            if let Some(first) = v.iter().position(|x| x.abs() > 1e-12 * vmax) {
                if v[first] < 0.0 {
                    v.neg_mut();
                }
            }
            let dominant = v.iamax();
            (eig.eigenvalues[idx], dominant, v)
        })
        .collect();
    cols.sort_by(|a, b| {
        let (la, lb) = (a.0.abs(), b.0.abs());
        if (la - lb).abs() <= 1e-10 * scale {
            a.1.cmp(&b.1)
        } else {
            lb.total_cmp(&la)
        }
    });

    let mut out = Matrix::zeros(n, k);
    let mut values = Vec::with_capacity(k);
    for (c, (l, _, v)) in cols.into_iter().take(k).enumerate() {
        out.set_column(c, &v);
        values.push(l);
    }
    Ok((out, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
        Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    fn rank_one(u: &[f64], v: &[f64], s: f64) -> Matrix {
        let u = DVector::from_column_slice(u).normalize();
        let v = DVector::from_column_slice(v).normalize();
        s * &u * v.transpose()
    }

    #[test]
    fn frobenius_cases() {
        assert_eq!(frobenius_norm(&Matrix::zeros(3, 4)), 0.0);
        assert!((frobenius_norm(&Matrix::identity(2, 2)) - 2f64.sqrt()).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = random(5, 5, &mut rng);
        let mut trace = 0.0;
        for j in 0..5 {
            for i in 0..5 {
                trace += m[(i, j)] * m[(i, j)];
            }
        }
        assert!((frobenius_norm(&m) - trace.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn nuclear_cases() {
        assert!((nuclear_norm(&Matrix::identity(7, 7)) - 7.0).abs() < 1e-12);
        let m = rank_one(&[1.0, 2.0, -1.0], &[0.5, 0.0, 3.0], 2.5);
        assert!((nuclear_norm(&m) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn nuclear_matches_gram_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = random(6, 6, &mut rng);
        let gram = m.transpose() * &m;
        let oracle: f64 = gram
            .symmetric_eigenvalues()
            .iter()
            .map(|l| l.max(0.0).sqrt())
            .sum();
        assert!((nuclear_norm(&m) - oracle).abs() < 1e-10);
    }

    #[test]
    fn svd_factor_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (r, c) in [(5, 5), (4, 7), (7, 3)] {
            let m = random(r, c, &mut rng);
            let f = svd(&m);
            let k = f.singular_values.len();
            assert!((f.u.transpose() * &f.u - Matrix::identity(k, k)).norm() < 1e-8);
            assert!((f.v.transpose() * &f.v - Matrix::identity(k, k)).norm() < 1e-8);
            assert!(f.singular_values.as_slice().windows(2).all(|w| w[0] >= w[1]));
            assert!((f.reconstruct() - &m).norm() <= 1e-8 * m.norm());
        }
        // symmetric path with negative eigenvalues
        let a = random(6, 6, &mut rng);
        let s = &a + a.transpose();
        let f = svd(&s);
        assert!(f.singular_values.iter().all(|&x| x >= 0.0));
        assert!((f.reconstruct() - &s).norm() <= 1e-8 * s.norm());
    }

    #[test]
    fn laplacian_cases() {
        assert_eq!(laplacian(&SymNonNegMatrix::zeros(3)), Matrix::zeros(3, 3));
        let s = SymNonNegMatrix::new(Matrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        assert_eq!(
            laplacian(&s),
            Matrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0])
        );
        let ones = Matrix::from_element(4, 4, 1.0);
        let complete = SymNonNegMatrix::new(&ones - Matrix::identity(4, 4)).unwrap();
        let expected = 3.0 * Matrix::identity(4, 4) - (&ones - Matrix::identity(4, 4));
        assert_eq!(laplacian(&complete), expected);
    }

    #[test]
    fn laplacian_is_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let a = random(7, 7, &mut rng);
            let s = project_sym_nonneg(&a).unwrap();
            let min = laplacian(&s).symmetric_eigenvalues().min();
            assert!(min >= -1e-10, "{min}");
        }
    }

    #[test]
    fn smoothed_nuclear_cases() {
        assert_eq!(smoothed_nuclear(&Matrix::zeros(3, 3), 0.5).unwrap(), 0.0);
        assert!(smoothed_nuclear(&Matrix::zeros(2, 2), 0.0).is_err());
        assert!(smoothed_nuclear_grad(&Matrix::zeros(2, 2), -1.0).is_err());

        // all singular values above eta: value is |S|_* - eta * rank / 2
        let m = rank_one(&[1.0, 1.0, 0.0], &[0.0, 1.0, 1.0], 3.0)
            + rank_one(&[1.0, -1.0, 0.0], &[0.0, 1.0, -1.0], 2.0);
        let eta = 0.5;
        let g = smoothed_nuclear(&m, eta).unwrap();
        assert!((g - (5.0 - eta * 2.0 / 2.0)).abs() < 1e-12);

        // Plugging the maximizer Z = U_r V_r^T into the defining max gives the same value.
        let f = svd(&m);
        let z = f.map_spectrum(|s| if s > 1e-12 { 1.0 } else { 0.0 });
        let plugged = m.dot(&z) - eta / 2.0 * z.norm_squared();
        assert!((plugged - g).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = random(5, 5, &mut rng);
        assert!((smoothed_nuclear(&s, 1e-6).unwrap() - nuclear_norm(&s)).abs() < 1e-4);
    }

    #[test]
    fn smoothed_nuclear_grad_cases() {
        assert_eq!(
            smoothed_nuclear_grad(&Matrix::zeros(3, 3), 0.1).unwrap(),
            Matrix::zeros(3, 3)
        );
        let m = rank_one(&[1.0, 2.0, 0.0], &[1.0, 0.0, 1.0], 4.0);
        let g = smoothed_nuclear_grad(&m, 0.1).unwrap();
        let u = DVector::from_column_slice(&[1.0, 2.0, 0.0]).normalize();
        let v = DVector::from_column_slice(&[1.0, 0.0, 1.0]).normalize();
        assert!((g - &u * v.transpose()).norm() < 1e-10);
    }

    #[test]
    fn smoothed_nuclear_grad_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let s = random(4, 4, &mut rng);
        let eta = 0.3;
        let g = smoothed_nuclear_grad(&s, eta).unwrap();
        let h = 1e-6;
        for j in 0..4 {
            for i in 0..4 {
                let mut p = s.clone();
                p[(i, j)] += h;
                let mut m = s.clone();
                m[(i, j)] -= h;
                let fd = (smoothed_nuclear(&p, eta).unwrap() - smoothed_nuclear(&m, eta).unwrap())
                    / (2.0 * h);
                assert!((fd - g[(i, j)]).abs() < 1e-5, "({i},{j}) {fd} vs {}", g[(i, j)]);
            }
        }
    }

    #[test]
    fn shrink_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random(5, 4, &mut rng);
        assert_eq!(shrink(&a, 0.0).unwrap(), a);
        let top = singular_values(&a)[0];
        assert_eq!(shrink(&a, top).unwrap(), Matrix::zeros(5, 4));
        assert!(shrink(&a, -1.0).is_err());

        let u = DVector::from_column_slice(&[1.0, -2.0, 2.0]).normalize();
        let v = DVector::from_column_slice(&[3.0, 0.0, 4.0]).normalize();
        let a: Matrix = 3.0 * &u * v.transpose();
        let expected: Matrix = 2.0 * &u * v.transpose();
        assert!((shrink(&a, 1.0).unwrap() - expected).norm() < 1e-12);
    }

    /// Grid search over symmetric nonnegative 2x2 matrices for the nearest point.
    fn grid_projection_2x2(m: &Matrix) -> Matrix {
        let step = 0.01;
        let grid: Vec<f64> = (0..=400).map(|k| k as f64 * step).collect();
        let mut best = (f64::INFINITY, Matrix::zeros(2, 2));
        // the objective separates into the diagonal entries and the shared off-diagonal
        for &a in &grid {
            for &c in &grid {
                let d = (a - m[(0, 0)]).powi(2) + (c - m[(1, 1)]).powi(2);
                if d < best.0 {
                    best = (d, Matrix::from_row_slice(2, 2, &[a, 0.0, 0.0, c]));
                }
            }
        }
        let mut off = (f64::INFINITY, 0.0);
        for &b in &grid {
            let d = (b - m[(0, 1)]).powi(2) + (b - m[(1, 0)]).powi(2);
            if d < off.0 {
                off = (d, b);
            }
        }
        let mut out = best.1;
        out[(0, 1)] = off.1;
        out[(1, 0)] = off.1;
        out
    }

    #[test]
    fn projection_cases() {
        let inside = Matrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 2.0]);
        assert_eq!(*project_sym_nonneg(&inside).unwrap(), inside);

        let m = Matrix::from_row_slice(2, 2, &[0.0, -2.0, 0.0, 0.0]);
        let p = project_sym_nonneg(&m).unwrap();
        assert_eq!(*p, Matrix::zeros(2, 2));
        assert!((grid_projection_2x2(&m) - &*p).norm() < 1e-9);

        let m = Matrix::from_row_slice(2, 2, &[1.0, 3.0, 1.0, 1.0]);
        let p = project_sym_nonneg(&m).unwrap();
        assert_eq!(*p, Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]));
        assert!((grid_projection_2x2(&m) - &*p).norm() < 1e-9);

        assert!(matches!(
            project_sym_nonneg(&Matrix::zeros(2, 3)),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn sym_nonneg_validation() {
        assert!(SymNonNegMatrix::new(Matrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.0])).is_err());
        assert!(SymNonNegMatrix::new(Matrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 0.0])).is_err());
        assert!(SymNonNegMatrix::new(Matrix::from_row_slice(2, 2, &[f64::NAN, 0.0, 0.0, 0.0])).is_err());
        assert!(SymNonNegMatrix::new(Matrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn top_eigenvector_cases() {
        let eye = Matrix::identity(4, 4);
        let (v, l) = top_eigenvectors(&eye, 2).unwrap();
        assert!((v.transpose() * &v - Matrix::identity(2, 2)).norm() < 1e-10);
        for (c, lc) in l.iter().enumerate() {
            assert!((&eye * v.column(c) - *lc * v.column(c)).norm() <= 1e-8);
        }

        let d = Matrix::from_diagonal(&DVector::from_column_slice(&[3.0, 2.0, 1.0]));
        let (v, l) = top_eigenvectors(&d, 1).unwrap();
        assert_eq!(l, vec![3.0]);
        assert!((v.column(0) - DVector::from_column_slice(&[1.0, 0.0, 0.0])).norm() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = random(6, 6, &mut rng);
        let s = &a + a.transpose();
        let (v, l) = top_eigenvectors(&s, 3).unwrap();
        let all = s.clone().symmetric_eigenvalues();
        let mut mags: Vec<f64> = all.iter().map(|x| x.abs()).collect();
        mags.sort_by(|a, b| b.total_cmp(a));
        for c in 0..3 {
            let col = v.column(c);
            assert!((&s * col - l[c] * col).norm() <= 1e-8);
            assert!((l[c].abs() - mags[c]).abs() < 1e-10);
            let first = col.iter().find(|x| x.abs() > 1e-12).unwrap();
            assert!(*first > 0.0);
        }

        assert!(top_eigenvectors(&s, 0).is_err());
        assert!(top_eigenvectors(&s, 7).is_err());
    }
}
