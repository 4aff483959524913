//! Dense linear algebra helpers: PSD-tolerant Cholesky, correlation matrix
//! validation with eigenvalue repair, and sorted symmetric eigensystems.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{CurveError, Result};

/// Relative pivot tolerance below which a Cholesky pivot is clamped to zero.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// Most negative eigenvalue a correlation matrix may have and still be
/// repaired by clipping.
pub const EIGEN_REPAIR_TOLERANCE: f64 = 1e-10;

const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Lower-triangular `L` with `L Lᵀ = a` for symmetric positive semi-definite
/// `a`. Pivots below `1e-12 · max diagonal` are clamped to zero (their column
/// is zeroed); a pivot more negative than that is an error naming the
/// leading minor where it happened.
pub fn cholesky_psd(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(CurveError::Shape(format!("{}x{} matrix is not square", n, a.ncols())));
    }
    let scale = (0..n).map(|i| a[(i, i)].abs()).fold(0.0, f64::max);
    for i in 0..n {
        for j in 0..i {
            if (a[(i, j)] - a[(j, i)]).abs() > SYMMETRY_TOLERANCE * scale.max(1.0) {
                return Err(CurveError::Shape(format!("matrix not symmetric at ({i}, {j})")));
            }
        }
    }
    let tol = PIVOT_TOLERANCE * scale;
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut pivot = a[(j, j)];
        for k in 0..j {
            pivot -= l[(j, k)] * l[(j, k)];
        }
        if pivot < -tol {
            return Err(CurveError::NotPositiveSemidefinite { minor: j + 1, pivot });
        }
        if pivot <= tol {
            // a vanishing pivot needs vanishing residual couplings, else some
            // 2x2 minor is indefinite
            let coupling_tol = 10.0 * (tol * scale).sqrt();
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                if s.abs() > coupling_tol {
                    return Err(CurveError::NotPositiveSemidefinite { minor: i + 1, pivot });
                }
            }
            continue;
        }
        let d = pivot.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Solves `L z = r` for lower-triangular `L`. Rows with a zero pivot (a
/// clamped, linearly dependent direction) get `z = 0`.
pub fn forward_substitute(l: &DMatrix<f64>, r: &[f64], z: &mut [f64]) {
    let n = l.nrows();
    for i in 0..n {
        let mut s = r[i];
        for k in 0..i {
            s -= l[(i, k)] * z[k];
        }
        let d = l[(i, i)];
        z[i] = if d > 0.0 { s / d } else { 0.0 };
    }
}

/// Checks a correlation matrix: square, symmetric, unit diagonal, entries in
/// `[-1, 1]`, positive semi-definite. Eigenvalues down to `-1e-10` are
/// clipped to zero and the diagonal renormalised; anything more negative is
/// rejected.
pub fn validate_correlation(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(CurveError::Shape(format!("{}x{} correlation matrix", n, m.ncols())));
    }
    for i in 0..n {
        if (m[(i, i)] - 1.0).abs() > SYMMETRY_TOLERANCE {
            return Err(CurveError::InvalidSpec(format!(
                "correlation diagonal entry {i} is {}",
                m[(i, i)]
            )));
        }
        for j in 0..n {
            let v = m[(i, j)];
            if !v.is_finite() || v.abs() > 1.0 + SYMMETRY_TOLERANCE {
                return Err(CurveError::InvalidSpec(format!("correlation ({i}, {j}) = {v}")));
            }
            if (v - m[(j, i)]).abs() > SYMMETRY_TOLERANCE {
                return Err(CurveError::InvalidSpec(format!(
                    "correlation matrix not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    if cholesky_psd(m).is_ok() {
        return Ok(m.clone());
    }
    let eig = SymmetricEigen::new(m.clone());
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -EIGEN_REPAIR_TOLERANCE {
        return Err(CurveError::NotPositiveSemidefinite { minor: n, pivot: min });
    }
    let clipped = eig.eigenvalues.map(|v| v.max(0.0));
    let q = &eig.eigenvectors;
    let mut repaired = q * DMatrix::from_diagonal(&clipped) * q.transpose();
    let d: Vec<f64> = (0..n).map(|i| repaired[(i, i)].sqrt()).collect();
    for i in 0..n {
        for j in 0..n {
            repaired[(i, j)] /= d[i] * d[j];
        }
        repaired[(i, i)] = 1.0;
    }
    Ok(repaired)
}

/// Eigenvalues (descending) and matching unit eigenvectors as columns, each
/// sign-fixed so that its largest-magnitude entry is positive.
pub fn sorted_symmetric_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::<f64>::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let mut v: DVector<f64> = eig.eigenvectors.column(k).into_owned();
        let (mut best, mut best_abs) = (0usize, -1.0f64);
        for (i, x) in v.iter().enumerate() {
            // ties resolved towards the earlier tenor
            if x.abs() > best_abs + 1e-12 {
                best = i;
                best_abs = x.abs();
            }
        }
        if v[best] < 0.0 {
            v.neg_mut();
        }
        vectors.set_column(col, &v);
    }
    (values, vectors)
}

pub(crate) fn from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(CurveError::Shape("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

pub(crate) fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}
