//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Operator 2-norm (largest singular value). Empty matrices have norm 0.
pub fn op_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Orthonormal basis (as columns) of the column space of `m`.
///
/// A singular value counts iff it exceeds `tol_rank` times the largest one.
pub fn range_basis(m: &DMatrix<f64>, tol_rank: f64) -> DMatrix<f64> {
    let rows = m.nrows();
    if rows == 0 || m.ncols() == 0 {
        return DMatrix::zeros(rows, 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let sigma = &svd.singular_values;
    let smax = sigma.max();
    if smax.is_nan() || smax <= 0.0 {
        return DMatrix::zeros(rows, 0);
    }
    let keep: Vec<usize> = (0..sigma.len())
        .filter(|&i| sigma[i] > tol_rank * smax)
        .collect();
    DMatrix::from_fn(rows, keep.len(), |r, c| u[(r, keep[c])])
}

/// Orthonormal basis (as columns) of `{ v : m v ≈ 0 }`, where singular values
/// at or below `tol` are treated as zero.
pub fn null_basis(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let cols = m.ncols();
    if cols == 0 {
        return DMatrix::zeros(0, 0);
    }
    if m.nrows() == 0 {
        return DMatrix::identity(cols, cols);
    }
    // Pad to at least `cols` rows so that every right singular vector is returned.
    let padded = if m.nrows() < cols {
        let mut p = DMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("right singular vectors requested");
    let sigma = &svd.singular_values;
    let keep: Vec<usize> = (0..sigma.len()).filter(|&i| sigma[i] <= tol).collect();
    DMatrix::from_fn(cols, keep.len(), |r, c| vt[(keep[c], r)])
}

pub fn matrix_from_rows(rows: &[Vec<f64>], ncols: usize) -> Result<DMatrix<f64>> {
    for r in rows {
        if r.len() != ncols {
            return Err(Error::DimensionMismatch {
                expected: ncols,
                found: r.len(),
            });
        }
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

/// Columns of a matrix built from a list of vectors of length `dim`.
pub fn matrix_from_columns(cols: &[Vec<f64>], dim: usize) -> Result<DMatrix<f64>> {
    for c in cols {
        if c.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: c.len(),
            });
        }
    }
    Ok(DMatrix::from_fn(dim, cols.len(), |i, j| cols[j][i]))
}

pub fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

pub fn columns_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.ncols())
        .map(|j| m.column(j).iter().copied().collect())
        .collect()
}

pub fn to_dvector(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Block-diagonal matrix `[a 0; 0 b]`.
pub fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut(a.shape(), b.shape()).copy_from(b);
    out
}
