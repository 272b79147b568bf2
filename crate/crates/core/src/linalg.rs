//! Direct linear solves used by the grid operators: Thomas algorithm for
//! tridiagonal SPD systems and a dense Cholesky fallback.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

/// Solves a tridiagonal system `A x = rhs` with sub-diagonal `sub`,
/// main diagonal `diag`, and super-diagonal `sup`.
///
/// `sub` and `sup` have length `n - 1`. The matrix is assumed diagonally
/// dominant (our systems are `I + lambda A` with `A` an M-matrix), so no
/// pivoting is performed.
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    assert_eq!(rhs.len(), n);
    assert_eq!(sub.len(), n.saturating_sub(1));
    assert_eq!(sup.len(), n.saturating_sub(1));
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![rhs[0] / diag[0]];
    }

    let mut w = vec![0.0; n - 1];
    let mut g = vec![0.0; n];
    w[0] = sup[0] / diag[0];
    g[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - sub[i - 1] * w[i - 1];
        if i < n - 1 {
            w[i] = sup[i] / denom;
        }
        g[i] = (rhs[i] - sub[i - 1] * g[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        g[i] -= w[i] * g[i + 1];
    }
    g
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
pub fn cholesky_factor(a: &ArrayView2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch("cholesky expects a square matrix".into()));
    }
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::LinearSolve(format!(
                        "matrix is not positive definite (pivot {s:.3e} at row {i})"
                    )));
                }
                l[[i, j]] = s.sqrt();
            } else {
                l[[i, j]] = s / l[[j, j]];
            }
        }
    }
    Ok(l)
}

/// Solves `L L^T x = b` given the lower Cholesky factor `L`.
pub fn cholesky_solve(l: &Array2<f64>, b: ArrayView1<f64>) -> Array1<f64> {
    let n = l.nrows();
    let mut y = Array1::<f64>::zeros(n);
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[[i, k]] * y[k];
        }
        y[i] = s / l[[i, i]];
    }
    let mut x = Array1::<f64>::zeros(n);
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[[k, i]] * x[k];
        }
        x[i] = s / l[[i, i]];
    }
    x
}
