//! Discrete stochastic integration: left-endpoint integrals of
//! operator-valued integrands against simulated semimartingales, and the
//! discrete quadratic variation.

use ndarray::{Array1, Array2};

use super::SemimartingalePath;
use crate::error::{Error, Result};

/// A grid path of operators in L(K, G), each stored as a `(rows x k)` array.
/// The value at index `i` is the integrand on the step `(t_i, t_{i+1}]`, so
/// integration is predictable by construction.
#[derive(Clone, Debug)]
pub struct OperatorPath {
    ops: Vec<Array2<f64>>,
}

impl OperatorPath {
    pub fn from_ops(ops: Vec<Array2<f64>>) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::EmptyGrid);
        }
        let shape = (ops[0].nrows(), ops[0].ncols());
        if ops.iter().any(|o| (o.nrows(), o.ncols()) != shape) {
            return Err(Error::DimensionMismatch("operator path entries differ in shape".into()));
        }
        Ok(OperatorPath { ops })
    }

    /// Constant integrand over `n_points` grid points.
    pub fn constant(op: Array2<f64>, n_points: usize) -> Self {
        OperatorPath { ops: vec![op; n_points] }
    }

    pub fn zeros(rows: usize, k: usize, n_points: usize) -> Self {
        Self::constant(Array2::zeros((rows, k)), n_points)
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn rows(&self) -> usize {
        self.ops[0].nrows()
    }

    pub fn k_dim(&self) -> usize {
        self.ops[0].ncols()
    }

    pub fn at(&self, i: usize) -> &Array2<f64> {
        &self.ops[i]
    }

    pub fn at_mut(&mut self, i: usize) -> &mut Array2<f64> {
        &mut self.ops[i]
    }

    /// Squared Hilbert-Schmidt norm of the entry at `i`, with the H-side
    /// quadrature weight. Dominates the operator norm.
    pub fn hs_norm_sq(&self, i: usize, h_weight: f64) -> f64 {
        h_weight * self.ops[i].iter().map(|x| x * x).sum::<f64>()
    }

    /// Pointwise difference of two paths on the same grid.
    pub fn difference(&self, other: &OperatorPath) -> Result<OperatorPath> {
        if self.len() != other.len() {
            return Err(Error::GridMismatch("operator paths differ in length".into()));
        }
        let ops = self.ops.iter().zip(&other.ops).map(|(a, b)| a - b).collect();
        OperatorPath::from_ops(ops)
    }
}

/// Left-endpoint stochastic integral
/// `(Y . Z)(t_j) = sum_{i < j} Y(t_i) (Z(t_{i+1}) - Z(t_i))`,
/// returned as a `(N+1 x rows)` grid path starting at zero. Cadlag and
/// linear in both arguments by construction.
pub fn stochastic_integral(y: &OperatorPath, z: &SemimartingalePath) -> Result<Array2<f64>> {
    let n = z.grid().n_steps();
    if y.len() < n + 1 {
        return Err(Error::GridMismatch(format!(
            "integrand has {} entries but the path grid has {} points",
            y.len(),
            n + 1
        )));
    }
    if y.k_dim() != z.k_dim() {
        return Err(Error::DimensionMismatch("integrand k-dimension mismatch".into()));
    }
    let rows = y.rows();
    let mut out = Array2::<f64>::zeros((n + 1, rows));
    let mut acc = Array1::<f64>::zeros(rows);
    for i in 0..n {
        let dz = z.increment(i);
        acc = acc + y.at(i).dot(&dz);
        out.row_mut(i + 1).assign(&acc);
    }
    Ok(out)
}

/// Discrete quadratic variation `[W, W](t_j) = sum_{i < j} |dW_i|^2` of a
/// grid path, in the norm with quadrature weight `weight`. Satisfies
/// `[W,W] = |W|^2 - |W_0|^2 - 2 W_- . W` exactly (telescoping).
pub fn quadratic_variation(w: &Array2<f64>, weight: f64) -> Vec<f64> {
    let n = w.nrows();
    let mut qv = Vec::with_capacity(n);
    qv.push(0.0);
    for i in 1..n {
        let mut s = 0.0;
        for j in 0..w.ncols() {
            let d = w[[i, j]] - w[[i - 1, j]];
            s += d * d;
        }
        qv.push(qv[i - 1] + weight * s);
    }
    qv
}
