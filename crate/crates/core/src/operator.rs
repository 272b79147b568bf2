//! Finite-dimensional realization of the variational triple (V, H, V').
//!
//! `H` is the weighted Euclidean space with inner product
//! `<u, v> = dx * sum u_i v_i` (a quadrature of the L2 product), `A` is an
//! SPD grid operator, and the discrete V-norm is `|v|_V = <A v, v>^(1/2)`.
//! With this choice the coercivity constant is exactly 1, which removes an
//! arbitrary constant from every estimate.
//!
//! Resolvents `(I + lambda A)^{-1}` are direct solves: Thomas algorithm for
//! tridiagonal operators, dense Cholesky otherwise. The smoothing family
//! `T_n = (I + A/n)^{-m}` is sub-Markovian on the Dirichlet Laplacian and
//! converges strongly to the identity as `n -> infinity`.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::linalg;

#[derive(Clone, Debug)]
enum OperatorForm {
    Zero,
    Tridiagonal { sub: Vec<f64>, diag: Vec<f64>, sup: Vec<f64> },
    Dense(Array2<f64>),
}

/// Symmetric positive (semi-)definite grid operator with its H quadrature
/// weight. Immutable after construction; all applications are pure.
#[derive(Clone, Debug)]
pub struct GridOperator {
    n: usize,
    h_weight: f64,
    form: OperatorForm,
}

/// Dirichlet finite-difference Laplacian on `(0, length)` with `n` interior
/// nodes: tridiagonal with diagonal `2/dx^2` and off-diagonal `-1/dx^2`,
/// `dx = length / (n + 1)`. The H quadrature weight is `dx`.
pub fn build_laplacian_1d(n: usize, length: f64) -> Result<GridOperator> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("laplacian needs n >= 2 nodes, got {n}")));
    }
    if !(length > 0.0) {
        return Err(Error::InvalidParameter(format!("domain length must be positive, got {length}")));
    }
    let dx = length / (n as f64 + 1.0);
    let inv = 1.0 / (dx * dx);
    Ok(GridOperator {
        n,
        h_weight: dx,
        form: OperatorForm::Tridiagonal {
            sub: vec![-inv; n - 1],
            diag: vec![2.0 * inv; n],
            sup: vec![-inv; n - 1],
        },
    })
}

impl GridOperator {
    /// The zero operator (allowed in tests and degenerate configurations).
    pub fn zero(n: usize, h_weight: f64) -> Self {
        GridOperator { n, h_weight, form: OperatorForm::Zero }
    }

    /// Wraps a dense symmetric matrix. Symmetry is validated; positive
    /// definiteness surfaces later through the Cholesky solve.
    pub fn dense(matrix: Array2<f64>, h_weight: f64) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n {
            return Err(Error::DimensionMismatch("operator matrix must be square".into()));
        }
        for i in 0..n {
            for j in 0..i {
                if (matrix[[i, j]] - matrix[[j, i]]).abs() > 1e-12 * (1.0 + matrix[[i, j]].abs()) {
                    return Err(Error::InvalidParameter(format!(
                        "operator matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(GridOperator { n, h_weight, form: OperatorForm::Dense(matrix) })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn h_weight(&self) -> f64 {
        self.h_weight
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.form, OperatorForm::Zero)
    }

    /// Coercivity constant of the discrete V-norm; 1 by construction.
    pub fn coercivity(&self) -> f64 {
        1.0
    }

    /// `A v`.
    pub fn apply(&self, v: ArrayView1<f64>) -> Array1<f64> {
        assert_eq!(v.len(), self.n, "operator dimension mismatch");
        match &self.form {
            OperatorForm::Zero => Array1::zeros(self.n),
            OperatorForm::Tridiagonal { sub, diag, sup } => {
                let mut out = Array1::zeros(self.n);
                for i in 0..self.n {
                    let mut s = diag[i] * v[i];
                    if i > 0 {
                        s += sub[i - 1] * v[i - 1];
                    }
                    if i + 1 < self.n {
                        s += sup[i] * v[i + 1];
                    }
                    out[i] = s;
                }
                out
            }
            OperatorForm::Dense(m) => m.dot(&v),
        }
    }

    /// H inner product `dx * sum u_i v_i`.
    pub fn h_inner(&self, u: ArrayView1<f64>, v: ArrayView1<f64>) -> f64 {
        self.h_weight * u.dot(&v)
    }

    pub fn h_norm_sq(&self, v: ArrayView1<f64>) -> f64 {
        self.h_inner(v, v)
    }

    pub fn h_norm(&self, v: ArrayView1<f64>) -> f64 {
        self.h_norm_sq(v).sqrt()
    }

    /// Squared V-norm `<A v, v>`.
    pub fn v_norm_sq(&self, v: ArrayView1<f64>) -> f64 {
        self.h_inner(self.apply(v).view(), v)
    }

    /// Prefactored resolvent `(I + lambda A)^{-1}` for repeated application.
    pub fn resolvent_solver(&self, lambda: f64) -> Result<ResolventOp> {
        assert!(lambda > 0.0, "resolvent requires lambda > 0");
        let form = match &self.form {
            OperatorForm::Zero => ResolventForm::Identity,
            OperatorForm::Tridiagonal { sub, diag, sup } => ResolventForm::Tridiagonal {
                sub: sub.iter().map(|a| lambda * a).collect(),
                diag: diag.iter().map(|d| 1.0 + lambda * d).collect(),
                sup: sup.iter().map(|a| lambda * a).collect(),
            },
            OperatorForm::Dense(m) => {
                let mut sys = m * lambda;
                for i in 0..self.n {
                    sys[[i, i]] += 1.0;
                }
                ResolventForm::Cholesky(linalg::cholesky_factor(&sys.view())?)
            }
        };
        Ok(ResolventOp { form })
    }

    /// `(I + lambda A)^{-1} v`; a contraction in H for monotone `A`.
    pub fn resolvent(&self, lambda: f64, v: ArrayView1<f64>) -> Result<Array1<f64>> {
        Ok(self.resolvent_solver(lambda)?.apply(v))
    }

    /// Yosida operator `A_lambda v = A (I + lambda A)^{-1} v`.
    pub fn yosida_apply(&self, lambda: f64, v: ArrayView1<f64>) -> Result<Array1<f64>> {
        let j = self.resolvent(lambda, v)?;
        Ok(self.apply(j.view()))
    }
}

enum ResolventForm {
    Identity,
    Tridiagonal { sub: Vec<f64>, diag: Vec<f64>, sup: Vec<f64> },
    Cholesky(Array2<f64>),
}

/// A factored `(I + lambda A)^{-1}`.
pub struct ResolventOp {
    form: ResolventForm,
}

impl ResolventOp {
    pub fn apply(&self, v: ArrayView1<f64>) -> Array1<f64> {
        match &self.form {
            ResolventForm::Identity => v.to_owned(),
            ResolventForm::Tridiagonal { sub, diag, sup } => {
                Array1::from(linalg::solve_tridiagonal(sub, diag, sup, v.as_slice().unwrap()))
            }
            ResolventForm::Cholesky(l) => linalg::cholesky_solve(l, v),
        }
    }
}

/// Eigenvalue of the 1-D Dirichlet Laplacian for mode `k` (1-based):
/// `mu_k = (2 - 2 cos(k pi / (n+1))) / dx^2`.
pub fn laplacian_eigenvalue(n: usize, length: f64, k: usize) -> f64 {
    let dx = length / (n as f64 + 1.0);
    let theta = k as f64 * std::f64::consts::PI / (n as f64 + 1.0);
    (2.0 - 2.0 * theta.cos()) / (dx * dx)
}

/// Eigenvector `w_k(i) = sin(i k pi / (n+1))`, normalized in H.
pub fn laplacian_eigenvector(n: usize, length: f64, k: usize) -> Array1<f64> {
    let dx = length / (n as f64 + 1.0);
    let mut w = Array1::zeros(n);
    for i in 0..n {
        w[i] = ((i + 1) as f64 * k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).sin();
    }
    let norm = (dx * w.dot(&w)).sqrt();
    w / norm
}

/// Sub-Markovian smoothing family `T = (I + A/n)^{-m}` at scale index `n`.
#[derive(Clone, Debug)]
pub struct SmoothingFamily {
    op: GridOperator,
    m: u32,
    n_index: u32,
}

impl SmoothingFamily {
    pub fn new(op: GridOperator, m: u32, n_index: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("smoothing power m must be >= 1".into()));
        }
        if n_index == 0 {
            return Err(Error::InvalidParameter("smoothing index n must be >= 1".into()));
        }
        Ok(SmoothingFamily { op, m, n_index })
    }

    pub fn power(&self) -> u32 {
        self.m
    }

    pub fn index(&self) -> u32 {
        self.n_index
    }

    /// `(I + A/n)^{-m} v` via `m` sequential SPD solves.
    pub fn apply(&self, v: ArrayView1<f64>) -> Result<Array1<f64>> {
        let solver = self.op.resolvent_solver(1.0 / self.n_index as f64)?;
        let mut out = v.to_owned();
        for _ in 0..self.m {
            out = solver.apply(out.view());
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;

    #[test]
    fn laplacian_stencil_rows() {
        let op = build_laplacian_1d(3, 4.0).unwrap(); // dx = 1
        assert_eq!(op.h_weight(), 1.0);
        let rows: Vec<Array1<f64>> = (0..3)
            .map(|i| {
                let mut e = Array1::zeros(3);
                e[i] = 1.0;
                op.apply(e.view())
            })
            .collect();
        assert_eq!(rows[0], array![2.0, -1.0, 0.0]);
        assert_eq!(rows[1], array![-1.0, 2.0, -1.0]);
        assert_eq!(rows[2], array![0.0, -1.0, 2.0]);
    }

    #[test]
    fn laplacian_rejects_tiny_grid() {
        assert!(build_laplacian_1d(1, 1.0).is_err());
        assert!(build_laplacian_1d(4, 0.0).is_err());
    }

    #[test]
    fn laplacian_on_constant_vector() {
        let op = build_laplacian_1d(5, 6.0).unwrap(); // dx = 1
        let u = Array1::ones(5);
        let au = op.apply(u.view());
        assert_eq!(au[0], 1.0);
        assert_eq!(au[4], 1.0);
        for i in 1..4 {
            assert_eq!(au[i], 0.0);
        }
    }

    #[test]
    fn closed_form_eigenvalues_n3() {
        // dx = 1: spectrum {2 - sqrt(2), 2, 2 + sqrt(2)}
        let mu: Vec<f64> = (1..=3).map(|k| laplacian_eigenvalue(3, 4.0, k)).collect();
        assert_relative_eq!(mu[0], 2.0 - 2f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(mu[1], 2.0, epsilon = 1e-12);
        assert_relative_eq!(mu[2], 2.0 + 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn eigenpairs_satisfy_a_w_eq_mu_w() {
        let n = 16;
        let op = build_laplacian_1d(n, 1.0).unwrap();
        for k in [1, 3, n] {
            let w = laplacian_eigenvector(n, 1.0, k);
            let mu = laplacian_eigenvalue(n, 1.0, k);
            let aw = op.apply(w.view());
            for i in 0..n {
                assert_relative_eq!(aw[i], mu * w[i], epsilon = 1e-8 * mu.max(1.0));
            }
            assert_relative_eq!(op.h_norm(w.view()), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn symmetry_on_random_pairs() {
        let n = 24;
        let op = build_laplacian_1d(n, 2.0).unwrap();
        let mut state = 88172645463325252u64;
        let mut rand = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for _ in 0..20 {
            let u = Array1::from_iter((0..n).map(|_| rand()));
            let v = Array1::from_iter((0..n).map(|_| rand()));
            let left = op.h_inner(op.apply(u.view()).view(), v.view());
            let right = op.h_inner(u.view(), op.apply(v.view()).view());
            assert_relative_eq!(left, right, max_relative = 1e-12);
        }
    }

    #[test]
    fn resolvent_near_identity_for_tiny_lambda() {
        let op = build_laplacian_1d(8, 1.0).unwrap();
        let v = laplacian_eigenvector(8, 1.0, 2);
        let y = op.resolvent(1e-12, v.view()).unwrap();
        for i in 0..8 {
            assert_relative_eq!(y[i], v[i], max_relative = 1e-8);
        }
        let z = op.resolvent(0.7, Array1::zeros(8).view()).unwrap();
        assert!(z.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn resolvent_on_eigenvector() {
        let (n, len) = (12, 1.0);
        let op = build_laplacian_1d(n, len).unwrap();
        for k in [1, 4] {
            let w = laplacian_eigenvector(n, len, k);
            let mu = laplacian_eigenvalue(n, len, k);
            let lambda = 0.3;
            let y = op.resolvent(lambda, w.view()).unwrap();
            for i in 0..n {
                assert_relative_eq!(y[i], w[i] / (1.0 + lambda * mu), epsilon = 1e-10);
            }
            // Contraction in H.
            assert!(op.h_norm(y.view()) <= op.h_norm(w.view()) + 1e-12);
        }
    }

    #[test]
    fn yosida_on_eigenvector_and_energy_identity() {
        let (n, len) = (12, 1.0);
        let op = build_laplacian_1d(n, len).unwrap();
        let w = laplacian_eigenvector(n, len, 3);
        let mu = laplacian_eigenvalue(n, len, 3);
        let lambda = 0.05;
        let ay = op.yosida_apply(lambda, w.view()).unwrap();
        for i in 0..n {
            assert_relative_eq!(ay[i], mu / (1.0 + lambda * mu) * w[i], epsilon = 1e-9 * mu);
        }
        // <A_lambda v, v> = <A J v, J v> + lambda |A_lambda v|^2 on a batch
        // of random vectors.
        let mut state = 0x1234_5678_9abc_def0u64;
        let mut rand = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for _ in 0..100 {
            let v = Array1::from_iter((0..n).map(|_| rand()));
            let alv = op.yosida_apply(lambda, v.view()).unwrap();
            let jv = op.resolvent(lambda, v.view()).unwrap();
            let lhs = op.h_inner(alv.view(), v.view());
            let rhs = op.h_inner(op.apply(jv.view()).view(), jv.view())
                + lambda * op.h_norm_sq(alv.view());
            assert_relative_eq!(lhs, rhs, max_relative = 1e-9);
        }
    }

    #[test]
    fn yosida_converges_to_a_on_smooth_vectors() {
        let op = build_laplacian_1d(16, 1.0).unwrap();
        let v = laplacian_eigenvector(16, 1.0, 1);
        let av = op.apply(v.view());
        let mut prev = f64::INFINITY;
        for lambda in [1e-2, 1e-4, 1e-6] {
            let alv = op.yosida_apply(lambda, v.view()).unwrap();
            let err = op.h_norm((&alv - &av).view());
            assert!(err < prev);
            prev = err;
        }
        assert!(prev < 1e-4);
    }

    #[test]
    fn smoothing_is_sub_markovian() {
        let op = build_laplacian_1d(20, 1.0).unwrap();
        for n_index in [1, 4, 64] {
            let fam = SmoothingFamily::new(op.clone(), 2, n_index).unwrap();
            let ones = Array1::ones(20);
            let t1 = fam.apply(ones.view()).unwrap();
            assert!(
                t1.iter().all(|x| *x >= -1e-13 && *x <= 1.0 + 1e-13),
                "sub-Markov bound violated at n = {n_index}: {t1:?}"
            );
        }
    }

    #[test]
    fn smoothing_single_solve_on_eigenvector() {
        let (n, len) = (10, 1.0);
        let op = build_laplacian_1d(n, len).unwrap();
        let fam = SmoothingFamily::new(op, 1, 8).unwrap();
        let w = laplacian_eigenvector(n, len, 2);
        let mu = laplacian_eigenvalue(n, len, 2);
        let tw = fam.apply(w.view()).unwrap();
        for i in 0..n {
            assert_relative_eq!(tw[i], w[i] / (1.0 + mu / 8.0), epsilon = 1e-10);
        }
    }

    #[test]
    fn smoothing_converges_strongly_to_identity() {
        let op = build_laplacian_1d(24, 1.0).unwrap();
        let v = &laplacian_eigenvector(24, 1.0, 1) * 0.8
            + &laplacian_eigenvector(24, 1.0, 2) * 0.2;
        let mut prev = f64::INFINITY;
        let mut last = f64::INFINITY;
        for n_index in [4, 16, 64, 256, 1024, 4096] {
            let fam = SmoothingFamily::new(op.clone(), 2, n_index).unwrap();
            let tv = fam.apply(v.view()).unwrap();
            // T_n is self-adjoint here, so this doubles as the adjoint check.
            let err = op.h_norm((&tv - &v).view());
            assert!(err < prev, "|T_n v - v| must decrease along the scale ladder");
            prev = err;
            last = err;
        }
        // N(v) = 4096 for this test vector: relative error below 1%.
        assert!(last / op.h_norm(v.view()) < 0.01, "n = 4096 should be within 1%");
    }

    #[test]
    fn smoothing_commutes_with_a() {
        let op = build_laplacian_1d(12, 1.0).unwrap();
        let fam = SmoothingFamily::new(op.clone(), 2, 16).unwrap();
        let v = laplacian_eigenvector(12, 1.0, 4) + laplacian_eigenvector(12, 1.0, 1);
        let t_av = fam.apply(op.apply(v.view()).view()).unwrap();
        let a_tv = op.apply(fam.apply(v.view()).unwrap().view());
        for i in 0..12 {
            assert_relative_eq!(t_av[i], a_tv[i], epsilon = 1e-10 * (1.0 + a_tv[i].abs()));
        }
    }

    #[test]
    fn resolvent_preserves_order_cone() {
        // All entries of (I + lambda A)^{-1} are nonnegative: apply to basis.
        let op = build_laplacian_1d(10, 1.0).unwrap();
        for i in 0..10 {
            let mut e = Array1::zeros(10);
            e[i] = 1.0;
            let col = op.resolvent(0.8, e.view()).unwrap();
            assert!(col.iter().all(|x| *x >= -1e-14), "negative entry in resolvent column {i}");
        }
    }

    #[test]
    fn dense_operator_matches_tridiagonal() {
        let n = 6;
        let op = build_laplacian_1d(n, 1.0).unwrap();
        let mut m = Array2::zeros((n, n));
        for i in 0..n {
            let mut e = Array1::zeros(n);
            e[i] = 1.0;
            let col = op.apply(e.view());
            for j in 0..n {
                m[[j, i]] = col[j];
            }
        }
        let dense = GridOperator::dense(m, op.h_weight()).unwrap();
        let v = laplacian_eigenvector(n, 1.0, 2);
        let a = op.resolvent(0.4, v.view()).unwrap();
        let b = dense.resolvent(0.4, v.view()).unwrap();
        for i in 0..n {
            assert_relative_eq!(a[i], b[i], epsilon = 1e-11);
        }
    }

    #[test]
    fn dense_rejects_asymmetric() {
        let m = array![[1.0, 2.0], [0.0, 1.0]];
        assert!(GridOperator::dense(m, 1.0).is_err());
    }
}
