//! Time-stepping solvers for the evolution equation
//! `dX + A X dt + beta(t, X) dt ∋ B(t, X) dZ`.
//!
//! Three schemes are provided:
//!
//! * [`solve_regularized`] — semi-implicit Euler for the Yosida-regularized
//!   drift `beta_lambda`;
//! * [`solve_limit`] — Lie splitting with an exact proximal drift step, the
//!   direct realization of the `lambda -> 0` limit object. The proximal step
//!   comes last, so the stored selection satisfies `xi_k in beta(x_k)` at the
//!   stored state, making the defining inclusion a per-step testable
//!   invariant;
//! * [`solve_multiplicative`] / [`extend_solution`] — Picard fixed-point
//!   construction for path-dependent noise on a control-budget interval, and
//!   its iteration over a stopping-time sequence up to the horizon.
//!
//! `beta` acts pointwise per grid node (a superposition operator), and all
//! noise coefficients are evaluated at left endpoints with the convention
//! `u(0-) := u(0)`, so discrete integrands are predictable by construction.

mod picard;
mod schemes;

pub use picard::{
    extend_solution, solve_multiplicative, solve_multiplicative_with_init, PicardInit, PicardStats,
};
pub use schemes::{solve_limit, solve_regularized};

use std::sync::Arc;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::noise::{ControlPath, LipschitzProcess, OperatorPath, TimeGrid};

/// Which scheme produced a solution path.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchemeKind {
    Regularized,
    Limit,
    Multiplicative,
}

impl SchemeKind {
    pub fn name(&self) -> &'static str {
        match self {
            SchemeKind::Regularized => "regularized",
            SchemeKind::Limit => "limit",
            SchemeKind::Multiplicative => "multiplicative",
        }
    }
}

/// Discrete trajectory `(X, xi)` with the per-step energy ledger.
///
/// The ledger columns are cumulative over grid steps: `v_cum` accumulates
/// `<A x, x> dt` (the squared V-norm integral) and `xix_cum` accumulates the
/// duality pairing `<xi, x> dt`, both at the scheme's native pairing points.
#[derive(Clone, Debug)]
pub struct SolutionPath {
    pub(crate) grid: TimeGrid,
    pub(crate) h_weight: f64,
    pub(crate) x: Array2<f64>,
    pub(crate) xi: Array2<f64>,
    pub(crate) v_cum: Vec<f64>,
    pub(crate) xix_cum: Vec<f64>,
    pub(crate) scheme: SchemeKind,
    pub(crate) lambda: Option<f64>,
}

impl SolutionPath {
    pub(crate) fn empty(
        grid: TimeGrid,
        h_weight: f64,
        dim: usize,
        scheme: SchemeKind,
        lambda: Option<f64>,
    ) -> Self {
        let n_pts = grid.len();
        SolutionPath {
            grid,
            h_weight,
            x: Array2::zeros((n_pts, dim)),
            xi: Array2::zeros((n_pts, dim)),
            v_cum: vec![0.0; n_pts],
            xix_cum: vec![0.0; n_pts],
            scheme,
            lambda,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn h_weight(&self) -> f64 {
        self.h_weight
    }

    pub fn scheme(&self) -> SchemeKind {
        self.scheme
    }

    pub fn lambda(&self) -> Option<f64> {
        self.lambda
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    /// State values, one row per grid point.
    pub fn states(&self) -> &Array2<f64> {
        &self.x
    }

    /// Drift selections, one row per grid point.
    pub fn selections(&self) -> &Array2<f64> {
        &self.xi
    }

    pub fn state(&self, i: usize) -> ArrayView1<'_, f64> {
        self.x.row(i)
    }

    pub fn selection(&self, i: usize) -> ArrayView1<'_, f64> {
        self.xi.row(i)
    }

    /// Cumulative `int |X|_V^2 dt` up to each grid point.
    pub fn v_integral(&self) -> &[f64] {
        &self.v_cum
    }

    /// Cumulative `int int xi X dx dt` up to each grid point.
    pub fn duality_integral(&self) -> &[f64] {
        &self.xix_cum
    }

    pub fn h_norm_sq(&self, i: usize) -> f64 {
        self.h_weight * self.x.row(i).dot(&self.x.row(i))
    }

    /// `sup_{i < upto} |x_i|_H^2`.
    pub fn sup_h_norm_sq_before(&self, upto: usize) -> f64 {
        (0..upto).map(|i| self.h_norm_sq(i)).fold(0.0, f64::max)
    }

    /// Largest H-distance between the states of two paths on a shared grid,
    /// over grid indices `[0, upto]`.
    pub fn sup_distance(&self, other: &SolutionPath, upto: usize) -> f64 {
        let mut sup = 0.0f64;
        for i in 0..=upto {
            let mut s = 0.0;
            for j in 0..self.dim() {
                let d = self.x[[i, j]] - other.x[[i, j]];
                s += d * d;
            }
            sup = sup.max(self.h_weight * s);
        }
        sup.sqrt()
    }

    /// Discrete `L^2(0, T; H)` distance between two paths.
    pub fn l2_distance(&self, other: &SolutionPath, upto: usize) -> f64 {
        let mut acc = 0.0;
        for i in 1..=upto {
            let mut s = 0.0;
            for j in 0..self.dim() {
                let d = self.x[[i, j]] - other.x[[i, j]];
                s += d * d;
            }
            acc += self.h_weight * s * self.grid.dt(i - 1);
        }
        acc.sqrt()
    }
}

/// Rule producing the noise coefficient `B(t, u)` from the past of a path.
///
/// `eval` receives the path values strictly before step `step` (with the
/// convention `u(0-) := u(0)`, so at step 0 it sees the initial row only);
/// non-anticipativity is enforced structurally by the view that is passed.
pub trait CoefficientRule: Send + Sync {
    fn k_dim(&self) -> usize;
    fn eval(&self, step: usize, t: f64, past: ArrayView2<f64>) -> Array2<f64>;
}

/// Degenerate multiplicative coefficient: constant operator.
#[derive(Clone, Debug)]
pub struct ConstantCoefficient {
    op: Array2<f64>,
}

impl ConstantCoefficient {
    pub fn new(op: Array2<f64>) -> Self {
        ConstantCoefficient { op }
    }
}

impl CoefficientRule for ConstantCoefficient {
    fn k_dim(&self) -> usize {
        self.op.ncols()
    }

    fn eval(&self, _step: usize, _t: f64, _past: ArrayView2<f64>) -> Array2<f64> {
        self.op.clone()
    }
}

/// `B(t, u) = amp * diag(sin(u(t-)))`, a bounded Lipschitz coefficient with
/// `B(t, 0) = 0`. Requires the noise dimension to equal the grid dimension.
#[derive(Clone, Debug)]
pub struct DiagSinCoefficient {
    pub amp: f64,
    pub dim: usize,
}

impl CoefficientRule for DiagSinCoefficient {
    fn k_dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, _step: usize, _t: f64, past: ArrayView2<f64>) -> Array2<f64> {
        let last = past.row(past.nrows() - 1);
        let mut b = Array2::zeros((self.dim, self.dim));
        for i in 0..self.dim {
            b[[i, i]] = self.amp * last[i].sin();
        }
        b
    }
}

/// How the Lipschitz budget process `L` of a coefficient is built from the
/// control process of the driving noise.
#[derive(Clone, Copy, Debug)]
pub enum LipschitzSpec {
    /// `L(t) = l0 + factor * (C(t) - C(0))`: the natural budget for
    /// coefficients whose increments are dominated by `dC`.
    ScaledControl { l0: f64, factor: f64 },
    /// `L(t) = l0 + rate * t`, independent of the noise.
    Linear { l0: f64, rate: f64 },
}

impl LipschitzSpec {
    pub fn build(&self, c: &ControlPath) -> Result<LipschitzProcess> {
        let grid = c.grid().clone();
        let values: Vec<f64> = match self {
            LipschitzSpec::ScaledControl { l0, factor } => {
                c.values().iter().map(|v| l0 + factor * (v - c.at(0))).collect()
            }
            LipschitzSpec::Linear { l0, rate } => {
                grid.times().iter().map(|t| l0 + rate * t).collect()
            }
        };
        LipschitzProcess::from_values(grid, values)
    }
}

/// A multiplicative noise coefficient: the evaluation rule together with its
/// Lipschitz budget.
#[derive(Clone)]
pub struct MultiplicativeCoefficient {
    pub rule: Arc<dyn CoefficientRule>,
    pub lipschitz: LipschitzSpec,
}

impl MultiplicativeCoefficient {
    pub fn new(rule: Arc<dyn CoefficientRule>, lipschitz: LipschitzSpec) -> Self {
        MultiplicativeCoefficient { rule, lipschitz }
    }

    /// Diagonal-sine coefficient with its natural control-scaled budget.
    pub fn diag_sin(amp: f64, dim: usize, h_weight: f64) -> Self {
        MultiplicativeCoefficient {
            rule: Arc::new(DiagSinCoefficient { amp, dim }),
            // |B(u) - B(v)|_HS^2 <= amp^2 h_weight * n-free bound: dL = amp^2 dC.
            lipschitz: LipschitzSpec::ScaledControl { l0: 0.0, factor: amp * amp * h_weight.max(1.0) },
        }
    }

    /// Constant coefficient (degenerate multiplicative case).
    pub fn constant(op: Array2<f64>, h_weight: f64) -> Self {
        let hs = h_weight * op.iter().map(|x| x * x).sum::<f64>();
        MultiplicativeCoefficient {
            rule: Arc::new(ConstantCoefficient::new(op)),
            lipschitz: LipschitzSpec::ScaledControl { l0: 0.0, factor: hs.max(1e-12) },
        }
    }
}

/// Noise coefficient of the equation: a fixed predictable operator path, or
/// a path-dependent rule with its Lipschitz process.
#[derive(Clone)]
pub enum NoiseCoefficient {
    Additive(OperatorPath),
    Multiplicative(MultiplicativeCoefficient),
}

/// Grid stopping rules. The returned index is a grid stopping time: the
/// decision at `t` uses data up to `t` only.
#[derive(Clone, Copy, Debug)]
pub enum StopRule {
    /// First `t > from` with `C_t (L_t - L_from) >= alpha`.
    ControlBudget { alpha: f64 },
    /// First `t > from` with `|X(t)|_H > cap`.
    NormCap { cap: f64 },
    /// Never fires before the horizon.
    FixedTime,
}

impl StopRule {
    /// First firing index in `(from, N]`, or `N` if the rule never fires.
    pub fn first_index(
        &self,
        c: &ControlPath,
        l: &LipschitzProcess,
        x: Option<&Array2<f64>>,
        h_weight: f64,
        from: usize,
    ) -> usize {
        let n = c.grid().n_steps();
        match self {
            StopRule::FixedTime => n,
            StopRule::ControlBudget { alpha } => {
                for i in from + 1..=n {
                    if c.at(i) * (l.at(i) - l.at(from)) >= *alpha {
                        return i;
                    }
                }
                n
            }
            StopRule::NormCap { cap } => {
                let x = x.expect("norm-cap rule needs the state path");
                for i in from + 1..=n {
                    let row = x.row(i);
                    if (h_weight * row.dot(&row)).sqrt() > *cap {
                        return i;
                    }
                }
                n
            }
        }
    }
}

pub(crate) fn validate_additive(
    g: &OperatorPath,
    grid: &TimeGrid,
    dim: usize,
    k_dim: usize,
) -> Result<()> {
    if g.len() < grid.len() {
        return Err(Error::GridMismatch(format!(
            "coefficient path has {} entries, grid has {} points",
            g.len(),
            grid.len()
        )));
    }
    if g.rows() != dim {
        return Err(Error::DimensionMismatch(format!(
            "coefficient maps into dimension {}, operator dimension is {dim}",
            g.rows()
        )));
    }
    if g.k_dim() != k_dim {
        return Err(Error::DimensionMismatch(format!(
            "coefficient k-dimension {} does not match the noise dimension {k_dim}",
            g.k_dim()
        )));
    }
    Ok(())
}

pub(crate) fn validate_state(x0: &Array1<f64>, dim: usize) -> Result<()> {
    if x0.len() != dim {
        return Err(Error::DimensionMismatch(format!(
            "initial state has dimension {}, operator dimension is {dim}",
            x0.len()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{control_process, sample_path, SemimartingaleSpec, TimeGrid};

    #[test]
    fn stop_rules_fire_at_the_first_admissible_index() {
        let grid = TimeGrid::uniform(1.0, 10).unwrap();
        let z = sample_path(&SemimartingaleSpec::new(1).unwrap(), &grid, 0).unwrap();
        let c = control_process(&z); // constant 4
        let l = LipschitzSpec::Linear { l0: 0.0, rate: 1.0 }.build(&c).unwrap();

        // Budget: first t with 4 (t - t_from) >= 0.5, i.e. t - t_from >= 1/8.
        let budget = StopRule::ControlBudget { alpha: 0.5 };
        assert_eq!(budget.first_index(&c, &l, None, 1.0, 0), 2);
        assert_eq!(budget.first_index(&c, &l, None, 1.0, 4), 6);

        // Fixed time never fires early.
        assert_eq!(StopRule::FixedTime.first_index(&c, &l, None, 1.0, 3), 10);

        // Norm cap: first index with |x| > cap, using data up to t only.
        let mut x = Array2::<f64>::zeros((11, 1));
        for i in 7..=10 {
            x[[i, 0]] = 3.0;
        }
        let cap = StopRule::NormCap { cap: 2.0 };
        assert_eq!(cap.first_index(&c, &l, Some(&x), 1.0, 0), 7);
        assert_eq!(cap.first_index(&c, &l, Some(&x), 1.0, 8), 9);
    }

    #[test]
    fn lipschitz_spec_builds_nondecreasing_budgets() {
        let grid = TimeGrid::uniform(2.0, 8).unwrap();
        let spec = SemimartingaleSpec::new(1).unwrap().with_wiener_var(1.0).unwrap();
        let z = sample_path(&spec, &grid, 3).unwrap();
        let c = control_process(&z);
        for spec in [
            LipschitzSpec::ScaledControl { l0: 0.5, factor: 2.0 },
            LipschitzSpec::Linear { l0: 0.0, rate: 3.0 },
        ] {
            let l = spec.build(&c).unwrap();
            assert!(l.values().windows(2).all(|w| w[1] >= w[0]));
            assert!(l.at(0) >= 0.0);
        }
    }
}
