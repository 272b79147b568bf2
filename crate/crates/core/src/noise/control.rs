//! Control processes and the machinery around them: the explicit control
//! formula for simulated semimartingales, the `lambda^C` functional, stopped
//! control processes, and the discrete Gronwall bound.

use super::{OperatorPath, SemimartingalePath, TimeGrid};
use crate::error::{Error, Result};

/// Nondecreasing right-continuous control path `C(t_i)` for a
/// semimartingale. Dominates all stopped second moments of stochastic
/// integrals against `Z`; `C(0) >= 4` by the variation floor.
#[derive(Clone, Debug)]
pub struct ControlPath {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl ControlPath {
    pub fn from_values(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch("control path length mismatch".into()));
        }
        if values.windows(2).any(|w| w[1] < w[0] - 1e-14) {
            return Err(Error::InvalidParameter("control path must be nondecreasing".into()));
        }
        Ok(ControlPath { grid, values })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Left limit at grid index `i`: the value at the previous grid point.
    pub fn pre(&self, i: usize) -> f64 {
        self.values[i.saturating_sub(1)]
    }
}

/// The explicit control process
/// `C = 8 (<M,M> + [Mc,Mc]) + 2 (2 v |V|)`
/// built from the path's stored bracket and variation series.
pub fn control_process(path: &SemimartingalePath) -> ControlPath {
    let values = path
        .pred_bracket()
        .iter()
        .zip(path.jump_bracket())
        .zip(path.fv_variation())
        .map(|((m, j), v)| 8.0 * (m + j) + 2.0 * v.max(2.0))
        .collect();
    ControlPath { grid: path.grid().clone(), values }
}

/// Left-endpoint Stieltjes sum `int_0^{t_idx} |Y|^2 dC` over grid steps.
fn stieltjes_left(c: &ControlPath, y: &OperatorPath, h_weight: f64, upto: usize) -> f64 {
    let mut acc = 0.0;
    for j in 0..upto {
        acc += y.hs_norm_sq(j, h_weight) * (c.values[j + 1] - c.values[j]);
    }
    acc
}

/// `lambda^C_t(Y) = C(t) * int_0^t |Y|^2 dC` at grid index `t_idx`, with Y
/// measured in the Hilbert-Schmidt norm that dominates the operator norm.
pub fn lambda_functional(c: &ControlPath, y: &OperatorPath, h_weight: f64, t_idx: usize) -> f64 {
    c.values[t_idx] * stieltjes_left(c, y, h_weight, t_idx)
}

/// The pre-stop variant `C(tau-) * int_{[0, tau)} |Y|^2 dC` used by the
/// maximal-inequality audits: both factors stop at the left limit.
pub fn lambda_functional_plain(
    c: &ControlPath,
    y: &OperatorPath,
    h_weight: f64,
    tau_idx: usize,
) -> f64 {
    let pre = tau_idx.saturating_sub(1);
    c.values[pre] * stieltjes_left(c, y, h_weight, pre)
}

/// Stops a control path at the left limit: `C^{tau-}(t) = C(t)` for
/// `t < tau`, frozen at `C(tau-)` afterwards. `tau_idx = N` means no stop.
pub fn stopped_control(c: &ControlPath, tau_idx: usize) -> ControlPath {
    let n = c.grid.n_steps();
    if tau_idx >= n {
        return c.clone();
    }
    let frozen = c.values[tau_idx.saturating_sub(1)];
    let values = c
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| if i < tau_idx { *v } else { frozen })
        .collect();
    ControlPath { grid: c.grid.clone(), values }
}

/// Nondecreasing, nonnegative Lipschitz-budget process attached to a noise
/// coefficient.
#[derive(Clone, Debug)]
pub struct LipschitzProcess {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl LipschitzProcess {
    pub fn from_values(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch("lipschitz path length mismatch".into()));
        }
        if values.iter().any(|v| *v < 0.0) {
            return Err(Error::InvalidParameter("lipschitz path must be nonnegative".into()));
        }
        if values.windows(2).any(|w| w[1] < w[0] - 1e-14) {
            return Err(Error::InvalidParameter("lipschitz path must be nondecreasing".into()));
        }
        Ok(LipschitzProcess { grid, values })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn at(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// The discrete stochastic-Gronwall bound `a * sum_{k=0}^{floor(2 b l)} (2 b l)^k`.
pub fn gronwall_bound(a: f64, b: f64, ell: f64) -> f64 {
    assert!(a >= 0.0 && b >= 0.0 && ell >= 0.0, "gronwall_bound needs nonnegative inputs");
    let x = 2.0 * b * ell;
    let kmax = x.floor() as usize;
    let mut term = 1.0;
    let mut sum = 1.0;
    for _ in 0..kmax {
        term *= x;
        sum += term;
    }
    a * sum
}
