//! Fixed-point construction for multiplicative noise.
//!
//! On a control-budget interval the map `Y -> X[B(Y)]` (solve the additive
//! equation with the coefficient frozen along `Y`) is a contraction; its
//! fixed point is the solution with path-dependent noise. The construction
//! is iterated over a stopping-time sequence to reach the horizon: each
//! segment restarts the Lipschitz budget, and a norm cap bumps a counter
//! whenever the state outgrows it.

use ndarray::{Array1, Array2};

use super::schemes::{limit_step, LinearStepper};
use super::{validate_state, MultiplicativeCoefficient, SchemeKind, SolutionPath, StopRule};
use crate::error::{Error, Result};
use crate::monotone::ScalarGraph;
use crate::noise::{control_process, SemimartingalePath};
use crate::operator::GridOperator;

const MAX_SEGMENTS: usize = 1_000_000;

/// Convergence record of one Picard solve.
#[derive(Clone, Debug)]
pub struct PicardStats {
    pub iterations: usize,
    pub final_distance: f64,
    /// Successive distance ratios; all below 1 for a contraction.
    pub ratios: Vec<f64>,
}

/// Initial iterate of the fixed-point map.
#[derive(Clone, Debug)]
pub enum PicardInit {
    /// Constant continuation of the segment's initial state.
    Constant,
    /// A caller-supplied full-grid state array (warm start).
    WarmStart(Array2<f64>),
}

struct SegmentPass {
    v_inc: Vec<f64>,
    xix_inc: Vec<f64>,
}

/// Runs the Picard iteration on grid indices `[start, end]`, writing the
/// converged states, selections, and ledger increments into `sol`.
#[allow(clippy::too_many_arguments)]
fn picard_segment(
    op: &GridOperator,
    graph: &ScalarGraph,
    coeff: &MultiplicativeCoefficient,
    z: &SemimartingalePath,
    sol: &mut SolutionPath,
    start: usize,
    end: usize,
    max_iter: usize,
    tol: f64,
    init: &PicardInit,
) -> Result<PicardStats> {
    let grid = sol.grid.clone();
    let dim = op.dim();
    let mut lin = LinearStepper::new(op);

    let mut ym = sol.x.clone();
    match init {
        PicardInit::Constant => {
            let row = ym.row(start).to_owned();
            for i in start + 1..=end {
                ym.row_mut(i).assign(&row);
            }
        }
        PicardInit::WarmStart(w) => {
            if w.nrows() != ym.nrows() || w.ncols() != dim {
                return Err(Error::DimensionMismatch("warm start shape mismatch".into()));
            }
            for i in start + 1..=end {
                ym.row_mut(i).assign(&w.row(i));
            }
        }
    }

    let mut xi = Array2::<f64>::zeros((grid.len(), dim));
    let mut pass = SegmentPass { v_inc: vec![0.0; grid.len()], xix_inc: vec![0.0; grid.len()] };
    let mut ratios = Vec::new();
    let mut prev_dist = f64::INFINITY;
    let mut converged = None;

    for m in 1..=max_iter {
        let mut candidate = ym.clone();
        for k in start..end {
            let dt = grid.dt(k);
            let t_next = grid.t(k + 1);
            // Coefficient frozen along the previous iterate; the view passed
            // to the rule ends strictly before t_k (u(0-) := u(0)).
            let past = ym.slice(ndarray::s![0..k.max(1), ..]);
            let b = coeff.rule.eval(k, grid.t(k), past);
            if b.ncols() != z.k_dim() || b.nrows() != dim {
                return Err(Error::DimensionMismatch(
                    "coefficient rule produced a wrongly shaped operator".into(),
                ));
            }
            let noise_inc = b.dot(&z.increment(k));
            let xk = candidate.row(k).to_owned();
            let (x_next, xi_next) = limit_step(&mut lin, graph, t_next, dt, xk.view(), &noise_inc, k)?;
            let ax = op.apply(x_next.view());
            pass.v_inc[k + 1] = op.h_inner(ax.view(), x_next.view()) * dt;
            pass.xix_inc[k + 1] = op.h_inner(xi_next.view(), x_next.view()) * dt;
            candidate.row_mut(k + 1).assign(&x_next);
            xi.row_mut(k + 1).assign(&xi_next);
        }

        let mut dist = 0.0f64;
        for i in start + 1..=end {
            let mut s = 0.0;
            for j in 0..dim {
                let d = candidate[[i, j]] - ym[[i, j]];
                s += d * d;
            }
            dist = dist.max(op.h_weight() * s);
        }
        let dist = dist.sqrt();
        if prev_dist.is_finite() && prev_dist > 0.0 {
            ratios.push(dist / prev_dist);
            let k = ratios.len();
            if k >= 3 && ratios[k - 3..].iter().all(|r| *r >= 1.0) {
                return Err(Error::NonContractive { ratios });
            }
        }
        ym = candidate;
        if dist < tol {
            converged = Some((m, dist));
            break;
        }
        prev_dist = dist;
    }

    let (iterations, final_distance) = converged.ok_or_else(|| Error::NonContractive {
        ratios: ratios.clone(),
    })?;

    for i in start + 1..=end {
        let row = ym.row(i).to_owned();
        sol.x.row_mut(i).assign(&row);
        let xrow = xi.row(i).to_owned();
        sol.xi.row_mut(i).assign(&xrow);
        sol.v_cum[i] = sol.v_cum[i - 1] + pass.v_inc[i];
        sol.xix_cum[i] = sol.xix_cum[i - 1] + pass.xix_inc[i];
    }
    Ok(PicardStats { iterations, final_distance, ratios })
}

/// Solves the equation with a path-dependent coefficient on the first
/// control-budget interval: `tau` is the first grid time with
/// `C_t (L_t - L_0) >= alpha` (capped at the horizon), and the solution on
/// `[0, tau]` is the Picard fixed point at tolerance `tol`. Beyond `tau` the
/// path is frozen.
#[allow(clippy::too_many_arguments)]
pub fn solve_multiplicative(
    op: &GridOperator,
    graph: &ScalarGraph,
    coeff: &MultiplicativeCoefficient,
    z: &SemimartingalePath,
    x0: &Array1<f64>,
    alpha: f64,
    max_picard: usize,
    tol: f64,
) -> Result<(SolutionPath, usize, PicardStats)> {
    solve_multiplicative_with_init(
        op, graph, coeff, z, x0, alpha, max_picard, tol, &PicardInit::Constant,
    )
}

/// [`solve_multiplicative`] with an explicit initial Picard iterate.
#[allow(clippy::too_many_arguments)]
pub fn solve_multiplicative_with_init(
    op: &GridOperator,
    graph: &ScalarGraph,
    coeff: &MultiplicativeCoefficient,
    z: &SemimartingalePath,
    x0: &Array1<f64>,
    alpha: f64,
    max_picard: usize,
    tol: f64,
    init: &PicardInit,
) -> Result<(SolutionPath, usize, PicardStats)> {
    validate_alpha(alpha)?;
    validate_state(x0, op.dim())?;
    let grid = z.grid().clone();
    let c = control_process(z);
    let l = coeff.lipschitz.build(&c)?;
    let tau = StopRule::ControlBudget { alpha }.first_index(&c, &l, None, op.h_weight(), 0);

    let mut sol =
        SolutionPath::empty(grid.clone(), op.h_weight(), op.dim(), SchemeKind::Multiplicative, None);
    sol.x.row_mut(0).assign(x0);
    for i in 0..op.dim() {
        sol.xi[[0, i]] = graph.midpoint_at(0.0, x0[i]);
    }

    let stats =
        picard_segment(op, graph, coeff, z, &mut sol, 0, tau, max_picard, tol, init)?;
    freeze_after(&mut sol, tau);
    Ok((sol, tau, stats))
}

/// Extends the fixed-point construction to the full horizon over a sequence
/// of stopping times: each segment spends a fresh budget `alpha` measured
/// from `L` at the segment start, and the norm cap `|X(tau_n)| <= n` bumps
/// the counter without advancing. Returns the solution and the segment
/// boundary indices (starting with 0, ending with the horizon).
#[allow(clippy::too_many_arguments)]
pub fn extend_solution(
    op: &GridOperator,
    graph: &ScalarGraph,
    coeff: &MultiplicativeCoefficient,
    z: &SemimartingalePath,
    x0: &Array1<f64>,
    alpha: f64,
    max_picard: usize,
    tol: f64,
) -> Result<(SolutionPath, Vec<usize>)> {
    validate_alpha(alpha)?;
    validate_state(x0, op.dim())?;
    let grid = z.grid().clone();
    let n = grid.n_steps();
    let c = control_process(z);
    let l = coeff.lipschitz.build(&c)?;
    let budget = StopRule::ControlBudget { alpha };

    let mut sol =
        SolutionPath::empty(grid.clone(), op.h_weight(), op.dim(), SchemeKind::Multiplicative, None);
    sol.x.row_mut(0).assign(x0);
    for i in 0..op.dim() {
        sol.xi[[0, i]] = graph.midpoint_at(0.0, x0[i]);
    }

    let mut boundaries = vec![0usize];
    let mut cursor = 0usize;
    let mut cap = 1.0f64;
    while cursor < n {
        if boundaries.len() > MAX_SEGMENTS {
            return Err(Error::SegmentLimit(boundaries.len()));
        }
        let norm = (op.h_weight() * sol.x.row(cursor).dot(&sol.x.row(cursor))).sqrt();
        if norm > cap {
            // tau_{n+1} = tau_n: the cap is too small; grow it and retry.
            cap += 1.0;
            boundaries.push(cursor);
            continue;
        }
        let next = budget.first_index(&c, &l, None, op.h_weight(), cursor);
        picard_segment(
            op, graph, coeff, z, &mut sol, cursor, next, max_picard, tol, &PicardInit::Constant,
        )?;
        boundaries.push(next);
        cursor = next;
    }
    Ok((sol, boundaries))
}

fn validate_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "budget alpha must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(())
}

fn freeze_after(sol: &mut SolutionPath, tau: usize) {
    let n = sol.grid.n_steps();
    for i in tau + 1..=n {
        let row = sol.x.row(tau).to_owned();
        sol.x.row_mut(i).assign(&row);
        sol.v_cum[i] = sol.v_cum[tau];
        sol.xix_cum[i] = sol.xix_cum[tau];
    }
}
