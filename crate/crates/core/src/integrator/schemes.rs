//! Semi-implicit and proximal-splitting steppers for additive noise.

use std::collections::HashMap;

use ndarray::{Array1, ArrayView1};

use super::{validate_additive, validate_state, SchemeKind, SolutionPath};
use crate::error::{Error, Result};
use crate::monotone::ScalarGraph;
use crate::noise::{OperatorPath, SemimartingalePath};
use crate::operator::{GridOperator, ResolventOp};

/// States with H-norm above this are treated as blow-up.
const OVERFLOW_GUARD: f64 = 1e12;
/// A rejected step is retried at most this many halvings deep; a spike that
/// survives 2^12 substeps is genuine blow-up, not a transient.
const MAX_SPLIT_DEPTH: u32 = 12;

/// Resolvent solvers keyed by the step size, so local step halving and
/// non-uniform grids reuse factorizations.
pub(crate) struct LinearStepper<'a> {
    op: &'a GridOperator,
    solvers: HashMap<u64, ResolventOp>,
}

impl<'a> LinearStepper<'a> {
    pub(crate) fn new(op: &'a GridOperator) -> Self {
        LinearStepper { op, solvers: HashMap::new() }
    }

    pub(crate) fn solve(&mut self, dt: f64, v: ArrayView1<f64>) -> Result<Array1<f64>> {
        let key = dt.to_bits();
        if !self.solvers.contains_key(&key) {
            self.solvers.insert(key, self.op.resolvent_solver(dt)?);
        }
        Ok(self.solvers[&key].apply(v))
    }
}

/// One proximal-splitting step of the limit scheme:
/// noise shift, implicit linear solve, then an exact proximal drift step at
/// the right endpoint. Returns `(x_next, xi_next)` with
/// `xi_next in beta(t_next, x_next)` by construction.
pub(crate) fn limit_step(
    lin: &mut LinearStepper,
    graph: &ScalarGraph,
    t_next: f64,
    dt: f64,
    x: ArrayView1<f64>,
    noise_inc: &Array1<f64>,
    step: usize,
) -> Result<(Array1<f64>, Array1<f64>)> {
    let y = &x + noise_inc;
    let z_mid = lin.solve(dt, y.view())?;
    let mut x_next = Array1::zeros(x.len());
    let mut xi_next = Array1::zeros(x.len());
    for i in 0..x.len() {
        let xv = graph.resolvent_at(t_next, dt, z_mid[i]);
        let defect = graph.resolvent_defect_at(t_next, dt, z_mid[i], xv);
        if !xv.is_finite() || defect > 1e-6 * (1.0 + z_mid[i].abs()) {
            return Err(Error::ProxFailure {
                step,
                detail: format!(
                    "non-convergent proximal solve at node {i}: input {}, output {xv}, defect {defect:.3e}",
                    z_mid[i]
                ),
            });
        }
        x_next[i] = xv;
        xi_next[i] = (z_mid[i] - xv) / dt;
    }
    Ok((x_next, xi_next))
}

/// Lie splitting with exact proximal drift steps; realizes the `lambda -> 0`
/// limit dynamics directly. The stored selection satisfies the inclusion
/// `xi_{k+1} in beta(t_{k+1}, x_{k+1})` up to the proximal tolerance at every
/// step, and the ledger pairs `A` and `xi` against the stored states.
pub fn solve_limit(
    op: &GridOperator,
    graph: &ScalarGraph,
    g: &OperatorPath,
    z: &SemimartingalePath,
    x0: &Array1<f64>,
) -> Result<SolutionPath> {
    let grid = z.grid().clone();
    validate_additive(g, &grid, op.dim(), z.k_dim())?;
    validate_state(x0, op.dim())?;

    let mut sol = SolutionPath::empty(grid.clone(), op.h_weight(), op.dim(), SchemeKind::Limit, None);
    sol.x.row_mut(0).assign(x0);
    for i in 0..op.dim() {
        sol.xi[[0, i]] = graph.midpoint_at(0.0, x0[i]);
    }

    let mut lin = LinearStepper::new(op);
    for k in 0..grid.n_steps() {
        let dt = grid.dt(k);
        let t_next = grid.t(k + 1);
        let noise_inc = g.at(k).dot(&z.increment(k));
        let xk = sol.x.row(k).to_owned();
        let (x_next, xi_next) = limit_step(&mut lin, graph, t_next, dt, xk.view(), &noise_inc, k)?;

        let ax = op.apply(x_next.view());
        sol.v_cum[k + 1] = sol.v_cum[k] + op.h_inner(ax.view(), x_next.view()) * dt;
        sol.xix_cum[k + 1] = sol.xix_cum[k] + op.h_inner(xi_next.view(), x_next.view()) * dt;
        sol.x.row_mut(k + 1).assign(&x_next);
        sol.xi.row_mut(k + 1).assign(&xi_next);
    }
    Ok(sol)
}

/// Semi-implicit Euler for the Yosida-regularized equation:
/// `x_{k+1} = (I + dt A)^{-1} (x_k - dt beta_lambda(t_k, x_k) + G(t_k) dZ)`.
///
/// If a step overflows the guard it is re-done as two half steps with the
/// noise increment split evenly.
pub fn solve_regularized(
    op: &GridOperator,
    graph: &ScalarGraph,
    lambda: f64,
    g: &OperatorPath,
    z: &SemimartingalePath,
    x0: &Array1<f64>,
) -> Result<SolutionPath> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "regularization parameter must be positive, got {lambda}"
        )));
    }
    let grid = z.grid().clone();
    validate_additive(g, &grid, op.dim(), z.k_dim())?;
    validate_state(x0, op.dim())?;

    let mut sol = SolutionPath::empty(
        grid.clone(),
        op.h_weight(),
        op.dim(),
        SchemeKind::Regularized,
        Some(lambda),
    );
    sol.x.row_mut(0).assign(x0);

    let mut lin = LinearStepper::new(op);
    for k in 0..grid.n_steps() {
        let dt = grid.dt(k);
        let t_k = grid.t(k);
        let noise_inc = g.at(k).dot(&z.increment(k));
        let xk = sol.x.row(k).to_owned();

        // Selection at the left endpoint; also the drift of this step.
        let xi_k = Array1::from_iter(xk.iter().map(|v| graph.yosida_at(t_k, lambda, *v)));
        sol.xi.row_mut(k).assign(&xi_k);

        let x_next = regularized_step(
            &mut lin, op, graph, lambda, t_k, dt, xk.view(), &noise_inc, k, 0,
        )?;

        let ax = op.apply(x_next.view());
        sol.v_cum[k + 1] = sol.v_cum[k] + op.h_inner(ax.view(), x_next.view()) * dt;
        sol.xix_cum[k + 1] = sol.xix_cum[k] + op.h_inner(xi_k.view(), xk.view()) * dt;
        sol.x.row_mut(k + 1).assign(&x_next);
    }
    // Terminal selection for completeness of the stored pair.
    let t_end = grid.t_end();
    let xn = sol.x.row(grid.n_steps()).to_owned();
    let xi_n = Array1::from_iter(xn.iter().map(|v| graph.yosida_at(t_end, lambda, *v)));
    sol.xi.row_mut(grid.n_steps()).assign(&xi_n);
    Ok(sol)
}

#[allow(clippy::too_many_arguments)]
fn regularized_step(
    lin: &mut LinearStepper,
    op: &GridOperator,
    graph: &ScalarGraph,
    lambda: f64,
    t: f64,
    dt: f64,
    x: ArrayView1<f64>,
    noise_inc: &Array1<f64>,
    step: usize,
    depth: u32,
) -> Result<Array1<f64>> {
    if depth > MAX_SPLIT_DEPTH {
        return Err(Error::Overflow { step, norm: f64::INFINITY });
    }
    let mut y = x.to_owned();
    for (yi, xv) in y.iter_mut().zip(x.iter()) {
        *yi -= dt * graph.yosida_at(t, lambda, *xv);
    }
    y += noise_inc;
    let x_next = lin.solve(dt, y.view())?;
    let norm = op.h_norm(x_next.view());
    if norm.is_finite() && norm <= OVERFLOW_GUARD {
        return Ok(x_next);
    }
    // Reject: halve the step and re-split the increment.
    let half_inc = noise_inc * 0.5;
    let mid = regularized_step(lin, op, graph, lambda, t, 0.5 * dt, x, &half_inc, step, depth + 1)?;
    regularized_step(
        lin, op, graph, lambda, t + 0.5 * dt, 0.5 * dt, mid.view(), &half_inc, step, depth + 1,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{sample_path, MarkLaw, SemimartingaleSpec, TimeGrid};
    use crate::operator::{build_laplacian_1d, laplacian_eigenvalue, laplacian_eigenvector};
    use approx::assert_relative_eq;
    use ndarray::Array2;

    use crate::noise::SemimartingalePath;

    fn zero_path(k: usize, grid: &TimeGrid) -> SemimartingalePath {
        sample_path(&SemimartingaleSpec::new(k).unwrap(), grid, 0).unwrap()
    }

    #[test]
    fn heat_decay_matches_the_semigroup() {
        // Z = 0, beta = 0, x0 an eigenvector: x(T) ~ exp(-mu T) w, error O(dt).
        let (n, len, t_end, steps) = (16, 1.0, 1.0, 1024);
        let op = build_laplacian_1d(n, len).unwrap();
        let grid = TimeGrid::uniform(t_end, steps).unwrap();
        let z = zero_path(1, &grid);
        let g = OperatorPath::zeros(n, 1, grid.len());
        let w = laplacian_eigenvector(n, len, 1);
        let mu = laplacian_eigenvalue(n, len, 1);

        let sol = solve_limit(&op, &ScalarGraph::zero(), &g, &z, &w).unwrap();
        let exact = &w * (-mu * t_end).exp();
        let err = op.h_norm((&sol.state(steps).to_owned() - &exact).view());
        // Implicit Euler: |(1 + mu dt)^{-N} - e^{-mu T}| ~ mu^2 T dt / 2.
        let dt = t_end / steps as f64;
        assert!(err <= mu * mu * dt, "error {err} too large");
        assert!(err > 0.0);
    }

    #[test]
    fn scalar_linear_drift_decays_exponentially() {
        // A = 0, beta = identity, lambda -> 0: x(T) ~ exp(-T) x0.
        let n = 4;
        let op = GridOperator::zero(n, 1.0);
        let steps = 4096;
        let grid = TimeGrid::uniform(1.0, steps).unwrap();
        let z = zero_path(1, &grid);
        let g = OperatorPath::zeros(n, 1, grid.len());
        let x0 = Array1::from_elem(n, 2.0);
        let sol =
            solve_regularized(&op, &ScalarGraph::identity(), 1e-8, &g, &z, &x0).unwrap();
        for i in 0..n {
            assert_relative_eq!(
                sol.states()[[steps, i]],
                2.0 * (-1.0f64).exp(),
                max_relative = 1e-3
            );
        }
    }

    #[test]
    fn pure_integral_case_is_exact() {
        // G = I, beta = 0, A = 0: x = x0 + Z - Z(0) exactly.
        let k = 3;
        let op = GridOperator::zero(k, 1.0);
        let grid = TimeGrid::uniform(1.0, 128).unwrap();
        let spec = SemimartingaleSpec::new(k)
            .unwrap()
            .with_wiener_var(0.5)
            .unwrap()
            .with_jumps(3.0, MarkLaw::Point(vec![0.2, 0.0, -0.1]))
            .unwrap();
        let z = sample_path(&spec, &grid, 9).unwrap();
        let g = OperatorPath::constant(Array2::eye(k), grid.len());
        let x0 = Array1::from(vec![1.0, -0.5, 0.25]);
        for sol in [
            solve_regularized(&op, &ScalarGraph::zero(), 0.1, &g, &z, &x0).unwrap(),
            solve_limit(&op, &ScalarGraph::zero(), &g, &z, &x0).unwrap(),
        ] {
            for i in 0..=grid.n_steps() {
                for j in 0..k {
                    // The identity holds exactly; accumulated increment
                    // round-off is the only slack.
                    assert_relative_eq!(
                        sol.states()[[i, j]],
                        x0[j] + z.values()[[i, j]],
                        epsilon = 1e-12
                    );
                }
            }
        }
    }

    #[test]
    fn zero_initial_state_stays_zero() {
        let n = 8;
        let op = build_laplacian_1d(n, 1.0).unwrap();
        let grid = TimeGrid::uniform(1.0, 64).unwrap();
        let z = zero_path(1, &grid);
        let g = OperatorPath::zeros(n, 1, grid.len());
        let x0 = Array1::zeros(n);
        for graph in [ScalarGraph::exponential(), ScalarGraph::heaviside(), ScalarGraph::floor()] {
            let sol = solve_limit(&op, &graph, &g, &z, &x0).unwrap();
            assert!(sol.states().iter().all(|v| *v == 0.0));
            // Step selections vanish; the initial row is a midpoint selection
            // of beta(0), which need not be zero for jump graphs.
            for k in 1..=grid.n_steps() {
                assert!(sol.selection(k).iter().all(|v| v.abs() <= 1e-12));
            }
            for i in 0..n {
                let xi0 = sol.selections()[[0, i]];
                assert!(graph.contains(0.0, xi0, 1e-12), "{graph:?}: xi0 = {xi0}");
            }
        }
    }

    #[test]
    fn exponential_drift_decreases_monotonically() {
        // Scalar oracle: implicit Euler for x' + e^x - 1 = 0 solved by an
        // independent per-step bisection, compared against the scheme.
        let op = GridOperator::zero(1, 1.0);
        let steps = 256;
        let grid = TimeGrid::uniform(1.0, steps).unwrap();
        let z = zero_path(1, &grid);
        let g = OperatorPath::zeros(1, 1, grid.len());
        let x0 = Array1::from(vec![1.0]);
        let sol = solve_limit(&op, &ScalarGraph::exponential(), &g, &z, &x0).unwrap();

        let dt = 1.0 / steps as f64;
        let mut oracle = 1.0f64;
        for k in 0..steps {
            // Solve y + dt (e^y - 1) = oracle by bisection.
            let (mut lo, mut hi) = (-1.0, oracle);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid + dt * (mid.exp() - 1.0) > oracle {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            oracle = 0.5 * (lo + hi);
            let got = sol.states()[[k + 1, 0]];
            assert_relative_eq!(got, oracle, epsilon = 1e-9);
            assert!(got < sol.states()[[k, 0]], "path must decrease at step {k}");
            assert!(got > 0.0, "path stays above the equilibrium");
        }
    }

    #[test]
    fn limit_scheme_selection_satisfies_the_inclusion() {
        let n = 8;
        let op = build_laplacian_1d(n, 1.0).unwrap();
        let grid = TimeGrid::uniform(0.5, 128).unwrap();
        let spec = SemimartingaleSpec::new(1).unwrap().with_wiener_var(1.0).unwrap();
        let z = sample_path(&spec, &grid, 31).unwrap();
        let g = OperatorPath::constant(Array2::from_elem((n, 1), 0.3), grid.len());
        let x0 = laplacian_eigenvector(n, 1.0, 1);
        for graph in [
            ScalarGraph::exponential(),
            ScalarGraph::heaviside(),
            ScalarGraph::floor(),
            ScalarGraph::power(3).unwrap(),
        ] {
            let sol = solve_limit(&op, &graph, &g, &z, &x0).unwrap();
            for k in 0..=grid.n_steps() {
                for i in 0..n {
                    let (x, xi) = (sol.states()[[k, i]], sol.selections()[[k, i]]);
                    // Jump-tolerant membership: prox output may sit within
                    // solver tolerance of a jump point.
                    let snap = 1e-10 * (1.0 + x.abs());
                    assert!(
                        graph.contains_near(x, xi, snap, 1e-6 * (1.0 + xi.abs())),
                        "{graph:?}: xi = {xi} outside beta({x}) at step {k}"
                    );
                }
            }
            // Duality positivity of the ledger column.
            assert!(sol.duality_integral().iter().all(|v| *v >= -1e-12));
        }
    }

    #[test]
    fn cross_solver_agreement_for_linear_graph() {
        // With beta = identity, the limit scheme matches the regularized
        // scheme at lambda = dt to first order.
        let n = 8;
        let op = build_laplacian_1d(n, 1.0).unwrap();
        let steps = 512;
        let grid = TimeGrid::uniform(1.0, steps).unwrap();
        let spec = SemimartingaleSpec::new(1).unwrap().with_wiener_var(0.5).unwrap();
        let z = sample_path(&spec, &grid, 12).unwrap();
        let g = OperatorPath::constant(Array2::from_elem((n, 1), 0.5), grid.len());
        let x0 = laplacian_eigenvector(n, 1.0, 2);
        let dt = 1.0 / steps as f64;
        let a = solve_limit(&op, &ScalarGraph::identity(), &g, &z, &x0).unwrap();
        let b = solve_regularized(&op, &ScalarGraph::identity(), dt, &g, &z, &x0).unwrap();
        let dist = a.sup_distance(&b, steps);
        assert!(dist <= 10.0 * dt, "solver disagreement {dist} exceeds O(dt)");
    }

    #[test]
    fn time_modulated_graph_changes_the_dynamics() {
        let op = GridOperator::zero(1, 1.0);
        let grid = TimeGrid::uniform(1.0, 256).unwrap();
        let z = zero_path(1, &grid);
        let g = OperatorPath::zeros(1, 1, grid.len());
        let x0 = Array1::from(vec![1.0]);
        let plain = ScalarGraph::identity();
        let modulated = ScalarGraph::identity()
            .with_modulation(crate::monotone::Modulation::new(0.8, 7.0, 0.3).unwrap());
        let a = solve_limit(&op, &plain, &g, &z, &x0).unwrap();
        let b = solve_limit(&op, &modulated, &g, &z, &x0).unwrap();
        assert!(a.sup_distance(&b, 256) > 1e-3);
    }

    #[test]
    fn regularized_heat_decay_matches_the_semigroup() {
        // beta = 0 makes the regularized scheme plain implicit Euler; it
        // must agree with the eigendecomposition to O(dt) and coincide with
        // the limit scheme exactly.
        let (n, len, t_end, steps) = (16, 1.0, 1.0, 1024);
        let op = build_laplacian_1d(n, len).unwrap();
        let grid = TimeGrid::uniform(t_end, steps).unwrap();
        let z = zero_path(1, &grid);
        let g = OperatorPath::zeros(n, 1, grid.len());
        let w = laplacian_eigenvector(n, len, 1);
        let mu = laplacian_eigenvalue(n, len, 1);
        let reg = solve_regularized(&op, &ScalarGraph::zero(), 0.5, &g, &z, &w).unwrap();
        let lim = solve_limit(&op, &ScalarGraph::zero(), &g, &z, &w).unwrap();
        assert_eq!(reg.states(), lim.states());
        let exact = &w * (-mu * t_end).exp();
        let err = op.h_norm((&reg.state(steps).to_owned() - &exact).view());
        assert!(err <= mu * mu * (t_end / steps as f64));
    }

    #[test]
    fn persistent_overflow_aborts_with_a_diagnostic() {
        // Explicit Yosida drift with lambda far below dt and a huge state:
        // every halving still overshoots the guard.
        let n = 2;
        let op = GridOperator::zero(n, 1.0);
        let grid = TimeGrid::uniform(1.0, 2).unwrap();
        let z = zero_path(1, &grid);
        let g = OperatorPath::zeros(n, 1, grid.len());
        let x0 = Array1::from_elem(n, 1e11);
        let err =
            solve_regularized(&op, &ScalarGraph::power(5).unwrap(), 1e-10, &g, &z, &x0).unwrap_err();
        assert!(matches!(err, crate::error::Error::Overflow { .. }), "{err}");
    }

    #[test]
    fn pathological_custom_graph_aborts_the_path() {
        // A custom graph that turns non-finite inside a band the probe set
        // misses: the proximal defect check catches it mid-run.
        let graph = crate::monotone::fill_jumps_continuous(|x: f64| {
            if (50.0..60.0).contains(&x) {
                f64::NAN
            } else {
                x
            }
        })
        .unwrap();
        let op = GridOperator::zero(1, 1.0);
        let grid = TimeGrid::uniform(1.0, 4).unwrap();
        let z = zero_path(1, &grid);
        let g = OperatorPath::zeros(1, 1, grid.len());
        let x0 = Array1::from(vec![55.0]);
        let err = solve_limit(&op, &graph, &g, &z, &x0).unwrap_err();
        assert!(matches!(err, crate::error::Error::ProxFailure { .. }), "{err}");
    }

    #[test]
    fn solutions_form_a_direct_system_under_restriction() {
        // Solving on the restricted horizon reproduces the restriction of
        // the full solution exactly (same grid prefix, same seed).
        let n = 8;
        let op = build_laplacian_1d(n, 1.0).unwrap();
        let full_grid = TimeGrid::uniform(1.0, 128).unwrap();
        let spec = SemimartingaleSpec::new(1)
            .unwrap()
            .with_wiener_var(1.0)
            .unwrap()
            .with_jumps(2.0, MarkLaw::Point(vec![0.3]))
            .unwrap();
        let z = sample_path(&spec, &full_grid, 77).unwrap();
        let g = OperatorPath::constant(Array2::from_elem((n, 1), 0.4), full_grid.len());
        let x0 = laplacian_eigenvector(n, 1.0, 1);
        let full = solve_limit(&op, &ScalarGraph::exponential(), &g, &z, &x0).unwrap();

        let tau = 80usize;
        let prefix_grid =
            TimeGrid::from_times(full_grid.times()[..=tau].to_vec()).unwrap();
        let restricted = SemimartingalePath::from_parts(
            prefix_grid.clone(),
            z.values().slice(ndarray::s![..=tau, ..]).to_owned(),
            z.jumps().iter().filter(|(i, _)| *i <= tau).cloned().collect(),
            z.pred_bracket()[..=tau].to_vec(),
            z.jump_bracket()[..=tau].to_vec(),
            z.fv_variation()[..=tau].to_vec(),
        )
        .unwrap();
        let g_prefix = OperatorPath::constant(Array2::from_elem((n, 1), 0.4), prefix_grid.len());
        let part =
            solve_limit(&op, &ScalarGraph::exponential(), &g_prefix, &restricted, &x0).unwrap();
        for i in 0..=tau {
            for j in 0..n {
                assert_eq!(part.states()[[i, j]], full.states()[[i, j]]);
                assert_eq!(part.selections()[[i, j]], full.selections()[[i, j]]);
            }
        }
    }

    #[test]
    fn dimension_mismatches_are_rejected() {
        let op = build_laplacian_1d(4, 1.0).unwrap();
        let grid = TimeGrid::uniform(1.0, 8).unwrap();
        let z = zero_path(1, &grid);
        let bad_g = OperatorPath::zeros(3, 1, grid.len());
        let x0 = Array1::zeros(4);
        assert!(solve_limit(&op, &ScalarGraph::zero(), &bad_g, &z, &x0).is_err());
        let short_g = OperatorPath::zeros(4, 1, 3);
        assert!(solve_limit(&op, &ScalarGraph::zero(), &short_g, &z, &x0).is_err());
        let bad_x0 = Array1::zeros(5);
        let g = OperatorPath::zeros(4, 1, grid.len());
        assert!(solve_limit(&op, &ScalarGraph::zero(), &g, &z, &bad_x0).is_err());
        assert!(solve_regularized(&op, &ScalarGraph::zero(), 0.0, &g, &z, &x0).is_err());
    }
}
