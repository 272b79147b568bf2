//! Study drivers: parameterized experiment runners that exercise one
//! estimate or identity each and emit a machine-checkable [`StudyReport`].
//!
//! Comparative studies (regularization ladders, perturbation ladders) couple
//! all runs through the same seeds, so differences are free of Monte Carlo
//! variance and reports are reproducible bit-for-bit from
//! `(config, seed_base)`.

use std::time::Instant;

use ndarray::{Array1, Array2};
use rayon::prelude::*;

use crate::analysis::{apriori_monitor, ito_residual};
use crate::integrator::{
    extend_solution, solve_limit, solve_multiplicative, solve_regularized, LipschitzSpec,
    MultiplicativeCoefficient,
};
use crate::monotone::{ConvexPotential, ScalarGraph, PROX_TOL};
use crate::noise::{
    control_process, lambda_functional, mp_inequality_audit, quadratic_variation, sample_path,
    stochastic_integral, AuditIntegrand, MarkLaw, OperatorPath, PathStop, SemimartingaleSpec,
    TimeGrid,
};
use crate::operator::{build_laplacian_1d, laplacian_eigenvalue, laplacian_eigenvector, GridOperator};
use crate::report::StudyReport;
use crate::util::{path_seed, Estimate};
use crate::Result;

/// The five-graph verification library.
pub fn graph_library() -> Vec<ScalarGraph> {
    vec![
        ScalarGraph::identity(),
        ScalarGraph::power(3).expect("valid exponent"),
        ScalarGraph::exponential(),
        ScalarGraph::heaviside(),
        ScalarGraph::floor(),
    ]
}

fn smooth_column(op: &GridOperator, length: f64, amp: f64, mode: usize) -> Array2<f64> {
    let w = laplacian_eigenvector(op.dim(), length, mode);
    let mut g = Array2::zeros((op.dim(), 1));
    for i in 0..op.dim() {
        g[[i, 0]] = amp * w[i];
    }
    g
}

fn deterministic_unit(seed: u64, salt: u64) -> f64 {
    (path_seed(seed, salt) >> 11) as f64 / (1u64 << 53) as f64
}

/// Monotone-calculus suite: resolvent contraction, Yosida Lipschitz bound,
/// graph consistency of the Yosida selection, the Moreau identity, and
/// Fenchel-Young with equality on graph pairs, over the built-in library.
pub fn monotone_suite(samples: usize, seed_base: u64) -> StudyReport {
    let start = Instant::now();
    let mut report = StudyReport::new("monotone-suite", samples, seed_base);
    let lambdas = [1.0, 0.1, 0.01];

    for graph in graph_library() {
        let p = ConvexPotential::new(graph.clone());
        let name = graph.spec_string();
        let mut worst_contraction = 0.0f64;
        let mut worst_lipschitz = 0.0f64;
        let mut worst_consistency = 0.0f64;
        let mut worst_moreau = 0.0f64;
        let mut worst_fy = 0.0f64;
        let mut worst_envelope = 0.0f64;

        for s in 0..samples as u64 {
            let x = 20.0 * deterministic_unit(seed_base, 2 * s) - 10.0;
            let y = 20.0 * deterministic_unit(seed_base ^ 0xABCD, 2 * s + 1) - 10.0;
            let lambda = lambdas[(s % 3) as usize];

            let (jx, jy) = (graph.resolvent(lambda, x), graph.resolvent(lambda, y));
            worst_contraction = worst_contraction.max((jx - jy).abs() - (x - y).abs());

            let (bx, by) = ((x - jx) / lambda, (y - jy) / lambda);
            worst_lipschitz = worst_lipschitz.max((bx - by).abs() - (x - y).abs() / lambda);

            // beta_lambda(x) in beta(J_lambda x): Fenchel-Young equality case.
            let scale = 1.0 + (jx * bx).abs() + p.value(jx) + p.conjugate(bx).min(1e300);
            let gap = (jx * bx - p.value(jx) - p.conjugate(bx)).abs() / scale;
            worst_consistency = worst_consistency.max(gap);
            worst_fy = worst_fy.max(gap);

            // Moreau identity, relative.
            let envelope = p.moreau(lambda, x);
            let identity = p.value(jx) + (x - jx) * (x - jx) / (2.0 * lambda);
            worst_moreau =
                worst_moreau.max((envelope - identity).abs() / (1.0 + identity.abs()));
            // Envelope bounds: j_lambda <= j and j_lambda below every probe.
            worst_envelope = worst_envelope.max(envelope - p.value(x));
            let probe = y;
            let probe_val = (x - probe) * (x - probe) / (2.0 * lambda) + p.value(probe);
            worst_envelope = worst_envelope.max(envelope - probe_val);

            // Fenchel-Young inequality on the sampled off-graph pair.
            let jy_star = p.conjugate(by);
            if jy_star.is_finite() {
                worst_fy = worst_fy.max((x * by - p.value(x) - jy_star) / (1.0 + jy_star));
            }
        }

        report.push(format!("{name}/contraction_excess"), worst_contraction, 0.0, samples);
        report.push(format!("{name}/lipschitz_excess"), worst_lipschitz, 0.0, samples);
        report.push(format!("{name}/consistency_gap"), worst_consistency, 0.0, samples);
        report.push(format!("{name}/moreau_residual"), worst_moreau, 0.0, samples);
        report.push(format!("{name}/fenchel_young_gap"), worst_fy, 0.0, samples);
        report.require(
            worst_contraction <= 2.0 * PROX_TOL,
            format!("{name}: resolvent contraction within 2 * solver tol"),
        );
        report.require(
            worst_lipschitz <= 4.0 * PROX_TOL / 0.01,
            format!("{name}: Yosida 1/lambda-Lipschitz bound"),
        );
        report.require(
            worst_consistency <= 1e-8,
            format!("{name}: Yosida selection lies in the graph at the resolvent"),
        );
        report.require(worst_moreau <= 1e-8, format!("{name}: Moreau identity at 1e-8 relative"));
        report.require(
            worst_fy <= 1e-8,
            format!("{name}: Fenchel-Young holds, equality on graph pairs"),
        );
        report.require(
            worst_envelope <= 1e-8,
            format!("{name}: Moreau envelope stays below j and all probe values"),
        );
    }
    report.runtime_ms = start.elapsed().as_millis();
    report
}

/// Deterministic heat-flow check of the linear solver pipeline against the
/// eigendecomposition of the discrete operator.
pub fn heat_oracle_study(n: usize, length: f64, n_steps: usize, t_end: f64) -> Result<StudyReport> {
    let start = Instant::now();
    let mut report = StudyReport::new("heat-oracle", n, 0);
    let op = build_laplacian_1d(n, length)?;
    let grid = TimeGrid::uniform(t_end, n_steps)?;
    let z = sample_path(&SemimartingaleSpec::new(1)?, &grid, 0)?;
    let g = OperatorPath::zeros(n, 1, grid.len());

    // Initial state with known eigen-expansion, weighted toward the low
    // modes: the implicit-Euler amplification error per mode scales like
    // mu_k dt, so high-mode content burns the error budget.
    let coeffs = [1.0, 0.2, 0.1];
    let mut x0 = Array1::<f64>::zeros(n);
    for (k, c) in coeffs.iter().enumerate() {
        x0 += &(laplacian_eigenvector(n, length, k + 1) * *c);
    }
    let norm = op.h_norm(x0.view());
    x0 /= norm;

    let sol = solve_limit(&op, &ScalarGraph::zero(), &g, &z, &x0)?;
    let mut err = 0.0f64;
    for j in 0..=n_steps {
        let t = grid.t(j);
        let mut exact = Array1::<f64>::zeros(n);
        for (k, c) in coeffs.iter().enumerate() {
            let mu = laplacian_eigenvalue(n, length, k + 1);
            exact += &(laplacian_eigenvector(n, length, k + 1) * (c / norm * (-mu * t).exp()));
        }
        let diff = &sol.state(j).to_owned() - &exact;
        err = err.max(op.h_norm(diff.view()));
    }
    let dx = length / (n as f64 + 1.0);
    let dt = t_end / n_steps as f64;
    let bound = 5.0 * (dt + dx * dx);
    report.push("sup_error", err, 0.0, 1);
    report.push("bound", bound, 0.0, 1);
    report.require(err <= bound, format!("heat error {err:.3e} within 5 (dt + dx^2) = {bound:.3e}"));
    report.runtime_ms = start.elapsed().as_millis();
    Ok(report)
}

/// The 12-cell maximal-inequality audit matrix:
/// {Wiener, compound Poisson, mixed} x {constant, path-dependent Y}
/// x {horizon, first-passage stop}.
pub fn mp_audit_matrix(n_paths: usize, n_steps: usize, seed_base: u64) -> Result<StudyReport> {
    let start = Instant::now();
    let mut report = StudyReport::new("mp-audit", n_steps, seed_base);
    let grid = TimeGrid::uniform(1.0, n_steps)?;

    let specs: Vec<(&str, SemimartingaleSpec)> = vec![
        ("wiener", SemimartingaleSpec::new(1)?.with_wiener_var(1.0)?),
        (
            "poisson",
            SemimartingaleSpec::new(1)?.with_jumps(1.0, MarkLaw::Point(vec![1.0]))?,
        ),
        (
            "mixed",
            SemimartingaleSpec::new(1)?
                .with_wiener_var(1.0)?
                .with_jumps(2.0, MarkLaw::GaussianIso { mean: vec![0.0], sigma: 0.5 })?
                .with_drift(Array1::from(vec![0.3]))?,
        ),
    ];
    let integrands: Vec<(&str, AuditIntegrand)> = vec![
        ("const", AuditIntegrand::Constant(Array2::ones((1, 1)))),
        ("bounded-past", AuditIntegrand::BoundedPast { amp: 1.0 }),
    ];
    let stops: Vec<(&str, PathStop)> = vec![
        ("horizon", PathStop::Horizon),
        ("first-passage", PathStop::FirstPassage { threshold: 1.0 }),
    ];

    let mut cell_seed = seed_base;
    for (sname, spec) in &specs {
        for (yname, integrand) in &integrands {
            for (tname, stop) in &stops {
                cell_seed = cell_seed.wrapping_add(0x9E37);
                let audit = mp_inequality_audit(spec, integrand, *stop, &grid, n_paths, cell_seed)?;
                let cell = format!("{sname}/{yname}/{tname}");
                report.push(format!("{cell}/lhs"), audit.lhs.mean, audit.lhs.std_error, n_paths);
                report.push(format!("{cell}/rhs"), audit.rhs.mean, audit.rhs.std_error, n_paths);
                report.push(
                    format!("{cell}/sqrt_lhs"),
                    audit.sqrt_lhs.mean,
                    audit.sqrt_lhs.std_error,
                    n_paths,
                );
                report.push(
                    format!("{cell}/sqrt_rhs"),
                    audit.sqrt_rhs.mean,
                    audit.sqrt_rhs.std_error,
                    n_paths,
                );
                report.require(audit.pass_quadratic, format!("{cell}: quadratic inequality"));
                report.require(audit.pass_sqrt, format!("{cell}: square-root variant"));
            }
        }
    }
    report.runtime_ms = start.elapsed().as_millis();
    Ok(report)
}

fn refinement_noise() -> Result<SemimartingaleSpec> {
    SemimartingaleSpec::new(1)?
        .with_wiener_var(1.0)?
        .with_jumps(2.0, MarkLaw::Point(vec![0.5]))
}

/// Energy-identity residual decay under coupled dyadic time refinement.
pub fn energy_refinement_study(
    levels: &[usize],
    n_paths: usize,
    seed_base: u64,
) -> Result<StudyReport> {
    let start = Instant::now();
    let mut report = StudyReport::new("energy-refinement", *levels.last().unwrap_or(&0), seed_base);
    let (n, length, t_end) = (32, 1.0, 1.0);
    let op = build_laplacian_1d(n, length)?;
    let spec = refinement_noise()?;
    let x0 = laplacian_eigenvector(n, length, 1);

    for graph in [ScalarGraph::identity(), ScalarGraph::exponential()] {
        let name = graph.spec_string();
        let mut means = Vec::new();
        for &steps in levels {
            let grid = TimeGrid::uniform(t_end, steps)?;
            let g = OperatorPath::constant(smooth_column(&op, length, 0.3, 1), grid.len());
            let per_path: Vec<(f64, f64)> = (0..n_paths as u64)
                .into_par_iter()
                .map(|i| {
                    let z = sample_path(&spec, &grid, path_seed(seed_base, i))?;
                    let sol = solve_limit(&op, &graph, &g, &z, &x0)?;
                    let r = ito_residual(&sol, &g, &z)?;
                    let max = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                    Ok((max, r.last().unwrap().abs()))
                })
                .collect::<Result<_>>()?;
            let est =
                Estimate::from_samples(&per_path.iter().map(|p| p.0).collect::<Vec<_>>());
            let term =
                Estimate::from_samples(&per_path.iter().map(|p| p.1).collect::<Vec<_>>());
            report.push(format!("{name}/max_residual/N{steps}"), est.mean, est.std_error, n_paths);
            report.push(
                format!("{name}/terminal_residual/N{steps}"),
                term.mean,
                term.std_error,
                n_paths,
            );
            means.push(est.mean);
        }
        if name == "identity" {
            for w in means.windows(2) {
                let ratio = w[0] / w[1];
                report.push(format!("{name}/ratio"), ratio, 0.0, n_paths);
                report.require(
                    (1.6..=2.4).contains(&ratio),
                    format!("{name}: refinement ratio {ratio:.3} in [1.6, 2.4]"),
                );
            }
        } else {
            report.require(
                means.windows(2).all(|w| w[1] < w[0]),
                format!("{name}: max residual decreases monotonically: {means:?}"),
            );
        }
    }
    report.runtime_ms = start.elapsed().as_millis();
    Ok(report)
}

/// Pathwise a priori estimate with the fixed constant `kappa`:
/// `sup |x|^2 + int |x|_V^2 + int int xi x
///    <= kappa (|x0|^2 + lambda^C_T(G) + [G.Z, G.Z]_T)`
/// on at least 99% of the ensemble, for every graph in the library.
pub fn apriori_study(kappa: f64, n_paths: usize, seed_base: u64) -> Result<StudyReport> {
    let start = Instant::now();
    let (n, length, t_end, steps) = (32, 1.0, 1.0, 256);
    let mut report = StudyReport::new("apriori", steps, seed_base);
    let op = build_laplacian_1d(n, length)?;
    let grid = TimeGrid::uniform(t_end, steps)?;
    let spec = SemimartingaleSpec::new(1)?
        .with_wiener_var(1.0)?
        .with_jumps(1.0, MarkLaw::GaussianIso { mean: vec![0.0], sigma: 0.5 })?;
    let g = OperatorPath::constant(smooth_column(&op, length, 0.3, 1), grid.len());
    let x0 = &laplacian_eigenvector(n, length, 1) * 0.4
        + &laplacian_eigenvector(n, length, 2) * 0.3;

    for graph in graph_library() {
        let name = graph.spec_string();
        let outcomes: Vec<(f64, f64)> = (0..n_paths as u64)
            .into_par_iter()
            .map(|i| {
                let z = sample_path(&spec, &grid, path_seed(seed_base, i))?;
                let sol = solve_limit(&op, &graph, &g, &z, &x0)?;
                let tri = apriori_monitor(&sol);
                let c = control_process(&z);
                let w = stochastic_integral(&g, &z)?;
                let bracket = quadratic_variation(&w, op.h_weight());
                let rhs = op.h_norm_sq(x0.view())
                    + lambda_functional(&c, &g, op.h_weight(), steps)
                    + bracket[steps];
                Ok((tri.total(), rhs))
            })
            .collect::<Result<_>>()?;
        let violations =
            outcomes.iter().filter(|(lhs, rhs)| *lhs > kappa * rhs).count();
        let lhs_est = Estimate::from_samples(&outcomes.iter().map(|o| o.0).collect::<Vec<_>>());
        let rhs_est = Estimate::from_samples(&outcomes.iter().map(|o| o.1).collect::<Vec<_>>());
        let frac = violations as f64 / n_paths as f64;
        report.push(format!("{name}/lhs_mean"), lhs_est.mean, lhs_est.std_error, n_paths);
        report.push(format!("{name}/rhs_mean"), rhs_est.mean, rhs_est.std_error, n_paths);
        report.push(format!("{name}/violation_fraction"), frac, 0.0, n_paths);
        report.require(
            frac <= 0.01,
            format!("{name}: a priori bound with kappa = {kappa} on >= 99% of paths"),
        );
        report.require(
            lhs_est.mean <= kappa * rhs_est.mean,
            format!("{name}: expectation version of the a priori bound"),
        );
    }
    report.runtime_ms = start.elapsed().as_millis();
    Ok(report)
}

/// Configuration of the regularization-convergence study.
#[derive(Clone, Debug)]
pub struct LambdaStudyConfig {
    pub graph: ScalarGraph,
    pub dim: usize,
    pub length: f64,
    pub n_steps: usize,
    pub t_end: f64,
    pub lambdas: Vec<f64>,
    pub n_paths: usize,
    pub seed_base: u64,
    pub noise_amp: f64,
}

impl LambdaStudyConfig {
    pub fn acceptance(graph: ScalarGraph, seed_base: u64) -> Self {
        LambdaStudyConfig {
            graph,
            dim: 32,
            length: 1.0,
            n_steps: 1 << 10,
            t_end: 1.0,
            lambdas: vec![1e-1, 1e-2, 1e-3, 1e-4],
            n_paths: 20,
            seed_base,
            noise_amp: 0.3,
        }
    }
}

/// Regularization ladder: for each `lambda` in the ladder, the coupled
/// distance `e_lambda = mean sup_k |x^lambda_k - x^{lambda/2}_k|` and the
/// distance to the limit scheme, under same-seed coupling. Verifies that
/// both decrease strictly along the ladder (no rate is asserted).
pub fn lambda_study(cfg: &LambdaStudyConfig) -> Result<StudyReport> {
    let start = Instant::now();
    let mut report = StudyReport::new("lambda", cfg.n_steps, cfg.seed_base);
    let op = build_laplacian_1d(cfg.dim, cfg.length)?;
    let grid = TimeGrid::uniform(cfg.t_end, cfg.n_steps)?;
    let spec = SemimartingaleSpec::new(1)?.with_wiener_var(1.0)?;
    let g = OperatorPath::constant(smooth_column(&op, cfg.length, cfg.noise_amp, 1), grid.len());
    let x0 = &laplacian_eigenvector(cfg.dim, cfg.length, 1) * 0.5
        + &laplacian_eigenvector(cfg.dim, cfg.length, 2) * 0.4;
    let name = cfg.graph.spec_string();

    struct PathDistances {
        pair_sup: Vec<f64>,
        pair_l2: Vec<f64>,
        to_limit: Vec<f64>,
    }

    let per_path: Vec<PathDistances> = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let z = sample_path(&spec, &grid, path_seed(cfg.seed_base, i))?;
            let limit = solve_limit(&op, &cfg.graph, &g, &z, &x0)?;
            let mut pair_sup = Vec::new();
            let mut pair_l2 = Vec::new();
            let mut to_limit = Vec::new();
            for &lambda in &cfg.lambdas {
                let a = solve_regularized(&op, &cfg.graph, lambda, &g, &z, &x0)?;
                let b = solve_regularized(&op, &cfg.graph, lambda / 2.0, &g, &z, &x0)?;
                pair_sup.push(a.sup_distance(&b, cfg.n_steps));
                pair_l2.push(a.l2_distance(&b, cfg.n_steps));
                to_limit.push(a.sup_distance(&limit, cfg.n_steps));
            }
            Ok(PathDistances { pair_sup, pair_l2, to_limit })
        })
        .collect::<Result<_>>()?;

    let mut e_sup = Vec::new();
    for (li, lambda) in cfg.lambdas.iter().enumerate() {
        let sup = Estimate::from_samples(&per_path.iter().map(|p| p.pair_sup[li]).collect::<Vec<_>>());
        let l2 = Estimate::from_samples(&per_path.iter().map(|p| p.pair_l2[li]).collect::<Vec<_>>());
        let lim =
            Estimate::from_samples(&per_path.iter().map(|p| p.to_limit[li]).collect::<Vec<_>>());
        report.push(format!("{name}/e_sup/lambda={lambda}"), sup.mean, sup.std_error, cfg.n_paths);
        report.push(format!("{name}/e_l2/lambda={lambda}"), l2.mean, l2.std_error, cfg.n_paths);
        report.push(
            format!("{name}/dist_to_limit/lambda={lambda}"),
            lim.mean,
            lim.std_error,
            cfg.n_paths,
        );
        e_sup.push((sup.mean, lim.mean));
    }
    report.require(
        e_sup.windows(2).all(|w| w[1].0 < w[0].0),
        format!("{name}: e_lambda strictly decreasing along the ladder"),
    );
    // The two schemes differ by a lambda-independent O(dt) splitting term,
    // so the distance to the limit scheme saturates once lambda << dt; only
    // the overall decrease is asserted (no rate).
    report.require(
        e_sup.last().unwrap().1 < e_sup.first().unwrap().1,
        format!("{name}: distance to the limit scheme decreases across the ladder"),
    );

    // Coupled re-run at a fixed lambda is exactly reproducible.
    let z = sample_path(&spec, &grid, path_seed(cfg.seed_base, 0))?;
    let a = solve_regularized(&op, &cfg.graph, cfg.lambdas[0], &g, &z, &x0)?;
    let b = solve_regularized(&op, &cfg.graph, cfg.lambdas[0], &g, &z, &x0)?;
    report.require(a.sup_distance(&b, cfg.n_steps) == 0.0, "identical lambda twice: distance 0");

    report.runtime_ms = start.elapsed().as_millis();
    Ok(report)
}

/// Configuration of the continuous-dependence study.
#[derive(Clone, Debug)]
pub struct DependenceStudyConfig {
    pub graph: ScalarGraph,
    pub dim: usize,
    pub length: f64,
    pub n_steps: usize,
    pub t_end: f64,
    pub deltas: Vec<f64>,
    pub n_paths: usize,
    pub seed_base: u64,
    pub noise_amp: f64,
}

impl DependenceStudyConfig {
    pub fn acceptance(graph: ScalarGraph, seed_base: u64) -> Self {
        DependenceStudyConfig {
            graph,
            dim: 32,
            length: 1.0,
            n_steps: 512,
            t_end: 1.0,
            deltas: vec![1e-1, 1e-2, 1e-3],
            n_paths: 200,
            seed_base,
            noise_amp: 0.3,
        }
    }
}

/// Continuous dependence on the data under same-seed coupling: the ratio
/// `E sup |X - X_delta|^2 / |x0 - x0_delta|^2` is bounded uniformly across
/// the perturbation ladder (spread at most 4x), a same-data double run is
/// bitwise identical, and coefficient perturbations obey the
/// `lambda^C(G_1 - G_2)` bound.
pub fn dependence_study(cfg: &DependenceStudyConfig) -> Result<StudyReport> {
    let start = Instant::now();
    let mut report = StudyReport::new("dependence", cfg.n_steps, cfg.seed_base);
    let op = build_laplacian_1d(cfg.dim, cfg.length)?;
    let grid = TimeGrid::uniform(cfg.t_end, cfg.n_steps)?;
    let spec = SemimartingaleSpec::new(1)?.with_wiener_var(1.0)?;
    let g = OperatorPath::constant(smooth_column(&op, cfg.length, cfg.noise_amp, 1), grid.len());
    let x0 = &laplacian_eigenvector(cfg.dim, cfg.length, 1) * 0.5
        + &laplacian_eigenvector(cfg.dim, cfg.length, 2) * 0.4;
    let dir = laplacian_eigenvector(cfg.dim, cfg.length, 1);
    let name = cfg.graph.spec_string();

    // Same data, same seed: bitwise identical paths.
    {
        let z = sample_path(&spec, &grid, path_seed(cfg.seed_base, 0))?;
        let a = solve_limit(&op, &cfg.graph, &g, &z, &x0)?;
        let b = solve_limit(&op, &cfg.graph, &g, &z, &x0)?;
        report.require(a.states() == b.states(), "same-seed double run is bitwise identical");
        report.require(
            a.sup_distance(&b, cfg.n_steps) == 0.0,
            "zero perturbation gives exactly zero distance",
        );
    }

    let mut ratios = Vec::new();
    for &delta in &cfg.deltas {
        let sq_dists: Vec<f64> = (0..cfg.n_paths as u64)
            .into_par_iter()
            .map(|i| {
                let z = sample_path(&spec, &grid, path_seed(cfg.seed_base, i))?;
                let a = solve_limit(&op, &cfg.graph, &g, &z, &x0)?;
                let perturbed = &x0 + &(&dir * delta);
                let b = solve_limit(&op, &cfg.graph, &g, &z, &perturbed)?;
                let d = a.sup_distance(&b, cfg.n_steps);
                Ok(d * d)
            })
            .collect::<Result<_>>()?;
        let est = Estimate::from_samples(&sq_dists);
        let denom = delta * delta * op.h_norm_sq(dir.view());
        let ratio = est.mean / denom;
        report.push(format!("{name}/ratio/delta={delta}"), ratio, est.std_error / denom, cfg.n_paths);
        ratios.push(ratio);
    }
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(l, h), r| (l.min(*r), h.max(*r)));
    report.push(format!("{name}/ratio_spread"), hi / lo, 0.0, cfg.n_paths);
    report.require(
        hi / lo <= 4.0,
        format!("{name}: ratio spread {:.3} across the delta ladder within 4x", hi / lo),
    );
    report.require(
        hi <= 1.0 + 1e-9,
        format!("{name}: contraction keeps every ratio at most 1, got {hi:.3}"),
    );

    // Coefficient perturbation: E sup |X1 - X2|^2 <= kappa E lambda^C(G1 - G2).
    let kappa = 64.0;
    let delta_g = cfg.deltas[0];
    let g2 = OperatorPath::constant(
        smooth_column(&op, cfg.length, cfg.noise_amp + delta_g, 1),
        grid.len(),
    );
    let pairs: Vec<(f64, f64)> = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let z = sample_path(&spec, &grid, path_seed(cfg.seed_base, i))?;
            let a = solve_limit(&op, &cfg.graph, &g, &z, &x0)?;
            let b = solve_limit(&op, &cfg.graph, &g2, &z, &x0)?;
            let c = control_process(&z);
            let diff = g.difference(&g2)?;
            let lam = lambda_functional(&c, &diff, op.h_weight(), cfg.n_steps);
            let d = a.sup_distance(&b, cfg.n_steps);
            Ok((d * d, lam))
        })
        .collect::<Result<_>>()?;
    let num = Estimate::from_samples(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
    let den = Estimate::from_samples(&pairs.iter().map(|p| p.1).collect::<Vec<_>>());
    report.push(format!("{name}/coefficient_ratio"), num.mean / den.mean, 0.0, cfg.n_paths);
    report.require(
        num.mean <= kappa * den.mean,
        format!("{name}: coefficient perturbation bounded by kappa lambda^C"),
    );

    report.runtime_ms = start.elapsed().as_millis();
    Ok(report)
}

/// Fixed-point construction: Picard contraction on the budget interval and
/// the deterministic segment-count arithmetic of the extension.
pub fn fixed_point_study(seed_base: u64) -> Result<StudyReport> {
    let start = Instant::now();
    let mut report = StudyReport::new("fixed-point", 512, seed_base);

    // Contraction cell: diagonal-sine coefficient against Wiener noise.
    {
        let n = 8;
        let op = build_laplacian_1d(n, 1.0)?;
        let grid = TimeGrid::uniform(1.0, 512)?;
        let spec = SemimartingaleSpec::new(n)?.with_wiener_var(1.0)?;
        let z = sample_path(&spec, &grid, path_seed(seed_base, 1))?;
        let coeff = MultiplicativeCoefficient::diag_sin(0.1, n, op.h_weight());
        let x0 = Array1::from_elem(n, 1.0);
        let (_, tau, stats) = solve_multiplicative(
            &op,
            &ScalarGraph::exponential(),
            &coeff,
            &z,
            &x0,
            0.25,
            25,
            1e-10,
        )?;
        let worst = stats.ratios.iter().copied().fold(0.0f64, f64::max);
        report.push("picard/iterations", stats.iterations as f64, 0.0, 1);
        report.push("picard/final_distance", stats.final_distance, 0.0, 1);
        report.push("picard/worst_ratio", worst, 0.0, 1);
        report.push("picard/stop_index", tau as f64, 0.0, 1);
        report.require(stats.iterations <= 25, "Picard converges within 25 iterations");
        report.require(stats.final_distance < 1e-10, "Picard reaches tolerance 1e-10");
        report.require(worst < 1.0, format!("contraction throughout (worst ratio {worst:.3})"));
    }

    // Budget cell: Z = 0 gives C = 4; L(t) = t and alpha = 0.25 predict
    // C T / alpha = 16 segments.
    {
        let n = 4;
        let op = build_laplacian_1d(n, 1.0)?;
        let grid = TimeGrid::uniform(1.0, 1024)?;
        let z = sample_path(&SemimartingaleSpec::new(n)?, &grid, 0)?;
        let coeff = MultiplicativeCoefficient {
            rule: std::sync::Arc::new(crate::integrator::DiagSinCoefficient { amp: 0.1, dim: n }),
            lipschitz: LipschitzSpec::Linear { l0: 0.0, rate: 1.0 },
        };
        let x0 = Array1::from_elem(n, 0.5);
        let (_, bounds) =
            extend_solution(&op, &ScalarGraph::exponential(), &coeff, &z, &x0, 0.25, 25, 1e-10)?;
        let segments = bounds.len() - 1;
        let predicted = (4.0 * 1.0 / 0.25_f64).ceil() as usize;
        report.push("extension/segments", segments as f64, 0.0, 1);
        report.push("extension/predicted", predicted as f64, 0.0, 1);
        report.require(
            segments <= 2 * predicted && 2 * segments >= predicted,
            format!("segment count {segments} within 2x of the budget prediction {predicted}"),
        );
        report.require(*bounds.last().unwrap() == 1024, "extension reaches the horizon");
    }

    report.runtime_ms = start.elapsed().as_millis();
    Ok(report)
}

/// Synthetic stochastic-Gronwall audit over `n_pairs` generated cases.
pub fn gronwall_study(n_pairs: usize, seed_base: u64) -> StudyReport {
    let start = Instant::now();
    let mut report = StudyReport::new("gronwall", n_pairs, seed_base);
    let audit = crate::noise::gronwall_audit(n_pairs, 64, seed_base);
    report.push("violations", audit.violations as f64, 0.0, n_pairs);
    report.push("worst_margin", audit.worst_margin, 0.0, n_pairs);
    report.require(audit.pass(), format!("no bound violations across {n_pairs} synthetic pairs"));
    report.runtime_ms = start.elapsed().as_millis();
    report
}
