//! Study dispatch and artifact writing.
//!
//! A run produces a deterministic artifact tree under the output directory:
//! `manifest.json` (resolved config plus content hash), one CSV and one JSON
//! per study, and `summary.json` with a pass/fail entry per check. Artifacts
//! are byte-identical across re-runs with the same seed base; wall-clock
//! data lives only in `manifest.json`, which is excluded from the hash.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use ndarray::Array1;
use serde::Serialize;
use sha2::{Digest, Sha256};

use semiprox::analysis::studies::{
    apriori_study, dependence_study, energy_refinement_study, fixed_point_study, gronwall_study,
    heat_oracle_study, lambda_study, monotone_suite, mp_audit_matrix, DependenceStudyConfig,
    LambdaStudyConfig,
};
use semiprox::report::StudyReport;
use semiprox::{
    build_laplacian_1d, extend_solution, sample_path, solve_limit, solve_regularized,
    ConvexPotential, MultiplicativeCoefficient, NoiseCoefficient, OperatorPath, ScalarGraph,
    SemimartingaleSpec, SolutionPath, TimeGrid,
};

use crate::config::ExperimentConfig;
use crate::CliError;

/// One pass/fail entry of `summary.json`.
#[derive(Clone, Debug, Serialize)]
pub struct CheckEntry {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Run summary, also serialized as `summary.json`.
#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub passed: bool,
    pub checks: Vec<CheckEntry>,
    pub diagnostics: Vec<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    created_unix: u64,
    content_hash: String,
    runtimes_ms: Vec<(String, u128)>,
    resolved: &'a ExperimentConfig,
}

/// Executes the configured study inside a worker pool of the configured
/// size and writes the artifact tree. Numerical aborts still produce a
/// `summary.json` with the diagnostic embedded before the error is returned.
pub fn run(config: &ExperimentConfig, out_root: Option<&Path>) -> Result<Summary, CliError> {
    let out_dir = resolve_out_dir(config, out_root);
    fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", out_dir.display())))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| CliError::Io(format!("worker pool: {e}")))?;

    let outcome = pool.install(|| execute_studies(config, &out_dir));
    let (reports, summary) = match outcome {
        Ok(pair) => pair,
        Err(err) => {
            // Embed the diagnostic and persist the failure before bailing.
            let summary = Summary {
                passed: false,
                checks: Vec::new(),
                diagnostics: vec![err.to_string()],
            };
            write_json(&out_dir.join("summary.json"), &summary)?;
            return Err(err);
        }
    };

    let mut runtimes = Vec::new();
    for mut report in reports {
        runtimes.push((report.kind.clone(), report.runtime_ms));
        // Wall-clock data is manifest-only so artifacts stay reproducible.
        report.runtime_ms = 0;
        let stem = report.file_stem();
        write_text(&out_dir.join(format!("{stem}.csv")), &report.to_csv())?;
        write_text(&out_dir.join(format!("{stem}.json")), &report.to_json())?;
    }

    let resolved = config.resolved_toml();
    let manifest = Manifest {
        schema_version: 1,
        created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        content_hash: Sha256::digest(resolved.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect::<String>(),
        runtimes_ms: runtimes,
        resolved: config,
    };
    write_json(&out_dir.join("manifest.json"), &manifest)?;
    write_text(&out_dir.join("resolved.toml"), &resolved)?;
    write_json(&out_dir.join("summary.json"), &summary)?;
    Ok(summary)
}

fn resolve_out_dir(config: &ExperimentConfig, out_root: Option<&Path>) -> PathBuf {
    let configured = PathBuf::from(&config.output.directory);
    match out_root {
        Some(root) => root.join(configured),
        None => match std::env::var_os("SEMIPROX_OUTPUT_ROOT") {
            Some(root) => PathBuf::from(root).join(configured),
            None => configured,
        },
    }
}

fn execute_studies(
    config: &ExperimentConfig,
    out_dir: &Path,
) -> Result<(Vec<StudyReport>, Summary), CliError> {
    let mut reports = Vec::new();
    match config.study.kind.as_str() {
        "acceptance" => {
            reports.push(monotone_suite(config.study.samples, config.study.seed_base));
            reports.push(heat_oracle_study(64, 1.0, 1 << 10, 1.0)?);
            reports.push(mp_audit_matrix(config.study.n_paths.max(1000), 256, config.study.seed_base)?);
            reports.push(energy_refinement_study(&config.study.levels, 50, config.study.seed_base)?);
            reports.push(apriori_study(config.study.kappa, 1000, config.study.seed_base)?);
            reports.push(lambda_study(&LambdaStudyConfig::acceptance(
                ScalarGraph::exponential(),
                config.study.seed_base,
            ))?);
            let mut heaviside = lambda_study(&LambdaStudyConfig::acceptance(
                ScalarGraph::heaviside(),
                config.study.seed_base,
            ))?;
            heaviside.kind = "lambda-heaviside".into();
            reports.push(heaviside);
            reports.push(fixed_point_study(config.study.seed_base)?);
            reports.push(dependence_study(&DependenceStudyConfig::acceptance(
                ScalarGraph::exponential(),
                config.study.seed_base,
            ))?);
            reports.push(gronwall_study(config.study.n_pairs, config.study.seed_base));
        }
        "monotone-suite" => {
            reports.push(monotone_suite(config.study.samples, config.study.seed_base))
        }
        "heat-oracle" => reports.push(heat_oracle_study(
            config.operator.n,
            config.operator.length,
            config.scheme.n_steps,
            config.scheme.t_end,
        )?),
        "mp-audit" => reports.push(mp_audit_matrix(
            config.study.n_paths,
            config.scheme.n_steps,
            config.study.seed_base,
        )?),
        "energy-refinement" => reports.push(energy_refinement_study(
            &config.study.levels,
            config.study.n_paths,
            config.study.seed_base,
        )?),
        "apriori" => reports.push(apriori_study(
            config.study.kappa,
            config.study.n_paths,
            config.study.seed_base,
        )?),
        "lambda" => {
            let cfg = LambdaStudyConfig {
                graph: config.build_graph()?,
                dim: config.operator.n,
                length: config.operator.length,
                n_steps: config.scheme.n_steps,
                t_end: config.scheme.t_end,
                lambdas: config.study.lambdas.clone(),
                n_paths: config.study.n_paths,
                seed_base: config.study.seed_base,
                noise_amp: config.scheme.noise_amp,
            };
            reports.push(lambda_study(&cfg)?);
        }
        "dependence" => {
            let cfg = DependenceStudyConfig {
                graph: config.build_graph()?,
                dim: config.operator.n,
                length: config.operator.length,
                n_steps: config.scheme.n_steps,
                t_end: config.scheme.t_end,
                deltas: config.study.deltas.clone(),
                n_paths: config.study.n_paths,
                seed_base: config.study.seed_base,
                noise_amp: config.scheme.noise_amp,
            };
            reports.push(dependence_study(&cfg)?);
        }
        "fixed-point" => reports.push(fixed_point_study(config.study.seed_base)?),
        "gronwall" => {
            reports.push(gronwall_study(config.study.n_pairs, config.study.seed_base))
        }
        "solve" => reports.push(run_solve(config, out_dir)?),
        other => return Err(CliError::Config(format!("study block: unknown kind {other:?}"))),
    }

    let checks: Vec<CheckEntry> = reports
        .iter()
        .flat_map(|r| {
            r.details.iter().map(move |d| CheckEntry {
                name: r.kind.clone(),
                passed: !d.starts_with("FAIL"),
                detail: d.clone(),
            })
        })
        .collect();
    let passed = reports.iter().all(|r| r.passed);
    Ok((reports, Summary { passed, checks, diagnostics: Vec::new() }))
}

#[derive(Serialize)]
struct RunManifest {
    scheme: String,
    lambda: Option<f64>,
    dt: f64,
    seed: u64,
    alpha: f64,
    segment_boundaries: Vec<usize>,
}

/// Runs the configured scheme on a single path and dumps the trajectory.
fn run_solve(config: &ExperimentConfig, out_dir: &Path) -> Result<StudyReport, CliError> {
    let start = std::time::Instant::now();
    let op = build_laplacian_1d(config.operator.n, config.operator.length)?;
    let graph = config.build_graph()?;
    let grid = TimeGrid::uniform(config.scheme.t_end, config.scheme.n_steps)?;
    let needs_square_noise = config.scheme.kind == "multiplicative";
    let k_dim = if needs_square_noise { config.operator.n } else { config.noise.k_dim };

    let mut spec = SemimartingaleSpec::new(k_dim)?;
    if config.noise.wiener_var > 0.0 {
        spec = spec.with_wiener_var(config.noise.wiener_var)?;
    }
    if config.noise.jump_rate > 0.0 && !needs_square_noise {
        spec = spec.with_jumps(config.noise.jump_rate, config.build_mark_law())?;
    }
    if !config.noise.drift.is_empty() && !needs_square_noise {
        spec = spec.with_drift(Array1::from(config.noise.drift.clone()))?;
    }
    let z = sample_path(&spec, &grid, config.study.seed_base)?;

    // Smooth initial state.
    let x0 = semiprox::operator::laplacian_eigenvector(config.operator.n, config.operator.length, 1);

    // Resolve the configured noise coefficient into the domain union.
    let coefficient: NoiseCoefficient = if needs_square_noise {
        NoiseCoefficient::Multiplicative(match config.scheme.coeff.as_str() {
            "constant" => MultiplicativeCoefficient::constant(
                ndarray::Array2::eye(config.operator.n) * config.scheme.coeff_amp,
                op.h_weight(),
            ),
            _ => MultiplicativeCoefficient::diag_sin(
                config.scheme.coeff_amp,
                config.operator.n,
                op.h_weight(),
            ),
        })
    } else {
        NoiseCoefficient::Additive(additive_coefficient(config, &op, grid.len()))
    };

    let mut boundaries = vec![0, config.scheme.n_steps];
    let sol: SolutionPath = match (&coefficient, config.scheme.kind.as_str()) {
        (NoiseCoefficient::Additive(g), "regularized") => {
            solve_regularized(&op, &graph, config.scheme.lambda, g, &z, &x0)?
        }
        (NoiseCoefficient::Additive(g), _) => solve_limit(&op, &graph, g, &z, &x0)?,
        (NoiseCoefficient::Multiplicative(coeff), _) => {
            let (sol, bounds) = extend_solution(
                &op,
                &graph,
                coeff,
                &z,
                &x0,
                config.scheme.alpha,
                config.scheme.max_picard,
                config.scheme.picard_tol,
            )?;
            boundaries = bounds;
            sol
        }
    };

    if config.output.verbosity >= 1 {
        write_text(&out_dir.join("solution.csv"), &solution_csv(&sol, config.output.verbosity))?;
        let rm = RunManifest {
            scheme: config.scheme.kind.clone(),
            lambda: sol.lambda(),
            dt: config.scheme.t_end / config.scheme.n_steps as f64,
            seed: config.study.seed_base,
            alpha: config.scheme.alpha,
            segment_boundaries: boundaries,
        };
        write_json(&out_dir.join("run.json"), &rm)?;
    }

    let mut report = StudyReport::new("solve", config.operator.n, config.study.seed_base);
    let tri = semiprox::analysis::apriori_monitor(&sol);
    report.push("sup_norm_sq", tri.sup_norm_sq, 0.0, 1);
    report.push("v_integral", tri.v_integral, 0.0, 1);
    report.push("duality_integral", tri.duality_integral, 0.0, 1);
    report.require(tri.duality_integral >= -1e-12, "duality integral is nonnegative");
    report.require(
        sol.states().iter().all(|v| v.is_finite()),
        "trajectory stays finite over the horizon",
    );

    // Growth-comparability diagnostic of the potential over the configured
    // window; a stored constant exists only for symmetric kinds.
    let potential = ConvexPotential::new(graph.clone());
    let ratio =
        potential.symmetry_ratio(config.potential.x_big, config.potential.x_max, 200);
    report.push("symmetry_ratio_window", ratio, 0.0, 1);
    if let Some(bound) = potential.symmetry_bound() {
        report.require(
            ratio <= bound,
            format!("windowed growth ratio {ratio:.3} within the stored constant {bound:.3}"),
        );
    } else {
        report.note(format!(
            "ok: potential has one-sided growth; windowed ratio {ratio:.3e} is diagnostic only"
        ));
    }

    report.runtime_ms = start.elapsed().as_millis();
    Ok(report)
}

fn additive_coefficient(
    config: &ExperimentConfig,
    op: &semiprox::GridOperator,
    n_points: usize,
) -> OperatorPath {
    let w = semiprox::operator::laplacian_eigenvector(op.dim(), config.operator.length, 1);
    let mut g = ndarray::Array2::zeros((op.dim(), config.noise.k_dim));
    for i in 0..op.dim() {
        g[[i, 0]] = config.scheme.noise_amp * w[i];
    }
    OperatorPath::constant(g, n_points)
}

/// Trajectory CSV: time, norms, ledger columns; per-node values at
/// verbosity 2 and above.
fn solution_csv(sol: &SolutionPath, verbosity: u32) -> String {
    let n = sol.grid().n_steps();
    let mut out = String::from("t,x_norm,xi_norm,v_integral,duality_integral");
    if verbosity >= 2 {
        for i in 0..sol.dim() {
            out.push_str(&format!(",x_{i}"));
        }
    }
    out.push('\n');
    for j in 0..=n {
        let xr = sol.state(j);
        let xir = sol.selection(j);
        let xn = (sol.h_weight() * xr.dot(&xr)).sqrt();
        let xin = (sol.h_weight() * xir.dot(&xir)).sqrt();
        out.push_str(&format!(
            "{},{},{},{},{}",
            sol.grid().t(j),
            xn,
            xin,
            sol.v_integral()[j],
            sol.duality_integral()[j]
        ));
        if verbosity >= 2 {
            for i in 0..sol.dim() {
                out.push_str(&format!(",{}", xr[i]));
            }
        }
        out.push('\n');
    }
    out
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Io(format!("serialization: {e}")))?;
    write_text(path, &text)
}

/// Stable, sorted listing of the built-in graphs, mark laws, coefficient
/// rules, schemes, and study kinds.
pub fn list_builtins() -> String {
    let mut out = String::new();
    out.push_str("graphs:\n");
    for name in ScalarGraph::builtin_names() {
        out.push_str(&format!("  {name}\n"));
    }
    out.push_str("mark laws:\n");
    for name in crate::config::MARK_LAWS {
        out.push_str(&format!("  {name}\n"));
    }
    out.push_str("coefficients:\n");
    for name in crate::config::COEFF_RULES {
        out.push_str(&format!("  {name}\n"));
    }
    out.push_str("schemes:\n");
    for name in crate::config::SCHEME_KINDS {
        out.push_str(&format!("  {name}\n"));
    }
    out.push_str("studies:\n");
    for name in crate::config::STUDY_KINDS {
        out.push_str(&format!("  {name}\n"));
    }
    out
}
