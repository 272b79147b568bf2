//! Acceptance suite: every verification criterion at its stated tolerance,
//! one pass/fail line per criterion. Criteria run sequentially inside one
//! test so the stated runtime budgets are measured without co-scheduling.

mod support;

use std::time::Instant;

use semiprox::analysis::studies::{
    apriori_study, dependence_study, energy_refinement_study, fixed_point_study, graph_library,
    gronwall_study, heat_oracle_study, lambda_study, monotone_suite, mp_audit_matrix,
    DependenceStudyConfig, LambdaStudyConfig,
};
use semiprox::monotone::ConvexPotential;
use semiprox::report::StudyReport;
use semiprox::ScalarGraph;

const SEED: u64 = 20_240_811;

struct Outcome {
    index: usize,
    name: &'static str,
    passed: bool,
    runtime_ms: u128,
    budget_ms: Option<u128>,
    detail: String,
}

impl Outcome {
    fn from_report(index: usize, name: &'static str, budget_ms: Option<u128>, r: &StudyReport) -> Self {
        let detail = r
            .details
            .iter()
            .filter(|d| d.starts_with("FAIL"))
            .cloned()
            .collect::<Vec<_>>()
            .join("; ");
        Outcome { index, name, passed: r.passed, runtime_ms: r.runtime_ms, budget_ms, detail }
    }

    fn print(&self) -> bool {
        let mut ok = self.passed;
        let mut extra = self.detail.clone();
        if let Some(budget) = self.budget_ms {
            if self.runtime_ms > budget {
                ok = false;
                extra.push_str(&format!(" [runtime {} ms over budget {} ms]", self.runtime_ms, budget));
            }
        }
        println!(
            "ACCEPTANCE {} ({}): {} [{} ms]{}",
            self.index,
            self.name,
            if ok { "PASS" } else { "FAIL" },
            self.runtime_ms,
            if extra.is_empty() { String::new() } else { format!(" {extra}") }
        );
        ok
    }
}

#[test]
fn acceptance() {
    let mut outcomes = Vec::new();

    // 1. Monotone-calculus suite over the 5-graph library, 1e4 samples.
    let r = monotone_suite(10_000, SEED);
    outcomes.push(Outcome::from_report(1, "monotone-calculus", Some(10_000), &r));

    // 2. Heat-equation oracle: n = 64, N = 2^10, T = 1.
    let r = heat_oracle_study(64, 1.0, 1 << 10, 1.0).expect("heat study runs");
    outcomes.push(Outcome::from_report(2, "heat-oracle", Some(5_000), &r));

    // 3. Maximal-inequality audit, 12 cells x 1e4 paths.
    let r = mp_audit_matrix(10_000, 256, SEED).expect("audit runs");
    outcomes.push(Outcome::from_report(3, "mp-audit", Some(300_000), &r));

    // 4. Energy-identity residual under coupled dyadic refinement.
    let r = energy_refinement_study(&[256, 512, 1024], 50, SEED).expect("refinement runs");
    outcomes.push(Outcome::from_report(4, "energy-residual", None, &r));

    // 5. A priori estimate with kappa = 64 on >= 99% of 1e3 paths per graph.
    let r = apriori_study(64.0, 1000, SEED).expect("apriori runs");
    outcomes.push(Outcome::from_report(5, "apriori-estimate", None, &r));

    // 6. Regularization convergence for the exponential and Heaviside
    //    graphs: n = 32, N = 2^10, 20 coupled paths.
    let start = Instant::now();
    let re = lambda_study(&LambdaStudyConfig::acceptance(ScalarGraph::exponential(), SEED))
        .expect("lambda study runs");
    let rh = lambda_study(&LambdaStudyConfig::acceptance(ScalarGraph::heaviside(), SEED))
        .expect("lambda study runs");
    let mut merged = StudyReport::new("lambda", 1 << 10, SEED);
    merged.passed = re.passed && rh.passed;
    merged.details = re.details.iter().chain(rh.details.iter()).cloned().collect();
    merged.runtime_ms = start.elapsed().as_millis();
    outcomes.push(Outcome::from_report(6, "lambda-convergence", Some(120_000), &merged));

    // 7. Fixed-point construction: contraction and segment arithmetic.
    let r = fixed_point_study(SEED).expect("fixed-point study runs");
    outcomes.push(Outcome::from_report(7, "fixed-point", None, &r));

    // 8. Uniqueness and continuous dependence, 200 coupled paths.
    let r = dependence_study(&DependenceStudyConfig::acceptance(ScalarGraph::exponential(), SEED))
        .expect("dependence study runs");
    outcomes.push(Outcome::from_report(8, "continuous-dependence", None, &r));

    // 9. Stochastic Gronwall bound on 1e3 synthetic pairs.
    let r = gronwall_study(1000, SEED);
    outcomes.push(Outcome::from_report(9, "stochastic-gronwall", None, &r));

    let mut all_ok = true;
    for o in &outcomes {
        all_ok &= o.print();
    }
    assert!(all_ok, "acceptance criteria failed; see the lines above");
}

/// Oracle cross-checks backing criterion 1: the Moreau envelope agrees with
/// a direct minimization of its defining infimum, and spot conjugates agree
/// with a direct maximization.
#[test]
fn moreau_and_conjugate_against_bruteforce_oracles() {
    for graph in graph_library() {
        let p = ConvexPotential::new(graph.clone());
        for &lambda in &[1.0, 0.1, 0.01] {
            for i in 0..11 {
                let x = -10.0 + 2.0 * i as f64;
                let (_, oracle) = support::golden_min(
                    |s| (x - s) * (x - s) / (2.0 * lambda) + p.value(s),
                    -12.0,
                    12.0,
                );
                let got = p.moreau(lambda, x);
                assert!(
                    (got - oracle).abs() <= 1e-8 * (1.0 + oracle.abs()),
                    "{graph:?}: moreau({lambda}, {x}) = {got}, oracle {oracle}"
                );
            }
        }
    }
    // Spot conjugate values for the smooth kinds.
    let exp = ConvexPotential::new(ScalarGraph::exponential());
    let (_, oracle) = support::golden_max(|x| x - (x.exp() - x - 1.0), -6.0, 6.0);
    assert!((exp.conjugate(1.0) - oracle).abs() <= 1e-9);
    let idp = ConvexPotential::new(ScalarGraph::identity());
    let (_, oracle) = support::golden_max(|x| 3.0 * x - 0.5 * x * x, -12.0, 12.0);
    assert!((idp.conjugate(3.0) - oracle).abs() <= 1e-9);
}

/// Oracle cross-check backing criterion 2: closed-form Dirichlet eigenvalues
/// agree with a dense Jacobi eigensolver.
#[test]
fn laplacian_spectrum_against_jacobi_oracle() {
    use semiprox::operator::{build_laplacian_1d, laplacian_eigenvalue};
    for n in [3usize, 8, 16] {
        let op = build_laplacian_1d(n, 1.0).unwrap();
        let mut dense = vec![vec![0.0; n]; n];
        for j in 0..n {
            let mut e = ndarray::Array1::<f64>::zeros(n);
            e[j] = 1.0;
            let col = op.apply(e.view());
            for i in 0..n {
                dense[i][j] = col[i];
            }
        }
        let eig = support::jacobi_eigenvalues(&dense);
        let mut closed: Vec<f64> = (1..=n).map(|k| laplacian_eigenvalue(n, 1.0, k)).collect();
        closed.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in eig.iter().zip(&closed) {
            assert!((a - b).abs() <= 1e-8 * (1.0 + b.abs()), "n = {n}: {a} vs {b}");
        }
    }
}
