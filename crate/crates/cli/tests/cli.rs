//! End-to-end tests of the runner: config validation, artifact layout,
//! reproducibility, and the binary surface.

use std::path::Path;
use std::process::Command;

use semiprox_cli::{config::ExperimentConfig, list_builtins, runner};

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn validation_errors_carry_exit_code_two() {
    let err = ExperimentConfig::parse("[graph]\nname = \"parabola\"\n").unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("graph block: unknown name"));
    let err = ExperimentConfig::parse("nonsense = = =").unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn numerical_aborts_carry_exit_code_three() {
    let err = semiprox_cli::CliError::Numeric(semiprox::Error::SegmentLimit(7));
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn solve_run_writes_the_artifact_tree() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::parse(
        r#"
[operator]
n = 8

[graph]
name = "exponential"

[scheme]
kind = "limit"
n_steps = 64

[study]
kind = "solve"
seed_base = 7

[output]
directory = "run1"
verbosity = 2
"#,
    )
    .unwrap();
    let summary = runner::run(&cfg, Some(tmp.path())).unwrap();
    assert!(summary.passed);
    let out = tmp.path().join("run1");
    for file in ["manifest.json", "summary.json", "resolved.toml", "solution.csv", "run.json"] {
        assert!(out.join(file).exists(), "missing artifact {file}");
    }
    let csv = std::fs::read_to_string(out.join("solve_n8_s7.csv")).unwrap();
    assert!(csv.starts_with("quantity,estimate,std_error,n_paths,seed_base\n"));
    let sol = std::fs::read_to_string(out.join("solution.csv")).unwrap();
    assert!(sol.starts_with("t,x_norm,xi_norm,v_integral,duality_integral,x_0"));
    let manifest = std::fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("content_hash"));
}

#[test]
fn reruns_are_byte_identical_outside_the_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let body = r#"
[operator]
n = 8

[scheme]
n_steps = 32
t_end = 0.5

[study]
kind = "gronwall"
n_pairs = 50
seed_base = 11

[output]
directory = "run"
"#;
    let cfg = ExperimentConfig::parse(body).unwrap();
    runner::run(&cfg, Some(&tmp.path().join("a"))).unwrap();
    runner::run(&cfg, Some(&tmp.path().join("b"))).unwrap();
    for file in ["gronwall_n50_s11.csv", "gronwall_n50_s11.json", "summary.json", "resolved.toml"] {
        let a = std::fs::read(tmp.path().join("a/run").join(file)).unwrap();
        let b = std::fs::read(tmp.path().join("b/run").join(file)).unwrap();
        assert_eq!(a, b, "artifact {file} differs across identical runs");
    }
}

#[test]
fn multiplicative_solve_records_segments() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::parse(
        r#"
[operator]
n = 4

[graph]
name = "identity"

[scheme]
kind = "multiplicative"
n_steps = 128
coeff = "diag-sin"
coeff_amp = 0.1

[study]
kind = "solve"
seed_base = 3

[output]
directory = "mult"
"#,
    )
    .unwrap();
    let summary = runner::run(&cfg, Some(tmp.path())).unwrap();
    assert!(summary.passed);
    let run: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("mult/run.json")).unwrap())
            .unwrap();
    let bounds = run["segment_boundaries"].as_array().unwrap();
    assert_eq!(bounds.first().unwrap().as_u64(), Some(0));
    assert_eq!(bounds.last().unwrap().as_u64(), Some(128));
    assert_eq!(run["scheme"], "multiplicative");
}

#[test]
fn small_study_kinds_pass_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    for (kind, extra) in [
        ("monotone-suite", "samples = 300\n"),
        ("heat-oracle", ""),
        ("fixed-point", ""),
    ] {
        let body = format!(
            "[operator]\nn = 16\n\n[scheme]\nn_steps = 256\n\n[study]\nkind = \"{kind}\"\n{extra}seed_base = 5\n\n[output]\ndirectory = \"{kind}\"\n"
        );
        let cfg = ExperimentConfig::parse(&body).unwrap();
        let summary = runner::run(&cfg, Some(tmp.path())).unwrap();
        assert!(summary.passed, "study {kind} failed: {:?}", summary.checks);
    }
}

#[test]
fn csv_headers_match_the_documented_schemas() {
    // Golden test: the headers produced by a run must appear verbatim in
    // docs/file_formats.md.
    let docs_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/file_formats.md");
    let docs = std::fs::read_to_string(docs_path).unwrap();

    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::parse(
        "[operator]\nn = 8\n\n[scheme]\nn_steps = 32\n\n[study]\nkind = \"solve\"\nseed_base = 1\n\n[output]\ndirectory = \"g\"\n",
    )
    .unwrap();
    runner::run(&cfg, Some(tmp.path())).unwrap();

    let report = std::fs::read_to_string(tmp.path().join("g/solve_n8_s1.csv")).unwrap();
    let report_header = report.lines().next().unwrap();
    assert!(docs.contains(report_header), "undocumented report header: {report_header}");

    let sol = std::fs::read_to_string(tmp.path().join("g/solution.csv")).unwrap();
    let sol_header = sol.lines().next().unwrap();
    assert!(
        docs.contains("t,x_norm,xi_norm,v_integral,duality_integral"),
        "undocumented trajectory header"
    );
    assert!(sol_header.starts_with("t,x_norm,xi_norm,v_integral,duality_integral"));
}

#[test]
fn listing_is_stable_and_contains_the_library() {
    let listing = list_builtins();
    assert!(listing.contains("exponential"));
    assert!(listing.contains("heaviside-filled"));
    assert_eq!(listing, list_builtins());
    // Sections sorted within themselves.
    let graphs: Vec<&str> = listing
        .lines()
        .skip_while(|l| *l != "graphs:")
        .skip(1)
        .take_while(|l| l.starts_with("  "))
        .collect();
    let mut sorted = graphs.clone();
    sorted.sort();
    assert_eq!(graphs, sorted);
}

#[test]
fn binary_surface_smoke() {
    let bin = env!("CARGO_BIN_EXE_semiprox");
    let out = Command::new(bin).arg("list-builtins").output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("exponential"));

    let tmp = tempfile::tempdir().unwrap();
    let bad = write_config(tmp.path(), "bad.toml", "[graph]\nname = \"parabola\"\n");
    let out = Command::new(bin).arg("validate").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("graph block: unknown name"));

    let good = write_config(
        tmp.path(),
        "good.toml",
        "[operator]\nn = 8\n\n[scheme]\nn_steps = 32\n\n[study]\nkind = \"solve\"\n\n[output]\ndirectory = \"out\"\n",
    );
    let out = Command::new(bin).arg("validate").arg(&good).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("[operator]"));

    let out = Command::new(bin)
        .arg("run")
        .arg(&good)
        .arg("--out-root")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(tmp.path().join("out/summary.json").exists());

    // The environment variable provides the output root when no flag is set.
    let env_root = tmp.path().join("via-env");
    let out = Command::new(bin)
        .arg("run")
        .arg(&good)
        .env("SEMIPROX_OUTPUT_ROOT", &env_root)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(env_root.join("out/summary.json").exists());
}
