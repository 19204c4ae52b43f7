//! End-to-end tests of the `nsdm` binary: exit codes and output files.

use std::fs;
use std::path::Path;
use std::process::Command;

use nsdm::cli::trace_csv::read_trace;
use serde_json::Value;

fn nsdm(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_nsdm"))
        .args(args)
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn run_l2_quadratic_takes_one_step() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "l2.json",
        r#"{"problem": {"id": "l2_quadratic", "dim": 10, "seed": 7}, "solver": "nsdm",
            "output": {"trace": "out/trace.csv", "plot": "out/plot.svg"}}"#,
    );
    fs::create_dir(dir.path().join("out")).unwrap();
    let (code, _, err) = nsdm(&["run", &cfg]);
    assert_eq!(code, 0, "{err}");
    let records = read_trace(fs::File::open(dir.path().join("out/trace.csv")).unwrap()).unwrap();
    assert_eq!(records.len(), 2);
    assert_eq!(records[0].x.as_ref().unwrap().dim(), 10);
    let summary = json(&dir.path().join("l2.summary.json"));
    assert_eq!(summary["schema_version"], 1);
    assert_eq!(summary["termination"], "terminated_tolerance");
    assert_eq!(summary["iterations"], 1);
    assert!(fs::read_to_string(dir.path().join("out/plot.svg"))
        .unwrap()
        .starts_with("<svg"));
}

#[test]
fn run_trace_matches_library_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "q.json",
        r#"{"problem": {"id": "corpus", "name": "quadratic_diag_1_4"}}"#,
    );
    assert_eq!(nsdm(&["run", &cfg]).0, 0);
    let from_file = read_trace(fs::File::open(dir.path().join("q.trace.csv")).unwrap()).unwrap();
    let spec = nsdm::ProblemRequest::Corpus {
        name: "quadratic_diag_1_4".into(),
    }
    .build(None)
    .unwrap()
    .remove(0);
    let trace = nsdm::run_nsdm(&spec.oracle, &spec.x0, &nsdm::SolverConfig::default()).unwrap();
    assert_eq!(from_file, trace.records);
}

#[test]
fn rosenbrock_budget_exhausted() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "r.json",
        r#"{"problem": {"id": "rosenbrock"}, "solver_config": {"max_iters": 10}}"#,
    );
    assert_eq!(nsdm(&["run", &cfg]).0, 2);
    // the flag overrides the config value
    let cfg = write(
        dir.path(),
        "r2.json",
        r#"{"problem": {"id": "rosenbrock"}}"#,
    );
    assert_eq!(nsdm(&["run", &cfg, "--max-iters", "10"]).0, 2);
    let summary = json(&dir.path().join("r2.summary.json"));
    assert_eq!(summary["termination"], "max_iterations");
    assert_eq!(summary["solver_config"]["max_iters"], 10);
}

#[test]
fn tolerance_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "q.json",
        r#"{"problem": {"id": "corpus", "name": "quadratic_diag_1_4"}}"#,
    );
    assert_eq!(nsdm(&["run", &cfg, "--tol", "1e-3"]).0, 0);
    let loose = json(&dir.path().join("q.summary.json"));
    assert_eq!(nsdm(&["run", &cfg]).0, 0);
    let tight = json(&dir.path().join("q.summary.json"));
    assert!(loose["iterations"].as_u64() < tight["iterations"].as_u64());
}

#[test]
fn malformed_configs_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    for (name, body) in [
        ("syntax.json", "{not json"),
        (
            "unknown.json",
            r#"{"problem": {"id": "rosenbrock"}, "extra": true}"#,
        ),
        ("none.json", r#"{}"#),
        (
            "sdm.json",
            r#"{"problem": {"id": "corpus", "name": "max_affine_abs"}, "solver": "sdm"}"#,
        ),
        (
            "badtol.json",
            r#"{"problem": {"id": "rosenbrock"}, "solver_config": {"tol_subgrad": -1}}"#,
        ),
    ] {
        let cfg = write(dir.path(), name, body);
        let (code, _, err) = nsdm(&["run", &cfg]);
        assert_eq!(code, 1, "{name}");
        assert!(err.starts_with("error:"), "{name}: {err}");
    }
    assert_eq!(nsdm(&["run", "/nonexistent/config.json"]).0, 1);
    assert_eq!(nsdm(&["frobnicate"]).0, 1);
}

#[test]
fn verify_exit_codes_and_witness() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write(
        dir.path(),
        "ok.json",
        r#"{"problem": {"id": "l2_quadratic"}, "verify": [{"kind": "subdiff_lipschitz", "L": 1}]}"#,
    );
    assert_eq!(nsdm(&["verify", &ok]).0, 0);

    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"problem": {"id": "l2_quadratic"}, "verify": [{"kind": "subdiff_lipschitz", "L": 0.5}]}"#,
    );
    assert_eq!(nsdm(&["verify", &bad]).0, 3);
    let report = json(&dir.path().join("bad.report.json"));
    assert_eq!(report["all_passed"], false);
    let cert = &report["certificates"][0];
    assert_eq!(cert["kind"], "subdiff_lipschitz");
    assert_eq!(cert["one_sided"], true);
    assert_eq!(
        cert["violations"][0]["witness"].as_array().unwrap().len(),
        2
    );

    let hess = write(
        dir.path(),
        "hess.json",
        r#"{"problem": {"id": "quadratic", "a": [[1, 0], [0, 4]], "b": [0, 0], "x0": [2, 1]},
            "verify": [{"kind": "hessian_bounds", "m": 1, "M": 4}]}"#,
    );
    assert_eq!(nsdm(&["verify", &hess]).0, 0);
}

#[test]
fn verify_invalid_pairings_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    for (name, body) in [
        (
            "hess.json",
            r#"{"problem": {"id": "corpus", "name": "max_affine_abs"}, "verify": [{"kind": "hessian_bounds", "m": 0, "M": 1}]}"#,
        ),
        (
            "fd.json",
            r#"{"problem": {"id": "corpus", "name": "max_affine_abs"}, "verify": [{"kind": "finite_difference_gradient", "x": [0]}]}"#,
        ),
        (
            "db.json",
            r#"{"problem": {"id": "corpus", "name": "max_affine_abs"}, "verify": [{"kind": "descent_bound"}]}"#,
        ),
        ("empty.json", r#"{"problem": {"id": "rosenbrock"}}"#),
    ] {
        let cfg = write(dir.path(), name, body);
        assert_eq!(nsdm(&["verify", &cfg]).0, 1, "{name}");
    }
}

#[test]
fn verify_seed_flag_changes_samples_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "v.json",
        r#"{"problem": {"id": "l2_quadratic", "dim": 3}, "verify": [{"kind": "prox_regularity", "L": 1e-6, "plan": {"num_points": 50}}]}"#,
    );
    let read = |seed: &str| {
        assert_eq!(nsdm(&["verify", &cfg, "--seed", seed]).0, 0);
        fs::read(dir.path().join("v.report.json")).unwrap()
    };
    let a = read("1");
    assert_eq!(a, read("1"));
    assert_ne!(a, read("2"));
}

#[test]
fn bench_outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "b.json",
        r#"{"problems": [{"id": "rosenbrock"}, {"id": "corpus", "name": "max_affine_abs"}, {"id": "l2_quadratic"}],
            "output": {"timing": "timing.csv"}}"#,
    );
    let (code, _, err) = nsdm(&["bench", &cfg, "--jobs", "3"]);
    assert_eq!(code, 0, "{err}");
    let csv1 = fs::read_to_string(dir.path().join("b.bench.csv")).unwrap();
    let json1 = fs::read(dir.path().join("b.bench.json")).unwrap();
    assert_eq!(nsdm(&["bench", &cfg, "--sequential"]).0, 0);
    assert_eq!(
        csv1,
        fs::read_to_string(dir.path().join("b.bench.csv")).unwrap()
    );
    assert_eq!(json1, fs::read(dir.path().join("b.bench.json")).unwrap());

    let lines: Vec<&str> = csv1.lines().collect();
    assert_eq!(
        lines[0],
        "problem,solver,iterations,final_f,final_subgrad_norm,oracle_evals,termination"
    );
    let ids: Vec<String> = lines[1..]
        .iter()
        .map(|l| l.split(',').take(2).collect::<Vec<_>>().join("/"))
        .collect();
    assert_eq!(
        ids,
        [
            "l2_quadratic_d10_s7/nsdm",
            "l2_quadratic_d10_s7/sdm",
            "max_affine_abs/nsdm",
            "rosenbrock/nsdm",
            "rosenbrock/sdm"
        ]
    );
    let rosen: Vec<&str> = lines[4].split(',').collect();
    assert!(rosen[4].parse::<f64>().unwrap() <= 1e-4);
    let timing = fs::read_to_string(dir.path().join("timing.csv")).unwrap();
    assert!(timing.starts_with("problem,solver,wall_time_s\n"));
    assert_eq!(timing.lines().count(), 6);
}

#[test]
fn bench_full_corpus_converges_on_convex_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"problems": [{"id": "default_corpus"}]}"#,
    );
    assert_eq!(nsdm(&["bench", &cfg]).0, 0);
    let csv = fs::read_to_string(dir.path().join("c.bench.csv")).unwrap();
    let corpus = nsdm::default_corpus().unwrap();
    let smooth = corpus.iter().filter(|p| p.oracle.is_smooth()).count();
    assert_eq!(csv.lines().count(), 1 + corpus.len() + smooth);
    for line in csv.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let spec = corpus.iter().find(|p| p.id == cols[0]).unwrap();
        if spec.is_convex() {
            assert!(cols[4].parse::<f64>().unwrap() <= 1e-8, "{line}");
        }
    }
}

#[test]
fn bench_empty_problem_list_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "e.json", r#"{"problems": []}"#);
    assert_eq!(nsdm(&["bench", &cfg]).0, 1);
}
