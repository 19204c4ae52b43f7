//! Batch harness behind the `nsdm` binary: `run`, `verify` and `bench` over
//! problems described in a JSON config document.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 iteration budget
//! exhausted, 3 a certificate failed, 4 line-search stall.

pub mod plot;
pub mod trace_csv;

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use crate::certificate::Certificate;
use crate::descent::{descent_bound_report, run_nsdm, run_sdm, SolverConfig};
use crate::oracle::SelectionRule;
use crate::par::{map_ordered, with_workers, Execution};
use crate::problems::{ProblemRequest, ProblemSpec};
use crate::trace::{RunTrace, Status};
use crate::vector::Vector;
use crate::verify::{self, SamplingPlan};

pub const SCHEMA_VERSION: u32 = 1;

pub mod exit {
    pub const OK: u8 = 0;
    pub const USAGE: u8 = 1;
    pub const MAX_ITERATIONS: u8 = 2;
    pub const CERTIFICATE_FAILED: u8 = 3;
    pub const STALL: u8 = 4;
}

/// Exit code for a finished run.
pub fn exit_code(status: Status) -> u8 {
    match status {
        Status::TerminatedTolerance | Status::TerminatedZeroSubgradient => exit::OK,
        Status::MaxIterations => exit::MAX_ITERATIONS,
        Status::LineSearchStall => exit::STALL,
        Status::Continued => exit::USAGE,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    #[default]
    Nsdm,
    Sdm,
}

impl Solver {
    pub fn as_str(self) -> &'static str {
        match self {
            Solver::Nsdm => "nsdm",
            Solver::Sdm => "sdm",
        }
    }

    pub fn run(self, spec: &ProblemSpec, cfg: &SolverConfig) -> crate::Result<RunTrace> {
        match self {
            Solver::Nsdm => run_nsdm(&spec.oracle, &spec.x0, cfg),
            Solver::Sdm => run_sdm(&spec.oracle, &spec.x0, cfg),
        }
    }
}

/// Output locations; relative paths resolve against the config file's
/// directory. Missing entries fall back to `<config stem>.<suffix>`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    pub trace: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub plot: Option<PathBuf>,
    pub summary_csv: Option<PathBuf>,
    /// Wall times of `bench`, kept apart so the other outputs are reproducible.
    pub timing: Option<PathBuf>,
}

/// Sampling plan as written in a config; absent fields take problem defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanRequest {
    pub center: Option<Vec<f64>>,
    pub radius: Option<f64>,
    pub num_points: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CertificateRequest {
    ProxSubgradientMembership {
        x: Option<Vec<f64>>,
        /// Defaults to the minimum-norm subgradient at `x`.
        zeta: Option<Vec<f64>>,
        #[serde(default)]
        r: f64,
        #[serde(default)]
        plan: PlanRequest,
    },
    ProxRegularity {
        #[serde(rename = "L", alias = "lipschitz")]
        lipschitz: f64,
        #[serde(default)]
        plan: PlanRequest,
    },
    SubdiffLipschitz {
        #[serde(rename = "L", alias = "lipschitz")]
        lipschitz: f64,
        /// Number of level-set points `y`.
        #[serde(default = "default_omega_points")]
        omega_points: usize,
        #[serde(default)]
        plan: PlanRequest,
    },
    HessianBounds {
        m: Option<f64>,
        #[serde(rename = "M")]
        big_m: Option<f64>,
        seed: Option<u64>,
    },
    FiniteDifferenceGradient {
        x: Option<Vec<f64>>,
        #[serde(default = "default_fd_step")]
        h: f64,
    },
    DescentBound {
        #[serde(default, rename = "L", alias = "lipschitz")]
        lipschitz: Option<f64>,
        epsilon: Option<f64>,
    },
}

fn default_omega_points() -> usize {
    64
}

fn default_fd_step() -> f64 {
    1e-4
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub problem: Option<ProblemRequest>,
    #[serde(default)]
    pub problems: Vec<ProblemRequest>,
    #[serde(default)]
    pub solver: Solver,
    #[serde(default)]
    pub solver_config: SolverConfig,
    #[serde(default)]
    pub verify: Vec<CertificateRequest>,
    #[serde(default)]
    pub output: OutputPaths,
    /// Replaces the seeds of seeded problem families and sampling plans.
    pub seed: Option<u64>,
}

/// Command-line flags that take precedence over the config document.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub seed: Option<u64>,
    /// Worker threads for `bench`; 0 means the default pool.
    pub jobs: usize,
    pub execution: Execution,
    /// Suppress the human-readable progress lines on stdout.
    pub quiet: bool,
}

struct Loaded {
    doc: ConfigDocument,
    dir: PathBuf,
    stem: String,
    seed: Option<u64>,
}

impl Loaded {
    fn read(path: &Path, ov: &Overrides) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let mut doc: ConfigDocument = serde_json::from_str(&text)
            .with_context(|| format!("invalid config {}", path.display()))?;
        if let Some(t) = ov.tol {
            doc.solver_config.tol_subgrad = t;
        }
        if let Some(m) = ov.max_iters {
            doc.solver_config.max_iters = m;
        }
        doc.solver_config.validate()?;
        let seed = ov.seed.or(doc.seed);
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("nsdm")
            .to_string();
        Ok(Self {
            doc,
            dir,
            stem,
            seed,
        })
    }

    fn output(&self, given: &Option<PathBuf>, suffix: &str) -> PathBuf {
        match given {
            Some(p) if p.is_absolute() => p.clone(),
            Some(p) => self.dir.join(p),
            None => self.dir.join(format!("{}.{suffix}", self.stem)),
        }
    }

    fn problems(&self) -> Result<Vec<ProblemSpec>> {
        let mut out = Vec::new();
        for req in self.doc.problem.iter().chain(&self.doc.problems) {
            out.extend(req.build(self.seed)?);
        }
        Ok(out)
    }

    fn single_problem(&self) -> Result<ProblemSpec> {
        let mut ps = self.problems()?;
        match ps.len() {
            1 => Ok(ps.pop().unwrap()),
            0 => bail!("config names no problem"),
            n => bail!("this command takes exactly one problem, config names {n}"),
        }
    }
}

fn report_error(e: anyhow::Error) -> u8 {
    eprintln!("error: {e:#}");
    exit::USAGE
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path).with_context(
        || format!("cannot write {}", path.display()),
    )?))
}

#[derive(Serialize)]
struct RunSummary<'a> {
    schema_version: u32,
    problem: &'a str,
    solver: Solver,
    termination: Status,
    iterations: usize,
    final_f: f64,
    final_subgrad_norm: f64,
    oracle_evals: u64,
    final_x: &'a Vector,
    #[serde(skip_serializing_if = "Option::is_none")]
    known_min_value: Option<f64>,
    solver_config: &'a SolverConfig,
}

/// Runs one solver on one problem; writes the trace CSV, a summary JSON and
/// optionally an SVG plot.
pub fn cmd_run(config: &Path, ov: &Overrides) -> u8 {
    run_inner(config, ov).unwrap_or_else(report_error)
}

fn run_inner(config: &Path, ov: &Overrides) -> Result<u8> {
    let cfg = Loaded::read(config, ov)?;
    let spec = cfg.single_problem()?;
    let solver = cfg.doc.solver;
    let started = Instant::now();
    let trace = solver.run(&spec, &cfg.doc.solver_config)?;
    let elapsed = started.elapsed();

    let trace_path = cfg.output(&cfg.doc.output.trace, "trace.csv");
    trace_csv::write_trace(create(&trace_path)?, &trace.records)?;
    let summary = RunSummary {
        schema_version: SCHEMA_VERSION,
        problem: &spec.id,
        solver,
        termination: trace.termination,
        iterations: trace.steps(),
        final_f: trace.final_f(),
        final_subgrad_norm: trace.final_subgrad_norm(),
        oracle_evals: trace.oracle_evals(),
        final_x: &trace.final_x,
        known_min_value: spec.expected().map(|e| e.1),
        solver_config: &cfg.doc.solver_config,
    };
    write_json(
        &cfg.output(&cfg.doc.output.report, "summary.json"),
        &summary,
    )?;
    if cfg.doc.output.plot.is_some() {
        let path = cfg.output(&cfg.doc.output.plot, "svg");
        let title = format!("{} on {}", solver.as_str(), spec.id);
        fs::write(&path, plot::render_svg(&title, &trace.records))
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    if !ov.quiet {
        println!(
            "{} {}: {} after {} steps, f = {:?}, |v| = {:e} ({:.3?})",
            solver.as_str(),
            spec.id,
            trace.termination,
            trace.steps(),
            trace.final_f(),
            trace.final_subgrad_norm(),
            elapsed
        );
    }
    Ok(exit_code(trace.termination))
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    schema_version: u32,
    problem: &'a str,
    all_passed: bool,
    certificates: Vec<Certificate>,
}

/// Runs the requested certificates against one problem and writes a JSON
/// report. Exit 0 iff every certificate passed, 3 otherwise.
pub fn cmd_verify(config: &Path, ov: &Overrides) -> u8 {
    verify_inner(config, ov).unwrap_or_else(report_error)
}

fn verify_inner(config: &Path, ov: &Overrides) -> Result<u8> {
    let cfg = Loaded::read(config, ov)?;
    let spec = cfg.single_problem()?;
    if cfg.doc.verify.is_empty() {
        bail!("config requests no certificates");
    }
    let mut certificates = Vec::new();
    for (i, req) in cfg.doc.verify.iter().enumerate() {
        let cert = certify(&cfg, &spec, req, ov.execution)
            .with_context(|| format!("certificate request {i}"))?;
        if !ov.quiet {
            println!(
                "{:?}: {} ({} samples, {} violations)",
                cert.kind,
                if cert.passed { "passed" } else { "FAILED" },
                cert.samples_tested,
                cert.violation_count
            );
        }
        certificates.push(cert);
    }
    let all_passed = certificates.iter().all(|c| c.passed);
    let report = VerifyReport {
        schema_version: SCHEMA_VERSION,
        problem: &spec.id,
        all_passed,
        certificates,
    };
    write_json(&cfg.output(&cfg.doc.output.report, "report.json"), &report)?;
    Ok(if all_passed {
        exit::OK
    } else {
        exit::CERTIFICATE_FAILED
    })
}

fn vector_or(given: &Option<Vec<f64>>, fallback: &Vector) -> Result<Vector> {
    Ok(match given {
        Some(v) => Vector::from_slice(v)?,
        None => fallback.clone(),
    })
}

fn plan_for(
    cfg: &Loaded,
    spec: &ProblemSpec,
    req: &PlanRequest,
    center: &Vector,
    exec: Execution,
) -> Result<SamplingPlan> {
    let plan = SamplingPlan::new(
        vector_or(&req.center, center)?,
        req.radius.unwrap_or_else(|| spec.delta()),
        req.num_points.unwrap_or(verify::DEFAULT_NUM_POINTS),
        cfg.seed.or(req.seed).unwrap_or(verify::DEFAULT_SEED),
    )?;
    Ok(plan.with_execution(exec))
}

fn certify(
    cfg: &Loaded,
    spec: &ProblemSpec,
    req: &CertificateRequest,
    exec: Execution,
) -> Result<Certificate> {
    let oracle = &spec.oracle;
    Ok(match req {
        CertificateRequest::ProxSubgradientMembership { x, zeta, r, plan } => {
            let x = vector_or(x, &spec.x0)?;
            let zeta = match zeta {
                Some(z) => Vector::from_slice(z)?,
                None => oracle.subgradient(&x, SelectionRule::MinNorm)?,
            };
            let plan = plan_for(
                cfg,
                spec,
                &PlanRequest {
                    center: None,
                    ..plan.clone()
                },
                &x,
                exec,
            )?;
            verify::check_prox_subgradient(oracle, &zeta, *r, &plan)?
        }
        CertificateRequest::ProxRegularity { lipschitz, plan } => verify::check_prox_regularity(
            oracle,
            *lipschitz,
            &plan_for(cfg, spec, plan, &spec.x0, exec)?,
        )?,
        CertificateRequest::SubdiffLipschitz {
            lipschitz,
            omega_points,
            plan,
        } => {
            let plan = plan_for(cfg, spec, plan, &spec.x0, exec)?;
            let (center, radius) = match &spec.level_set {
                Some(ball) => (ball.center.clone(), ball.radius),
                None => (spec.x0.clone(), plan.radius),
            };
            let omega = verify::level_set_samples(
                oracle,
                &spec.x0,
                &center,
                radius,
                *omega_points,
                plan.seed,
            )?;
            verify::check_subdiff_lipschitz(oracle, &omega, *lipschitz, &plan)?
        }
        CertificateRequest::HessianBounds { m, big_m, seed } => {
            let m = m
                .or(spec.declared("m"))
                .ok_or_else(|| anyhow!("no m given and none declared"))?;
            let big_m = big_m
                .or(spec.declared("M"))
                .ok_or_else(|| anyhow!("no M given and none declared"))?;
            let seed = cfg.seed.or(*seed).unwrap_or(verify::DEFAULT_SEED);
            verify::check_hessian_bounds(oracle, m, big_m, seed)?
        }
        CertificateRequest::FiniteDifferenceGradient { x, h } => {
            verify::finite_difference_gradient_check(oracle, &vector_or(x, &spec.x0)?, *h)?
        }
        CertificateRequest::DescentBound { lipschitz, epsilon } => {
            let l = lipschitz.or(spec.lipschitz()).ok_or_else(|| {
                anyhow!("problem `{}` declares no L; give one explicitly", spec.id)
            })?;
            let eps = epsilon
                .or(cfg.doc.solver_config.probe_epsilon)
                .unwrap_or(0.1);
            let trace = cfg.doc.solver.run(spec, &cfg.doc.solver_config)?;
            descent_bound_report(&trace, l, eps)?
        }
    })
}

/// One row of the bench table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub problem: String,
    pub solver: Solver,
    pub iterations: usize,
    pub final_f: f64,
    pub final_subgrad_norm: f64,
    pub oracle_evals: u64,
    pub termination: Status,
}

#[derive(Serialize)]
struct BenchReport<'a> {
    schema_version: u32,
    solver_config: &'a SolverConfig,
    rows: &'a [BenchRow],
}

/// Runs NSDM on every listed problem, and SDM as well where the oracle is
/// smooth. Rows are ordered by problem id, then solver.
pub fn run_bench(
    problems: &[ProblemSpec],
    cfg: &SolverConfig,
    jobs: usize,
    exec: Execution,
) -> Result<Vec<(BenchRow, f64)>> {
    let mut tasks: Vec<(&ProblemSpec, Solver)> = Vec::new();
    for p in problems {
        tasks.push((p, Solver::Nsdm));
        if p.oracle.is_smooth() {
            tasks.push((p, Solver::Sdm));
        }
    }
    tasks.sort_by(|a, b| (a.0.id.as_str(), a.1).cmp(&(b.0.id.as_str(), b.1)));
    let results = with_workers(jobs, || {
        map_ordered(exec, &tasks, |(p, solver)| {
            let started = Instant::now();
            let trace = solver.run(p, cfg)?;
            let secs = started.elapsed().as_secs_f64();
            Ok::<_, crate::Error>((
                BenchRow {
                    problem: p.id.clone(),
                    solver: *solver,
                    iterations: trace.steps(),
                    final_f: trace.final_f(),
                    final_subgrad_norm: trace.final_subgrad_norm(),
                    oracle_evals: trace.oracle_evals(),
                    termination: trace.termination,
                },
                secs,
            ))
        })
    });
    Ok(results.into_iter().collect::<crate::Result<Vec<_>>>()?)
}

/// Writes the bench table as CSV, floats in shortest round-trip form.
pub fn write_bench_csv<W: std::io::Write>(out: W, rows: &[BenchRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "problem",
        "solver",
        "iterations",
        "final_f",
        "final_subgrad_norm",
        "oracle_evals",
        "termination",
    ])?;
    for r in rows {
        w.write_record([
            r.problem.clone(),
            r.solver.as_str().to_string(),
            r.iterations.to_string(),
            format!("{:?}", r.final_f),
            format!("{:?}", r.final_subgrad_norm),
            r.oracle_evals.to_string(),
            r.termination.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Runs the listed problems and writes the summary CSV and JSON (plus wall
/// times when a timing path is configured).
pub fn cmd_bench(config: &Path, ov: &Overrides) -> u8 {
    bench_inner(config, ov).unwrap_or_else(report_error)
}

fn bench_inner(config: &Path, ov: &Overrides) -> Result<u8> {
    let cfg = Loaded::read(config, ov)?;
    let problems = cfg.problems()?;
    if problems.is_empty() {
        bail!("bench config lists no problems");
    }
    let results = run_bench(&problems, &cfg.doc.solver_config, ov.jobs, ov.execution)?;
    let rows: Vec<BenchRow> = results.iter().map(|(r, _)| r.clone()).collect();

    write_bench_csv(
        create(&cfg.output(&cfg.doc.output.summary_csv, "bench.csv"))?,
        &rows,
    )?;
    let report = BenchReport {
        schema_version: SCHEMA_VERSION,
        solver_config: &cfg.doc.solver_config,
        rows: &rows,
    };
    write_json(&cfg.output(&cfg.doc.output.report, "bench.json"), &report)?;
    if cfg.doc.output.timing.is_some() {
        let mut w =
            csv::Writer::from_writer(create(&cfg.output(&cfg.doc.output.timing, "timing.csv"))?);
        w.write_record(["problem", "solver", "wall_time_s"])?;
        for (r, secs) in &results {
            w.write_record([r.problem.as_str(), r.solver.as_str(), &format!("{secs:?}")])?;
        }
        w.flush()?;
    }
    for (r, secs) in results.iter().filter(|_| !ov.quiet) {
        println!(
            "{:24} {:4} {:>7} steps  |v| = {:<12.3e} {} ({:.3}s)",
            r.problem,
            r.solver.as_str(),
            r.iterations,
            r.final_subgrad_norm,
            r.termination,
            secs
        );
    }
    Ok(rows
        .iter()
        .map(|r| exit_code(r.termination))
        .max()
        .unwrap_or(exit::OK))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_rejects_unknown_keys() {
        assert!(serde_json::from_str::<ConfigDocument>(
            r#"{"problem": {"id": "rosenbrock"}, "sovler": "sdm"}"#
        )
        .is_err());
        assert!(
            serde_json::from_str::<ConfigDocument>(r#"{"solver_config": {"tol": 1}}"#).is_err()
        );
        let doc: ConfigDocument = serde_json::from_str(
            r#"{"problem": {"id": "rosenbrock"}, "solver_config": {"max_iters": 10}}"#,
        )
        .unwrap();
        assert_eq!(doc.solver_config.max_iters, 10);
        assert_eq!(doc.solver_config.t_max, SolverConfig::default().t_max);
        assert_eq!(doc.solver, Solver::Nsdm);
    }

    #[test]
    fn certificate_requests_parse() {
        let reqs: Vec<CertificateRequest> = serde_json::from_str(
            r#"[{"kind": "subdiff_lipschitz", "L": 0.5, "plan": {"num_points": 10}},
                {"kind": "hessian_bounds", "m": 1, "M": 4},
                {"kind": "descent_bound"}]"#,
        )
        .unwrap();
        assert!(
            matches!(reqs[0], CertificateRequest::SubdiffLipschitz { lipschitz, .. } if lipschitz == 0.5)
        );
        assert!(
            matches!(reqs[1], CertificateRequest::HessianBounds { big_m: Some(m), .. } if m == 4.0)
        );
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(Status::TerminatedTolerance), 0);
        assert_eq!(exit_code(Status::TerminatedZeroSubgradient), 0);
        assert_eq!(exit_code(Status::MaxIterations), 2);
        assert_eq!(exit_code(Status::LineSearchStall), 4);
    }
}
