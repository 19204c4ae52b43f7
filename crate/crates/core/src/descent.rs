//! Steepest-descent drivers.
//!
//! [`run_nsdm`] picks a proximal subgradient `v` at the current point, stops
//! when `|v|` is (numerically) zero, and otherwise moves along `-v / |v|` by an
//! exact line search. [`run_sdm`] is the same loop fed with gradients and is
//! restricted to smooth oracles.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::certificate::{Certificate, CertificateKind, Violation};
use crate::error::{Error, Result};
use crate::linesearch::{exact_line_search, ray_point, LineSearchStatus};
use crate::oracle::{ObjectiveOracle, SelectionRule};
use crate::trace::{IterationRecord, RunTrace, Status};
use crate::vector::Vector;

/// Iterates are stored in each record only up to this dimension by default.
pub const DEFAULT_STORE_ITERATES_MAX_DIM: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub tol_subgrad: f64,
    pub max_iters: usize,
    pub t_max: f64,
    pub tol_t: f64,
    pub selection_rule: SelectionRule,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe_epsilon: Option<f64>,
    pub store_iterates_max_dim: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol_subgrad: 1e-8,
            max_iters: 100_000,
            t_max: 1e3,
            tol_t: 1e-12,
            selection_rule: SelectionRule::MinNorm,
            probe_epsilon: None,
            store_iterates_max_dim: DEFAULT_STORE_ITERATES_MAX_DIM,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )))
            }
        };
        positive("tol_subgrad", self.tol_subgrad)?;
        positive("t_max", self.t_max)?;
        positive("tol_t", self.tol_t)?;
        if let Some(eps) = self.probe_epsilon {
            positive("probe_epsilon", eps)?;
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter(
                "max_iters must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Proximal-subgradient steepest descent with exact line search.
pub fn run_nsdm(oracle: &ObjectiveOracle, x0: &Vector, cfg: &SolverConfig) -> Result<RunTrace> {
    let rule = cfg.selection_rule;
    descend(oracle, x0, cfg, |x| oracle.subgradient(x, rule))
}

/// Classical steepest descent with exact line search on a smooth oracle.
pub fn run_sdm(oracle: &ObjectiveOracle, x0: &Vector, cfg: &SolverConfig) -> Result<RunTrace> {
    if !oracle.is_smooth() {
        return Err(Error::NotSmooth(oracle.id().to_string()));
    }
    descend(oracle, x0, cfg, |x| oracle.gradient(x))
}

fn descend<D>(
    oracle: &ObjectiveOracle,
    x0: &Vector,
    cfg: &SolverConfig,
    mut direction: D,
) -> Result<RunTrace>
where
    D: FnMut(&Vector) -> Result<Vector>,
{
    cfg.validate()?;
    let started = Instant::now();
    let f0 = oracle.eval(x0)?;
    if !f0.is_finite() {
        return Err(Error::InvalidStart);
    }
    let store = oracle.dim() <= cfg.store_iterates_max_dim;
    let mut records = Vec::new();
    let mut x = x0.clone();
    let mut f = f0;
    let mut evals: u64 = 1;

    let termination = loop {
        let n = records.len();
        let v = direction(&x)?;
        let vn = v.norm();
        let terminal = if vn == 0.0 {
            Some(Status::TerminatedZeroSubgradient)
        } else if vn <= cfg.tol_subgrad {
            Some(Status::TerminatedTolerance)
        } else if n >= cfg.max_iters {
            Some(Status::MaxIterations)
        } else {
            None
        };
        if let Some(status) = terminal {
            records.push(record(n, &x, store, f, vn, 0.0, evals, status));
            break status;
        }

        let u = v.scale(-1.0 / vn)?;
        let ls = exact_line_search(oracle, &x, &u, cfg.t_max, cfg.tol_t)?;
        evals += ls.evaluations;
        if ls.status == LineSearchStatus::AtZero {
            records.push(record(
                n,
                &x,
                store,
                f,
                vn,
                0.0,
                evals,
                Status::LineSearchStall,
            ));
            break Status::LineSearchStall;
        }
        records.push(record(
            n,
            &x,
            store,
            f,
            vn,
            ls.t_star,
            evals,
            Status::Continued,
        ));
        x = ray_point(&x, &u, ls.t_star)?;
        f = ls.f_at_t_star;
    };

    Ok(RunTrace {
        records,
        termination,
        final_x: x,
        wall_time: started.elapsed(),
    })
}

#[allow(clippy::too_many_arguments)]
fn record(
    n: usize,
    x: &Vector,
    store: bool,
    f_value: f64,
    subgrad_norm: f64,
    step_length: f64,
    oracle_evals: u64,
    status: Status,
) -> IterationRecord {
    IterationRecord {
        n,
        x: store.then(|| x.clone()),
        f_value,
        subgrad_norm,
        step_length,
        oracle_evals,
        status,
    }
}

/// Slack added to the right-hand side of the descent bound.
pub const DESCENT_BOUND_SLACK: f64 = 1e-9;

/// Checks `|v_{n-1}| <= (f(x_{n-1}) - f(x_n)) / eps + 1.5 L eps` on every
/// consecutive pair of records.
pub fn descent_bound_report(
    trace: &RunTrace,
    lipschitz: f64,
    probe_epsilon: f64,
) -> Result<Certificate> {
    if !(lipschitz > 0.0) || !(probe_epsilon > 0.0) {
        return Err(Error::InvalidParameter(
            "L and epsilon must be positive".into(),
        ));
    }
    if trace.records.len() < 2 {
        return Err(Error::InsufficientTrace(trace.records.len()));
    }
    let mut cert = Certificate::builder(CertificateKind::DescentBound);
    cert.constant("L", lipschitz)
        .constant("epsilon", probe_epsilon);
    let mut worst_margin = f64::INFINITY;
    for pair in trace.records.windows(2) {
        let (prev, next) = (&pair[0], &pair[1]);
        let lhs = prev.subgrad_norm;
        let rhs = (prev.f_value - next.f_value) / probe_epsilon + 1.5 * lipschitz * probe_epsilon;
        cert.samples(1);
        worst_margin = worst_margin.min(rhs - lhs);
        if lhs > rhs + DESCENT_BOUND_SLACK {
            cert.violation(Violation {
                witness: prev.x.iter().chain(next.x.iter()).cloned().collect(),
                lhs,
                rhs,
                gap: lhs - rhs,
                note: format!("n = {}", next.n),
            });
        }
    }
    cert.constant("min_margin", worst_margin);
    Ok(cert.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::oracle::AffinePiece;

    fn v(e: &[f64]) -> Vector {
        Vector::from_slice(e).unwrap()
    }

    fn abs_oracle() -> ObjectiveOracle {
        ObjectiveOracle::max_affine(
            "abs",
            vec![
                AffinePiece {
                    a: v(&[1.0]),
                    b: 0.0,
                },
                AffinePiece {
                    a: v(&[-1.0]),
                    b: 0.0,
                },
            ],
            0.0,
        )
        .unwrap()
    }

    fn diag14() -> ObjectiveOracle {
        ObjectiveOracle::quadratic(
            "diag14",
            Matrix::diag(&[1.0, 4.0]).unwrap(),
            v(&[0.0, 0.0]),
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn l2_one_step() {
        let o = ObjectiveOracle::l2_quadratic(v(&[1.0, 2.0, 2.0]));
        let t = run_nsdm(&o, &v(&[0.0, 0.0, 0.0]), &SolverConfig::default()).unwrap();
        assert_eq!(t.records.len(), 2);
        assert!(t.termination.is_converged());
        assert!(t.final_x.distance(&v(&[1.0, 2.0, 2.0])).unwrap() <= 1e-8);
        assert!((t.final_f() + 1.5).abs() <= 1e-12);
        assert!(t.is_well_formed());
    }

    #[test]
    fn abs_at_minimizer_stops_immediately() {
        let t = run_nsdm(&abs_oracle(), &v(&[0.0]), &SolverConfig::default()).unwrap();
        assert_eq!(t.records.len(), 1);
        assert_eq!(t.termination, Status::TerminatedZeroSubgradient);
        assert_eq!(t.final_x, v(&[0.0]));
    }

    #[test]
    fn strictly_convex_quadratic_converges_monotonically() {
        let t = run_nsdm(&diag14(), &v(&[2.0, 1.0]), &SolverConfig::default()).unwrap();
        assert!(t.termination.is_converged(), "{:?}", t.termination);
        assert!(t.final_subgrad_norm() <= 1e-8);
        assert!(t.final_x.norm() <= 1e-8);
        for w in t.records.windows(2) {
            assert!(w[1].f_value <= w[0].f_value);
        }
    }

    #[test]
    fn sdm_first_direction_and_agreement() {
        let o = diag14();
        let x0 = v(&[2.0, 1.0]);
        let g = o.gradient(&x0).unwrap();
        assert_eq!(g, v(&[2.0, 4.0]));
        let a = run_sdm(&o, &x0, &SolverConfig::default()).unwrap();
        let b = run_nsdm(&o, &x0, &SolverConfig::default()).unwrap();
        assert_eq!(a.records, b.records);
        // the first step moves along -(2,4)/|(2,4)|
        let x1 = a.records[1].x.clone().unwrap();
        let d = x1.sub(&x0).unwrap();
        let dn = d.norm();
        assert!((d[0] / dn + 2.0 / 20f64.sqrt()).abs() < 1e-12);
        assert!((d[1] / dn + 4.0 / 20f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn sdm_rejects_nonsmooth() {
        assert!(matches!(
            run_sdm(&abs_oracle(), &v(&[1.0]), &SolverConfig::default()),
            Err(Error::NotSmooth(_))
        ));
    }

    #[test]
    fn max_iterations_budget() {
        let cfg = SolverConfig {
            max_iters: 3,
            ..SolverConfig::default()
        };
        let t = run_nsdm(&ObjectiveOracle::rosenbrock(), &v(&[-1.2, 1.0]), &cfg).unwrap();
        assert_eq!(t.termination, Status::MaxIterations);
        assert_eq!(t.records.len(), 4);
        assert!(t.is_well_formed());
    }

    #[test]
    fn first_generator_rule_stalls_at_kink() {
        // at 0 the first generator of |x| is +1; the ray -t has no descent
        let cfg = SolverConfig {
            selection_rule: SelectionRule::FirstGenerator,
            ..SolverConfig::default()
        };
        let t = run_nsdm(&abs_oracle(), &v(&[0.0]), &cfg).unwrap();
        assert_eq!(t.termination, Status::LineSearchStall);
    }

    #[test]
    fn iterates_not_stored_beyond_limit() {
        let o = ObjectiveOracle::l2_quadratic(Vector::new(vec![1.0; 100]).unwrap());
        let t = run_nsdm(&o, &Vector::zeros(100).unwrap(), &SolverConfig::default()).unwrap();
        assert!(t.records.iter().all(|r| r.x.is_none()));
        assert!(
            t.final_x
                .distance(&Vector::new(vec![1.0; 100]).unwrap())
                .unwrap()
                <= 1e-8
        );
    }

    #[test]
    fn descent_bound_cases() {
        let o = ObjectiveOracle::l2_quadratic(v(&[1.0, 2.0, 2.0]));
        let t = run_nsdm(&o, &v(&[0.0, 0.0, 0.0]), &SolverConfig::default()).unwrap();
        let c = descent_bound_report(&t, 1.0, 0.1).unwrap();
        assert!(c.passed);
        // 3 <= (3 - (-1.5)) / 0.1 + 0.15
        assert!((c.constant("min_margin").unwrap() - (45.15 - 3.0)).abs() < 1e-9);

        let single = run_nsdm(&abs_oracle(), &v(&[0.0]), &SolverConfig::default()).unwrap();
        assert_eq!(
            descent_bound_report(&single, 1.0, 0.1).unwrap_err(),
            Error::InsufficientTrace(1)
        );

        let mut corrupted = t.clone();
        corrupted.records[1].f_value = 10.0;
        let c = descent_bound_report(&corrupted, 1.0, 0.1).unwrap();
        assert!(!c.passed);
        let w = &c.violations[0];
        assert_eq!(w.witness.len(), 2);
        assert!(w.lhs > w.rhs + DESCENT_BOUND_SLACK);
    }

    #[test]
    fn invalid_start_and_config() {
        let o = ObjectiveOracle::l2_quadratic(v(&[1.0]));
        let bad = SolverConfig {
            tol_t: -1.0,
            ..SolverConfig::default()
        };
        assert!(run_nsdm(&o, &v(&[0.0]), &bad).is_err());
        assert!(matches!(
            run_nsdm(&o, &v(&[0.0, 1.0]), &SolverConfig::default()),
            Err(Error::Dimension { .. })
        ));
    }
}
