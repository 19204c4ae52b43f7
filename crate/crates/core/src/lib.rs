//! Steepest descent for nonsmooth objectives: at each iterate take the
//! minimum-norm proximal subgradient, move against it with an exact line
//! search, and stop when it vanishes. Includes the smooth baseline, sampled
//! verifiers for the structural hypotheses behind convergence, a problem
//! corpus and a batch CLI.

// `!(x > 0.0)` deliberately also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificate;
pub mod cli;
pub mod descent;
pub mod error;
pub mod hull;
pub mod linalg;
pub mod linesearch;
pub mod oracle;
pub mod par;
pub mod problems;
pub mod trace;
pub mod vector;
pub mod verify;

pub use certificate::{Certificate, CertificateKind, Violation};
pub use descent::{descent_bound_report, run_nsdm, run_sdm, SolverConfig};
pub use error::{Error, Result};
pub use linesearch::{exact_line_search, LineSearchResult, LineSearchStatus};
pub use oracle::{ObjectiveOracle, SelectionRule, SubdifferentialDescriptor};
pub use par::Execution;
pub use problems::{default_corpus, ProblemRequest, ProblemSpec};
pub use trace::{IterationRecord, RunTrace, Status};
pub use vector::Vector;
