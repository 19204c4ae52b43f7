//! Outcomes of sampled hypothesis checks.
//!
//! A certificate is one-sided: a failure carries concrete witnesses that
//! reproduce the violated inequality, a pass only says no sample violated it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::vector::Vector;

/// At most this many violations are stored; `violation_count` keeps the total.
pub const MAX_STORED_VIOLATIONS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    ProxSubgradientMembership,
    ProxRegularity,
    SubdiffLipschitz,
    HessianBounds,
    DescentBound,
    FiniteDifferenceGradient,
}

/// A failed inequality `lhs >= rhs` (or `lhs <= rhs`, depending on the check)
/// with the points that produce it. `gap` is the amount by which it fails,
/// always positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub witness: Vec<Vector>,
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub passed: bool,
    pub one_sided: bool,
    pub samples_tested: usize,
    pub estimated_constants: BTreeMap<String, f64>,
    pub violation_count: usize,
    pub violations: Vec<Violation>,
}

impl Certificate {
    pub(crate) fn builder(kind: CertificateKind) -> CertificateBuilder {
        CertificateBuilder {
            kind,
            samples_tested: 0,
            constants: BTreeMap::new(),
            violation_count: 0,
            violations: Vec::new(),
        }
    }

    pub fn constant(&self, name: &str) -> Option<f64> {
        self.estimated_constants.get(name).copied()
    }
}

pub(crate) struct CertificateBuilder {
    kind: CertificateKind,
    samples_tested: usize,
    constants: BTreeMap<String, f64>,
    violation_count: usize,
    violations: Vec<Violation>,
}

impl CertificateBuilder {
    pub fn samples(&mut self, n: usize) -> &mut Self {
        self.samples_tested += n;
        self
    }

    pub fn constant(&mut self, name: &str, value: f64) -> &mut Self {
        self.constants.insert(name.to_string(), value);
        self
    }

    pub fn violation(&mut self, v: Violation) -> &mut Self {
        self.violation_count += 1;
        if self.violations.len() < MAX_STORED_VIOLATIONS {
            self.violations.push(v);
        }
        self
    }

    pub fn finish(&mut self) -> Certificate {
        Certificate {
            kind: self.kind,
            passed: self.violation_count == 0,
            one_sided: true,
            samples_tested: self.samples_tested,
            estimated_constants: std::mem::take(&mut self.constants),
            violation_count: self.violation_count,
            violations: std::mem::take(&mut self.violations),
        }
    }
}
