//! Statistical diagnostics on trajectory ensembles and a grid Fokker-Planck solver for the
//! abelian reduction.

mod covariance;
pub mod fp;
mod gibbs;
mod haar;
mod ks;

pub use crate::curve::{CurveSpec, SigmaMatrix};
pub use covariance::{diffusivity_report, effective_covariance, CovarianceEstimate, MARGINAL_KS_ALPHA, SMALL_ENSEMBLE};
pub use fp::{fp_solve_torus, l2_monitor, FpGrid, FpOptions, FpRun, InitialDensity, L2Point, Transport};
pub use gibbs::{gibbs_marginal_test, DEFAULT_KS_THRESHOLD};
pub use haar::{haar_so3_sample, haar_uniformity_test};
pub use ks::{kolmogorov_pvalue, ks_critical_distance, ks_statistic};

use serde::Serialize;

use crate::simulate::{PathStatus, Snapshot, TrajectoryEnsemble};

/// Fraction of each path discarded before stationarity tests.
pub const DEFAULT_BURN_IN: f64 = 0.2;

/// One scalar comparison inside a report.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub target: f64,
    /// Allowed `|value - target|`.
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub standard_error: Option<f64>,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, target: f64, tolerance: f64, standard_error: Option<f64>) -> Self {
        let pass = (value - target).abs() <= tolerance;
        Check { name: name.into(), value, target, tolerance, standard_error, pass }
    }

    /// Pass when `value < threshold`.
    pub fn below(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), value, target: 0.0, tolerance: threshold, standard_error: None, pass: value < threshold }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct TestReport {
    pub test: String,
    pub n_samples: usize,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

impl TestReport {
    pub fn new(test: &str, n_samples: usize, checks: Vec<Check>, notes: Vec<String>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        TestReport { test: test.into(), n_samples, pass, checks, notes }
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

/// Snapshots with `t > burn_in * t_end` from completed paths, in path order.
///
/// The initial state is never included. Returns the samples and the number of paths skipped
/// because they blew up.
pub fn stationary_snapshots(ensemble: &TrajectoryEnsemble, burn_in: f64) -> (Vec<&Snapshot>, usize) {
    let mut out = Vec::new();
    let mut skipped = 0;
    for p in &ensemble.paths {
        if p.status != PathStatus::Completed {
            skipped += 1;
            continue;
        }
        let cut = burn_in * p.last().t;
        out.extend(p.snapshots.iter().skip(1).filter(|s| s.t > cut));
    }
    (out, skipped)
}
