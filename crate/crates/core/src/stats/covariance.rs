use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use super::ks::{kolmogorov_pvalue, ks_critical_distance, ks_statistic};
use super::{Check, SigmaMatrix, TestReport};
use crate::error::{Error, Result};
use crate::simulate::{PathStatus, TrajectoryEnsemble};

/// Ensembles with fewer paths are flagged in the estimate.
pub const SMALL_ENSEMBLE: usize = 100;

/// Significance level of the marginal KS checks.
pub const MARGINAL_KS_ALPHA: f64 = 1e-3;

#[derive(Debug, Clone, Serialize)]
pub struct CovarianceEstimate {
    pub n_paths: usize,
    pub horizon: f64,
    pub mean: Vec<f64>,
    pub mean_se: Vec<f64>,
    pub covariance: SigmaMatrix,
    /// Jackknife standard errors of the covariance entries.
    pub covariance_se: SigmaMatrix,
    pub small_ensemble: bool,
    /// `(a(t) - a(0)) / sqrt(t)` per path.
    #[serde(skip)]
    pub increments: Vec<Vec<f64>>,
}

/// Empirical covariance of `(a(t) - a(0)) / sqrt(t)` over an abelian-group ensemble.
///
/// `horizon` selects the recorded time `t`; `None` uses each path's final snapshot.
pub fn effective_covariance(ensemble: &TrajectoryEnsemble, horizon: Option<f64>) -> Result<CovarianceEstimate> {
    let n = ensemble.algebra_dim;
    if ensemble.group_len != n {
        return Err(Error::InvalidConfig("effective covariance needs a translation group".into()));
    }
    let mut xs = Vec::with_capacity(ensemble.paths.len());
    let mut t_used = f64::NAN;
    for p in &ensemble.paths {
        if p.status != PathStatus::Completed {
            return Err(Error::InvalidConfig(format!("path {} did not complete", p.path_id)));
        }
        let snap = match horizon {
            None => p.last(),
            Some(t) => p
                .snapshots
                .iter()
                .find(|s| (s.t - t).abs() <= 0.5 * ensemble.dt)
                .ok_or_else(|| Error::InvalidConfig(format!("time {t} is not recorded")))?,
        };
        if !(snap.t > 0.0) {
            return Err(Error::InvalidConfig("horizon must be positive".into()));
        }
        t_used = snap.t;
        let a0 = &p.snapshots[0].group;
        let scale = snap.t.sqrt().recip();
        xs.push(snap.group.iter().zip(a0).map(|(a, b)| (a - b) * scale).collect::<Vec<f64>>());
    }
    let big_n = xs.len();
    if big_n < 3 {
        return Err(Error::InsufficientSamples { needed: 3, got: big_n });
    }
    let nf = big_n as f64;

    let mut sum = vec![0.0; n];
    let mut outer = vec![vec![0.0; n]; n];
    for x in &xs {
        for k in 0..n {
            sum[k] += x[k];
            for l in 0..n {
                outer[k][l] += x[k] * x[l];
            }
        }
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / nf).collect();
    let cov_of = |outer_kl: f64, sk: f64, sl: f64, m: f64| (outer_kl - sk * sl / m) / (m - 1.0);
    let covariance: SigmaMatrix =
        (0..n).map(|k| (0..n).map(|l| cov_of(outer[k][l], sum[k], sum[l], nf)).collect()).collect();

    let mut mean_se = vec![0.0; n];
    for k in 0..n {
        mean_se[k] = (covariance[k][k] / nf).sqrt();
    }

    // leave-one-out covariances in closed form
    let mut covariance_se = vec![vec![0.0; n]; n];
    for k in 0..n {
        for l in k..n {
            let loo: Vec<f64> = xs
                .iter()
                .map(|x| cov_of(outer[k][l] - x[k] * x[l], sum[k] - x[k], sum[l] - x[l], nf - 1.0))
                .collect();
            let avg = loo.iter().sum::<f64>() / nf;
            let var = (nf - 1.0) / nf * loo.iter().map(|v| (v - avg).powi(2)).sum::<f64>();
            covariance_se[k][l] = var.sqrt();
            covariance_se[l][k] = var.sqrt();
        }
    }

    Ok(CovarianceEstimate {
        n_paths: big_n,
        horizon: t_used,
        mean,
        mean_se,
        covariance,
        covariance_se,
        small_ensemble: big_n < SMALL_ENSEMBLE,
        increments: xs,
    })
}

/// Compare an estimate with the long-time prediction `(4 / eps^2) Sigma`.
///
/// Diagonal entries pass within `rel_tol` of the prediction, off-diagonal entries and the
/// mean within 3 standard errors. Each marginal passes a KS test against the predicted normal
/// at level [`MARGINAL_KS_ALPHA`].
pub fn diffusivity_report(est: &CovarianceEstimate, sigma: &SigmaMatrix, eps: f64, rel_tol: f64) -> Result<TestReport> {
    let n = est.mean.len();
    if sigma.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: sigma.len() });
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidConfig("eps must be positive".into()));
    }
    let factor = 4.0 / (eps * eps);
    let mut checks = Vec::new();
    for k in 0..n {
        for l in k..n {
            let target = factor * sigma[k][l];
            let se = est.covariance_se[k][l];
            let tol = if k == l && target != 0.0 { rel_tol * target.abs() } else { 3.0 * se };
            checks.push(Check::new(format!("cov_{}{}", k + 1, l + 1), est.covariance[k][l], target, tol, Some(se)));
        }
    }
    for k in 0..n {
        let se = est.mean_se[k];
        checks.push(Check::new(format!("mean_{}", k + 1), est.mean[k], 0.0, 3.0 * se, Some(se)));
    }
    let mut notes = vec![
        format!("prediction (4 / eps^2) Sigma with eps = {eps}"),
        "mean, covariance and marginal KS only; the joint law is not tested".into(),
    ];
    for k in 0..n {
        let var = factor * sigma[k][k];
        if var > 0.0 {
            let normal = Normal::new(0.0, var.sqrt()).expect("positive variance");
            let xs: Vec<f64> = est.increments.iter().map(|x| x[k]).collect();
            let d = ks_statistic(&xs, |x| normal.cdf(x));
            checks.push(Check::below(format!("ks_{}", k + 1), d, ks_critical_distance(xs.len(), MARGINAL_KS_ALPHA)));
            notes.push(format!("ks_{} p-value = {:.4}", k + 1, kolmogorov_pvalue(d, xs.len())));
        }
    }
    if est.small_ensemble {
        notes.push(format!("only {} paths; estimates are unreliable below {SMALL_ENSEMBLE}", est.n_paths));
    }
    Ok(TestReport::new("effective_covariance", est.n_paths, checks, notes))
}
