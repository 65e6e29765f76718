use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::ks::{kolmogorov_pvalue, ks_statistic};
use super::{Check, TestReport};
use crate::algebra::LieAlgebraSpec;
use crate::error::{Error, Result};

pub const DEFAULT_KS_THRESHOLD: f64 = 0.01;

const MIN_SAMPLES: usize = 100;

/// Compare stationary `z` samples with the Gibbs law `exp(-beta H)`, `beta = 2 nu / eps^2`.
///
/// Under that law `z ~ N(0, (beta g)^-1)`, so `2 beta H(z) = beta z^T g z` is chi-squared with
/// `n` degrees of freedom. The report holds the KS distance of `2 beta H` against it.
pub fn gibbs_marginal_test(
    samples: &[Vec<f64>],
    nu: f64,
    eps: f64,
    alg: &LieAlgebraSpec<f64>,
    threshold: f64,
) -> Result<TestReport> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::InsufficientSamples { needed: MIN_SAMPLES, got: samples.len() });
    }
    if !(nu > 0.0 && eps > 0.0) {
        return Err(Error::InvalidConfig("gibbs test needs nu > 0 and eps > 0".into()));
    }
    let n = alg.dim();
    let g = alg.metric_matrix();
    let beta = 2.0 * nu / (eps * eps);
    let mut stat = Vec::with_capacity(samples.len());
    for z in samples {
        if z.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: z.len() });
        }
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                quad += z[i] * g[(i, j)] * z[j];
            }
        }
        stat.push(beta * quad);
    }
    let chi2 = ChiSquared::new(n as f64).expect("positive degrees of freedom");
    let d = ks_statistic(&stat, |x| chi2.cdf(x));
    let mean = stat.iter().sum::<f64>() / stat.len() as f64;
    let var = stat.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (stat.len() - 1) as f64;
    let se = (var / stat.len() as f64).sqrt();
    let checks = vec![
        Check::below("ks_distance", d, threshold),
        Check::new("mean_2betaH", mean, n as f64, f64::INFINITY, Some(se)),
    ];
    let notes = vec![
        format!("beta = {beta}"),
        format!("ks p-value = {:.4}", kolmogorov_pvalue(d, stat.len())),
        "samples are treated as independent".into(),
    ];
    Ok(TestReport::new("gibbs_marginal", samples.len(), checks, notes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::Preset;
    use crate::simulate::path_rng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn gaussian(n: usize, count: usize, sd: f64, shift: f64) -> Vec<Vec<f64>> {
        let mut rng = path_rng(17, 0);
        (0..count).map(|_| (0..n).map(|_| shift + sd * rng.sample::<f64, _>(StandardNormal)).collect()).collect()
    }

    #[test]
    fn exact_target_samples_pass() {
        // nu = eps = 1 gives beta = 2, so each coordinate has variance 1/2
        let alg = Preset::So3Euclid.float().unwrap();
        let r = gibbs_marginal_test(&gaussian(3, 100_000, 0.5f64.sqrt(), 0.0), 1.0, 1.0, &alg, 0.01).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.notes[0].contains("beta = 2"));
    }

    #[test]
    fn mean_shift_fails() {
        let alg = Preset::So3Euclid.float().unwrap();
        let r = gibbs_marginal_test(&gaussian(3, 100_000, 0.5f64.sqrt(), 0.3), 1.0, 1.0, &alg, 0.01).unwrap();
        assert!(!r.pass);
    }

    #[test]
    fn abelian_ou_law_and_eps_scaling() {
        // eps = 2, nu = 1: beta = 1/2, stationary OU variance eps^2 / (2 nu) = 2
        let alg = Preset::Abelian(1).float().unwrap();
        let r = gibbs_marginal_test(&gaussian(1, 50_000, 2f64.sqrt(), 0.0), 1.0, 2.0, &alg, 0.01).unwrap();
        assert!(r.pass && r.notes[0].contains("beta = 0.5"));
        let wrong = gibbs_marginal_test(&gaussian(1, 50_000, 2f64.sqrt(), 0.0), 1.0, 1.0, &alg, 0.01).unwrap();
        assert!(!wrong.pass);
    }

    #[test]
    fn rigid_body_metric_enters_the_energy() {
        // g = diag(1,2,3): z_i has variance 1 / (beta g_ii)
        let alg = Preset::rigid([1.0, 2.0, 3.0]).float().unwrap();
        let mut rng = path_rng(5, 1);
        let samples: Vec<Vec<f64>> = (0..50_000)
            .map(|_| (1..=3).map(|i| (0.5 / i as f64).sqrt() * rng.sample::<f64, _>(StandardNormal)).collect())
            .collect();
        assert!(gibbs_marginal_test(&samples, 1.0, 1.0, &alg, 0.01).unwrap().pass);
    }

    #[test]
    fn too_few_samples() {
        let alg = Preset::So3Euclid.float().unwrap();
        let err = gibbs_marginal_test(&gaussian(3, 10, 1.0, 0.0), 1.0, 1.0, &alg, 0.01).unwrap_err();
        assert!(matches!(err, Error::InsufficientSamples { .. }));
    }
}
