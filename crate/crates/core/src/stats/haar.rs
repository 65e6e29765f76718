use nalgebra::Matrix3;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{Check, TestReport};
use crate::error::{Error, Result};

const MIN_SAMPLES: usize = 100;

/// Haar-distributed rotation: QR of a Gaussian matrix with the sign of `R`'s diagonal fixed,
/// then one column flipped if needed to land in `SO(3)`.
pub fn haar_so3_sample<R: Rng + ?Sized>(rng: &mut R) -> Matrix3<f64> {
    let m = Matrix3::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = m.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..3 {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}

/// Haar moments on `SO(3)`: every entry has mean 0 and second moment 1/3.
///
/// Each of the 18 checks passes within 3 Monte-Carlo standard errors. `samples` are row-major
/// 3x3 matrices.
pub fn haar_uniformity_test(samples: &[Vec<f64>]) -> Result<TestReport> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::InsufficientSamples { needed: MIN_SAMPLES, got: samples.len() });
    }
    if let Some(bad) = samples.iter().find(|s| s.len() != 9) {
        return Err(Error::DimensionMismatch { expected: 9, got: bad.len() });
    }
    let n = samples.len() as f64;
    let moments = |f: &dyn Fn(f64) -> f64, k: usize| {
        let mean = samples.iter().map(|s| f(s[k])).sum::<f64>() / n;
        let var = samples.iter().map(|s| (f(s[k]) - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    };
    let mut checks = Vec::with_capacity(18);
    for k in 0..9 {
        let (i, j) = (k / 3 + 1, k % 3 + 1);
        let (m, se) = moments(&|x| x, k);
        checks.push(Check::new(format!("mean_{i}{j}"), m, 0.0, 3.0 * se, Some(se)));
        let (m2, se2) = moments(&|x| x * x, k);
        checks.push(Check::new(format!("second_moment_{i}{j}"), m2, 1.0 / 3.0, 3.0 * se2, Some(se2)));
    }
    let notes = vec!["standard errors assume independent samples".into()];
    Ok(TestReport::new("haar_uniformity", samples.len(), checks, notes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::path_rng;

    fn flat(m: &Matrix3<f64>) -> Vec<f64> {
        (0..9).map(|k| m[(k / 3, k % 3)]).collect()
    }

    #[test]
    fn sampler_is_special_orthogonal() {
        let mut rng = path_rng(1, 0);
        for _ in 0..100 {
            let q = haar_so3_sample(&mut rng);
            assert!((q.transpose() * q - Matrix3::identity()).amax() < 1e-14);
            assert!((q.determinant() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn oracle_samples_pass() {
        let mut rng = path_rng(2, 0);
        let samples: Vec<Vec<f64>> = (0..20_000).map(|_| flat(&haar_so3_sample(&mut rng))).collect();
        let r = haar_uniformity_test(&samples).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.checks.len(), 18);
    }

    #[test]
    fn point_mass_at_identity_fails() {
        let samples = vec![flat(&Matrix3::identity()); 1000];
        let r = haar_uniformity_test(&samples).unwrap();
        assert!(!r.pass);
        assert_eq!(r.check("mean_11").unwrap().value, 1.0);
    }

    #[test]
    fn rotations_about_one_axis_fail() {
        // uniform angle about e3 leaves entry 33 fixed at 1
        let mut rng = path_rng(3, 0);
        let samples: Vec<Vec<f64>> = (0..5000)
            .map(|_| flat(&nalgebra::Rotation3::from_axis_angle(&nalgebra::Vector3::z_axis(), rng.random_range(0.0..6.3)).into_inner()))
            .collect();
        assert!(!haar_uniformity_test(&samples).unwrap().pass);
    }
}
