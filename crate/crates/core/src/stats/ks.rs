/// One-sample Kolmogorov-Smirnov distance `sup |F_n - F|`.
///
/// NaN samples are ordered last and make the statistic 1.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    if samples.is_empty() {
        return 1.0;
    }
    if samples.iter().any(|x| x.is_nan()) {
        return 1.0;
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        d.max((i + 1) as f64 / n - f).max(f - i as f64 / n)
    })
}

/// Asymptotic p-value of the KS distance `d` for `n` samples, with Stephens' small-sample
/// correction.
pub fn kolmogorov_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Smallest distance whose [`kolmogorov_pvalue`] is at most `alpha`, by bisection.
pub fn ks_critical_distance(n: usize, alpha: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_pvalue(mid, n) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_grid_distance() {
        // midpoints (i + 1/2) / n are at distance 1 / (2n) from the uniform CDF
        let xs: Vec<f64> = (0..10).map(|i| (i as f64 + 0.5) / 10.0).collect();
        assert!((ks_statistic(&xs, |x| x.clamp(0.0, 1.0)) - 0.05).abs() < 1e-15);
        assert_eq!(ks_statistic(&[2.0], |x| x.clamp(0.0, 1.0)), 1.0);
    }

    #[test]
    fn pvalue_reference_points() {
        // Q(1.36) = 0.0494, Q(1.63) = 0.0098
        assert!((kolmogorov_pvalue(1.36 / 1e3, 1_000_000) - 0.0494).abs() < 1e-3);
        assert!((kolmogorov_pvalue(1.63 / 1e3, 1_000_000) - 0.0098).abs() < 1e-3);
        assert_eq!(kolmogorov_pvalue(0.0, 10), 1.0);
    }

    #[test]
    fn critical_distance_inverts_the_pvalue() {
        // the 5% point of the Kolmogorov law is 1.3581
        assert!((ks_critical_distance(1_000_000, 0.05) * 1e3 - 1.3581).abs() < 2e-3);
        let d = ks_critical_distance(500, 1e-3);
        assert!((kolmogorov_pvalue(d, 500) - 1e-3).abs() < 1e-9);
    }
}
