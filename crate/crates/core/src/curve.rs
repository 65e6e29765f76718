//! Closed curves in `R^n` given by finite Fourier series, parametrized by measure.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{rational_from_f64, Rational, Scalar};

/// `gamma(s) = mean + sum_k cos_k cos(k w s) + sin_k sin(k w s)` with `w = 2 pi / period`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    pub mean: Vec<f64>,
    /// `cos[k-1]` is the coefficient vector of `cos(k w s)`.
    #[serde(default)]
    pub cos: Vec<Vec<f64>>,
    #[serde(default)]
    pub sin: Vec<Vec<f64>>,
    #[serde(default = "two_pi")]
    pub period: f64,
}

fn two_pi() -> f64 {
    2.0 * PI
}

/// Symmetric positive-semidefinite `n x n` matrix.
pub type SigmaMatrix = Vec<Vec<f64>>;

impl CurveSpec {
    pub fn new(mean: Vec<f64>, cos: Vec<Vec<f64>>, sin: Vec<Vec<f64>>, period: f64) -> Result<Self> {
        let c = CurveSpec { mean, cos, sin, period };
        c.validate()?;
        Ok(c)
    }

    /// `rho (cos s, sin s)` in the plane of basis vectors `i`, `j` of `R^n`, period `2 pi`.
    pub fn circle(n: usize, i: usize, j: usize, rho: f64) -> Self {
        let mut c = vec![0.0; n];
        let mut s = vec![0.0; n];
        c[i] = rho;
        s[j] = rho;
        CurveSpec { mean: vec![0.0; n], cos: vec![c], sin: vec![s], period: 2.0 * PI }
    }

    pub fn constant(point: Vec<f64>) -> Self {
        CurveSpec { mean: point, cos: Vec::new(), sin: Vec::new(), period: 2.0 * PI }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.mean.len();
        if n == 0 {
            return Err(Error::InvalidConfig("curve needs a nonempty mean vector".into()));
        }
        if !(self.period > 0.0 && self.period.is_finite()) {
            return Err(Error::InvalidConfig("curve period must be positive".into()));
        }
        if self.cos.iter().chain(&self.sin).any(|v| v.len() != n) {
            return Err(Error::InvalidConfig(format!("curve coefficients must have length {n}")));
        }
        if self.mean.iter().chain(self.cos.iter().flatten()).chain(self.sin.iter().flatten()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidConfig("curve coefficients must be finite".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn modes(&self) -> usize {
        self.cos.len().max(self.sin.len())
    }

    fn omega(&self) -> f64 {
        2.0 * PI / self.period
    }

    pub fn eval(&self, s: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(s, &mut out);
        out
    }

    pub fn eval_into(&self, s: f64, out: &mut [f64]) {
        out.copy_from_slice(&self.mean);
        let w = self.omega();
        for k in 1..=self.modes() {
            let (sn, cs) = (k as f64 * w * s).sin_cos();
            if let Some(c) = self.cos.get(k - 1) {
                out.iter_mut().zip(c).for_each(|(o, a)| *o += a * cs);
            }
            if let Some(b) = self.sin.get(k - 1) {
                out.iter_mut().zip(b).for_each(|(o, a)| *o += a * sn);
            }
        }
    }

    /// `d gamma / ds`.
    pub fn derivative(&self, s: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        let w = self.omega();
        for k in 1..=self.modes() {
            let kw = k as f64 * w;
            let (sn, cs) = (kw * s).sin_cos();
            if let Some(c) = self.cos.get(k - 1) {
                out.iter_mut().zip(c).for_each(|(o, a)| *o -= a * kw * sn);
            }
            if let Some(b) = self.sin.get(k - 1) {
                out.iter_mut().zip(b).for_each(|(o, a)| *o += a * kw * cs);
            }
        }
        out
    }

    /// Exact rational point on the curve, for rational coefficients.
    ///
    /// `u` in `[0, 1)` is mapped through the rational parametrization of the unit circle,
    /// `t = 2u - 1`, `(cos, sin) = ((1 - t^2), 2t) / (1 + t^2)`; higher harmonics follow by
    /// complex multiplication.
    pub fn exact_point(&self, u: f64) -> Option<Vec<Rational>> {
        let one = Rational::from_i64(1);
        let t = rational_from_f64(2.0 * u - 1.0)?;
        let den = one.clone() + t.clone() * t.clone();
        let c1 = (one.clone() - t.clone() * t.clone()) / den.clone();
        let s1 = Rational::from_i64(2) * t / den;
        let mut out = self.mean.iter().map(|x| rational_from_f64(*x)).collect::<Option<Vec<_>>>()?;
        let (mut ck, mut sk) = (one, Rational::from_i64(0));
        for k in 0..self.modes() {
            let next_c = ck.clone() * c1.clone() - sk.clone() * s1.clone();
            sk = sk * c1.clone() + ck * s1.clone();
            ck = next_c;
            for (coeffs, trig) in [(self.cos.get(k), &ck), (self.sin.get(k), &sk)] {
                if let Some(v) = coeffs {
                    for (o, a) in out.iter_mut().zip(v) {
                        *o = o.clone() + rational_from_f64(*a)? * trig.clone();
                    }
                }
            }
        }
        Some(out)
    }

    /// Parameter value in `[0, period)` matching [`CurveSpec::exact_point`] at the same `u`.
    pub fn parameter_of_unit(&self, u: f64) -> f64 {
        let t = 2.0 * u - 1.0;
        let theta = (2.0 * t).atan2(1.0 - t * t);
        theta.rem_euclid(2.0 * PI) / self.omega()
    }

    /// Mean of `gamma` over one period. Exact for a finite Fourier series.
    pub fn average(&self) -> Vec<f64> {
        self.mean.clone()
    }

    pub fn is_centered(&self, tol: f64) -> bool {
        self.mean.iter().all(|x| x.abs() <= tol)
    }

    /// Subtract the mean; returns the centered curve and the removed drift `z0`.
    pub fn center(&self) -> (CurveSpec, Vec<f64>) {
        let mut c = self.clone();
        let z0 = std::mem::replace(&mut c.mean, vec![0.0; self.dim()]);
        (c, z0)
    }

    /// `Sigma_kl = (1/l) int_0^l phi'_k phi'_l ds` where `phi'' = gamma`, by Parseval.
    ///
    /// Each harmonic `k` contributes `(A A^T + B B^T) / (2 (k w)^2)`.
    pub fn sigma_matrix(&self) -> Result<SigmaMatrix> {
        let scale = self
            .cos
            .iter()
            .chain(&self.sin)
            .flatten()
            .fold(1.0f64, |m, x| m.max(x.abs()));
        if !self.is_centered(1e-12 * scale) {
            return Err(Error::NotCentered(self.mean.clone()));
        }
        let n = self.dim();
        let w = self.omega();
        let mut sigma = vec![vec![0.0; n]; n];
        for k in 1..=self.modes() {
            let f = 0.5 / (k as f64 * w).powi(2);
            for v in [self.cos.get(k - 1), self.sin.get(k - 1)].into_iter().flatten() {
                for i in 0..n {
                    for j in 0..n {
                        sigma[i][j] += f * v[i] * v[j];
                    }
                }
            }
        }
        Ok(sigma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[Vec<f64>], b: &[Vec<f64>], tol: f64) -> bool {
        a.iter().flatten().zip(b.iter().flatten()).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn circle_sigma_is_half_identity() {
        let c = CurveSpec::circle(2, 0, 1, 1.0);
        assert!(close(&c.sigma_matrix().unwrap(), &[vec![0.5, 0.0], vec![0.0, 0.5]], 1e-15));
    }

    #[test]
    fn single_mode_sigma() {
        let a = 1.7;
        let c = CurveSpec::new(vec![0.0, 0.0], vec![vec![a, 0.0]], vec![], 2.0 * PI).unwrap();
        assert!(close(&c.sigma_matrix().unwrap(), &[vec![a * a / 2.0, 0.0], vec![0.0, 0.0]], 1e-14));
        assert!(close(&CurveSpec::constant(vec![0.0; 3]).sigma_matrix().unwrap(), &vec![vec![0.0; 3]; 3], 0.0));
    }

    #[test]
    fn sigma_matches_quadrature() {
        // phi' from numerically integrating gamma, then the covariance by the trapezoid rule
        let c = CurveSpec::new(
            vec![0.0, 0.0],
            vec![vec![0.3, -1.0], vec![0.5, 0.2]],
            vec![vec![1.0, 0.4], vec![0.0, -0.7]],
            3.0,
        )
        .unwrap();
        let m = 20000;
        let h = c.period / m as f64;
        let mut phi1 = vec![vec![0.0; 2]; m];
        for i in 1..m {
            let (g0, g1) = (c.eval((i - 1) as f64 * h), c.eval(i as f64 * h));
            for d in 0..2 {
                phi1[i][d] = phi1[i - 1][d] + 0.5 * h * (g0[d] + g1[d]);
            }
        }
        let mean: Vec<f64> = (0..2).map(|d| phi1.iter().map(|p| p[d]).sum::<f64>() / m as f64).collect();
        let mut quad = vec![vec![0.0; 2]; 2];
        for p in &phi1 {
            for i in 0..2 {
                for j in 0..2 {
                    quad[i][j] += (p[i] - mean[i]) * (p[j] - mean[j]) / m as f64;
                }
            }
        }
        assert!(close(&c.sigma_matrix().unwrap(), &quad, 1e-6));
    }

    #[test]
    fn centering() {
        let c = CurveSpec::new(vec![1.0, 0.0], vec![vec![1.0, 0.0]], vec![vec![0.0, 1.0]], 2.0 * PI).unwrap();
        let (centered, z0) = c.center();
        assert_eq!(z0, vec![1.0, 0.0]);
        assert_eq!(centered, CurveSpec::circle(2, 0, 1, 1.0));
        assert!(matches!(c.sigma_matrix(), Err(Error::NotCentered(_))));
        let (again, zero) = centered.center();
        assert_eq!(again, centered);
        assert_eq!(zero, vec![0.0, 0.0]);
    }

    #[test]
    fn exact_points_lie_on_curve() {
        let c = CurveSpec::new(vec![0.25, 0.0], vec![vec![1.0, 0.5], vec![0.0, 2.0]], vec![vec![0.0, 1.0]], 5.0).unwrap();
        for u in [0.0, 0.1, 0.37, 0.5, 0.93] {
            let exact: Vec<f64> = c.exact_point(u).unwrap().iter().map(|r| r.to_f64()).collect();
            let float = c.eval(c.parameter_of_unit(u));
            for (a, b) in exact.iter().zip(&float) {
                assert!((a - b).abs() < 1e-12, "u={u}: {exact:?} vs {float:?}");
            }
        }
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        let c = CurveSpec::new(vec![0.0], vec![vec![1.0], vec![0.3]], vec![vec![-0.4]], 1.5).unwrap();
        let (s, h) = (0.7, 1e-6);
        let fd = (c.eval(s + h)[0] - c.eval(s - h)[0]) / (2.0 * h);
        assert!((c.derivative(s)[0] - fd).abs() < 1e-7);
    }
}
