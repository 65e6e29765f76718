//! Parametrized invariant manifolds `Z` in the Lie algebra.
//!
//! A chart maps coordinates `x` to `z = zeta(x)`, carries the measure density `m(x)` and
//! supplies the diffusion whose generator is the Laplace-Beltrami operator of the rescaled
//! metric `h = kappa * g~`, where `g~` is the metric induced from `g` and `kappa` is chosen
//! pointwise so that `sqrt(det h) = m`.

use std::fmt::Debug;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use crate::algebra::LieAlgebraSpec;
use crate::arnold::ArnoldForm;
use crate::curve::CurveSpec;
use crate::error::{Error, Result};
use crate::scalar::{rational_from_f64, Rational, Scalar};

/// Tangency tolerance for the Euler-Arnold drift on a chart.
pub const INVARIANCE_TOLERANCE: f64 = 1e-8;

/// Chart coordinates together with the patch they refer to.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartPoint {
    pub patch: u8,
    pub x: Vec<f64>,
}

impl ChartPoint {
    pub fn new(x: Vec<f64>) -> Self {
        ChartPoint { patch: 0, x }
    }
}

/// Diffusion coefficients on a chart for unit noise amplitude.
///
/// The Stratonovich SDE `dx = eps^2 drift dt + eps sigma o dW` has generator `(1/2) L_h`.
#[derive(Debug, Clone)]
pub struct ChartNoise {
    pub sigma: DMatrix<f64>,
    pub drift: DVector<f64>,
}

pub trait ZChart: Debug + Send + Sync {
    fn name(&self) -> String;
    fn param_dim(&self) -> usize;
    fn ambient_dim(&self) -> usize;
    fn eval(&self, p: &ChartPoint) -> Vec<f64>;

    /// `d zeta / dx`, `ambient_dim x param_dim`.
    fn jacobian(&self, p: &ChartPoint) -> DMatrix<f64> {
        let n = self.ambient_dim();
        let m = self.param_dim();
        let mut j = DMatrix::zeros(n, m);
        for c in 0..m {
            let h = 1e-6 * (1.0 + p.x[c].abs());
            let mut plus = p.clone();
            let mut minus = p.clone();
            plus.x[c] += h;
            minus.x[c] -= h;
            let (zp, zm) = (self.eval(&plus), self.eval(&minus));
            for r in 0..n {
                j[(r, c)] = (zp[r] - zm[r]) / (2.0 * h);
            }
        }
        j
    }

    /// Density of the invariant measure with respect to `dx`.
    fn density(&self, p: &ChartPoint) -> f64;

    /// Bring coordinates back to a canonical range (wrap periods, switch patches).
    fn normalize(&self, _p: &mut ChartPoint) {}

    /// Deterministic chart point for `u` in the unit cube of dimension `param_dim`.
    fn sample_unit(&self, u: &[f64]) -> ChartPoint;

    /// Exact rational point of `Z` for the same `u`, when the chart admits one.
    fn exact_point(&self, _u: &[f64]) -> Option<Vec<Rational>> {
        None
    }

    fn noise(&self, p: &ChartPoint, metric: &DMatrix<f64>) -> ChartNoise {
        laplace_beltrami_noise(self, p, metric)
    }

    /// The underlying curve for measure-parametrized curve charts.
    fn as_curve(&self) -> Option<&CurveSpec> {
        None
    }
}

/// Curve `Z = gamma([0, l))` parametrized by measure (density 1): Brownian motion in `s`.
#[derive(Debug, Clone)]
pub struct CurveChart {
    pub curve: CurveSpec,
}

impl CurveChart {
    pub fn new(curve: CurveSpec) -> Self {
        CurveChart { curve }
    }
}

impl ZChart for CurveChart {
    fn name(&self) -> String {
        "curve".into()
    }

    fn param_dim(&self) -> usize {
        1
    }

    fn ambient_dim(&self) -> usize {
        self.curve.dim()
    }

    fn eval(&self, p: &ChartPoint) -> Vec<f64> {
        self.curve.eval(p.x[0])
    }

    fn jacobian(&self, p: &ChartPoint) -> DMatrix<f64> {
        DMatrix::from_vec(self.curve.dim(), 1, self.curve.derivative(p.x[0]))
    }

    fn density(&self, _p: &ChartPoint) -> f64 {
        1.0
    }

    fn normalize(&self, p: &mut ChartPoint) {
        p.x[0] = p.x[0].rem_euclid(self.curve.period);
    }

    fn sample_unit(&self, u: &[f64]) -> ChartPoint {
        ChartPoint::new(vec![self.curve.parameter_of_unit(u[0])])
    }

    fn exact_point(&self, u: &[f64]) -> Option<Vec<Rational>> {
        self.curve.exact_point(u[0])
    }

    fn noise(&self, _p: &ChartPoint, _metric: &DMatrix<f64>) -> ChartNoise {
        ChartNoise { sigma: DMatrix::identity(1, 1), drift: DVector::zeros(1) }
    }

    fn as_curve(&self) -> Option<&CurveSpec> {
        Some(&self.curve)
    }
}

/// Coadjoint orbit `{z : |g z| = rho}` of an so(3)-type algebra.
///
/// Two stereographic patches; `patch 0` projects from the pole `-e3`, `patch 1` from `+e3`.
/// The measure is the Euclidean area of the momentum sphere times `sqrt(det g^-1)`.
#[derive(Debug, Clone)]
pub struct SphereOrbitChart {
    rho: f64,
    ginv: Matrix3<f64>,
    ginv_exact: Option<Vec<Vec<Rational>>>,
    volume_factor: f64,
}

impl SphereOrbitChart {
    pub fn new(alg: &LieAlgebraSpec<f64>, rho: f64) -> Result<Self> {
        if alg.dim() != 3 {
            return Err(Error::InvalidConfig(format!(
                "sphere orbit chart needs a 3-dimensional algebra, got {}",
                alg.dim()
            )));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidConfig("sphere orbit radius must be positive".into()));
        }
        let g = alg.metric_matrix();
        let ginv = Matrix3::from_fn(|i, j| g[(i, j)]).try_inverse().ok_or(Error::SingularMetric)?;
        let ginv_exact = alg.to_exact().and_then(|a| crate::linalg::invert(a.metric()));
        Ok(SphereOrbitChart { rho, ginv, ginv_exact, volume_factor: ginv.determinant().sqrt() })
    }

    pub fn radius(&self) -> f64 {
        self.rho
    }

    fn unit_normal(p: &ChartPoint) -> Vector3<f64> {
        let (x1, x2) = (p.x[0], p.x[1]);
        let r2 = x1 * x1 + x2 * x2;
        let sign = if p.patch == 0 { 1.0 } else { -1.0 };
        Vector3::new(2.0 * x1, 2.0 * x2, sign * (1.0 - r2)) / (1.0 + r2)
    }
}

impl ZChart for SphereOrbitChart {
    fn name(&self) -> String {
        format!("sphere_orbit(rho={})", self.rho)
    }

    fn param_dim(&self) -> usize {
        2
    }

    fn ambient_dim(&self) -> usize {
        3
    }

    fn eval(&self, p: &ChartPoint) -> Vec<f64> {
        let z = self.ginv * Self::unit_normal(p) * self.rho;
        z.as_slice().to_vec()
    }

    fn jacobian(&self, p: &ChartPoint) -> DMatrix<f64> {
        let (x1, x2) = (p.x[0], p.x[1]);
        let d = 1.0 + x1 * x1 + x2 * x2;
        let sign = if p.patch == 0 { 1.0 } else { -1.0 };
        let dn = nalgebra::Matrix3x2::new(
            2.0 / d - 4.0 * x1 * x1 / (d * d),
            -4.0 * x1 * x2 / (d * d),
            -4.0 * x1 * x2 / (d * d),
            2.0 / d - 4.0 * x2 * x2 / (d * d),
            -sign * 4.0 * x1 / (d * d),
            -sign * 4.0 * x2 / (d * d),
        );
        let j = self.ginv * dn * self.rho;
        DMatrix::from_fn(3, 2, |r, c| j[(r, c)])
    }

    fn density(&self, p: &ChartPoint) -> f64 {
        let d = 1.0 + p.x[0] * p.x[0] + p.x[1] * p.x[1];
        self.volume_factor * self.rho * self.rho * 4.0 / (d * d)
    }

    fn normalize(&self, p: &mut ChartPoint) {
        let r2 = p.x[0] * p.x[0] + p.x[1] * p.x[1];
        if r2 > 1.0 {
            p.x[0] /= r2;
            p.x[1] /= r2;
            p.patch = 1 - p.patch;
        }
    }

    fn sample_unit(&self, u: &[f64]) -> ChartPoint {
        ChartPoint::new(vec![4.0 * u[0] - 2.0, 4.0 * u[1] - 2.0])
    }

    fn exact_point(&self, u: &[f64]) -> Option<Vec<Rational>> {
        let ginv = self.ginv_exact.as_ref()?;
        let x1 = rational_from_f64(4.0 * u[0] - 2.0)?;
        let x2 = rational_from_f64(4.0 * u[1] - 2.0)?;
        let one = Rational::from_i64(1);
        let two = Rational::from_i64(2);
        let r2 = x1.clone() * x1.clone() + x2.clone() * x2.clone();
        let d = one.clone() + r2.clone();
        let n = [two.clone() * x1 / d.clone(), two * x2 / d.clone(), (one - r2) / d];
        let rho = rational_from_f64(self.rho)?;
        Some(
            (0..3)
                .map(|i| {
                    (0..3).fold(Rational::from_i64(0), |acc, j| acc + ginv[i][j].clone() * n[j].clone()) * rho.clone()
                })
                .collect(),
        )
    }
}

/// Rescaled metric data at `p`: `(h^-1, sqrt(det h))`.
fn rescaled_metric<C: ZChart + ?Sized>(chart: &C, p: &ChartPoint, metric: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let m = chart.param_dim() as f64;
    let j = chart.jacobian(p);
    let induced = j.transpose() * metric * &j;
    let det = induced.determinant();
    let density = chart.density(p);
    // h = kappa g~ with det(h) = kappa^m det(g~) = density^2
    let kappa = (density * density / det).powf(1.0 / m);
    let hinv = induced.try_inverse().unwrap_or_else(|| DMatrix::from_element(j.ncols(), j.ncols(), f64::NAN)) / kappa;
    (hinv, density)
}

/// Stratonovich coefficients of the Laplace-Beltrami diffusion of `h`, by central differences.
pub fn laplace_beltrami_noise<C: ZChart + ?Sized>(chart: &C, p: &ChartPoint, metric: &DMatrix<f64>) -> ChartNoise {
    let m = chart.param_dim();
    let root = |q: &ChartPoint| -> DMatrix<f64> {
        let (hinv, _) = rescaled_metric(chart, q, metric);
        hinv.cholesky().map(|c| c.l()).unwrap_or_else(|| DMatrix::from_element(m, m, f64::NAN))
    };
    let (_, sqrt_h) = rescaled_metric(chart, p, metric);
    let sigma = root(p);
    // Ito drift (1/2) (1/sqrt h) d_j (sqrt h h^ij), minus the Stratonovich correction
    // (1/2) sum_k sigma_jk d_j sigma_ik.
    let mut drift = DVector::zeros(m);
    for jdx in 0..m {
        let step = 1e-5 * (1.0 + p.x[jdx].abs());
        let mut plus = p.clone();
        let mut minus = p.clone();
        plus.x[jdx] += step;
        minus.x[jdx] -= step;
        let (hp, dp) = rescaled_metric(chart, &plus, metric);
        let (hm, dm) = rescaled_metric(chart, &minus, metric);
        let d_flux = (hp * dp - hm * dm) / (2.0 * step);
        let d_sigma = (root(&plus) - root(&minus)) / (2.0 * step);
        for i in 0..m {
            drift[i] += 0.5 * d_flux[(i, jdx)] / sqrt_h;
            for k in 0..m {
                drift[i] -= 0.5 * sigma[(jdx, k)] * d_sigma[(i, k)];
            }
        }
    }
    ChartNoise { sigma, drift }
}

/// Chart velocity `v` with `J v = q(z, z)`, or an error when the drift leaves `Z`.
pub fn pullback_drift<C: ZChart + ?Sized>(chart: &C, p: &ChartPoint, form: &ArnoldForm<f64>) -> Result<Vec<f64>> {
    let z = chart.eval(p);
    let mut q = vec![0.0; z.len()];
    form.rhs_into(&z, &mut q);
    let qnorm = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    if qnorm == 0.0 {
        return Ok(vec![0.0; chart.param_dim()]);
    }
    let j = chart.jacobian(p);
    let qv = DVector::from_vec(q);
    let v = j.clone().svd(true, true).solve(&qv, 1e-14).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let residual = (&j * &v - &qv).norm();
    let tolerance = INVARIANCE_TOLERANCE * qnorm.max(1.0);
    if !(residual <= tolerance) {
        return Err(Error::ChartNotInvariant { point: z, residual, tolerance });
    }
    Ok(v.as_slice().to_vec())
}

/// Largest tangency residual of the Euler-Arnold drift over `n_points` chart samples.
pub fn check_chart_invariance<C: ZChart + ?Sized>(chart: &C, alg: &LieAlgebraSpec<f64>, form: &ArnoldForm<f64>, n_points: usize) -> Result<()> {
    if chart.ambient_dim() != alg.dim() {
        return Err(Error::DimensionMismatch { expected: alg.dim(), got: chart.ambient_dim() });
    }
    let mut halton = crate::hypo::Halton::new(chart.param_dim());
    for _ in 0..n_points {
        let p = chart.sample_unit(&halton.next_point());
        if chart.density(&p) <= 0.0 {
            return Err(Error::InvalidConfig(format!("{}: measure density not positive at {:?}", chart.name(), p.x)));
        }
        pullback_drift(chart, &p, form)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arnold::arnold_form;
    use crate::presets::Preset;

    #[test]
    fn sphere_chart_lies_on_orbit_in_both_patches() {
        let alg = Preset::rigid([1.0, 2.0, 3.0]).float().unwrap();
        let g = alg.metric_matrix();
        let chart = SphereOrbitChart::new(&alg, 1.5).unwrap();
        for (patch, x) in [(0, [0.3, -0.2]), (1, [0.3, -0.2]), (0, [1.7, 2.1])] {
            let mut p = ChartPoint { patch, x: x.to_vec() };
            let z = DVector::from_vec(chart.eval(&p));
            assert!(((&g * &z).norm() - 1.5).abs() < 1e-14);
            chart.normalize(&mut p);
            let z2 = DVector::from_vec(chart.eval(&p));
            assert!((z - z2).norm() < 1e-14);
        }
    }

    #[test]
    fn sphere_jacobian_matches_differences() {
        let alg = Preset::rigid([1.0, 2.0, 3.0]).float().unwrap();
        let chart = SphereOrbitChart::new(&alg, 1.0).unwrap();
        for patch in [0, 1] {
            let p = ChartPoint { patch, x: vec![0.4, -0.7] };
            let analytic = chart.jacobian(&p);
            #[derive(Debug)]
            struct Fd<'a>(&'a SphereOrbitChart);
            impl ZChart for Fd<'_> {
                fn name(&self) -> String {
                    String::new()
                }
                fn param_dim(&self) -> usize {
                    2
                }
                fn ambient_dim(&self) -> usize {
                    3
                }
                fn eval(&self, p: &ChartPoint) -> Vec<f64> {
                    self.0.eval(p)
                }
                fn density(&self, p: &ChartPoint) -> f64 {
                    self.0.density(p)
                }
                fn sample_unit(&self, u: &[f64]) -> ChartPoint {
                    self.0.sample_unit(u)
                }
            }
            assert!((analytic - Fd(&chart).jacobian(&p)).amax() < 1e-8);
        }
    }

    #[test]
    fn round_sphere_noise_has_no_stratonovich_drift_at_the_origin() {
        // g = I: h is the round metric 4/(1+r^2)^2 I, so sigma = (1+r^2)/2 I and the
        // Stratonovich drift (1/2) LB x - (1/2) sigma . grad sigma vanishes at x = 0.
        let alg = Preset::So3Euclid.float().unwrap();
        let chart = SphereOrbitChart::new(&alg, 1.0).unwrap();
        let g = alg.metric_matrix();
        let noise = chart.noise(&ChartPoint::new(vec![0.0, 0.0]), &g);
        assert!((noise.sigma.clone() - DMatrix::identity(2, 2) * 0.5).amax() < 1e-9);
        assert!(noise.drift.amax() < 1e-8);
        // away from the origin: Ito drift of the round-sphere Brownian motion in
        // stereographic coordinates is zero (conformal, dim 2), so the Stratonovich drift
        // is minus the correction (1/2) s grad s with s = (1+r^2)/2.
        let x = [0.3, -0.5];
        let r2 = x[0] * x[0] + x[1] * x[1];
        let s = (1.0 + r2) / 2.0;
        let noise = chart.noise(&ChartPoint::new(x.to_vec()), &g);
        for i in 0..2 {
            assert!((noise.drift[i] + 0.5 * s * x[i]).abs() < 1e-7, "{}", noise.drift);
        }
    }

    #[test]
    fn rigid_body_drift_is_tangent_to_orbit() {
        let alg = Preset::rigid([1.0, 2.0, 3.0]).float().unwrap();
        let form = arnold_form(&alg).unwrap();
        let chart = SphereOrbitChart::new(&alg, 2.0).unwrap();
        check_chart_invariance(&chart, &alg, &form, 64).unwrap();
    }

    #[test]
    fn non_invariant_chart_is_rejected() {
        // a circle in the e1 e2 plane is not invariant under the rigid body flow
        let alg = Preset::rigid([1.0, 2.0, 3.0]).float().unwrap();
        let form = arnold_form(&alg).unwrap();
        let chart = CurveChart::new(CurveSpec::circle(3, 0, 1, 1.0));
        let err = check_chart_invariance(&chart, &alg, &form, 16).unwrap_err();
        assert!(matches!(err, Error::ChartNotInvariant { .. }));
    }

    #[test]
    fn curve_exact_points_match_samples() {
        let chart = CurveChart::new(CurveSpec::circle(3, 0, 1, 2.0));
        let u = [0.3];
        let z = chart.eval(&chart.sample_unit(&u));
        let exact: Vec<f64> = chart.exact_point(&u).unwrap().iter().map(|r| r.to_f64()).collect();
        for (a, b) in z.iter().zip(&exact) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
