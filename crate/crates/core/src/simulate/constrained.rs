use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::algebra::LieAlgebraSpec;
use crate::arnold::ArnoldForm;
use crate::chart::{pullback_drift, ChartPoint, ZChart};
use crate::error::{Error, Result};
use crate::group::GroupElement;

use super::{path_rng, GroupState, PathRecord, PathStatus, Snapshot, TimeGrid};

/// Diffusion on `G x Z` with generator `(eps^2 / 2) L_h` on `Z` plus the Euler-Arnold drift.
#[derive(Debug, Clone)]
pub struct ConstrainedConfig {
    pub eps: f64,
    pub dt: f64,
    pub t_final: f64,
    pub seed: u64,
    pub n_paths: u64,
    pub stride: Option<u64>,
    /// On a curve chart, path `i` of an ensemble starts at `s0 + l (i + 1/2) / n_paths`, a
    /// stratified sample of the uniform law on the curve.
    pub stratified_start: bool,
}

impl ConstrainedConfig {
    pub fn new(eps: f64, dt: f64, t_final: f64, seed: u64) -> Self {
        ConstrainedConfig { eps, dt, t_final, seed, n_paths: 1, stride: None, stratified_start: false }
    }

    pub fn validate(&self) -> Result<TimeGrid> {
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidConfig(format!("eps must be nonnegative, got {}", self.eps)));
        }
        TimeGrid::new(self.dt, self.t_final, self.stride)
    }
}

/// One Stratonovich-Heun path in chart coordinates; `z = zeta(x)` stays on `Z` exactly and
/// `a <- a exp(dt (z_old + z_new) / 2)`.
pub fn constrained_path<C: ZChart + ?Sized>(
    chart: &C,
    cfg: &ConstrainedConfig,
    alg: &LieAlgebraSpec<f64>,
    form: &ArnoldForm<f64>,
    a0: &GroupElement,
    s0: &ChartPoint,
    path_id: u64,
) -> Result<PathRecord> {
    let grid = cfg.validate()?;
    let n = alg.dim();
    let m = chart.param_dim();
    if chart.ambient_dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: chart.ambient_dim() });
    }
    if s0.x.len() != m {
        return Err(Error::DimensionMismatch { expected: m, got: s0.x.len() });
    }
    let rep = alg.representation().ok_or_else(|| Error::NoRepresentation(alg.name().to_string()))?;
    let metric = alg.metric_matrix();
    let mut state = GroupState::new(rep, a0)?;
    let mut rng = path_rng(cfg.seed, path_id);
    let sqrt_dt = grid.dt.sqrt();
    let eps2 = cfg.eps * cfg.eps;

    let mut p = s0.clone();
    chart.normalize(&mut p);
    let mut z = chart.eval(&p);
    let snap = |t: f64, state: &GroupState, z: &[f64], p: &ChartPoint| Snapshot {
        t,
        group: state.flat(),
        algebra: z.to_vec(),
        chart: p.x.clone(),
    };
    let mut snapshots = vec![snap(0.0, &state, &z, &p)];

    // drift and diffusion at a chart point
    let coefficients = |p: &ChartPoint| -> Result<(DVector<f64>, nalgebra::DMatrix<f64>)> {
        let noise = chart.noise(p, &metric);
        let mut f = noise.drift * eps2;
        if !form.is_zero() {
            f += DVector::from_vec(pullback_drift(chart, p, form)?);
        }
        Ok((f, noise.sigma * cfg.eps))
    };

    let mut dw = DVector::zeros(m);
    let mut a_step = vec![0.0; n];
    for step in 1..=grid.steps {
        for w in dw.iter_mut() {
            *w = sqrt_dt * rng.sample::<f64, _>(StandardNormal);
        }
        let (f0, g0) = coefficients(&p)?;
        let x0 = DVector::from_column_slice(&p.x);
        let predictor = &x0 + &f0 * grid.dt + &g0 * &dw;
        let (f1, g1) = coefficients(&ChartPoint { patch: p.patch, x: predictor.as_slice().to_vec() })?;
        let x1 = x0 + (f0 + f1) * (0.5 * grid.dt) + (g0 + g1) * &dw * 0.5;
        p.x.copy_from_slice(x1.as_slice());
        chart.normalize(&mut p);
        let z_new = chart.eval(&p);
        for i in 0..n {
            a_step[i] = 0.5 * grid.dt * (z[i] + z_new[i]);
        }
        state.advance(rep, &a_step);
        z = z_new;
        if grid.records(step) {
            snapshots.push(snap(grid.time(step), &state, &z, &p));
        }
    }
    Ok(PathRecord { path_id, stream_id: path_id, snapshots, status: PathStatus::Completed })
}

/// Specialization for a measure-parametrized curve with vanishing Euler-Arnold drift:
/// `s` is `eps` times a Brownian motion, `a` follows the trapezoid rule on `gamma(s)`.
pub(crate) fn curve_path(
    curve: &crate::curve::CurveSpec,
    cfg: &ConstrainedConfig,
    alg: &LieAlgebraSpec<f64>,
    a0: &GroupElement,
    s0: f64,
    path_id: u64,
) -> Result<PathRecord> {
    let grid = cfg.validate()?;
    let n = alg.dim();
    if curve.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: curve.dim() });
    }
    let rep = alg.representation().ok_or_else(|| Error::NoRepresentation(alg.name().to_string()))?;
    let mut state = GroupState::new(rep, a0)?;
    let mut rng = path_rng(cfg.seed, path_id);
    let scale = cfg.eps * grid.dt.sqrt();
    let mut s = s0.rem_euclid(curve.period);
    let mut z = curve.eval(s);
    let mut z_new = vec![0.0; n];
    let mut a_step = vec![0.0; n];
    let snap = |t: f64, state: &GroupState, z: &[f64], s: f64| Snapshot { t, group: state.flat(), algebra: z.to_vec(), chart: vec![s] };
    let mut snapshots = vec![snap(0.0, &state, &z, s)];
    for step in 1..=grid.steps {
        let w: f64 = rng.sample(StandardNormal);
        s = (s + scale * w).rem_euclid(curve.period);
        curve.eval_into(s, &mut z_new);
        for i in 0..n {
            a_step[i] = 0.5 * grid.dt * (z[i] + z_new[i]);
        }
        state.advance(rep, &a_step);
        std::mem::swap(&mut z, &mut z_new);
        if grid.records(step) {
            snapshots.push(snap(grid.time(step), &state, &z, s));
        }
    }
    Ok(PathRecord { path_id, stream_id: path_id, snapshots, status: PathStatus::Completed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arnold::arnold_form;
    use crate::chart::{CurveChart, SphereOrbitChart};
    use crate::curve::CurveSpec;
    use crate::presets::Preset;
    use nalgebra::DMatrix;

    #[test]
    fn circle_in_so3_keeps_radius() {
        let alg = Preset::So3Euclid.float().unwrap();
        let form = arnold_form(&alg).unwrap();
        let chart = CurveChart::new(CurveSpec::circle(3, 0, 1, 1.5));
        let cfg = ConstrainedConfig { stride: Some(1), ..ConstrainedConfig::new(0.8, 0.01, 2.0, 5) };
        let a0 = GroupElement::identity(alg.representation().unwrap());
        let path = constrained_path(&chart, &cfg, &alg, &form, &a0, &ChartPoint::new(vec![0.0]), 0).unwrap();
        for s in &path.snapshots {
            let r = (s.algebra[0].powi(2) + s.algebra[1].powi(2)).sqrt();
            assert!((r - 1.5).abs() < 1e-14 && s.algebra[2] == 0.0);
        }
    }

    #[test]
    fn noise_free_drift_free_chart_is_a_one_parameter_subgroup() {
        let alg = Preset::So3Euclid.float().unwrap();
        let form = arnold_form(&alg).unwrap();
        let chart = CurveChart::new(CurveSpec::circle(3, 0, 1, 1.0));
        let cfg = ConstrainedConfig::new(0.0, 0.01, 1.0, 0);
        let a0 = GroupElement::identity(alg.representation().unwrap());
        let path = constrained_path(&chart, &cfg, &alg, &form, &a0, &ChartPoint::new(vec![0.3]), 0).unwrap();
        let last = path.last();
        assert_eq!(last.chart, vec![0.3]);
        let z = crate::algebra::AlgebraVector(CurveSpec::circle(3, 0, 1, 1.0).eval(0.3));
        let GroupElement::Matrix(e) = crate::group::group_exp(&z.scale(&1.0), &alg).unwrap() else { panic!() };
        assert!((DMatrix::from_row_slice(3, 3, &last.group) - e).amax() < 1e-12);
    }

    #[test]
    fn abelian_curve_integrates_gamma_along_the_path() {
        // a(t) - a(0) = int gamma(s) dt by the trapezoid rule over the recorded s values
        let alg = Preset::Abelian(2).float().unwrap();
        let form = arnold_form(&alg).unwrap();
        let curve = CurveSpec::circle(2, 0, 1, 1.0);
        let chart = CurveChart::new(curve.clone());
        let cfg = ConstrainedConfig { stride: Some(1), ..ConstrainedConfig::new(1.0, 0.01, 3.0, 9) };
        let a0 = GroupElement::identity(alg.representation().unwrap());
        let general = constrained_path(&chart, &cfg, &alg, &form, &a0, &ChartPoint::new(vec![0.0]), 2).unwrap();
        let fast = curve_path(&curve, &cfg, &alg, &a0, 0.0, 2).unwrap();
        let mut integral = [0.0; 2];
        for w in general.snapshots.windows(2) {
            let (g0, g1) = (curve.eval(w[0].chart[0]), curve.eval(w[1].chart[0]));
            for d in 0..2 {
                integral[d] += 0.5 * 0.01 * (g0[d] + g1[d]);
            }
        }
        for d in 0..2 {
            assert!((general.last().group[d] - integral[d]).abs() < 1e-12);
            assert!((fast.last().group[d] - general.last().group[d]).abs() < 1e-9);
        }
    }

    #[test]
    fn sphere_orbit_paths_stay_on_the_orbit() {
        let alg = Preset::rigid([1.0, 2.0, 3.0]).float().unwrap();
        let form = arnold_form(&alg).unwrap();
        let chart = SphereOrbitChart::new(&alg, 2.0).unwrap();
        let g = alg.metric_matrix();
        let cfg = ConstrainedConfig { stride: Some(10), ..ConstrainedConfig::new(1.0, 0.005, 5.0, 1) };
        let a0 = GroupElement::identity(alg.representation().unwrap());
        let path = constrained_path(&chart, &cfg, &alg, &form, &a0, &ChartPoint::new(vec![0.2, 0.1]), 0).unwrap();
        for s in &path.snapshots {
            let y = &g * DVector::from_column_slice(&s.algebra);
            assert!((y.norm() - 2.0).abs() < 1e-12);
            assert!(s.chart[0].hypot(s.chart[1]) <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn non_invariant_chart_aborts() {
        let alg = Preset::rigid([1.0, 2.0, 3.0]).float().unwrap();
        let form = arnold_form(&alg).unwrap();
        let chart = CurveChart::new(CurveSpec::circle(3, 0, 1, 1.0));
        let cfg = ConstrainedConfig::new(1.0, 0.01, 1.0, 0);
        let a0 = GroupElement::identity(alg.representation().unwrap());
        let err = constrained_path(&chart, &cfg, &alg, &form, &a0, &ChartPoint::new(vec![0.4]), 0).unwrap_err();
        assert!(matches!(err, Error::ChartNotInvariant { .. }));
    }
}
