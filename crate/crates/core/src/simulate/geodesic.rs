use crate::algebra::{AlgebraVector, LieAlgebraSpec};
use crate::arnold::ArnoldForm;
use crate::error::{Error, Result};
use crate::group::{momentum, GroupElement};

use super::{GroupState, PathRecord, PathStatus, Snapshot, TimeGrid};

/// How the group variable follows `a^{-1} da/dt = z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GroupUpdate {
    /// `a <- a exp(dt z_mid)`.
    LieEuler,
    /// Fourth-order Magnus step with `z` at the two Gauss points.
    #[default]
    Magnus4,
}

/// One step of the geodesic flow: classical RK4 for `dz/dt = q(z, z)`, then the group update.
pub fn geodesic_step(
    a: &GroupElement,
    z: &AlgebraVector<f64>,
    dt: f64,
    alg: &LieAlgebraSpec<f64>,
    form: &ArnoldForm<f64>,
    update: GroupUpdate,
) -> Result<(GroupElement, AlgebraVector<f64>)> {
    let rep = alg.representation().ok_or_else(|| Error::NoRepresentation(alg.name().to_string()))?;
    if z.dim() != alg.dim() {
        return Err(Error::DimensionMismatch { expected: alg.dim(), got: z.dim() });
    }
    let mut state = GroupState::new(rep, a)?;
    let mut stepper = Stepper::new(alg.dim());
    let mut zz = z.0.clone();
    stepper.step(&mut state, &mut zz, dt, alg, form, update);
    Ok((state.element(), AlgebraVector(zz)))
}

/// Integrate the geodesic from `(a0, z0)` over `[0, t_final]`.
pub fn integrate_geodesic(
    alg: &LieAlgebraSpec<f64>,
    form: &ArnoldForm<f64>,
    a0: &GroupElement,
    z0: &AlgebraVector<f64>,
    grid: &TimeGrid,
    update: GroupUpdate,
) -> Result<PathRecord> {
    let rep = alg.representation().ok_or_else(|| Error::NoRepresentation(alg.name().to_string()))?;
    if z0.dim() != alg.dim() {
        return Err(Error::DimensionMismatch { expected: alg.dim(), got: z0.dim() });
    }
    let mut state = GroupState::new(rep, a0)?;
    let mut z = z0.0.clone();
    let mut stepper = Stepper::new(alg.dim());
    let snap = |t: f64, state: &GroupState, z: &[f64]| Snapshot { t, group: state.flat(), algebra: z.to_vec(), chart: Vec::new() };
    let mut snapshots = vec![snap(0.0, &state, &z)];
    for step in 1..=grid.steps {
        stepper.step(&mut state, &mut z, grid.dt, alg, form, update);
        if grid.records(step) {
            snapshots.push(snap(grid.time(step), &state, &z));
        }
    }
    Ok(PathRecord { path_id: 0, stream_id: 0, snapshots, status: PathStatus::Completed })
}

/// Largest energy and momentum deviations from their initial values along a geodesic.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ConservationDrift {
    pub dt: f64,
    pub energy: f64,
    pub momentum: f64,
}

/// Integrate with `dt` over `[0, t_final]`, checking every step.
pub fn conservation_drift(
    alg: &LieAlgebraSpec<f64>,
    form: &ArnoldForm<f64>,
    a0: &GroupElement,
    z0: &AlgebraVector<f64>,
    dt: f64,
    t_final: f64,
    update: GroupUpdate,
) -> Result<ConservationDrift> {
    let grid = TimeGrid::new(dt, t_final, Some(1))?;
    let path = integrate_geodesic(alg, form, a0, z0, &grid, update)?;
    let rep = alg.representation().expect("checked by integrate_geodesic");
    let e0 = alg.energy(z0)?;
    let m0 = momentum(a0, z0, alg)?;
    let (mut energy, mut mom) = (0.0f64, 0.0f64);
    for s in &path.snapshots {
        let z = AlgebraVector(s.algebra.clone());
        energy = energy.max((alg.energy(&z)? - e0).abs());
        let m = momentum(&GroupElement::from_flat(rep, &s.group), &z, alg)?;
        mom = mom.max(m.sub(&m0).norm());
    }
    Ok(ConservationDrift { dt, energy, momentum: mom })
}

/// Scratch buffers for RK4 plus the group update.
struct Stepper {
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
}

impl Stepper {
    fn new(n: usize) -> Self {
        Stepper { k: std::array::from_fn(|_| vec![0.0; n]), tmp: vec![0.0; n] }
    }

    fn step(
        &mut self,
        state: &mut GroupState,
        z: &mut [f64],
        dt: f64,
        alg: &LieAlgebraSpec<f64>,
        form: &ArnoldForm<f64>,
        update: GroupUpdate,
    ) {
        let rep = alg.representation().expect("checked by caller");
        let n = z.len();
        let z0 = z.to_vec();
        if form.is_zero() {
            let x: Vec<f64> = z0.iter().map(|v| v * dt).collect();
            state.advance(rep, &x);
            return;
        }
        form.rhs_into(z, &mut self.k[0]);
        for (stage, c) in [(1, 0.5), (2, 0.5), (3, 1.0)] {
            let (done, rest) = self.k.split_at_mut(stage);
            for i in 0..n {
                self.tmp[i] = z0[i] + c * dt * done[stage - 1][i];
            }
            form.rhs_into(&self.tmp, &mut rest[0]);
        }
        for i in 0..n {
            z[i] = z0[i] + dt / 6.0 * (self.k[0][i] + 2.0 * self.k[1][i] + 2.0 * self.k[2][i] + self.k[3][i]);
        }
        let x = match update {
            GroupUpdate::LieEuler => {
                // midpoint value from the cubic Hermite interpolant
                let mut f1 = vec![0.0; n];
                form.rhs_into(z, &mut f1);
                let zm = hermite(&z0, &self.k[0], z, &f1, dt, 0.5);
                zm.iter().map(|v| v * dt).collect::<Vec<_>>()
            }
            GroupUpdate::Magnus4 => {
                let mut f1 = vec![0.0; n];
                form.rhs_into(z, &mut f1);
                let r = 3f64.sqrt() / 6.0;
                let za = AlgebraVector(hermite(&z0, &self.k[0], z, &f1, dt, 0.5 - r));
                let zb = AlgebraVector(hermite(&z0, &self.k[0], z, &f1, dt, 0.5 + r));
                let comm = alg.bracket_unchecked(&za, &zb);
                let c = 3f64.sqrt() / 12.0 * dt * dt;
                (0..n).map(|i| 0.5 * dt * (za.0[i] + zb.0[i]) + c * comm.0[i]).collect()
            }
        };
        state.advance(rep, &x);
    }
}

/// Cubic Hermite interpolant through `(0, z0, f0)` and `(dt, z1, f1)` at `t = theta dt`.
fn hermite(z0: &[f64], f0: &[f64], z1: &[f64], f1: &[f64], dt: f64, theta: f64) -> Vec<f64> {
    let t2 = theta * theta;
    let t3 = t2 * theta;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + theta;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    (0..z0.len()).map(|i| h00 * z0[i] + h10 * dt * f0[i] + h01 * z1[i] + h11 * dt * f1[i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arnold::arnold_form;
    use crate::group::group_exp;
    use crate::presets::Preset;
    use nalgebra::DMatrix;

    #[test]
    fn zero_velocity_is_a_fixed_point() {
        let alg = Preset::rigid([1.0, 2.0, 3.0]).float().unwrap();
        let form = arnold_form(&alg).unwrap();
        let a = group_exp(&AlgebraVector(vec![0.1, 0.2, 0.3]), &alg).unwrap();
        let (a1, z1) = geodesic_step(&a, &AlgebraVector::zeros(3), 0.1, &alg, &form, GroupUpdate::Magnus4).unwrap();
        assert!(z1.is_zero());
        let (GroupElement::Matrix(m1), GroupElement::Matrix(m)) = (a1, a) else { panic!() };
        assert!((m1 - m).amax() < 1e-15);
    }

    #[test]
    fn bi_invariant_geodesic_is_one_parameter_subgroup() {
        let alg = Preset::So3Euclid.float().unwrap();
        let form = arnold_form(&alg).unwrap();
        let z = AlgebraVector(vec![0.3, -0.8, 0.5]);
        let a0 = group_exp(&AlgebraVector(vec![0.2, 0.0, -0.4]), &alg).unwrap();
        let grid = TimeGrid::new(0.01, 3.0, None).unwrap();
        let path = integrate_geodesic(&alg, &form, &a0, &z, &grid, GroupUpdate::Magnus4).unwrap();
        let last = path.last();
        let GroupElement::Matrix(m0) = &a0 else { panic!() };
        let GroupElement::Matrix(e) = group_exp(&z.scale(&last.t), &alg).unwrap() else { panic!() };
        let expected = m0 * e;
        let got = DMatrix::from_row_slice(3, 3, &last.group);
        assert!((got - expected).amax() < 1e-12);
        assert_eq!(last.algebra, z.0);
    }

    fn drifts(dt: f64, update: GroupUpdate) -> (f64, f64) {
        let alg = Preset::rigid([1.0, 2.0, 3.0]).float().unwrap();
        let form = arnold_form(&alg).unwrap();
        let a0 = GroupElement::identity(alg.representation().unwrap());
        let d = conservation_drift(&alg, &form, &a0, &AlgebraVector(vec![1.0, 0.6, -0.8]), dt, 10.0, update).unwrap();
        (d.energy, d.momentum)
    }

    #[test]
    fn magnus_conserves_momentum_to_fourth_order() {
        let (e1, m1) = drifts(0.02, GroupUpdate::Magnus4);
        let (e2, m2) = drifts(0.01, GroupUpdate::Magnus4);
        assert!((e1 / e2).log2() > 3.5, "energy order {}", (e1 / e2).log2());
        assert!((m1 / m2).log2() > 3.5, "momentum order {}", (m1 / m2).log2());
    }

    #[test]
    fn lie_euler_is_at_least_second_order() {
        let (_, m1) = drifts(0.02, GroupUpdate::LieEuler);
        let (_, m2) = drifts(0.01, GroupUpdate::LieEuler);
        assert!((m1 / m2).log2() > 1.8, "momentum order {}", (m1 / m2).log2());
    }

    #[test]
    fn rotations_stay_orthogonal() {
        let alg = Preset::rigid([1.0, 2.0, 3.0]).float().unwrap();
        let form = arnold_form(&alg).unwrap();
        let rep = alg.representation().unwrap();
        let grid = TimeGrid::new(0.01, 100.0, None).unwrap();
        let path = integrate_geodesic(&alg, &form, &GroupElement::identity(rep), &AlgebraVector(vec![1.0, 2.0, 3.0]), &grid, GroupUpdate::Magnus4).unwrap();
        for s in &path.snapshots {
            assert!(GroupElement::from_flat(rep, &s.group).orthogonality_residual(rep) < 1e-9);
        }
    }
}
