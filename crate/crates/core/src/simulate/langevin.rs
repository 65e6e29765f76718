use rand::Rng;
use rand_distr::StandardNormal;

use crate::algebra::{AlgebraVector, LieAlgebraSpec};
use crate::arnold::ArnoldForm;
use crate::error::{Error, Result};
use crate::group::GroupElement;

use super::{norm, path_rng, GroupState, PathRecord, PathStatus, Snapshot, TimeGrid, DEFAULT_BLOWUP};

/// `dz = (q(z, z) - nu z) dt + eps sigma dW`, `a^{-1} da/dt = z`.
#[derive(Debug, Clone)]
pub struct LangevinConfig {
    pub nu: f64,
    pub eps: f64,
    /// `n x r`, columns are forcing directions.
    pub sigma: Vec<Vec<f64>>,
    pub dt: f64,
    pub t_final: f64,
    pub seed: u64,
    pub n_paths: u64,
    /// Recording stride in steps; `None` records about 1000 snapshots.
    pub stride: Option<u64>,
    pub blowup: f64,
}

impl LangevinConfig {
    pub fn new(sigma: Vec<Vec<f64>>, nu: f64, eps: f64, dt: f64, t_final: f64, seed: u64) -> Self {
        LangevinConfig { nu, eps, sigma, dt, t_final, seed, n_paths: 1, stride: None, blowup: DEFAULT_BLOWUP }
    }

    pub fn validate(&self, dim: usize) -> Result<TimeGrid> {
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return Err(Error::InvalidConfig(format!("nu must be nonnegative, got {}", self.nu)));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidConfig(format!("eps must be nonnegative, got {}", self.eps)));
        }
        if self.sigma.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: self.sigma.len() });
        }
        let r = self.sigma.first().map_or(0, |row| row.len());
        if self.sigma.iter().any(|row| row.len() != r) {
            return Err(Error::InvalidConfig("sigma rows must have equal length".into()));
        }
        if self.eps > 0.0 && self.sigma.iter().flatten().all(|x| *x == 0.0) {
            return Err(Error::InvalidConfig("eps > 0 needs a nonzero sigma".into()));
        }
        if !(self.blowup > 0.0) {
            return Err(Error::InvalidConfig("blow-up bound must be positive".into()));
        }
        TimeGrid::new(self.dt, self.t_final, self.stride)
    }
}

/// One Euler-Maruyama path; `path_id` selects the RNG stream.
pub fn langevin_path(
    cfg: &LangevinConfig,
    alg: &LieAlgebraSpec<f64>,
    form: &ArnoldForm<f64>,
    a0: &GroupElement,
    z0: &AlgebraVector<f64>,
    path_id: u64,
) -> Result<PathRecord> {
    let n = alg.dim();
    let grid = cfg.validate(n)?;
    if z0.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: z0.dim() });
    }
    let rep = alg.representation().ok_or_else(|| Error::NoRepresentation(alg.name().to_string()))?;
    let mut state = GroupState::new(rep, a0)?;
    let mut rng = path_rng(cfg.seed, path_id);
    let r = cfg.sigma[0].len();
    let noise_scale = cfg.eps * grid.dt.sqrt();
    let mut z = z0.0.clone();
    let mut q = vec![0.0; n];
    let mut xi = vec![0.0; r];
    let mut step_vec = vec![0.0; n];
    let snap = |t: f64, state: &GroupState, z: &[f64]| Snapshot { t, group: state.flat(), algebra: z.to_vec(), chart: Vec::new() };
    let mut snapshots = vec![snap(0.0, &state, &z)];
    let mut status = PathStatus::Completed;
    for step in 1..=grid.steps {
        form.rhs_into(&z, &mut q);
        for x in xi.iter_mut() {
            *x = rng.sample(StandardNormal);
        }
        for i in 0..n {
            step_vec[i] = grid.dt * z[i];
        }
        state.advance(rep, &step_vec);
        for i in 0..n {
            let kick: f64 = cfg.sigma[i].iter().zip(&xi).map(|(s, w)| s * w).sum();
            z[i] += grid.dt * (q[i] - cfg.nu * z[i]) + noise_scale * kick;
        }
        let size = norm(&z);
        if !(size <= cfg.blowup) {
            status = PathStatus::BlownUp { t: grid.time(step) };
            snapshots.push(snap(grid.time(step), &state, &z));
            break;
        }
        if grid.records(step) {
            snapshots.push(snap(grid.time(step), &state, &z));
        }
    }
    Ok(PathRecord { path_id, stream_id: path_id, snapshots, status })
}
