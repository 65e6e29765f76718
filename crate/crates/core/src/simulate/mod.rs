//! Deterministic geodesics, the forced Langevin system and constrained diffusions on `G x Z`.

mod constrained;
mod ensemble;
mod geodesic;
mod langevin;
pub mod output;

pub use constrained::{constrained_path, ConstrainedConfig};
pub use ensemble::{ensemble_run, PathKind};
pub use geodesic::{conservation_drift, geodesic_step, integrate_geodesic, ConservationDrift, GroupUpdate};
pub use langevin::{langevin_path, LangevinConfig};

use nalgebra::Matrix3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{exp_in, project_so3, rodrigues, GroupElement, RepKind, Representation};

/// Default number of recorded snapshots per path.
pub const DEFAULT_SNAPSHOTS: u64 = 1000;

/// Default blow-up guard on `|z|`.
pub const DEFAULT_BLOWUP: f64 = 1e6;

/// RNG for one path: the ensemble seed selects the key, the path index the stream.
pub fn path_rng(seed: u64, path_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path_id);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    /// Flattened group element: translation vector or row-major matrix.
    pub group: Vec<f64>,
    pub algebra: Vec<f64>,
    /// Chart coordinates for constrained paths, empty otherwise.
    pub chart: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PathStatus {
    Completed,
    /// `|z|` exceeded the guard at time `t`; the last snapshot is the offending state.
    BlownUp { t: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub path_id: u64,
    pub stream_id: u64,
    pub snapshots: Vec<Snapshot>,
    pub status: PathStatus,
}

impl PathRecord {
    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("paths record their initial state")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryEnsemble {
    pub kind: &'static str,
    pub seed: u64,
    pub dt: f64,
    pub stride: u64,
    pub group_len: usize,
    pub algebra_dim: usize,
    pub chart_dim: usize,
    pub paths: Vec<PathRecord>,
}

impl TrajectoryEnsemble {
    pub fn blown_up(&self) -> usize {
        self.paths.iter().filter(|p| p.status != PathStatus::Completed).count()
    }
}

/// Step grid and recording schedule shared by all path kinds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub dt: f64,
    pub steps: u64,
    pub stride: u64,
}

impl TimeGrid {
    /// `stride = None` records about [`DEFAULT_SNAPSHOTS`] snapshots.
    pub fn new(dt: f64, t_final: f64, stride: Option<u64>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidConfig(format!("dt must be positive, got {dt}")));
        }
        if !(t_final > dt && t_final.is_finite()) {
            return Err(Error::InvalidConfig(format!("t_final must exceed dt, got t_final = {t_final}, dt = {dt}")));
        }
        let steps = (t_final / dt - 1e-9).ceil() as u64;
        let stride = match stride {
            Some(0) => return Err(Error::InvalidConfig("record stride must be positive".into())),
            Some(s) => s,
            None => (steps / DEFAULT_SNAPSHOTS).max(1),
        };
        Ok(TimeGrid { dt, steps, stride })
    }

    pub fn records(&self, step: u64) -> bool {
        step % self.stride == 0 || step == self.steps
    }

    pub fn time(&self, step: u64) -> f64 {
        step as f64 * self.dt
    }
}

/// Group state with a fixed-size fast path for SO(3).
#[derive(Debug, Clone)]
pub(crate) enum GroupState {
    Translation(Vec<f64>),
    So3(Matrix3<f64>),
    Other(GroupElement),
}

impl GroupState {
    pub(crate) fn new(rep: &Representation, a: &GroupElement) -> Result<Self> {
        let size_ok = match a {
            GroupElement::Translation(v) => rep.kind() == RepKind::Translation && v.len() == rep.size(),
            GroupElement::Matrix(m) => {
                rep.kind() != RepKind::Translation && m.nrows() == rep.size() && m.ncols() == rep.size()
            }
        };
        if !size_ok {
            return Err(Error::InvalidConfig("initial group element does not match the representation".into()));
        }
        Ok(match (rep.kind(), a) {
            (RepKind::Translation, GroupElement::Translation(v)) => GroupState::Translation(v.clone()),
            (RepKind::So3, GroupElement::Matrix(m)) => GroupState::So3(Matrix3::from_fn(|i, j| m[(i, j)])),
            _ => GroupState::Other(a.clone()),
        })
    }

    /// `a <- a exp(x)`, re-projected onto the group.
    pub(crate) fn advance(&mut self, rep: &Representation, x: &[f64]) {
        match self {
            GroupState::Translation(v) => v.iter_mut().zip(x).for_each(|(a, b)| *a += b),
            GroupState::So3(m) => {
                *m *= rodrigues([x[0], x[1], x[2]]);
                project_so3(m);
            }
            GroupState::Other(a) => {
                *a = a.compose(&exp_in(rep, x));
                a.reproject(rep);
            }
        }
    }

    pub(crate) fn flat(&self) -> Vec<f64> {
        match self {
            GroupState::Translation(v) => v.clone(),
            GroupState::So3(m) => (0..9).map(|r| m[(r / 3, r % 3)]).collect(),
            GroupState::Other(a) => a.flatten(),
        }
    }

    pub(crate) fn element(&self) -> GroupElement {
        match self {
            GroupState::Translation(v) => GroupElement::Translation(v.clone()),
            GroupState::So3(m) => GroupElement::Matrix(nalgebra::DMatrix::from_fn(3, 3, |i, j| m[(i, j)])),
            GroupState::Other(a) => a.clone(),
        }
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
