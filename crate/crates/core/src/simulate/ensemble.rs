use rayon::prelude::*;

use crate::algebra::{AlgebraVector, LieAlgebraSpec};
use crate::arnold::ArnoldForm;
use crate::chart::{ChartPoint, ZChart};
use crate::error::{Error, Result};
use crate::group::GroupElement;

use super::constrained::curve_path;
use super::{constrained_path, langevin_path, ConstrainedConfig, LangevinConfig, PathRecord, TrajectoryEnsemble};

/// Which path simulator to run, with everything shared by all paths.
#[derive(Clone, Copy)]
pub enum PathKind<'a> {
    Langevin {
        cfg: &'a LangevinConfig,
        alg: &'a LieAlgebraSpec<f64>,
        form: &'a ArnoldForm<f64>,
        a0: &'a GroupElement,
        z0: &'a AlgebraVector<f64>,
    },
    Constrained {
        chart: &'a dyn ZChart,
        cfg: &'a ConstrainedConfig,
        alg: &'a LieAlgebraSpec<f64>,
        form: &'a ArnoldForm<f64>,
        a0: &'a GroupElement,
        s0: &'a ChartPoint,
    },
}

impl PathKind<'_> {
    fn n_paths(&self) -> u64 {
        match self {
            PathKind::Langevin { cfg, .. } => cfg.n_paths,
            PathKind::Constrained { cfg, .. } => cfg.n_paths,
        }
    }

    fn path(&self, id: u64) -> Result<PathRecord> {
        match *self {
            PathKind::Langevin { cfg, alg, form, a0, z0 } => langevin_path(cfg, alg, form, a0, z0, id),
            PathKind::Constrained { chart, cfg, alg, form, a0, s0 } => {
                let curve = chart.as_curve();
                let start = match (cfg.stratified_start, curve) {
                    (false, _) => s0.clone(),
                    (true, Some(c)) => {
                        ChartPoint::new(vec![s0.x[0] + c.period * (id as f64 + 0.5) / cfg.n_paths as f64])
                    }
                    (true, None) => {
                        return Err(Error::InvalidConfig(format!("stratified starts need a curve chart, not {}", chart.name())))
                    }
                };
                match curve {
                    Some(c) if form.is_zero() => curve_path(c, cfg, alg, a0, start.x[0], id),
                    _ => constrained_path(chart, cfg, alg, form, a0, &start, id),
                }
            }
        }
    }
}

/// Run `n_paths` independent paths; path `i` draws from RNG stream `i` of the seed.
///
/// Results are collected in path order, so the output does not depend on `threads`.
pub fn ensemble_run(kind: PathKind<'_>, threads: Option<usize>) -> Result<TrajectoryEnsemble> {
    let n = kind.n_paths();
    if n == 0 {
        return Err(Error::InvalidConfig("n_paths must be at least 1".into()));
    }
    let run = || (0..n).into_par_iter().map(|i| kind.path(i)).collect::<Result<Vec<_>>>();
    let paths = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?
            .install(run)?,
        None => run()?,
    };
    let (kind_name, seed, dt, grid, chart_dim, alg) = match kind {
        PathKind::Langevin { cfg, alg, .. } => ("langevin", cfg.seed, cfg.dt, cfg.validate(alg.dim())?, 0, alg),
        PathKind::Constrained { chart, cfg, alg, .. } => ("constrained", cfg.seed, cfg.dt, cfg.validate()?, chart.param_dim(), alg),
    };
    Ok(TrajectoryEnsemble {
        kind: kind_name,
        seed,
        dt,
        stride: grid.stride,
        group_len: paths[0].snapshots[0].group.len(),
        algebra_dim: alg.dim(),
        chart_dim,
        paths,
    })
}
