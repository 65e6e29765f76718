//! Finite-volume solver for `f_t + gamma^k(s) d_{a_k} f = (eps^2 / 2) f_ss` on `T^n x S^1`,
//! `n <= 2`.
//!
//! Transport in `a` uses conservative upwind (or minmod-limited MUSCL) fluxes, diffusion in `s`
//! the centered second difference, time stepping SSP-RK2. With first-order upwind every stage is
//! a convex combination of grid shifts under the CFL bound `sum_k |gamma_k| dt / da + eps^2 dt /
//! ds^2 <= 1`, which makes the scheme positive, conservative and `L^2`-contractive.

use std::f64::consts::PI;
use std::io::{self, BufWriter, Write};

use serde::{Deserialize, Serialize};

use crate::curve::CurveSpec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transport {
    #[default]
    Upwind,
    /// Second-order reconstruction; halves the admissible transport CFL number.
    Muscl,
}

impl Transport {
    fn cfl_factor(self) -> f64 {
        match self {
            Transport::Upwind => 1.0,
            Transport::Muscl => 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialDensity {
    Constant { value: f64 },
    /// `1 + amplitude * sin(2 pi (k . a / L_a + m s / l))`.
    Wave { a_modes: Vec<i32>, s_mode: i32, amplitude: f64 },
}

/// Cell averages on a uniform periodic grid, layout `[s][a1][a2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FpGrid {
    pub a_dim: usize,
    pub a_cells: usize,
    pub s_cells: usize,
    pub a_period: f64,
    pub s_period: f64,
    pub f: Vec<f64>,
}

impl FpGrid {
    pub fn new(a_dim: usize, a_cells: usize, s_cells: usize, a_period: f64, s_period: f64) -> Result<Self> {
        if !(1..=2).contains(&a_dim) {
            return Err(Error::InvalidConfig(format!("the solver handles 1 or 2 group dimensions, got {a_dim}")));
        }
        for c in [a_cells, s_cells] {
            if c < 4 || !c.is_power_of_two() {
                return Err(Error::Resolution(c));
            }
        }
        if !(a_period > 0.0 && s_period > 0.0) {
            return Err(Error::InvalidConfig("grid periods must be positive".into()));
        }
        let len = a_cells.pow(a_dim as u32) * s_cells;
        Ok(FpGrid { a_dim, a_cells, s_cells, a_period, s_period, f: vec![0.0; len] })
    }

    pub fn da(&self) -> f64 {
        self.a_period / self.a_cells as f64
    }

    pub fn ds(&self) -> f64 {
        self.s_period / self.s_cells as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.da().powi(self.a_dim as i32) * self.ds()
    }

    pub fn total_volume(&self) -> f64 {
        self.a_period.powi(self.a_dim as i32) * self.s_period
    }

    fn a_block(&self) -> usize {
        self.a_cells.pow(self.a_dim as u32)
    }

    /// Cell center `(a, s)` of flat index `idx`.
    pub fn center(&self, idx: usize) -> (Vec<f64>, f64) {
        let block = self.a_block();
        let (js, rest) = (idx / block, idx % block);
        let a = match self.a_dim {
            1 => vec![(rest as f64 + 0.5) * self.da()],
            _ => vec![((rest / self.a_cells) as f64 + 0.5) * self.da(), ((rest % self.a_cells) as f64 + 0.5) * self.da()],
        };
        (a, (js as f64 + 0.5) * self.ds())
    }

    pub fn fill(&mut self, init: &InitialDensity) -> Result<()> {
        match init {
            InitialDensity::Constant { value } => self.f.iter_mut().for_each(|v| *v = *value),
            InitialDensity::Wave { a_modes, s_mode, amplitude } => {
                if a_modes.len() != self.a_dim {
                    return Err(Error::DimensionMismatch { expected: self.a_dim, got: a_modes.len() });
                }
                for idx in 0..self.f.len() {
                    let (a, s) = self.center(idx);
                    let phase: f64 = a.iter().zip(a_modes).map(|(x, k)| *k as f64 * x / self.a_period).sum::<f64>()
                        + *s_mode as f64 * s / self.s_period;
                    self.f[idx] = 1.0 + amplitude * (2.0 * PI * phase).sin();
                }
            }
        }
        Ok(())
    }

    pub fn mass(&self) -> f64 {
        self.f.iter().sum::<f64>() * self.cell_volume()
    }

    pub fn mean(&self) -> f64 {
        self.f.iter().sum::<f64>() / self.f.len() as f64
    }

    /// `int f^2`.
    pub fn l2(&self) -> f64 {
        self.f.iter().map(|v| v * v).sum::<f64>() * self.cell_volume()
    }

    /// `int (f - mean f)^2`.
    pub fn deviation(&self) -> f64 {
        let m = self.mean();
        self.f.iter().map(|v| (v - m).powi(2)).sum::<f64>() * self.cell_volume()
    }

    /// `int |d_s f|^2` from one-sided differences.
    pub fn s_gradient_energy(&self) -> f64 {
        let block = self.a_block();
        let ds = self.ds();
        let mut sum = 0.0;
        for js in 0..self.s_cells {
            let jn = (js + 1) % self.s_cells;
            for i in 0..block {
                sum += ((self.f[jn * block + i] - self.f[js * block + i]) / ds).powi(2);
            }
        }
        sum * self.cell_volume()
    }

    /// CSV dump: a `#` header line with resolution and time, then `a1[,a2],s,f` per cell.
    pub fn write_csv<W: Write>(&self, t: f64, out: W) -> io::Result<()> {
        let mut w = BufWriter::new(out);
        writeln!(
            w,
            "# a_dim={} a_cells={} s_cells={} a_period={} s_period={} t={t}",
            self.a_dim, self.a_cells, self.s_cells, self.a_period, self.s_period
        )?;
        writeln!(w, "{}", if self.a_dim == 1 { "a1,s,f" } else { "a1,a2,s,f" })?;
        for (idx, v) in self.f.iter().enumerate() {
            let (a, s) = self.center(idx);
            for x in a {
                write!(w, "{x},")?;
            }
            writeln!(w, "{s},{v}")?;
        }
        w.flush()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FpOptions {
    pub eps: f64,
    pub t_final: f64,
    /// Time step; `None` takes 90% of the CFL bound.
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub transport: Transport,
    /// Number of density snapshots kept besides the initial one.
    #[serde(default = "default_snapshots")]
    pub snapshots: usize,
}

fn default_snapshots() -> usize {
    4
}

impl FpOptions {
    pub fn new(eps: f64, t_final: f64) -> Self {
        FpOptions { eps, t_final, dt: None, transport: Transport::Upwind, snapshots: default_snapshots() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct L2Point {
    pub t: f64,
    /// `int f^2`.
    pub l2: f64,
    /// `int (f - mean)^2`.
    pub deviation: f64,
    /// `-eps^2 int |d_s f|^2`.
    pub dissipation: f64,
}

#[derive(Debug, Clone)]
pub struct FpRun {
    pub dt: f64,
    pub steps: u64,
    pub cfl_bound: f64,
    pub l2: Vec<L2Point>,
    /// `(t, grid)` pairs, first the initial state, last the final one.
    pub snapshots: Vec<(f64, FpGrid)>,
    /// Largest `|mass_{k+1} - mass_k| / mass_0` over the run.
    pub max_mass_drift: f64,
    pub min_value: f64,
}

impl FpRun {
    pub fn final_grid(&self) -> &FpGrid {
        &self.snapshots.last().expect("initial snapshot").1
    }

    /// `deviation` never increases by more than relative roundoff.
    pub fn deviation_monotone(&self) -> bool {
        self.l2.windows(2).all(|w| w[1].deviation <= w[0].deviation * (1.0 + 1e-12) + 1e-300)
    }

    /// Final over initial `int (f - mean)^2`, as a ratio of `L^2` norms.
    pub fn deviation_ratio(&self) -> f64 {
        let (first, last) = (self.l2[0].deviation, self.l2.last().unwrap().deviation);
        if first == 0.0 { 0.0 } else { (last / first).sqrt() }
    }

    /// Exponential rate `r` in `||f - mean|| ~ exp(-r t)` by least squares over `[t0, t1]`.
    pub fn fit_decay_rate(&self, t0: f64, t1: f64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .l2
            .iter()
            .filter(|p| p.t >= t0 && p.t <= t1 && p.deviation > 0.0)
            .map(|p| (p.t, 0.5 * p.deviation.ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let (mt, my) = pts.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + t / n, b + y / n));
        let sxy: f64 = pts.iter().map(|(t, y)| (t - mt) * (y - my)).sum();
        let sxx: f64 = pts.iter().map(|(t, _)| (t - mt).powi(2)).sum();
        Some(-sxy / sxx)
    }
}

/// Advance `grid` to `opts.t_final` under the drift `curve`.
pub fn fp_solve_torus(grid: &FpGrid, curve: &CurveSpec, opts: &FpOptions) -> Result<FpRun> {
    if curve.dim() != grid.a_dim {
        return Err(Error::DimensionMismatch { expected: grid.a_dim, got: curve.dim() });
    }
    if (curve.period - grid.s_period).abs() > 1e-12 * curve.period {
        return Err(Error::InvalidConfig(format!(
            "grid s-period {} differs from the curve period {}",
            grid.s_period, curve.period
        )));
    }
    if !(opts.eps >= 0.0 && opts.t_final > 0.0) {
        return Err(Error::InvalidConfig("fp solve needs eps >= 0 and t_final > 0".into()));
    }
    let ds = grid.ds();
    let velocities: Vec<Vec<f64>> = (0..grid.s_cells).map(|j| curve.eval((j as f64 + 0.5) * ds)).collect();
    let speed: f64 = (0..grid.a_dim)
        .map(|k| velocities.iter().map(|v| v[k].abs()).fold(0.0, f64::max))
        .sum();
    let lambda_rate = 0.5 * opts.eps * opts.eps / (ds * ds);
    let rate = opts.transport.cfl_factor() * speed / grid.da() + 2.0 * lambda_rate;
    let cfl_bound = if rate > 0.0 { 1.0 / rate } else { f64::INFINITY };
    let (dt, steps) = match opts.dt {
        Some(dt) if dt > cfl_bound => return Err(Error::Cfl { dt, bound: cfl_bound }),
        Some(dt) if dt > 0.0 => (dt, (opts.t_final / dt - 1e-9).ceil().max(1.0) as u64),
        Some(dt) => return Err(Error::InvalidConfig(format!("dt must be positive, got {dt}"))),
        None => {
            let target = (0.9 * cfl_bound).min(opts.t_final);
            let steps = (opts.t_final / target).ceil().max(1.0) as u64;
            (opts.t_final / steps as f64, steps)
        }
    };

    let op = Operator { grid, velocities, lambda_rate, transport: opts.transport };
    let mut f = grid.clone();
    let mut stage = f.f.clone();
    let mut rhs = vec![0.0; f.f.len()];
    let record = |g: &FpGrid, t: f64| L2Point {
        t,
        l2: g.l2(),
        deviation: g.deviation(),
        dissipation: -opts.eps * opts.eps * g.s_gradient_energy(),
    };
    let mass0 = f.mass();
    let mut mass = mass0;
    let mut max_mass_drift = 0.0f64;
    let mut min_value = f.f.iter().copied().fold(f64::INFINITY, f64::min);
    let mut l2 = vec![record(&f, 0.0)];
    let mut snapshots = vec![(0.0, f.clone())];
    let snap_every = if opts.snapshots == 0 { u64::MAX } else { (steps / opts.snapshots as u64).max(1) };

    for step in 1..=steps {
        op.apply(&f.f, &mut rhs);
        for i in 0..rhs.len() {
            stage[i] = f.f[i] + dt * rhs[i];
        }
        op.apply(&stage, &mut rhs);
        for i in 0..rhs.len() {
            f.f[i] = 0.5 * f.f[i] + 0.5 * (stage[i] + dt * rhs[i]);
        }
        let t = if step == steps { opts.t_final.max(step as f64 * dt) } else { step as f64 * dt };
        let m = f.mass();
        if mass0 != 0.0 {
            max_mass_drift = max_mass_drift.max((m - mass).abs() / mass0.abs());
        }
        mass = m;
        min_value = f.f.iter().copied().fold(min_value, f64::min);
        l2.push(record(&f, t));
        if step == steps || step % snap_every == 0 {
            snapshots.push((t, f.clone()));
        }
    }
    Ok(FpRun { dt, steps, cfl_bound, l2, snapshots, max_mass_drift, min_value })
}

/// Discrete `d/dt int f^2` beside the predicted `-eps^2 int |d_s f|^2`, per interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonitorPoint {
    pub t: f64,
    pub rate: f64,
    pub dissipation: f64,
}

pub fn l2_monitor(series: &[L2Point]) -> Vec<MonitorPoint> {
    series
        .windows(2)
        .map(|w| MonitorPoint {
            t: 0.5 * (w[0].t + w[1].t),
            rate: (w[1].l2 - w[0].l2) / (w[1].t - w[0].t),
            dissipation: 0.5 * (w[0].dissipation + w[1].dissipation),
        })
        .collect()
}

struct Operator<'a> {
    grid: &'a FpGrid,
    velocities: Vec<Vec<f64>>,
    lambda_rate: f64,
    transport: Transport,
}

impl Operator<'_> {
    fn apply(&self, f: &[f64], out: &mut [f64]) {
        let g = self.grid;
        let na = g.a_cells;
        let block = g.a_block();
        let inv_da = 1.0 / g.da();
        out.iter_mut().for_each(|o| *o = 0.0);
        let mut flux = vec![0.0; na];
        for js in 0..g.s_cells {
            let base = js * block;
            for k in 0..g.a_dim {
                let c = self.velocities[js][k];
                if c == 0.0 {
                    continue;
                }
                // lines along a_k: stride 1 for the last axis, na for the first of two
                let (stride, lines) = if g.a_dim == 1 || k == 1 { (1, block / na) } else { (na, na) };
                for line in 0..lines {
                    let start = base + if stride == 1 { line * na } else { line };
                    let at = |i: usize| f[start + (i % na) * stride];
                    for (i, fl) in flux.iter_mut().enumerate() {
                        // flux through the face between cells i and i + 1
                        *fl = c * self.face_value(c, &at, i, na);
                    }
                    for i in 0..na {
                        let prev = flux[(i + na - 1) % na];
                        out[start + i * stride] -= (flux[i] - prev) * inv_da;
                    }
                }
            }
        }
        if self.lambda_rate > 0.0 {
            for js in 0..g.s_cells {
                let (up, down) = ((js + 1) % g.s_cells, (js + g.s_cells - 1) % g.s_cells);
                for i in 0..block {
                    let mid = f[js * block + i];
                    out[js * block + i] +=
                        self.lambda_rate * (f[up * block + i] - 2.0 * mid + f[down * block + i]);
                }
            }
        }
    }

    fn face_value(&self, c: f64, at: &impl Fn(usize) -> f64, i: usize, na: usize) -> f64 {
        // indices offset by na keep the arithmetic unsigned
        let j = i + na;
        match (self.transport, c > 0.0) {
            (Transport::Upwind, true) => at(j),
            (Transport::Upwind, false) => at(j + 1),
            (Transport::Muscl, true) => at(j) + 0.5 * minmod(at(j) - at(j - 1), at(j + 1) - at(j)),
            (Transport::Muscl, false) => at(j + 1) - 0.5 * minmod(at(j + 1) - at(j), at(j + 2) - at(j + 1)),
        }
    }
}

fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}
