use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use lieflow::arnold::arnold_form;
use lieflow::chart::{check_chart_invariance, ChartPoint, CurveChart, SphereOrbitChart, ZChart};
use lieflow::curve::CurveSpec;
use lieflow::group::{GroupElement, RepKind};
use lieflow::hypo::{check_constrained_hormander, check_langevin_auto, ForcingSpec, SamplingOptions};
use lieflow::simulate::output::{write_binary, write_csv, write_status_csv};
use lieflow::simulate::{
    conservation_drift, ensemble_run, ConstrainedConfig, GroupUpdate, LangevinConfig, PathKind, TrajectoryEnsemble,
    DEFAULT_BLOWUP,
};
use lieflow::stats::{
    diffusivity_report, effective_covariance, fp_solve_torus, gibbs_marginal_test, haar_uniformity_test,
    stationary_snapshots, FpGrid,
};
use lieflow::{AlgebraVector, LieAlgebraSpec, Preset, Rational};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{DynamicsConfig, ForcingConfig, Mode, OutputFormat, RunConfig, StartRule, TestConfig, UpdateRule};

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_VAR: &str = "LIEFLOW_OUTPUT_ROOT";

/// Snapshots per path kept by the statistics modes when no stride is configured.
const STATS_SNAPSHOTS: u64 = 10;

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub exact: bool,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Inconclusive => 3,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Inconclusive => "inconclusive",
        }
    }
}

/// Input or environment problem; exit status 2.
#[derive(Debug, Clone, PartialEq)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

impl From<lieflow::Error> for InputError {
    fn from(e: lieflow::Error) -> Self {
        InputError(e.to_string())
    }
}

impl From<std::io::Error> for InputError {
    fn from(e: std::io::Error) -> Self {
        InputError(format!("i/o error: {e}"))
    }
}

type Result<T> = std::result::Result<T, InputError>;

#[derive(Debug, Clone)]
pub struct Outcome {
    pub status: Status,
    pub summary: String,
    pub output_dir: PathBuf,
    pub files: Vec<String>,
}

impl Outcome {
    pub fn status_label(&self) -> &'static str {
        self.status.as_str()
    }
}

/// Git-style content hash: SHA-256 of `"blob <len>\0" + bytes`.
pub fn blob_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Parse and run a config file.
pub fn run_file(path: &Path, overrides: &Overrides) -> Result<Outcome> {
    let bytes = fs::read(path).map_err(|e| InputError(format!("cannot read {}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| InputError(format!("{} is not UTF-8", path.display())))?;
    let mut cfg = RunConfig::parse(&text).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| cfg.mode.as_str().into());
    run_config(cfg, Some((path, &bytes)), &stem, overrides)
}

/// Run a parsed config. `source` is the config file and its bytes, hashed into the manifest.
pub fn run_config(mut cfg: RunConfig, source: Option<(&Path, &[u8])>, name: &str, overrides: &Overrides) -> Result<Outcome> {
    cfg.validate().map_err(InputError)?;
    let seed_generated = overrides.seed.is_none() && cfg.seed.is_none();
    cfg.seed = Some(overrides.seed.or(cfg.seed).unwrap_or_else(fresh_seed));
    if overrides.threads.is_some() {
        cfg.threads = overrides.threads;
    }
    cfg.exact |= overrides.exact;
    let out_dir = output_dir(&cfg, name, overrides);
    fs::create_dir_all(&out_dir).map_err(|e| InputError(format!("cannot create {}: {e}", out_dir.display())))?;

    let mut inputs = Vec::new();
    if let Some((path, bytes)) = source {
        inputs.push(json!({ "path": path.display().to_string(), "blob_sha256": blob_hash(bytes) }));
    }
    if let Some(p) = &cfg.algebra_file {
        let bytes = fs::read(p).map_err(|e| InputError(format!("cannot read algebra file {}: {e}", p.display())))?;
        inputs.push(json!({ "path": p.display().to_string(), "blob_sha256": blob_hash(&bytes) }));
    }

    let mut art = Artifacts { dir: out_dir.clone(), files: Vec::new() };
    let (status, summary) = match execute(&cfg, &mut art) {
        Ok(r) => r,
        Err(e) => {
            write_manifest(&cfg, &art, &inputs, seed_generated, None, Some(&e.0))?;
            return Err(e);
        }
    };
    write_manifest(&cfg, &art, &inputs, seed_generated, Some((status, &summary)), None)?;
    Ok(Outcome { status, summary, output_dir: out_dir, files: art.files.iter().map(|(n, _)| n.clone()).collect() })
}

fn fresh_seed() -> u64 {
    let nanos = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_nanos()).unwrap_or(0);
    (nanos as u64) ^ ((std::process::id() as u64) << 32)
}

fn output_dir(cfg: &RunConfig, name: &str, overrides: &Overrides) -> PathBuf {
    let root = std::env::var_os(OUTPUT_ROOT_VAR).map(PathBuf::from);
    match (&overrides.out, &cfg.output_dir, root) {
        (Some(p), _, _) => p.clone(),
        (None, Some(p), Some(root)) if p.is_relative() => root.join(p),
        (None, Some(p), _) => p.clone(),
        (None, None, Some(root)) => root.join(name),
        (None, None, None) => PathBuf::from("lieflow-out").join(name),
    }
}

struct Artifacts {
    dir: PathBuf,
    files: Vec<(String, String)>,
}

impl Artifacts {
    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        fs::write(self.dir.join(name), bytes).map_err(|e| InputError(format!("cannot write {name}: {e}")))?;
        self.files.push((name.into(), blob_hash(bytes)));
        Ok(())
    }

    fn json(&mut self, name: &str, value: &Value) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).expect("json serializes");
        text.push('\n');
        self.write(name, text.as_bytes())
    }
}

fn write_manifest(
    cfg: &RunConfig,
    art: &Artifacts,
    inputs: &[Value],
    seed_generated: bool,
    result: Option<(Status, &str)>,
    error: Option<&str>,
) -> Result<()> {
    let created = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let manifest = json!({
        "tool": "lieflow",
        "version": env!("CARGO_PKG_VERSION"),
        "mode": cfg.mode.as_str(),
        "status": result.map(|(s, _)| s.as_str()).unwrap_or("error"),
        "exit_code": result.map(|(s, _)| s.exit_code()).unwrap_or(2),
        "summary": result.map(|(_, s)| s),
        "error": error,
        "config": serde_json::to_value(cfg).expect("config serializes"),
        "config_toml": cfg.to_toml(),
        "seed": cfg.seed,
        "seed_generated": seed_generated,
        "inputs": inputs,
        "outputs": art.files.iter().map(|(n, h)| json!({ "file": n, "blob_sha256": h })).collect::<Vec<_>>(),
        "created_unix": created,
    });
    let text = serde_json::to_string_pretty(&manifest).expect("json serializes") + "\n";
    fs::write(art.dir.join("manifest.json"), text).map_err(|e| InputError(format!("cannot write manifest: {e}")))?;
    Ok(())
}

struct Algebra {
    exact: LieAlgebraSpec<Rational>,
    float: LieAlgebraSpec<f64>,
}

fn load_algebra(cfg: &RunConfig) -> Result<Option<Algebra>> {
    let exact = match (&cfg.preset, &cfg.algebra_file) {
        (Some(p), _) => Preset::parse(p)?.exact()?,
        (None, Some(path)) => lieflow::algebra_file::load_algebra_file(path)?,
        (None, None) => return Ok(None),
    };
    let float = exact.to_f64();
    Ok(Some(Algebra { exact, float }))
}

fn require_algebra(cfg: &RunConfig) -> Result<Algebra> {
    load_algebra(cfg)?.ok_or_else(|| InputError(format!("mode {} requires preset or algebra_file", cfg.mode.as_str())))
}

fn forcing(f: &ForcingConfig, n: usize) -> Result<ForcingSpec<f64>> {
    let spec = match (&f.columns, &f.basis) {
        (Some(cols), _) => ForcingSpec::from_columns(n, cols.iter().cloned().map(AlgebraVector).collect())?,
        (None, Some(idx)) => {
            if let Some(bad) = idx.iter().find(|&&i| i == 0 || i > n) {
                return Err(InputError(format!("forcing.basis index {bad} is outside 1..={n}")));
            }
            ForcingSpec::basis_subset(n, &idx.iter().map(|i| i - 1).collect::<Vec<_>>())?
        }
        (None, None) => unreachable!("validated"),
    };
    Ok(spec)
}

fn build_chart(cfg: &RunConfig, alg: &LieAlgebraSpec<f64>) -> Result<Box<dyn ZChart>> {
    match (&cfg.curve, &cfg.orbit) {
        (Some(c), _) => {
            c.validate()?;
            if c.dim() != alg.dim() {
                return Err(InputError(format!("curve has dimension {} but the algebra has {}", c.dim(), alg.dim())));
            }
            Ok(Box::new(CurveChart::new(c.clone())))
        }
        (None, Some(o)) => Ok(Box::new(SphereOrbitChart::new(alg, o.rho)?)),
        (None, None) => unreachable!("validated"),
    }
}

fn vector_or_zero(v: &Option<Vec<f64>>, n: usize, what: &str) -> Result<Vec<f64>> {
    match v {
        Some(v) if v.len() != n => Err(InputError(format!("{what} has length {} but needs {n}", v.len()))),
        Some(v) => Ok(v.clone()),
        None => Ok(vec![0.0; n]),
    }
}

fn langevin_config(d: &DynamicsConfig, f: &ForcingSpec<f64>, seed: u64, default_stride: Option<u64>) -> LangevinConfig {
    let stride = d.stride.or_else(|| default_stride);
    LangevinConfig {
        nu: d.nu.unwrap_or(0.0),
        eps: d.eps,
        sigma: f.sigma(),
        dt: d.dt,
        t_final: d.t_final,
        seed,
        n_paths: d.n_paths,
        stride,
        blowup: d.blowup.unwrap_or(DEFAULT_BLOWUP),
    }
}

fn stats_stride(d: &DynamicsConfig) -> Option<u64> {
    let steps = (d.t_final / d.dt - 1e-9).ceil().max(1.0) as u64;
    Some((steps / STATS_SNAPSHOTS).max(1))
}

fn write_trajectories(art: &mut Artifacts, e: &TrajectoryEnsemble, format: OutputFormat) -> Result<()> {
    if matches!(format, OutputFormat::Csv | OutputFormat::Both) {
        let mut buf = Vec::new();
        write_csv(e, &mut buf)?;
        art.write("trajectories.csv", &buf)?;
    }
    if matches!(format, OutputFormat::Binary | OutputFormat::Both) {
        let mut buf = Vec::new();
        write_binary(e, &mut buf)?;
        art.write("trajectories.bin", &buf)?;
    }
    let mut buf = Vec::new();
    write_status_csv(e, &mut buf)?;
    art.write("paths.csv", &buf)
}

fn ensemble_summary(e: &TrajectoryEnsemble) -> Value {
    json!({
        "kind": e.kind,
        "seed": e.seed,
        "dt": e.dt,
        "stride": e.stride,
        "n_paths": e.paths.len(),
        "blown_up": e.blown_up(),
        "group_len": e.group_len,
        "algebra_dim": e.algebra_dim,
        "chart_dim": e.chart_dim,
    })
}

fn execute(cfg: &RunConfig, art: &mut Artifacts) -> Result<(Status, String)> {
    let seed = cfg.seed.expect("resolved");
    match cfg.mode {
        Mode::CheckLangevin => {
            let alg = require_algebra(cfg)?;
            let f = forcing(cfg.forcing.as_ref().unwrap(), alg.float.dim())?;
            let fe = f.to_exact().ok_or_else(|| InputError("forcing has non-finite entries".into()))?;
            let report = check_langevin_auto(&alg.float, &f, Some((&alg.exact, &fe)), cfg.exact)?;
            let mut value = report.to_json();
            value["algebra"] = json!(alg.float.name());
            value["forcing_columns"] = json!(f.columns().iter().map(|c| c.0.clone()).collect::<Vec<_>>());
            art.json("report.json", &value)?;
            let status = if report.inconclusive { Status::Inconclusive } else { Status::Pass };
            Ok((status, format!("verdict {} (closure rank {}/{})", report.verdict, report.rank(), report.dim)))
        }
        Mode::CheckConstrained => {
            let alg = require_algebra(cfg)?;
            let chart = build_chart(cfg, &alg.float)?;
            let s = cfg.sampling.clone();
            let opts = SamplingOptions {
                initial_samples: s.as_ref().map_or(8, |s| s.initial_samples),
                max_samples: s.as_ref().map_or(4096, |s| s.max_samples),
                exact: cfg.exact,
            };
            let report = check_constrained_hormander(chart.as_ref(), &alg.float, &opts)?;
            let form = arnold_form(&alg.float)?;
            let invariant = check_chart_invariance(chart.as_ref(), &alg.float, &form, 32);
            let mut value = report.to_json();
            value["algebra"] = json!(alg.float.name());
            value["chart"] = json!(chart.name());
            value["chart_invariant"] = json!(invariant.is_ok());
            if let Err(e) = invariant {
                value["chart_invariance_error"] = json!(e.to_string());
            }
            art.json("report.json", &value)?;
            let status = if report.inconclusive { Status::Inconclusive } else { Status::Pass };
            Ok((status, format!("verdict {} (p-hull rank {}/{})", report.verdict, report.rank(), report.dim)))
        }
        Mode::SimulateLangevin => {
            let alg = require_algebra(cfg)?;
            let d = cfg.dynamics.as_ref().unwrap();
            let f = forcing(cfg.forcing.as_ref().unwrap(), alg.float.dim())?;
            let lc = langevin_config(d, &f, seed, None);
            let form = arnold_form(&alg.float)?;
            let rep = alg.float.representation().ok_or_else(|| InputError("algebra has no matrix representation".into()))?;
            let a0 = GroupElement::identity(rep);
            let z0 = AlgebraVector(vector_or_zero(&d.z0, alg.float.dim(), "dynamics.z0")?);
            let e = ensemble_run(PathKind::Langevin { cfg: &lc, alg: &alg.float, form: &form, a0: &a0, z0: &z0 }, cfg.threads)?;
            write_trajectories(art, &e, d.output)?;
            art.json("summary.json", &ensemble_summary(&e))?;
            Ok((Status::Pass, format!("{} paths, {} blown up", e.paths.len(), e.blown_up())))
        }
        Mode::SimulateConstrained => {
            let alg = require_algebra(cfg)?;
            let d = cfg.dynamics.as_ref().unwrap();
            let chart = build_chart(cfg, &alg.float)?;
            let cc = ConstrainedConfig {
                eps: d.eps,
                dt: d.dt,
                t_final: d.t_final,
                seed,
                n_paths: d.n_paths,
                stride: d.stride,
                stratified_start: d.start == Some(StartRule::Stratified),
            };
            let form = arnold_form(&alg.float)?;
            let rep = alg.float.representation().ok_or_else(|| InputError("algebra has no matrix representation".into()))?;
            let a0 = GroupElement::identity(rep);
            let s0 = ChartPoint::new(vector_or_zero(&d.s0, chart.param_dim(), "dynamics.s0")?);
            let kind = PathKind::Constrained { chart: chart.as_ref(), cfg: &cc, alg: &alg.float, form: &form, a0: &a0, s0: &s0 };
            let e = ensemble_run(kind, cfg.threads)?;
            write_trajectories(art, &e, d.output)?;
            art.json("summary.json", &ensemble_summary(&e))?;
            Ok((Status::Pass, format!("{} paths on chart {}", e.paths.len(), chart.name())))
        }
        Mode::Diffusivity => diffusivity(cfg, art, seed),
        Mode::Gibbs | Mode::Haar => stationary(cfg, art, seed),
        Mode::Fpsolve => fpsolve(cfg, art),
        Mode::Conserve => conserve(cfg, art),
    }
}

fn diffusivity(cfg: &RunConfig, art: &mut Artifacts, seed: u64) -> Result<(Status, String)> {
    let curve = cfg.curve.as_ref().unwrap();
    curve.validate()?;
    let n = curve.dim();
    let alg = match load_algebra(cfg)? {
        Some(a) => a.float,
        None => Preset::Abelian(n).float()?,
    };
    if !alg.is_abelian() || alg.dim() != n {
        return Err(InputError(format!("diffusivity needs an abelian algebra of dimension {n}")));
    }
    let d = cfg.dynamics.as_ref().unwrap();
    let test = cfg.test.clone().unwrap_or_default();
    let (centered, drift) = curve.center();
    let sigma = centered.sigma_matrix()?;
    let steps = (d.t_final / d.dt - 1e-9).ceil().max(1.0) as u64;
    let cc = ConstrainedConfig {
        eps: d.eps,
        dt: d.dt,
        t_final: d.t_final,
        seed,
        n_paths: d.n_paths,
        stride: d.stride.or(Some(steps)),
        stratified_start: d.start != Some(StartRule::Fixed),
    };
    let form = arnold_form(&alg)?;
    let a0 = GroupElement::identity(alg.representation().expect("abelian presets are translations"));
    let chart = CurveChart::new(centered);
    let s0 = ChartPoint::new(vec![d.s0.as_ref().and_then(|v| v.first().copied()).unwrap_or(0.0)]);
    let kind = PathKind::Constrained { chart: &chart, cfg: &cc, alg: &alg, form: &form, a0: &a0, s0: &s0 };
    let e = ensemble_run(kind, cfg.threads)?;
    if d.output != OutputFormat::None && d.stride.is_some() {
        write_trajectories(art, &e, d.output)?;
    }
    let est = effective_covariance(&e, test.horizon)?;
    let mut report = diffusivity_report(&est, &sigma, d.eps, test.rel_tol)?;
    if drift.iter().any(|x| *x != 0.0) {
        report.notes.push(format!("curve centered; removed drift z0 = {drift:?}"));
    }
    let prediction: Vec<Vec<f64>> = sigma.iter().map(|r| r.iter().map(|v| 4.0 / (d.eps * d.eps) * v).collect()).collect();
    art.json(
        "report.json",
        &json!({
            "sigma_matrix": sigma,
            "prediction": prediction,
            "removed_drift": drift,
            "estimate": est,
            "report": report.to_json(),
        }),
    )?;
    let status = if report.pass { Status::Pass } else { Status::Fail };
    Ok((status, format!("covariance {:?} vs prediction {:?}", est.covariance, prediction)))
}

fn stationary(cfg: &RunConfig, art: &mut Artifacts, seed: u64) -> Result<(Status, String)> {
    let alg = require_algebra(cfg)?;
    let d = cfg.dynamics.as_ref().unwrap();
    let test: TestConfig = cfg.test.clone().unwrap_or_default();
    let rep = alg.float.representation().ok_or_else(|| InputError("algebra has no matrix representation".into()))?;
    if cfg.mode == Mode::Haar && rep.kind() != RepKind::So3 {
        return Err(InputError("haar mode needs an algebra represented on SO(3)".into()));
    }
    let f = forcing(cfg.forcing.as_ref().unwrap(), alg.float.dim())?;
    let lc = langevin_config(d, &f, seed, stats_stride(d));
    let form = arnold_form(&alg.float)?;
    let a0 = GroupElement::identity(rep);
    let z0 = AlgebraVector(vector_or_zero(&d.z0, alg.float.dim(), "dynamics.z0")?);
    let e = ensemble_run(PathKind::Langevin { cfg: &lc, alg: &alg.float, form: &form, a0: &a0, z0: &z0 }, cfg.threads)?;
    if d.output != OutputFormat::None && d.stride.is_some() {
        write_trajectories(art, &e, d.output)?;
    }
    let (snaps, skipped) = stationary_snapshots(&e, test.burn_in);
    let mut report = if cfg.mode == Mode::Gibbs {
        let zs: Vec<Vec<f64>> = snaps.iter().map(|s| s.algebra.clone()).collect();
        let mut r = gibbs_marginal_test(&zs, d.nu.unwrap(), d.eps, &alg.float, test.ks_threshold)?;
        if !gibbs_consistent(&f, &alg.float) {
            r.notes.push("sigma sigma^T differs from the inverse metric; exp(-beta H) need not be stationary".into());
        }
        r
    } else {
        let gs: Vec<Vec<f64>> = snaps.iter().map(|s| s.group.clone()).collect();
        haar_uniformity_test(&gs)?
    };
    report.notes.push(format!("burn-in fraction {}", test.burn_in));
    if skipped > 0 {
        report.notes.push(format!("{skipped} blown-up paths excluded"));
    }
    art.json("report.json", &json!({ "ensemble": ensemble_summary(&e), "report": report.to_json() }))?;
    let status = if report.pass { Status::Pass } else { Status::Fail };
    let failed: Vec<&str> = report.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    Ok((status, format!("{} on {} samples; failed checks: {failed:?}", report.test, report.n_samples)))
}

fn gibbs_consistent(f: &ForcingSpec<f64>, alg: &LieAlgebraSpec<f64>) -> bool {
    let h = f.diffusion_matrix();
    let g = alg.metric_matrix();
    let n = alg.dim();
    (0..n).all(|i| {
        (0..n).all(|j| {
            let hg: f64 = (0..n).map(|k| h[i][k] * g[(k, j)]).sum();
            (hg - if i == j { 1.0 } else { 0.0 }).abs() < 1e-9
        })
    })
}

fn fpsolve(cfg: &RunConfig, art: &mut Artifacts) -> Result<(Status, String)> {
    let curve: &CurveSpec = cfg.curve.as_ref().unwrap();
    curve.validate()?;
    let fc = cfg.fp.as_ref().unwrap();
    let mut grid = FpGrid::new(curve.dim(), fc.a_cells, fc.s_cells, fc.a_period, curve.period)?;
    grid.fill(&fc.initial)?;
    let run = fp_solve_torus(&grid, curve, &fc.options())?;

    let mut l2 = String::from("t,l2,deviation,dissipation\n");
    for p in &run.l2 {
        l2.push_str(&format!("{},{},{},{}\n", p.t, p.l2, p.deviation, p.dissipation));
    }
    art.write("l2.csv", l2.as_bytes())?;
    for (k, (t, g)) in run.snapshots.iter().enumerate() {
        let mut buf = Vec::new();
        g.write_csv(*t, &mut buf)?;
        art.write(&format!("density_{k:03}.csv"), &buf)?;
    }

    let monotone = run.deviation_monotone();
    let ratio = run.deviation_ratio();
    let rate = run.fit_decay_rate(0.5 * fc.t_final, fc.t_final);
    let mut failures = Vec::new();
    if run.max_mass_drift > 1e-12 {
        failures.push("mass drift above 1e-12");
    }
    if run.min_value < -1e-12 {
        failures.push("negative density");
    }
    if fc.eps > 0.0 && !monotone {
        failures.push("L2 deviation not monotone");
    }
    if let Some(target) = fc.target_ratio {
        if ratio > target {
            failures.push("deviation ratio above target");
        }
    }
    art.json(
        "report.json",
        &json!({
            "steps": run.steps,
            "dt": run.dt,
            "cfl_bound": run.cfl_bound,
            "transport": fc.transport,
            "initial_deviation": run.l2[0].deviation.sqrt(),
            "final_deviation": run.l2.last().unwrap().deviation.sqrt(),
            "deviation_ratio": ratio,
            "target_ratio": fc.target_ratio,
            "monotone": monotone,
            "max_mass_drift": run.max_mass_drift,
            "min_value": run.min_value,
            "fitted_rate": rate,
            "fitted_rate_window": [0.5 * fc.t_final, fc.t_final],
            "failures": failures,
            "pass": failures.is_empty(),
        }),
    )?;
    let status = if failures.is_empty() { Status::Pass } else { Status::Fail };
    Ok((status, format!("deviation ratio {ratio:.3e}, monotone {monotone}, failures {failures:?}")))
}

fn conserve(cfg: &RunConfig, art: &mut Artifacts) -> Result<(Status, String)> {
    let alg = require_algebra(cfg)?;
    let c = cfg.conserve.as_ref().unwrap();
    if c.dts.len() < 2 {
        return Err(InputError("conserve.dts needs at least two step sizes".into()));
    }
    let form = arnold_form(&alg.float)?;
    let rep = alg.float.representation().ok_or_else(|| InputError("algebra has no matrix representation".into()))?;
    let a0 = GroupElement::identity(rep);
    let z0 = AlgebraVector(vector_or_zero(&Some(c.z0.clone()), alg.float.dim(), "conserve.z0")?);
    let update = match c.update {
        UpdateRule::LieEuler => GroupUpdate::LieEuler,
        UpdateRule::Magnus4 => GroupUpdate::Magnus4,
    };
    let drifts = c
        .dts
        .iter()
        .map(|&dt| conservation_drift(&alg.float, &form, &a0, &z0, dt, c.t_final, update))
        .collect::<lieflow::Result<Vec<_>>>()?;
    // drifts at roundoff level carry no order information
    let floor = 1e-13;
    let order = |a: f64, b: f64, ra: f64| (a > floor && b > floor).then(|| (a / b).ln() / ra.ln());
    let mut orders = Vec::new();
    let mut pass = true;
    for w in drifts.windows(2) {
        let r = w[0].dt / w[1].dt;
        let oe = order(w[0].energy, w[1].energy, r);
        let om = order(w[0].momentum, w[1].momentum, r);
        pass &= oe.is_none_or(|o| o >= c.min_order) && om.is_none_or(|o| o >= c.min_order);
        orders.push(json!({ "dt_pair": [w[0].dt, w[1].dt], "energy_order": oe, "momentum_order": om }));
    }
    art.json(
        "report.json",
        &json!({ "algebra": alg.float.name(), "t_final": c.t_final, "drifts": drifts, "orders": orders, "min_order": c.min_order, "pass": pass }),
    )?;
    let status = if pass { Status::Pass } else { Status::Fail };
    Ok((status, format!("observed orders {}", serde_json::to_string(&orders).unwrap())))
}
