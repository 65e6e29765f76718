//! Run configuration files (TOML, `version = 1`).
//!
//! ```toml
//! version = 1
//! mode = "check-langevin"
//! preset = "so3_rigid(1,2,3)"      # or algebra_file = "algebras/top.toml"
//! seed = 7                         # optional; generated and recorded when absent
//! output_dir = "out/top"           # optional
//!
//! [forcing]
//! columns = [[1, 0, 0]]            # or basis = [1] (1-based)
//! ```
//!
//! Mode-specific sections: `forcing`, `curve`, `orbit`, `dynamics`, `test`, `sampling`, `fp`,
//! `conserve`. A section that the mode does not read is rejected.

use std::path::{Path, PathBuf};

use lieflow::curve::CurveSpec;
use lieflow::stats::{FpOptions, InitialDensity, Transport};
use serde::{Deserialize, Serialize};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    CheckLangevin,
    CheckConstrained,
    SimulateLangevin,
    SimulateConstrained,
    Diffusivity,
    Gibbs,
    Haar,
    Fpsolve,
    Conserve,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::CheckLangevin => "check-langevin",
            Mode::CheckConstrained => "check-constrained",
            Mode::SimulateLangevin => "simulate-langevin",
            Mode::SimulateConstrained => "simulate-constrained",
            Mode::Diffusivity => "diffusivity",
            Mode::Gibbs => "gibbs",
            Mode::Haar => "haar",
            Mode::Fpsolve => "fpsolve",
            Mode::Conserve => "conserve",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algebra_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default)]
    pub exact: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forcing: Option<ForcingConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<CurveSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orbit: Option<OrbitConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dynamics: Option<DynamicsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<TestConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling: Option<SamplingConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fp: Option<FpConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conserve: Option<ConserveConfig>,
}

/// Forcing directions, either explicit columns or 1-based basis indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub columns: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<Vec<usize>>,
}

/// Coadjoint sphere `|g z| = rho` of a 3-dimensional algebra.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitConfig {
    pub rho: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Binary,
    Both,
    /// Statistics modes only; no trajectory file.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    pub eps: f64,
    pub dt: f64,
    pub t_final: f64,
    #[serde(default = "one")]
    pub n_paths: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<u64>,
    /// Initial algebra vector (Langevin); zero when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z0: Option<Vec<f64>>,
    /// Initial chart coordinates (constrained); zero when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blowup: Option<f64>,
    #[serde(default)]
    pub output: OutputFormat,
    /// Initial chart points of constrained ensembles.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<StartRule>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartRule {
    /// Every path starts at `s0`.
    Fixed,
    /// Curve charts only: starts spread evenly over one period from `s0`.
    Stratified,
}

fn one() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestConfig {
    /// Fraction of each path discarded before stationarity tests.
    #[serde(default = "default_burn_in")]
    pub burn_in: f64,
    #[serde(default = "default_ks")]
    pub ks_threshold: f64,
    /// Relative tolerance on diagonal covariance entries.
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    /// Time at which the covariance is taken; the final time when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
}

impl Default for TestConfig {
    fn default() -> Self {
        TestConfig { burn_in: default_burn_in(), ks_threshold: default_ks(), rel_tol: default_rel_tol(), horizon: None }
    }
}

fn default_burn_in() -> f64 {
    lieflow::stats::DEFAULT_BURN_IN
}

fn default_ks() -> f64 {
    lieflow::stats::DEFAULT_KS_THRESHOLD
}

fn default_rel_tol() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    #[serde(default = "default_initial_samples")]
    pub initial_samples: usize,
    #[serde(default = "default_max_samples")]
    pub max_samples: usize,
}

fn default_initial_samples() -> usize {
    8
}

fn default_max_samples() -> usize {
    4096
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FpConfig {
    pub a_cells: usize,
    pub s_cells: usize,
    #[serde(default = "two_pi")]
    pub a_period: f64,
    pub eps: f64,
    pub t_final: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default)]
    pub transport: Transport,
    pub initial: InitialDensity,
    #[serde(default = "default_fp_snapshots")]
    pub snapshots: usize,
    /// Pass when `||f - mean||` falls below this fraction of its initial value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_ratio: Option<f64>,
}

fn two_pi() -> f64 {
    2.0 * std::f64::consts::PI
}

fn default_fp_snapshots() -> usize {
    4
}

impl FpConfig {
    pub fn options(&self) -> FpOptions {
        FpOptions { eps: self.eps, t_final: self.t_final, dt: self.dt, transport: self.transport, snapshots: self.snapshots }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateRule {
    LieEuler,
    #[default]
    Magnus4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConserveConfig {
    #[serde(default = "default_dts")]
    pub dts: Vec<f64>,
    #[serde(default = "ten")]
    pub t_final: f64,
    pub z0: Vec<f64>,
    #[serde(default)]
    pub update: UpdateRule,
    #[serde(default = "two")]
    pub min_order: f64,
}

fn default_dts() -> Vec<f64> {
    vec![1e-2, 5e-3, 2.5e-3]
}

fn ten() -> f64 {
    10.0
}

fn two() -> f64 {
    2.0
}

/// Sections each mode reads; `true` marks a required one.
fn sections(mode: Mode) -> &'static [(&'static str, bool)] {
    match mode {
        Mode::CheckLangevin => &[("forcing", true)],
        Mode::CheckConstrained => &[("curve", false), ("orbit", false), ("sampling", false)],
        Mode::SimulateLangevin => &[("forcing", true), ("dynamics", true)],
        Mode::SimulateConstrained => &[("curve", false), ("orbit", false), ("dynamics", true)],
        Mode::Diffusivity => &[("curve", true), ("dynamics", true), ("test", false)],
        Mode::Gibbs | Mode::Haar => &[("forcing", true), ("dynamics", true), ("test", false)],
        Mode::Fpsolve => &[("curve", true), ("fp", true)],
        Mode::Conserve => &[("conserve", true)],
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| format!("malformed config: {e}"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn present(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        let flags = [
            ("forcing", self.forcing.is_some()),
            ("curve", self.curve.is_some()),
            ("orbit", self.orbit.is_some()),
            ("dynamics", self.dynamics.is_some()),
            ("test", self.test.is_some()),
            ("sampling", self.sampling.is_some()),
            ("fp", self.fp.is_some()),
            ("conserve", self.conserve.is_some()),
        ];
        for (name, on) in flags {
            if on {
                out.push(name);
            }
        }
        out
    }

    /// Mode/section consistency and field ranges that do not need the algebra.
    pub fn validate(&self) -> Result<(), String> {
        if self.version != CONFIG_VERSION {
            return Err(format!("unsupported config version {} (expected {CONFIG_VERSION})", self.version));
        }
        let mode = self.mode.as_str();
        let allowed = sections(self.mode);
        for s in self.present() {
            if !allowed.iter().any(|(name, _)| *name == s) {
                return Err(format!("mode/parameter mismatch: section [{s}] is not used by mode {mode}"));
            }
        }
        for (name, required) in allowed {
            if *required && !self.present().contains(name) {
                return Err(format!("mode/parameter mismatch: mode {mode} requires section [{name}]"));
            }
        }
        if matches!(self.mode, Mode::CheckConstrained | Mode::SimulateConstrained)
            && self.curve.is_some() == self.orbit.is_some()
        {
            return Err(format!("mode/parameter mismatch: mode {mode} needs exactly one of [curve] or [orbit]"));
        }
        let needs_algebra = !matches!(self.mode, Mode::Fpsolve | Mode::Diffusivity);
        match (&self.preset, &self.algebra_file) {
            (Some(_), Some(_)) => return Err("give either preset or algebra_file, not both".into()),
            (None, None) if needs_algebra => return Err(format!("mode {mode} requires preset or algebra_file")),
            (_, _) if self.mode == Mode::Fpsolve && (self.preset.is_some() || self.algebra_file.is_some()) => {
                return Err("mode/parameter mismatch: fpsolve works on the abelian reduction and takes no algebra".into())
            }
            _ => {}
        }
        if let Some(f) = &self.forcing {
            if f.columns.is_some() == f.basis.is_some() {
                return Err("[forcing] needs exactly one of columns or basis".into());
            }
        }
        if let Some(d) = &self.dynamics {
            let langevin = matches!(self.mode, Mode::SimulateLangevin | Mode::Gibbs | Mode::Haar);
            if langevin && d.nu.is_none() {
                return Err(format!("mode {mode} requires dynamics.nu"));
            }
            if !langevin && d.nu.is_some() {
                return Err(format!("mode/parameter mismatch: dynamics.nu is not used by mode {mode}"));
            }
            if langevin && d.s0.is_some() {
                return Err(format!("mode/parameter mismatch: dynamics.s0 is not used by mode {mode}"));
            }
            if langevin && d.start.is_some() {
                return Err(format!("mode/parameter mismatch: dynamics.start is not used by mode {mode}"));
            }
            if !langevin && (d.z0.is_some() || d.blowup.is_some()) {
                return Err(format!("mode/parameter mismatch: dynamics.z0 and dynamics.blowup are not used by mode {mode}"));
            }
        }
        if let Some(t) = &self.test {
            if !(0.0..1.0).contains(&t.burn_in) {
                return Err(format!("test.burn_in must lie in [0, 1), got {}", t.burn_in));
            }
        }
        if self.threads == Some(0) {
            return Err("threads must be at least 1".into());
        }
        Ok(())
    }

    /// Resolve relative paths against the directory holding the config file.
    pub fn resolve_paths(&mut self, base: &Path) {
        if let Some(p) = &self.algebra_file {
            if p.is_relative() {
                self.algebra_file = Some(base.join(p));
            }
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CHECK: &str = r#"
version = 1
mode = "check-langevin"
preset = "so3_rigid(1,2,3)"

[forcing]
columns = [[1, 0, 0]]
"#;

    #[test]
    fn parses_and_roundtrips() {
        let cfg = RunConfig::parse(CHECK).unwrap();
        assert_eq!(cfg.mode, Mode::CheckLangevin);
        assert_eq!(RunConfig::parse(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn diagnostics_name_the_problem() {
        let err = RunConfig::parse("version = 1\nmode = \"gibbs\"\npreset = 3\n").unwrap_err();
        assert!(err.contains("line 3"), "{err}");
        let err = RunConfig::parse(&CHECK.replace("columns", "colums")).unwrap_err();
        assert!(err.contains("colums"), "{err}");
        let err = RunConfig::parse(&format!("{CHECK}\n[fp]\na_cells = 8\n")).unwrap_err();
        assert!(err.contains("malformed") || err.contains("mismatch"), "{err}");
        let err = RunConfig::parse("version = 1\nmode = \"check-langevin\"\npreset = \"so3_euclid\"\n").unwrap_err();
        assert!(err.contains("requires section [forcing]"), "{err}");
        let err = RunConfig::parse(&CHECK.replace("version = 1", "version = 2")).unwrap_err();
        assert!(err.contains("version 2"), "{err}");
    }

    #[test]
    fn unused_section_is_a_mismatch() {
        let text = format!("{CHECK}\n[orbit]\nrho = 1.0\n");
        assert!(RunConfig::parse(&text).unwrap_err().contains("[orbit] is not used"));
    }

    #[test]
    fn constrained_modes_need_one_chart() {
        let text = "version = 1\nmode = \"check-constrained\"\npreset = \"so3_euclid\"\n";
        assert!(RunConfig::parse(text).unwrap_err().contains("exactly one of [curve] or [orbit]"));
    }
}
