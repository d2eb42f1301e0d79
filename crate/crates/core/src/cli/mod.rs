//! Batch experiment driver: a JSON config selects an experiment, which writes
//! `report.csv`, `verdict.json` and, for one-dimensional sweeps, `plot.svg`.

mod experiments;
mod svg;

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use svg::{Plot, Series};

use crate::bangbang::fixtures::{LEVEL_SET_FIXTURES, STATIONARY_FIXTURES};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_ASSERTION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    KernelCheck,
    DualNorm,
    Wolff,
    Pushforward,
    PdeVerify,
    StationaryFixture,
    GrowthProbe,
    Ssc,
    GrowthScan,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::KernelCheck,
        Experiment::DualNorm,
        Experiment::Wolff,
        Experiment::Pushforward,
        Experiment::PdeVerify,
        Experiment::StationaryFixture,
        Experiment::GrowthProbe,
        Experiment::Ssc,
        Experiment::GrowthScan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::KernelCheck => "kernel-check",
            Experiment::DualNorm => "dual-norm",
            Experiment::Wolff => "wolff",
            Experiment::Pushforward => "pushforward",
            Experiment::PdeVerify => "pde-verify",
            Experiment::StationaryFixture => "stationary-fixture",
            Experiment::GrowthProbe => "growth-probe",
            Experiment::Ssc => "ssc",
            Experiment::GrowthScan => "growth-scan",
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            Experiment::KernelCheck => "sampled Bessel kernel: mass, monotonicity, closed form for d=1, alpha=2",
            Experiment::DualNorm => "dual norms of random atomic measures, grid path against the p=2 energy path",
            Experiment::Wolff => "Wolff functional against the p'-th power of the dual norm",
            Experiment::Pushforward => "dual norms before and after pushforward by scalings and projections",
            Experiment::PdeVerify => "order-2 convergence and finite-difference checks of gradient and Hessian",
            Experiment::StationaryFixture => "fixture adjoint, first-order residuals and zero level set",
            Experiment::GrowthProbe => "growth constants over band widths and random differences",
            Experiment::Ssc => "smallest Rayleigh quotient of the second-order form",
            Experiment::GrowthScan => "sampled quadratic growth near a stationary control",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Family parameters; each experiment reads the ones it needs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    /// Number of random measures or differences.
    pub count: Option<usize>,
    pub max_atoms: Option<usize>,
    /// Band widths relative to `max |phibar|`.
    pub widths: Option<Vec<f64>>,
    /// Dual-norm radii for the growth scan.
    pub radii: Option<Vec<f64>>,
    /// Scaling factors for the pushforward maps.
    pub scales: Option<Vec<f64>>,
    /// Samples per radius for the growth scan.
    pub samples: Option<usize>,
    pub basis_size: Option<usize>,
    /// Mesh levels for the convergence study.
    pub levels: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub dim: Option<usize>,
    pub alpha: Option<f64>,
    pub p: Option<f64>,
    /// Nodes per axis of the fixture grid.
    pub grid: Option<usize>,
    /// Lattice spacing of kernels and dual norms.
    pub spacing: Option<f64>,
    pub fixture: Option<String>,
    #[serde(default)]
    pub family: FamilyConfig,
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn validate(&self) -> Result<(), CliError> {
        if let Some(name) = &self.fixture {
            if !LEVEL_SET_FIXTURES.contains(&name.as_str()) && !STATIONARY_FIXTURES.contains(&name.as_str()) {
                return Err(CliError::Config(format!("fixture: unknown fixture `{name}`")));
            }
        }
        if let Some(d) = self.dim {
            if !(1..=3).contains(&d) {
                return Err(CliError::Config(format!("dim: {d} is not in 1..=3")));
            }
        }
        if let Some(n) = self.grid {
            if n < 4 {
                return Err(CliError::Config(format!("grid: {n} nodes per axis is too few")));
            }
        }
        if let Some(h) = self.spacing {
            if !(h > 0.0 && h.is_finite()) {
                return Err(CliError::Config(format!("spacing: {h} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Invalid or inconsistent configuration.
    Config(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        EXIT_CONFIG
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

/// A named pass/fail assertion.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, pass: bool, detail: String) -> Self {
        Self { name: name.to_string(), pass, detail }
    }
}

/// Everything an experiment produces before it is written to disk.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub experiment: Experiment,
    pub report: Vec<u8>,
    pub plot: Option<Plot>,
    pub metrics: Vec<(String, f64)>,
    pub checks: Vec<Check>,
}

impl Outcome {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|(n, _)| n == name).map(|&(_, v)| v)
    }

    /// `{"experiment", "pass", "metrics"}` with keys sorted. Non-finite
    /// metrics are clamped to the largest finite magnitude.
    pub fn verdict_json(&self) -> String {
        let metrics: serde_json::Map<String, serde_json::Value> = self
            .metrics
            .iter()
            .map(|(k, v)| {
                let v = if v.is_nan() {
                    0.0
                } else {
                    v.clamp(f64::MIN, f64::MAX)
                };
                (k.clone(), serde_json::json!(v))
            })
            .collect();
        let v = serde_json::json!({
            "experiment": self.experiment.name(),
            "pass": self.pass(),
            "metrics": metrics,
        });
        let mut s = serde_json::to_string_pretty(&v).expect("json values serialize");
        s.push('\n');
        s
    }
}

/// Runs the configured experiment with `seed_override` taking precedence over
/// the config seed.
pub fn run(cfg: &ExperimentConfig, seed_override: Option<u64>) -> Result<Outcome, CliError> {
    let seed = seed_override.or(cfg.seed).unwrap_or(0);
    experiments::run(cfg, seed)
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp).map_err(io)?;
        f.write_all(bytes).map_err(io)?;
        f.sync_all().map_err(io)?;
    }
    fs::rename(&tmp, path).map_err(io)
}

/// Writes the artifacts of `outcome` into `dir`, returning the paths.
pub fn write_outputs(outcome: &Outcome, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut written = Vec::new();
    let report = dir.join("report.csv");
    write_atomic(&report, &outcome.report)?;
    written.push(report);
    let verdict = dir.join("verdict.json");
    write_atomic(&verdict, outcome.verdict_json().as_bytes())?;
    written.push(verdict);
    if let Some(plot) = &outcome.plot {
        let path = dir.join("plot.svg");
        write_atomic(&path, plot.render().as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

/// Output directory: `--out`, then the config `output`, then
/// `ssc-out/<experiment>`.
pub fn output_dir(cfg: &ExperimentConfig, out: Option<&Path>) -> PathBuf {
    out.map(Path::to_path_buf)
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("ssc-out").join(cfg.experiment.name()))
}

/// Text printed by `ssc list`.
pub fn listing() -> String {
    let mut s = String::from("experiments:\n");
    for e in Experiment::ALL {
        s.push_str(&format!("  {:<20}{}\n", e.name(), e.summary()));
    }
    s.push_str("fixtures:\n");
    for f in STATIONARY_FIXTURES {
        s.push_str(&format!("  {f:<20}stationary point\n"));
    }
    for f in LEVEL_SET_FIXTURES {
        s.push_str(&format!("  {f:<20}adjoint level set\n"));
    }
    s
}

/// Full `run` subcommand: load, run, write, and map the result to an exit
/// code. Messages go to `err`.
pub fn run_command(config: &Path, out: Option<&Path>, seed: Option<u64>, err: &mut dyn Write) -> i32 {
    let result = ExperimentConfig::load(config).and_then(|cfg| {
        let outcome = run(&cfg, seed)?;
        write_outputs(&outcome, &output_dir(&cfg, out))?;
        Ok(outcome)
    });
    match result {
        Ok(outcome) if outcome.pass() => EXIT_PASS,
        Ok(outcome) => {
            for c in outcome.failures() {
                let _ = writeln!(err, "assertion failed: {}: {}", c.name, c.detail);
            }
            EXIT_ASSERTION
        }
        Err(e) => {
            let _ = writeln!(err, "{e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ExperimentConfig::from_json(r#"{"experiment": "wolff", "colour": 3}"#).unwrap_err();
        assert!(matches!(err, CliError::Config(m) if m.contains("colour")));
        let err = ExperimentConfig::from_json(r#"{"experiment": "wolff", "family": {"size": 3}}"#).unwrap_err();
        assert!(matches!(err, CliError::Config(m) if m.contains("size")));
    }

    #[test]
    fn unknown_fixture_is_named() {
        let err = ExperimentConfig::from_json(r#"{"experiment": "ssc", "fixture": "square"}"#).unwrap_err();
        assert!(matches!(err, CliError::Config(m) if m.contains("square")));
    }

    #[test]
    fn experiment_names_round_trip() {
        for e in Experiment::ALL {
            let cfg = ExperimentConfig::from_json(&format!(r#"{{"experiment": "{}"}}"#, e.name())).unwrap();
            assert_eq!(cfg.experiment, e);
        }
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
