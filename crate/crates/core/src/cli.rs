//! Experiment files, the `run` and `verify` commands, and report writers.
//!
//! Configuration is TOML. Command-line flags take precedence over the file:
//! `--seed` replaces `seed`, `--out` replaces `output.dir`, `--threads` caps the
//! worker pool (the file has no thread key).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analytic::{
    self, exposure_moment, influence_content, overlap_kernel, special, variance_scale, QuadratureSpec,
    TimeIntensity, WindowGeometry,
};
use crate::exposure;
use crate::mc::{self, AlgorithmChoice, CampaignConfig, CampaignResult, McError, Scaling, VarianceReport};
use crate::model::{ModelSpec, SpeedDistribution};
use crate::sampler;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const TABLE_HEADER: &str = "scale,replication,F";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid configuration:\n{}", format_issues(.0))]
    Config(Vec<ConfigIssue>),
    #[error(transparent)]
    Campaign(#[from] McError),
    #[error("could not build worker pool: {0}")]
    Threads(String),
    #[error("could not serialize report: {0}")]
    Serialize(String),
}

/// One problem with a configuration file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub key: String,
    /// 1-based line where the key appears, when it does.
    pub line: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}, key `{}`: {}", self.key, self.message),
            None => write!(f, "key `{}`: {}", self.key, self.message),
        }
    }
}

fn format_issues(issues: &[ConfigIssue]) -> String {
    issues
        .iter()
        .map(|i| format!("  {i}"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// `tau = <number>` or `tau = "lebesgue"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauSetting {
    Power(f64),
    Lebesgue,
}

impl Serialize for TauSetting {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            TauSetting::Power(t) => s.serialize_f64(*t),
            TauSetting::Lebesgue => s.serialize_str("lebesgue"),
        }
    }
}

impl<'de> Deserialize<'de> for TauSetting {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Float(f64),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(i) => Ok(TauSetting::Power(i as f64)),
            Raw::Float(f) => Ok(TauSetting::Power(f)),
            Raw::Word(w) if w == "lebesgue" => Ok(TauSetting::Lebesgue),
            Raw::Word(w) => Err(serde::de::Error::custom(format!(
                "tau must be a number or \"lebesgue\", got \"{w}\""
            ))),
        }
    }
}

impl TauSetting {
    pub fn time_intensity(self) -> TimeIntensity {
        match self {
            TauSetting::Power(tau) => TimeIntensity::PowerLaw { tau },
            TauSetting::Lebesgue => TimeIntensity::Lebesgue,
        }
    }
}

/// Window as written in a file; its dimension comes from `dimension`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WindowSetting {
    /// `[0, s_1] × ... × [0, s_d]`.
    Box { sides: Vec<f64> },
    /// Ball centred at the origin.
    Ball { radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingMode {
    #[default]
    None,
    Window,
    Intensity,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingSetting {
    #[serde(default)]
    pub mode: ScalingMode,
    #[serde(default)]
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSetting {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_summary")]
    pub summary: String,
    #[serde(default = "default_table")]
    pub table: String,
}

impl Default for OutputSetting {
    fn default() -> Self {
        Self {
            dir: default_out_dir(),
            summary: default_summary(),
            table: default_table(),
        }
    }
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("results")
}
fn default_summary() -> String {
    "summary.json".into()
}
fn default_table() -> String {
    "table.csv".into()
}
fn default_horizon() -> f64 {
    1.0
}
fn default_replications() -> usize {
    1000
}
fn default_algorithm() -> AlgorithmChoice {
    AlgorithmChoice::Indexed
}
fn default_one() -> f64 {
    1.0
}

/// Contents of an experiment file.
///
/// Required: `dimension`, `tau`, `[speed]`. Defaults: `horizon = 1`, unit box
/// window, `replications = 1000`, `seed = 0`, `algorithm = "indexed"`,
/// `intensity = 1`, `window_scale = 1`, no scaling, output to
/// `results/summary.json` and `results/table.csv`, quadrature tolerances
/// `abs_tol = 1e-14`, `rel_tol = 1e-11`, `max_depth = 60`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub dimension: usize,
    pub tau: TauSetting,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_algorithm")]
    pub algorithm: AlgorithmChoice,
    #[serde(default = "default_one")]
    pub intensity: f64,
    #[serde(default = "default_one")]
    pub window_scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<WindowSetting>,
    pub speed: SpeedDistribution,
    #[serde(default)]
    pub scaling: ScalingSetting,
    #[serde(default)]
    pub output: OutputSetting,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
}

impl ExperimentFile {
    pub fn from_toml(src: &str) -> Result<Self, Vec<ConfigIssue>> {
        toml::from_str(src).map_err(|e| {
            let line = e.span().map(|s| src[..s.start.min(src.len())].matches('\n').count() + 1);
            let key = line
                .and_then(|l| src.lines().nth(l - 1))
                .and_then(key_on_line)
                .unwrap_or_else(|| "<file>".into());
            vec![ConfigIssue {
                key,
                line,
                message: e.message().to_string(),
            }]
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment files always serialize")
    }

    pub fn window_geometry(&self) -> WindowGeometry {
        match &self.window {
            None => WindowGeometry::unit_box(self.dimension),
            Some(WindowSetting::Box { sides }) => WindowGeometry::Box { sides: sides.clone() },
            Some(WindowSetting::Ball { radius }) => WindowGeometry::Ball {
                dim: self.dimension,
                radius: *radius,
            },
        }
    }

    pub fn model_spec(&self) -> ModelSpec {
        ModelSpec {
            dim: self.dimension,
            time_intensity: self.tau.time_intensity(),
            horizon: self.horizon,
            window: self.window_geometry(),
            speed: self.speed.clone(),
            intensity: self.intensity,
            window_scale: self.window_scale,
            quadrature: self.quadrature,
        }
    }

    pub fn scaling(&self) -> Scaling {
        match self.scaling.mode {
            ScalingMode::None => Scaling::None,
            ScalingMode::Window => Scaling::Window(self.scaling.values.clone()),
            ScalingMode::Intensity => Scaling::Intensity(self.scaling.values.clone()),
        }
    }

    /// Every problem with the file's values, keyed by the offending key.
    pub fn issues(&self, src: Option<&str>) -> Vec<ConfigIssue> {
        let locate = |key: &str| src.and_then(|s| locate_key(s, key));
        let mut out = Vec::new();
        for v in self.model_spec().violations() {
            out.push(ConfigIssue {
                line: locate(&v.field),
                key: v.field,
                message: v.message,
            });
        }
        if self.replications < mc::MIN_REPLICATIONS {
            out.push(ConfigIssue {
                key: "replications".into(),
                line: locate("replications"),
                message: format!(
                    "replications must be at least {}, got {}",
                    mc::MIN_REPLICATIONS,
                    self.replications
                ),
            });
        }
        let values = &self.scaling.values;
        let scaling_msg = match self.scaling.mode {
            ScalingMode::None if !values.is_empty() => Some("values given but mode is \"none\"".to_string()),
            ScalingMode::None => None,
            _ if values.is_empty() => Some("scaling values must be nonempty".into()),
            _ if values.windows(2).any(|w| !(w[1] > w[0])) => {
                Some("scaling values must be strictly increasing".into())
            }
            _ if values.iter().any(|v| !(*v >= 1.0 && v.is_finite())) => {
                Some("scaling values must be finite and >= 1".into())
            }
            _ => None,
        };
        if let Some(message) = scaling_msg {
            out.push(ConfigIssue {
                key: "scaling".into(),
                line: locate("scaling"),
                message,
            });
        }
        out
    }

    pub fn campaign(&self) -> CampaignConfig {
        CampaignConfig {
            spec: self.model_spec(),
            replications: self.replications,
            scaling: self.scaling(),
            master_seed: self.seed,
            algorithm: self.algorithm,
        }
    }

    /// SHA-256 of the canonical serialization, ignoring the output section.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = OutputSetting::default();
        let digest = Sha256::digest(canonical.to_toml().as_bytes());
        digest.iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

/// `key` from a `key = ...` or `[key]` line.
fn key_on_line(line: &str) -> Option<String> {
    let l = line.trim();
    if let Some(table) = l.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
        return Some(table.trim().to_string());
    }
    l.split_once('=').map(|(k, _)| k.trim().to_string())
}

/// Line of `key = ...` or `[key]` in a TOML source.
fn locate_key(src: &str, key: &str) -> Option<usize> {
    src.lines()
        .position(|line| {
            let l = line.trim();
            let table = l.strip_prefix('[').and_then(|r| r.strip_suffix(']')).map(str::trim);
            table == Some(key) || l.strip_prefix(key).is_some_and(|r| r.trim_start().starts_with('='))
        })
        .map(|i| i + 1)
}

/// A parsed, validated experiment.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub file: ExperimentFile,
    pub campaign: CampaignConfig,
}

impl LoadedConfig {
    pub fn from_file(file: ExperimentFile) -> Result<Self, CliError> {
        let issues = file.issues(None);
        if !issues.is_empty() {
            return Err(CliError::Config(issues));
        }
        let campaign = file.campaign();
        Ok(Self { file, campaign })
    }
}

pub fn parse_config_str(src: &str) -> Result<LoadedConfig, CliError> {
    let file = ExperimentFile::from_toml(src).map_err(CliError::Config)?;
    let issues = file.issues(Some(src));
    if !issues.is_empty() {
        return Err(CliError::Config(issues));
    }
    let campaign = file.campaign();
    Ok(LoadedConfig { file, campaign })
}

pub fn parse_config(path: &Path) -> Result<LoadedConfig, CliError> {
    let src = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&src)
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub dry_run: bool,
}

impl RunOptions {
    /// The file after flag overrides.
    pub fn apply(&self, file: &ExperimentFile) -> ExperimentFile {
        let mut f = file.clone();
        if let Some(seed) = self.seed {
            f.seed = seed;
        }
        if let Some(out) = &self.out {
            f.output.dir = out.clone();
        }
        f
    }
}

#[derive(Debug, Serialize)]
struct Provenance<'a> {
    master_seed: u64,
    version: &'a str,
    config_hash: String,
    timestamp_unix: u64,
}

#[derive(Debug, Serialize)]
struct PointReport<'a> {
    #[serde(flatten)]
    point: &'a mc::ScalePoint,
    standard_error: f64,
    variance_check: Option<VarianceReport>,
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    provenance: Provenance<'a>,
    config: &'a ExperimentFile,
    scaling: &'a str,
    replications: usize,
    points: Vec<PointReport<'a>>,
    kolmogorov_rate: Option<mc::RateFit>,
    wasserstein_rate: Option<mc::RateFit>,
}

/// Flat table bytes: one row per `(scale, replication)`.
pub fn render_table(result: &CampaignResult) -> String {
    let mut out = String::with_capacity(32 * result.replications * result.points.len() + 32);
    out.push_str(TABLE_HEADER);
    out.push('\n');
    for p in &result.points {
        let scale = format_float(p.scale);
        for (r, f) in p.samples.iter().enumerate() {
            let _ = writeln!(out, "{scale},{r},{f}");
        }
    }
    out
}

/// 17 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn render_summary(file: &ExperimentFile, result: &CampaignResult, timestamp_unix: u64) -> Result<String, CliError> {
    let specs = file.campaign().scale_points();
    let points = result
        .points
        .iter()
        .zip(&specs)
        .map(|(p, (_, spec))| PointReport {
            point: p,
            standard_error: p.standard_error(),
            variance_check: mc::variance_bracket_check(p, spec).ok(),
        })
        .collect();
    let summary = Summary {
        provenance: Provenance {
            master_seed: result.master_seed,
            version: VERSION,
            config_hash: file.hash(),
            timestamp_unix,
        },
        config: file,
        scaling: result.scaling,
        replications: result.replications,
        points,
        kolmogorov_rate: result.kolmogorov_rate,
        wasserstein_rate: result.wasserstein_rate,
    };
    serde_json::to_string_pretty(&summary).map_err(|e| CliError::Serialize(e.to_string()))
}

/// Analytic values per scale point, without simulating.
pub fn dry_run_report(file: &ExperimentFile) -> Result<String, CliError> {
    let mut out = String::new();
    for (scale, spec) in file.campaign().scale_points() {
        let spec = spec.validate().map_err(McError::from)?;
        let mean = analytic::mean_exposed(&spec).map_err(McError::from)?;
        let lower = analytic::variance_lower_bound(&spec).map_err(McError::from)?;
        let upper = analytic::variance_upper_bound(&spec).map_err(McError::from)?;
        let mass = sampler::region_mass(&spec).map_err(McError::from)?;
        let _ = writeln!(
            out,
            "scale={} mean={} var_lower={}{} var_upper={} region_mass={}",
            format_float(scale),
            format_float(mean),
            format_float(lower.value),
            if lower.vacuous { " (vacuous)" } else { "" },
            format_float(upper),
            format_float(mass),
        );
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary_path: Option<PathBuf>,
    pub table_path: Option<PathBuf>,
    /// Text for standard output.
    pub message: String,
}

fn with_pool<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder.build().map_err(|e| CliError::Threads(e.to_string()))?;
    Ok(pool.install(job))
}

pub fn cmd_run(loaded: &LoadedConfig, opts: &RunOptions) -> Result<RunOutcome, CliError> {
    let file = opts.apply(&loaded.file);
    if opts.dry_run {
        return Ok(RunOutcome {
            summary_path: None,
            table_path: None,
            message: dry_run_report(&file)?,
        });
    }
    let campaign = file.campaign();
    let result = with_pool(opts.threads, || mc::run_campaign(&campaign))??;
    let dir = &file.output.dir;
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.clone(),
        source,
    })?;
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let summary_path = dir.join(&file.output.summary);
    let table_path = dir.join(&file.output.table);
    let write = |path: &PathBuf, text: String| {
        fs::write(path, text).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })
    };
    write(&summary_path, render_summary(&file, &result, timestamp)?)?;
    write(&table_path, render_table(&result))?;
    let mut message = String::new();
    for p in &result.points {
        let _ = writeln!(
            message,
            "scale={} mean={:.6} (analytic {:.6}) var={:.6} d_K={} d_W={}",
            p.scale,
            p.sample_mean,
            p.analytic_mean,
            p.sample_variance,
            p.kolmogorov.map_or("degenerate".into(), |d| format!("{d:.5}")),
            p.wasserstein.map_or("degenerate".into(), |d| format!("{d:.5}")),
        );
    }
    if let Some(fit) = result.kolmogorov_rate {
        let _ = writeln!(message, "d_K exponent {:.4}", fit.exponent);
    }
    let _ = writeln!(message, "wrote {} and {}", summary_path.display(), table_path.display());
    Ok(RunOutcome {
        summary_path: Some(summary_path),
        table_path: Some(table_path),
        message,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    /// Factor applied to the closed-form `Λ` before it is compared; anything
    /// other than 1 is a fault injection.
    pub lambda_perturbation: f64,
    pub threads: Option<usize>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            lambda_perturbation: 1.0,
            threads: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct VerifyReport {
    pub checks: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn render(&self) -> String {
        self.checks
            .iter()
            .map(|c| format!("{} {}: {}\n", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail))
            .collect()
    }
}

const VERIFY_RTOL: f64 = 1e-8;

fn time_intensities() -> [TimeIntensity; 4] {
    [
        TimeIntensity::Lebesgue,
        TimeIntensity::PowerLaw { tau: -0.5 },
        TimeIntensity::PowerLaw { tau: 0.0 },
        TimeIntensity::PowerLaw { tau: 1.5 },
    ]
}

/// Largest relative error over a grid, or the first error encountered.
fn worst_relative(pairs: impl Iterator<Item = Result<(f64, f64), String>>) -> Result<f64, String> {
    let mut worst: f64 = 0.0;
    for p in pairs {
        let (closed, quad) = p?;
        let rel = (closed - quad).abs() / quad.abs().max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
    }
    Ok(worst)
}

fn grid_check(name: &'static str, worst: Result<f64, String>) -> CheckOutcome {
    match worst {
        Ok(w) => CheckOutcome {
            name,
            passed: w <= VERIFY_RTOL,
            detail: format!("max relative error {w:.3e} (tolerance {VERIFY_RTOL:.0e})"),
        },
        Err(e) => CheckOutcome {
            name,
            passed: false,
            detail: e,
        },
    }
}

fn check_influence_content(perturb: f64) -> CheckOutcome {
    let q = QuadratureSpec::default();
    let pairs = time_intensities().into_iter().flat_map(move |ti| {
        (1..=3).flat_map(move |d| {
            [0.1, 0.7, 1.0, 2.5].into_iter().map(move |t| {
                let closed = perturb * influence_content(ti, d, t);
                let quad = ti
                    .integrate(|s| (t - s).powi(d as i32), 0.0, t, &q)
                    .map_err(|e| e.to_string())?
                    * special::unit_ball_volume(d);
                Ok((closed, quad))
            })
        })
    });
    grid_check("influence_content", worst_relative(pairs))
}

fn check_exposure_moment() -> CheckOutcome {
    let q = QuadratureSpec::default();
    let pairs = time_intensities().into_iter().flat_map(move |ti| {
        (1..=2).flat_map(move |d| {
            [(0.0, 1.0), (1.0, 2.0), (2.5, 0.5)].into_iter().map(move |(x, y)| {
                let closed = exposure_moment(x, y, ti, d).map_err(|e| e.to_string())?;
                // e^{-yΛ} is below e^{-700} beyond `end`
                let unit = influence_content(ti, d, 1.0);
                let end = (700.0 / (y * unit)).powf(1.0 / (d as f64 + ti.tau() + 1.0));
                let quad = ti
                    .integrate(|t| t.powf(x) * (-y * influence_content(ti, d, t)).exp(), 0.0, end, &q)
                    .map_err(|e| e.to_string())?;
                Ok((closed, quad))
            })
        })
    });
    grid_check("exposure_moment", worst_relative(pairs))
}

fn check_variance_scale() -> CheckOutcome {
    let q = QuadratureSpec::default();
    let pairs = [-0.5, 0.0, 1.0].into_iter().flat_map(move |tau: f64| {
        (1..=3).flat_map(move |d| {
            [0.01, 1.0, 30.0].into_iter().map(move |x: f64| {
                let a = 1.2f64;
                let closed = variance_scale(a, tau, d, x).map_err(|e| e.to_string())?;
                let qd = d as f64 + tau + 1.0;
                let p = (tau + 1.0) / qd;
                let z = a.powf(qd) * x;
                // γ(p, z) = (1/p) ∫_0^{z^p} exp(-u^{1/p}) du
                let g = analytic::quad::integrate(|u| (-u.powf(1.0 / p)).exp(), 0.0, z.powf(p), &q)
                    .map_err(|e| e.to_string())?
                    / p;
                Ok((closed, g * x.powf(-p)))
            })
        })
    });
    grid_check("variance_scale", worst_relative(pairs))
}

fn check_overlap_kernel() -> CheckOutcome {
    let q = QuadratureSpec::default();
    let pairs = time_intensities().into_iter().flat_map(move |ti| {
        (1..=3).flat_map(move |d| {
            [(0.3, 0.3), (0.5, 1.0), (2.0, 0.7)].into_iter().map(move |(t1, t2): (f64, f64)| {
                let closed = overlap_kernel(t1, t2, ti, d, 1.5);
                let kd = special::unit_ball_volume(d);
                let m = t1.min(t2);
                let quad = ti
                    .integrate(|s| ((t1 - s) * (t2 - s)).powi(d as i32), 0.0, m, &q)
                    .map_err(|e| e.to_string())?
                    * kd
                    * kd
                    * 1.5;
                Ok((closed, quad))
            })
        })
    });
    grid_check("overlap_kernel", worst_relative(pairs))
}

fn verify_specs() -> Vec<ModelSpec> {
    vec![
        ModelSpec::new(1, TimeIntensity::PowerLaw { tau: 0.0 }, SpeedDistribution::PointMass { value: 1.0 }),
        ModelSpec::new(2, TimeIntensity::PowerLaw { tau: 0.0 }, SpeedDistribution::PointMass { value: 1.0 }),
        ModelSpec::new(
            1,
            TimeIntensity::PowerLaw { tau: 0.0 },
            SpeedDistribution::FiniteDiscrete {
                values: vec![1.0, 3.0],
                probabilities: vec![0.5, 0.5],
            },
        ),
    ]
}

fn check_oracle_equivalence() -> CheckOutcome {
    let mut compared = 0usize;
    for (k, spec) in verify_specs().into_iter().enumerate() {
        let spec = spec.with_window_scale(25.0);
        for r in 0..20 {
            let real = match sampler::sample_realization(&spec, 0xC0FFEE, (k as u64) << 32 | r) {
                Ok(real) => real,
                Err(e) => {
                    return CheckOutcome {
                        name: "oracle_equivalence",
                        passed: false,
                        detail: e.to_string(),
                    }
                }
            };
            let a = exposure::exposed_naive(&real);
            let b = exposure::exposed_indexed(&real);
            if a.flags != b.flags {
                return CheckOutcome {
                    name: "oracle_equivalence",
                    passed: false,
                    detail: format!("flags differ on spec {k}, realization {r}"),
                };
            }
            compared += real.len();
        }
    }
    CheckOutcome {
        name: "oracle_equivalence",
        passed: true,
        detail: format!("60 realizations, {compared} seeds, identical flags"),
    }
}

fn check_mean_consistency() -> CheckOutcome {
    let mut details = Vec::new();
    let mut passed = true;
    for (k, spec) in verify_specs().into_iter().enumerate() {
        let config = CampaignConfig::new(spec, 2000, 0x5EED + k as u64);
        match mc::run_campaign(&config) {
            Ok(res) => {
                let p = &res.points[0];
                let z = (p.sample_mean - p.analytic_mean) / p.standard_error();
                passed &= z.abs() <= 4.0;
                details.push(format!("z={z:+.2}"));
            }
            Err(e) => {
                passed = false;
                details.push(e.to_string());
            }
        }
    }
    CheckOutcome {
        name: "mean_consistency",
        passed,
        detail: format!("{} (|z| <= 4 required)", details.join(", ")),
    }
}

fn check_variance_bracket_order() -> CheckOutcome {
    let mut passed = true;
    let mut details = Vec::new();
    for spec in verify_specs() {
        match (analytic::variance_lower_bound(&spec), analytic::variance_upper_bound(&spec)) {
            (Ok(lo), Ok(hi)) => {
                passed &= lo.value <= hi && lo.value > 0.0;
                details.push(format!("[{:.4}, {:.4}]", lo.value, hi));
            }
            (Err(e), _) | (_, Err(e)) => {
                passed = false;
                details.push(e.to_string());
            }
        }
    }
    CheckOutcome {
        name: "variance_bracket_order",
        passed,
        detail: details.join(", "),
    }
}

/// Built-in battery: closed forms against quadrature, indexed against naive
/// exposure, and mean consistency of small campaigns.
pub fn cmd_verify(opts: &VerifyOptions) -> Result<VerifyReport, CliError> {
    let perturb = opts.lambda_perturbation;
    with_pool(opts.threads, || VerifyReport {
        checks: vec![
            check_influence_content(perturb),
            check_exposure_moment(),
            check_variance_scale(),
            check_overlap_kernel(),
            check_variance_bracket_order(),
            check_oracle_equivalence(),
            check_mean_consistency(),
        ],
    })
}
