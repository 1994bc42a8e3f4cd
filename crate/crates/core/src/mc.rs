//! Monte Carlo campaigns over window or intensity scaling, with empirical
//! distances to the standard Gaussian and log-log rate fits.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::analytic::special::{std_normal_cdf, std_normal_pdf, std_normal_quantile};
use crate::analytic::{self, variance_scale, AnalyticError, LowerBound};
use crate::exposure::{self, Algorithm};
use crate::model::{ModelError, ModelSpec};
use crate::rng::{splitmix64, stream_index, substream};
use crate::sampler::{self, SamplerError};

pub const MIN_REPLICATIONS: usize = 100;
pub const BOOTSTRAP_RESAMPLES: usize = 200;
/// Two-sided level of the sample-variance confidence interval.
pub const VARIANCE_CI_LEVEL: f64 = 0.99;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum McError {
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid campaign: {0}")]
    InvalidConfig(String),
    #[error("degenerate sample: {0}")]
    Degenerate(String),
    #[error("naive and indexed exposure disagree at scale point {point}, replication {replication}")]
    AlgorithmMismatch { point: usize, replication: usize },
    #[error("rate fit needs at least 4 points, got {0}")]
    TooFewPoints(usize),
    #[error("rate fit needs positive distances, got {0}")]
    NonPositiveDistance(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "values", rename_all = "snake_case")]
pub enum Scaling {
    None,
    /// Window `n^{1/d} W` for each listed `n`.
    Window(Vec<f64>),
    /// Intensity `s λ ⊗ θ ⊗ ν` for each listed `s`.
    Intensity(Vec<f64>),
}

impl Scaling {
    pub fn label(&self) -> &'static str {
        match self {
            Scaling::None => "none",
            Scaling::Window(_) => "window",
            Scaling::Intensity(_) => "intensity",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmChoice {
    Naive,
    Indexed,
    /// Run both and fail on any disagreement.
    Both,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub spec: ModelSpec,
    pub replications: usize,
    pub scaling: Scaling,
    pub master_seed: u64,
    pub algorithm: AlgorithmChoice,
}

impl CampaignConfig {
    pub fn new(spec: ModelSpec, replications: usize, master_seed: u64) -> Self {
        Self {
            spec,
            replications,
            scaling: Scaling::None,
            master_seed,
            algorithm: AlgorithmChoice::Indexed,
        }
    }

    pub fn with_scaling(mut self, scaling: Scaling) -> Self {
        self.scaling = scaling;
        self
    }

    pub fn with_algorithm(mut self, algorithm: AlgorithmChoice) -> Self {
        self.algorithm = algorithm;
        self
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.replications < MIN_REPLICATIONS {
            out.push(format!(
                "replications must be at least {MIN_REPLICATIONS}, got {}",
                self.replications
            ));
        }
        if let Scaling::Window(v) | Scaling::Intensity(v) = &self.scaling {
            if v.is_empty() {
                out.push("scaling values must be nonempty".into());
            }
            if v.windows(2).any(|w| !(w[1] > w[0])) {
                out.push("scaling values must be strictly increasing".into());
            }
            if v.iter().any(|x| !(*x >= 1.0 && x.is_finite())) {
                out.push("scaling values must be finite and >= 1".into());
            }
        }
        out
    }

    /// `(scale, spec)` for every scale point.
    pub fn scale_points(&self) -> Vec<(f64, ModelSpec)> {
        match &self.scaling {
            Scaling::None => vec![(1.0, self.spec.clone())],
            Scaling::Window(ns) => ns
                .iter()
                .map(|&n| (n, self.spec.clone().with_window_scale(n)))
                .collect(),
            Scaling::Intensity(ss) => ss
                .iter()
                .map(|&s| (s, self.spec.clone().with_intensity(s)))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalePoint {
    pub scale: f64,
    #[serde(skip)]
    pub samples: Vec<u64>,
    #[serde(skip)]
    pub standardized: Vec<f64>,
    pub sample_mean: f64,
    pub sample_variance: f64,
    pub degenerate: bool,
    pub kolmogorov: Option<f64>,
    pub kolmogorov_se: Option<f64>,
    pub wasserstein: Option<f64>,
    pub analytic_mean: f64,
    pub variance_lower: LowerBound,
    pub variance_upper: f64,
    pub region_mass: f64,
}

impl ScalePoint {
    /// Standard error of the sample mean.
    pub fn standard_error(&self) -> f64 {
        (self.sample_variance / self.samples.len() as f64).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub exponent: f64,
    pub intercept: f64,
    /// Residual sum of squares in log space.
    pub residual: f64,
    /// Bootstrap standard error of the exponent, when available.
    pub exponent_se: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CampaignResult {
    pub scaling: &'static str,
    pub replications: usize,
    pub master_seed: u64,
    pub points: Vec<ScalePoint>,
    pub kolmogorov_rate: Option<RateFit>,
    pub wasserstein_rate: Option<RateFit>,
}

/// Sample count and mean/variance (unbiased).
pub fn mean_variance(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = if samples.len() > 1 {
        samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

pub fn standardize(samples: &[f64]) -> Option<Vec<f64>> {
    let (mean, var) = mean_variance(samples);
    if !(var > 0.0) {
        return None;
    }
    let sd = var.sqrt();
    Some(samples.iter().map(|x| (x - mean) / sd).collect())
}

/// `sup_t |F_m(t) - Φ(t)|`, evaluated at the jumps of the empirical CDF.
pub fn kolmogorov_to_gaussian(samples: &[f64]) -> Result<f64, McError> {
    if samples.len() < 2 {
        return Err(McError::Degenerate("need at least two samples".into()));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(McError::Degenerate("non-finite sample".into()));
    }
    let (_, var) = mean_variance(samples);
    if !(var > 0.0) {
        return Err(McError::Degenerate("zero sample variance".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    Ok(sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let phi = std_normal_cdf(x);
            let above = (i + 1) as f64 / m - phi;
            let below = phi - i as f64 / m;
            above.abs().max(below.abs())
        })
        .fold(0.0, f64::max))
}

/// `∫_{-∞}^x Φ(t) dt`.
fn cdf_integral(x: f64) -> f64 {
    x * std_normal_cdf(x) + std_normal_pdf(x)
}

/// `∫_u^v |c - Φ(t)| dt` for `u <= v`, `0 < c < 1`.
fn gap_integral(c: f64, u: f64, v: f64) -> f64 {
    if v <= u {
        return 0.0;
    }
    let crossing = std_normal_quantile(c);
    let above = |a: f64, b: f64| cdf_integral(b) - cdf_integral(a) - c * (b - a);
    if crossing <= u {
        above(u, v)
    } else if crossing >= v {
        -above(u, v)
    } else {
        -above(u, crossing) + above(crossing, v)
    }
}

/// `∫ |F_m(t) - Φ(t)| dt`, the Wasserstein-1 distance between the empirical
/// law and the standard Gaussian, integrated exactly between order
/// statistics.
pub fn wasserstein_to_gaussian(samples: &[f64]) -> Result<f64, McError> {
    if samples.len() < 2 {
        return Err(McError::Degenerate("need at least two samples".into()));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(McError::Degenerate("non-finite sample".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    let first = sorted[0];
    let last = sorted[m - 1];
    let mut total = cdf_integral(first);
    total += std_normal_pdf(last) - last * std_normal_cdf(-last);
    for k in 1..m {
        total += gap_integral(k as f64 / m as f64, sorted[k - 1], sorted[k]);
    }
    Ok(total)
}

/// Least-squares slope of `log(distance)` against `log(scale)`.
pub fn fit_rate(scales: &[f64], distances: &[f64]) -> Result<RateFit, McError> {
    if scales.len() != distances.len() {
        return Err(McError::InvalidConfig("scales and distances differ in length".into()));
    }
    if scales.len() < 4 {
        return Err(McError::TooFewPoints(scales.len()));
    }
    if let Some(&bad) = distances.iter().find(|d| !(**d > 0.0)) {
        return Err(McError::NonPositiveDistance(bad));
    }
    if let Some(&bad) = scales.iter().find(|s| !(**s > 0.0)) {
        return Err(McError::InvalidConfig(format!("scales must be positive, got {bad}")));
    }
    let xs: Vec<f64> = scales.iter().map(|s| s.ln()).collect();
    let ys: Vec<f64> = distances.iter().map(|d| d.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if !(sxx > 0.0) {
        return Err(McError::InvalidConfig("scales must not all coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - exponent * x).powi(2))
        .sum();
    Ok(RateFit {
        exponent,
        intercept,
        residual,
        exponent_se: None,
    })
}

fn resample_kolmogorov<R: Rng>(samples: &[f64], rng: &mut R) -> Option<f64> {
    let m = samples.len();
    let draw: Vec<f64> = (0..m).map(|_| samples[rng.random_range(0..m)]).collect();
    standardize(&draw).and_then(|z| kolmogorov_to_gaussian(&z).ok())
}

fn sd(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    Some(mean_variance(values).1.sqrt())
}

const BOOTSTRAP_SALT: u64 = 0xB00F_57A9_0000_0001;

/// Run every replication of every scale point.
///
/// Replication `r` at point `k` always uses substream `(k, r)` of the master
/// seed, and results are gathered in index order, so the output does not
/// depend on scheduling or thread count.
pub fn run_campaign(config: &CampaignConfig) -> Result<CampaignResult, McError> {
    let bad = config.violations();
    if !bad.is_empty() {
        return Err(McError::InvalidConfig(bad.join("; ")));
    }
    let mut points = Vec::new();
    for (k, (scale, spec)) in config.scale_points().into_iter().enumerate() {
        let spec = spec.validate()?;
        let samples = (0..config.replications)
            .into_par_iter()
            .map(|r| -> Result<u64, McError> {
                let real = sampler::sample_realization(&spec, config.master_seed, stream_index(k, r))?;
                Ok(match config.algorithm {
                    AlgorithmChoice::Naive => exposure::compute(&real, Algorithm::Naive).count,
                    AlgorithmChoice::Indexed => exposure::compute(&real, Algorithm::Indexed).count,
                    AlgorithmChoice::Both => {
                        let a = exposure::exposed_naive(&real);
                        let b = exposure::exposed_indexed(&real);
                        if a.flags != b.flags {
                            return Err(McError::AlgorithmMismatch {
                                point: k,
                                replication: r,
                            });
                        }
                        a.count
                    }
                })
            })
            .collect::<Result<Vec<u64>, McError>>()?;
        points.push(summarize_point(config, k, scale, &spec, samples)?);
    }
    let (kolmogorov_rate, wasserstein_rate) = fit_campaign_rates(config, &points);
    Ok(CampaignResult {
        scaling: config.scaling.label(),
        replications: config.replications,
        master_seed: config.master_seed,
        points,
        kolmogorov_rate,
        wasserstein_rate,
    })
}

fn summarize_point(
    config: &CampaignConfig,
    k: usize,
    scale: f64,
    spec: &ModelSpec,
    samples: Vec<u64>,
) -> Result<ScalePoint, McError> {
    let values: Vec<f64> = samples.iter().map(|&f| f as f64).collect();
    let (sample_mean, sample_variance) = mean_variance(&values);
    let standardized = standardize(&values);
    let degenerate = standardized.is_none();
    let (kolmogorov, wasserstein) = match &standardized {
        Some(z) => (Some(kolmogorov_to_gaussian(z)?), Some(wasserstein_to_gaussian(z)?)),
        None => (None, None),
    };
    let kolmogorov_se = if degenerate {
        None
    } else {
        let mut rng = substream(config.master_seed ^ BOOTSTRAP_SALT, splitmix64(k as u64));
        let boots: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
            .filter_map(|_| resample_kolmogorov(&values, &mut rng))
            .collect();
        sd(&boots)
    };
    Ok(ScalePoint {
        scale,
        samples,
        standardized: standardized.unwrap_or_default(),
        sample_mean,
        sample_variance,
        degenerate,
        kolmogorov,
        kolmogorov_se,
        wasserstein,
        analytic_mean: analytic::mean_exposed(spec)?,
        variance_lower: analytic::variance_lower_bound(spec)?,
        variance_upper: analytic::variance_upper_bound(spec)?,
        region_mass: sampler::region_mass(spec)?,
    })
}

fn fit_campaign_rates(config: &CampaignConfig, points: &[ScalePoint]) -> (Option<RateFit>, Option<RateFit>) {
    if points.len() < 4 || points.iter().any(|p| p.degenerate) {
        return (None, None);
    }
    let scales: Vec<f64> = points.iter().map(|p| p.scale).collect();
    let dk: Vec<f64> = points.iter().filter_map(|p| p.kolmogorov).collect();
    let dw: Vec<f64> = points.iter().filter_map(|p| p.wasserstein).collect();
    let mut k_fit = fit_rate(&scales, &dk).ok();
    let w_fit = fit_rate(&scales, &dw).ok();
    if let Some(fit) = k_fit.as_mut() {
        let mut rng = substream(config.master_seed ^ BOOTSTRAP_SALT, u64::MAX);
        let values: Vec<Vec<f64>> = points
            .iter()
            .map(|p| p.samples.iter().map(|&f| f as f64).collect())
            .collect();
        let mut slopes = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
        'outer: for _ in 0..BOOTSTRAP_RESAMPLES {
            let mut ds = Vec::with_capacity(values.len());
            for v in &values {
                match resample_kolmogorov(v, &mut rng) {
                    Some(d) if d > 0.0 => ds.push(d),
                    _ => continue 'outer,
                }
            }
            if let Ok(f) = fit_rate(&scales, &ds) {
                slopes.push(f.exponent);
            }
        }
        fit.exponent_se = sd(&slopes);
    }
    (k_fit, w_fit)
}

/// Comparison of the sample variance with the analytic bracket.
#[derive(Debug, Clone, Serialize)]
pub struct VarianceReport {
    pub sample_variance: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub lower: LowerBound,
    pub upper: f64,
    /// Whether the confidence interval meets the bracket (only the upper
    /// bound when the lower one is vacuous).
    pub intersects: bool,
    /// `Var(F) / (λ(W) s l_{a,τ}(s ν_d))`.
    pub scale_ratio: f64,
    /// Small samples or small means, where the chi-square interval is rough.
    pub low_n_caveat: bool,
}

pub fn variance_bracket_check(point: &ScalePoint, spec: &ModelSpec) -> Result<VarianceReport, McError> {
    let m = point.samples.len();
    if m < 2 {
        return Err(McError::Degenerate(format!("variance check needs at least two replications, got {m}")));
    }
    let df = (m - 1) as f64;
    let chi = ChiSquared::new(df).map_err(|e| McError::InvalidConfig(e.to_string()))?;
    let alpha = 1.0 - VARIANCE_CI_LEVEL;
    let s2 = point.sample_variance;
    let ci_low = df * s2 / chi.inverse_cdf(1.0 - alpha / 2.0);
    let ci_high = df * s2 / chi.inverse_cdf(alpha / 2.0);
    let lower = point.variance_lower;
    let upper = point.variance_upper;
    let floor = if lower.vacuous { f64::NEG_INFINITY } else { lower.value };
    let intersects = ci_high >= floor && ci_low <= upper;
    let nu_d = spec.speed.moment(spec.dim as f64)?;
    let s = spec.intensity;
    let l = variance_scale(spec.horizon, spec.time_intensity.tau(), spec.dim, s * nu_d)?;
    let scale_ratio = s2 / (spec.effective_window().volume() * s * l);
    Ok(VarianceReport {
        sample_variance: s2,
        ci_low,
        ci_high,
        lower,
        upper,
        intersects,
        scale_ratio,
        low_n_caveat: m < 30 || point.sample_mean < 5.0,
    })
}
