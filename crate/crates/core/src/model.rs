//! Seeds, speed distributions and the validated model specification.

use rand::Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

use crate::analytic::{QuadratureSpec, TimeIntensity, WindowGeometry};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("moment of order {order} is infinite")]
    InfiniteMoment { order: f64 },
    #[error("invalid speed distribution: {0}")]
    InvalidDistribution(String),
    #[error("model validation failed: {}", format_violations(.0))]
    Validation(Vec<Violation>),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| format!("{}: {}", x.field, x.message))
        .collect::<Vec<_>>()
        .join("; ")
}

/// One failed assumption, keyed by the configuration field it concerns.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    fn new(field: &str, message: impl Into<String>) -> Self {
        Self {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

pub type Location = SmallVec<[f64; 4]>;

/// A point of the process: where and when a seed appears, and how fast it
/// grows.
#[derive(Debug, Clone, PartialEq)]
pub struct Seed {
    pub id: u32,
    pub location: Location,
    pub birth_time: f64,
    pub speed: f64,
}

impl Seed {
    pub fn new(id: u32, location: &[f64], birth_time: f64, speed: f64) -> Self {
        Self {
            id,
            location: Location::from_slice(location),
            birth_time,
            speed,
        }
    }

    /// Whether this seed's growth region covers `other`'s location at its
    /// birth time, i.e. `self` lies in the influence set of `other`.
    ///
    /// Birth-time ties are broken by id.
    #[inline]
    pub fn shades(&self, other: &Seed) -> bool {
        if (self.birth_time, self.id) >= (other.birth_time, other.id) {
            return false;
        }
        let reach = self.speed * (other.birth_time - self.birth_time);
        let dist2: f64 = self
            .location
            .iter()
            .zip(other.location.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        dist2 <= reach * reach
    }

    /// Birth-order key: time first, id on exact ties.
    pub fn order_key(&self) -> (f64, u32) {
        (self.birth_time, self.id)
    }
}

/// Distribution `ν` of growth speeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpeedDistribution {
    PointMass {
        value: f64,
    },
    FiniteDiscrete {
        values: Vec<f64>,
        probabilities: Vec<f64>,
    },
    /// Uniform on `(0, upper]`.
    Uniform {
        upper: f64,
    },
    /// Pareto with tail exponent `alpha` and scale `scale`, conditioned on
    /// `v <= cap`.
    TruncatedPareto {
        alpha: f64,
        scale: f64,
        cap: f64,
    },
    LogNormal {
        mu: f64,
        sigma: f64,
    },
}

impl SpeedDistribution {
    pub fn check(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::InvalidDistribution(m));
        match self {
            SpeedDistribution::PointMass { value } => {
                if !(*value >= 0.0 && value.is_finite()) {
                    return bad(format!("point mass location must be finite and >= 0, got {value}"));
                }
            }
            SpeedDistribution::FiniteDiscrete {
                values,
                probabilities,
            } => {
                if values.is_empty() || values.len() != probabilities.len() {
                    return bad("values and probabilities must be nonempty and of equal length".into());
                }
                if values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                    return bad("discrete speeds must be finite and >= 0".into());
                }
                if probabilities.iter().any(|p| !(*p >= 0.0)) {
                    return bad("probabilities must be >= 0".into());
                }
                let total: f64 = probabilities.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return bad(format!("probabilities must sum to 1, got {total}"));
                }
            }
            SpeedDistribution::Uniform { upper } => {
                if !(*upper > 0.0 && upper.is_finite()) {
                    return bad(format!("uniform upper bound must be positive, got {upper}"));
                }
            }
            SpeedDistribution::TruncatedPareto { alpha, scale, cap } => {
                if !(*alpha > 0.0 && alpha.is_finite()) {
                    return bad(format!("pareto exponent must be positive, got {alpha}"));
                }
                if !(*scale > 0.0 && scale.is_finite()) {
                    return bad(format!("pareto scale must be positive, got {scale}"));
                }
                if !(*cap > *scale) {
                    return bad(format!("pareto cap must exceed the scale, got cap={cap}"));
                }
            }
            SpeedDistribution::LogNormal { mu, sigma } => {
                if !mu.is_finite() || !(*sigma > 0.0 && sigma.is_finite()) {
                    return bad(format!("lognormal needs finite mu and sigma > 0, got ({mu}, {sigma})"));
                }
            }
        }
        Ok(())
    }

    /// `ν({0})`.
    pub fn mass_at_zero(&self) -> f64 {
        match self {
            SpeedDistribution::PointMass { value } => {
                if *value == 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            SpeedDistribution::FiniteDiscrete {
                values,
                probabilities,
            } => values
                .iter()
                .zip(probabilities)
                .filter(|(v, _)| **v == 0.0)
                .map(|(_, p)| p)
                .sum(),
            _ => 0.0,
        }
    }

    /// `ν_u = ∫ v^u ν(dv)`.
    pub fn moment(&self, u: f64) -> Result<f64, ModelError> {
        if u == 0.0 {
            return Ok(1.0);
        }
        let value = match self {
            SpeedDistribution::PointMass { value } => value.powf(u),
            SpeedDistribution::FiniteDiscrete {
                values,
                probabilities,
            } => values
                .iter()
                .zip(probabilities)
                .map(|(v, p)| p * v.powf(u))
                .sum(),
            SpeedDistribution::Uniform { upper } => upper.powf(u) / (u + 1.0),
            SpeedDistribution::TruncatedPareto { alpha, scale, cap } => {
                if cap.is_infinite() {
                    if u >= *alpha {
                        return Err(ModelError::InfiniteMoment { order: u });
                    }
                    alpha * scale.powf(u) / (alpha - u)
                } else {
                    let norm = 1.0 - (scale / cap).powf(*alpha);
                    let e = u - alpha;
                    let integral = if e.abs() < 1e-12 {
                        (cap / scale).ln()
                    } else {
                        (cap.powf(e) - scale.powf(e)) / e
                    };
                    alpha * scale.powf(*alpha) * integral / norm
                }
            }
            SpeedDistribution::LogNormal { mu, sigma } => (u * mu + 0.5 * u * u * sigma * sigma).exp(),
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(ModelError::InfiniteMoment { order: u })
        }
    }

    /// Draw from the size-biased law `v^i ν(dv) / ν_i`.
    pub fn size_biased_sample<R: Rng + ?Sized>(&self, order: u32, rng: &mut R) -> Result<f64, ModelError> {
        let i = order as f64;
        let nu_i = self.moment(i)?;
        if !(nu_i > 0.0) {
            return Err(ModelError::InvalidDistribution(format!(
                "size-biased order {order} needs a positive moment"
            )));
        }
        let u: f64 = rng.random();
        Ok(match self {
            SpeedDistribution::PointMass { value } => *value,
            SpeedDistribution::FiniteDiscrete {
                values,
                probabilities,
            } => {
                let target = u * nu_i;
                let mut acc = 0.0;
                let mut pick = None;
                for (k, (v, p)) in values.iter().zip(probabilities).enumerate() {
                    let w = if order == 0 { *p } else { p * v.powi(order as i32) };
                    if w > 0.0 {
                        pick = Some(k);
                        acc += w;
                        if target < acc {
                            break;
                        }
                    }
                }
                values[pick.expect("positive moment implies a positive weight")]
            }
            SpeedDistribution::Uniform { upper } => {
                // density ∝ v^i on (0, b]
                upper * (1.0 - u).powf(1.0 / (i + 1.0))
            }
            SpeedDistribution::TruncatedPareto { alpha, scale, cap } => {
                // density ∝ v^{i-α-1} on [scale, cap]
                let e = i - alpha;
                if e.abs() < 1e-12 {
                    scale * (cap / scale).powf(u)
                } else if cap.is_infinite() {
                    scale * (1.0 - u).powf(1.0 / e)
                } else {
                    let lo = scale.powf(e);
                    let hi = cap.powf(e);
                    (lo + u * (hi - lo)).powf(1.0 / e).clamp(*scale, *cap)
                }
            }
            SpeedDistribution::LogNormal { mu, sigma } => {
                let dist = LogNormal::new(mu + i * sigma * sigma, *sigma)
                    .map_err(|e| ModelError::InvalidDistribution(e.to_string()))?;
                dist.sample(rng)
            }
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.size_biased_sample(0, rng)
            .expect("zeroth moment is always one")
    }
}

/// Full description of one birth-growth experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub dim: usize,
    pub time_intensity: TimeIntensity,
    /// Birth-time horizon `a`.
    pub horizon: f64,
    pub window: WindowGeometry,
    pub speed: SpeedDistribution,
    /// Multiplier `s` of the spatial intensity.
    pub intensity: f64,
    /// Window dilation `n`: the observation window becomes `n^{1/d} W`.
    pub window_scale: f64,
    pub quadrature: QuadratureSpec,
}

impl ModelSpec {
    /// Unit box, unit horizon, no scaling.
    pub fn new(dim: usize, time_intensity: TimeIntensity, speed: SpeedDistribution) -> Self {
        Self {
            dim,
            time_intensity,
            horizon: 1.0,
            window: WindowGeometry::unit_box(dim),
            speed,
            intensity: 1.0,
            window_scale: 1.0,
            quadrature: QuadratureSpec::default(),
        }
    }

    pub fn with_horizon(mut self, a: f64) -> Self {
        self.horizon = a;
        self
    }

    pub fn with_window(mut self, window: WindowGeometry) -> Self {
        self.window = window;
        self
    }

    pub fn with_window_scale(mut self, n: f64) -> Self {
        self.window_scale = n;
        self
    }

    pub fn with_intensity(mut self, s: f64) -> Self {
        self.intensity = s;
        self
    }

    /// `n^{1/d} W`.
    pub fn effective_window(&self) -> WindowGeometry {
        if self.window_scale == 1.0 {
            self.window.clone()
        } else {
            self.window.scaled(self.window_scale.powf(1.0 / self.dim as f64))
        }
    }

    /// Every violated assumption, or `Ok(())`.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.dim == 0 {
            out.push(Violation::new("dimension", "dimension must be at least 1"));
        }
        if let Err(m) = self.time_intensity.check() {
            out.push(Violation::new("tau", format!("τ must exceed −1 ({m})")));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            out.push(Violation::new(
                "horizon",
                format!("horizon must be positive and finite, got {}", self.horizon),
            ));
        }
        if let Err(m) = self.window.check() {
            out.push(Violation::new("window", m));
        } else if self.window.dim() != self.dim {
            out.push(Violation::new(
                "window",
                format!(
                    "window has dimension {} but the model has dimension {}",
                    self.window.dim(),
                    self.dim
                ),
            ));
        }
        match self.speed.check() {
            Err(e) => out.push(Violation::new("speed", e.to_string())),
            Ok(()) => {
                if self.speed.mass_at_zero() >= 1.0 {
                    out.push(Violation::new("speed", "ν({0}) < 1 required"));
                }
                if self.dim > 0 {
                    if let SpeedDistribution::TruncatedPareto { cap, .. } = self.speed {
                        if cap.is_infinite() {
                            out.push(Violation::new(
                                "speed",
                                "untruncated Pareto speeds are not supported; set a finite cap",
                            ));
                        }
                    }
                    let order = 7.0 * self.dim as f64;
                    if let Err(e) = self.speed.moment(order) {
                        out.push(Violation::new("speed", format!("ν_{{7d}} must be finite: {e}")));
                    }
                }
            }
        }
        if !(self.intensity >= 1.0 && self.intensity.is_finite()) {
            out.push(Violation::new(
                "intensity",
                format!("intensity multiplier must be >= 1, got {}", self.intensity),
            ));
        }
        if !(self.window_scale >= 1.0 && self.window_scale.is_finite()) {
            out.push(Violation::new(
                "window_scale",
                format!("window scale must be >= 1, got {}", self.window_scale),
            ));
        }
        if let Err(m) = self.quadrature.check() {
            out.push(Violation::new("quadrature", m));
        }
        out
    }

    pub fn validate(self) -> Result<Self, ModelError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(self)
        } else {
            Err(ModelError::Validation(v))
        }
    }
}
