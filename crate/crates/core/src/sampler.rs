//! Exact simulation of the Poisson process restricted to the relevance
//! region `{(y, t, v) : t <= a, dist(y, W) <= v (a - t)}`.
//!
//! A seed in `W` born by `a` can only be shaded by points of its influence
//! set, and every influence set of such a seed lies inside this region, so
//! the restriction decides every counted exposure exactly.
//!
//! The region's intensity is sampled as a mixture over the terms of the
//! Steiner polynomial `λ(W ⊕ B_r) = Σ_i κ_i r^i V_{d-i}(W)`: component `i`
//! draws `t = a·Beta(τ+1, i+1)`, a speed from the order-`i` size-biased
//! law and a location uniform on `W ⊕ B_{v(a-t)}`.

use rand::Rng;
use rand_distr::{Beta, Distribution, Poisson};
use thiserror::Error;

use crate::analytic::{influence_content, unit_ball_volume, AnalyticError, WindowGeometry};
use crate::model::{Location, ModelError, ModelSpec, Seed};
use crate::rng::{substream, StreamRng};

/// Rejection attempts allowed for one uniform location.
pub const REJECTION_CAP: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplerError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error("rejection sampling exceeded {REJECTION_CAP} attempts for dilation radius {radius}")]
    RejectionCap { radius: f64 },
    #[error("distribution setup failed: {0}")]
    Distribution(String),
}

/// The relevance region of a spec, with its Steiner mixture weights.
#[derive(Debug, Clone)]
pub struct RelevanceRegion {
    pub window: WindowGeometry,
    pub horizon: f64,
    /// `s κ_i V_{d-i}(W) ν_i a^{i+τ+1} B(i+1, τ+1)` for `i = 0..=d`.
    pub components: Vec<f64>,
    pub total_mass: f64,
}

impl RelevanceRegion {
    pub fn new(spec: &ModelSpec) -> Result<Self, SamplerError> {
        let window = spec.effective_window();
        let d = spec.dim;
        let v = window.intrinsic_volumes();
        let mut components = Vec::with_capacity(d + 1);
        for i in 0..=d {
            let nu_i = spec.speed.moment(i as f64)?;
            let time = spec.time_intensity.falling_moment(i as f64, spec.horizon);
            components.push(spec.intensity * unit_ball_volume(i) * v[d - i] * nu_i * time);
        }
        let total_mass = components.iter().sum();
        Ok(Self {
            window,
            horizon: spec.horizon,
            components,
            total_mass,
        })
    }

    pub fn contains(&self, location: &[f64], birth_time: f64, speed: f64) -> bool {
        if birth_time > self.horizon || birth_time < 0.0 {
            return false;
        }
        let reach = speed * (self.horizon - birth_time);
        self.window.distance_squared(location) <= reach * reach
    }
}

/// `μ` of the relevance region, including intensity and window scaling.
pub fn region_mass(spec: &ModelSpec) -> Result<f64, SamplerError> {
    Ok(RelevanceRegion::new(spec)?.total_mass)
}

/// One sampled configuration of the restricted process.
#[derive(Debug, Clone)]
pub struct Realization {
    pub seeds: Vec<Seed>,
    pub spec: ModelSpec,
    /// The observation window after dilation.
    pub window: WindowGeometry,
    pub master_seed: u64,
    pub stream: u64,
    pub region_mass: f64,
}

impl Realization {
    /// A realization built from explicit seeds, for fixtures and tests.
    pub fn from_seeds(spec: ModelSpec, seeds: Vec<Seed>) -> Self {
        let window = spec.effective_window();
        Self {
            seeds,
            window,
            spec,
            master_seed: 0,
            stream: 0,
            region_mass: f64::NAN,
        }
    }

    pub fn len(&self) -> usize {
        self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seeds.is_empty()
    }

    /// Whether a seed is counted by the functional: located in the window and
    /// born by the horizon.
    pub fn is_counted(&self, seed: &Seed) -> bool {
        seed.birth_time <= self.spec.horizon && self.window.contains(&seed.location)
    }
}

/// Sample substream `stream` of `master_seed`.
pub fn sample_realization(spec: &ModelSpec, master_seed: u64, stream: u64) -> Result<Realization, SamplerError> {
    let region = RelevanceRegion::new(spec)?;
    let mut rng = substream(master_seed, stream);
    let seeds = sample_seeds(spec, &region, &mut rng)?;
    Ok(Realization {
        seeds,
        window: region.window.clone(),
        spec: spec.clone(),
        master_seed,
        stream,
        region_mass: region.total_mass,
    })
}

/// Draw the seeds of one realization from `rng`.
pub fn sample_seeds<R: Rng + ?Sized>(
    spec: &ModelSpec,
    region: &RelevanceRegion,
    rng: &mut R,
) -> Result<Vec<Seed>, SamplerError> {
    if !(region.total_mass > 0.0) {
        return Ok(Vec::new());
    }
    let count = Poisson::new(region.total_mass)
        .map_err(|e| SamplerError::Distribution(e.to_string()))?
        .sample(rng) as usize;
    let tau = spec.time_intensity.tau();
    let betas = (0..=spec.dim)
        .map(|i| Beta::new(tau + 1.0, i as f64 + 1.0).map_err(|e| SamplerError::Distribution(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    let mut seeds = Vec::with_capacity(count);
    for id in 0..count {
        let i = pick_component(&region.components, region.total_mass, rng);
        let birth_time = spec.horizon * betas[i].sample(rng);
        let speed = spec.speed.size_biased_sample(i as u32, rng)?;
        let radius = speed * (spec.horizon - birth_time);
        let location = uniform_in_dilation(&region.window, radius, rng)?;
        seeds.push(Seed {
            id: id as u32,
            location,
            birth_time,
            speed,
        });
    }
    Ok(seeds)
}

fn pick_component<R: Rng + ?Sized>(weights: &[f64], total: f64, rng: &mut R) -> usize {
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            last = i;
            acc += w;
            if target < acc {
                return i;
            }
        }
    }
    last
}

/// Uniform point of `W ⊕ B_r`, by rejection from its bounding box.
pub fn uniform_in_dilation<R: Rng + ?Sized>(
    window: &WindowGeometry,
    radius: f64,
    rng: &mut R,
) -> Result<Location, SamplerError> {
    let bounds = window.dilated_bounds(radius);
    let r2 = radius * radius;
    let mut y = Location::from_elem(0.0, bounds.len());
    for _ in 0..REJECTION_CAP {
        for (c, &(lo, hi)) in y.iter_mut().zip(&bounds) {
            *c = lo + (hi - lo) * rng.random::<f64>();
        }
        if window.distance_squared(&y) <= r2 {
            return Ok(y);
        }
    }
    Err(SamplerError::RejectionCap { radius })
}

/// `μ(L_{x,t}) = s ν_d Λ(t)`: expected number of points able to shade a seed
/// born at `t`.
pub fn influence_set_mass(spec: &ModelSpec, t: f64) -> Result<f64, SamplerError> {
    let nu_d = spec.speed.moment(spec.dim as f64)?;
    Ok(spec.intensity * nu_d * influence_content(spec.time_intensity, spec.dim, t))
}

/// Number of sampled points lying in the influence set `L_{x,t}`.
pub fn count_in_influence_set(realization: &Realization, x: &[f64], t: f64) -> usize {
    realization
        .seeds
        .iter()
        .filter(|s| {
            if s.birth_time >= t {
                return false;
            }
            let reach = s.speed * (t - s.birth_time);
            let d2: f64 = s.location.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
            d2 <= reach * reach
        })
        .count()
}

fn uniform_in_ball<R: Rng + ?Sized>(d: usize, r: f64, rng: &mut R) -> Vec<f64> {
    loop {
        let p: Vec<f64> = (0..d).map(|_| r * (2.0 * rng.random::<f64>() - 1.0)).collect();
        if p.iter().map(|c| c * c).sum::<f64>() <= r * r {
            return p;
        }
    }
}

/// Monte Carlo estimate of `∫ λ(B_{r1}(0) ∩ B_{r2}(x)) dx`.
///
/// Samples `y` uniformly in `B_{r1}(0)` and `x` uniformly in `B_{r1+r2}(0)`,
/// which contains every `x` with a nonempty intersection.
pub fn ball_intersection_integral_mc(d: usize, r1: f64, r2: f64, samples: usize, rng: &mut StreamRng) -> f64 {
    let outer = r1 + r2;
    let hits = (0..samples)
        .filter(|_| {
            let y = uniform_in_ball(d, r1, rng);
            let x = uniform_in_ball(d, outer, rng);
            y.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() <= r2 * r2
        })
        .count();
    let kd = unit_ball_volume(d);
    kd * r1.powi(d as i32) * kd * outer.powi(d as i32) * hits as f64 / samples as f64
}

/// Density of the birth-time marginal of sampled points, up to the total
/// mass: `Σ_i (s κ_i V_{d-i} ν_i) (a - t)^i t^τ`.
pub fn birth_time_marginal(spec: &ModelSpec, t: f64) -> Result<f64, SamplerError> {
    let window = spec.effective_window();
    let v = window.intrinsic_volumes();
    let d = spec.dim;
    let mut total = 0.0;
    for i in 0..=d {
        total += spec.intensity
            * unit_ball_volume(i)
            * v[d - i]
            * spec.speed.moment(i as f64)?
            * (spec.horizon - t).powi(i as i32);
    }
    Ok(total * spec.time_intensity.density(t))
}
