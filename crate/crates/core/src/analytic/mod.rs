//! Closed forms and quadrature for the exposure probability, the mean number
//! of exposed seeds, the two-sided variance bracket and the window geometry.

pub mod geometry;
pub mod quad;
pub mod special;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use geometry::WindowGeometry;
pub use quad::{integrate, QuadratureSpec};
pub use special::{beta, gamma, lower_incomplete_gamma, unit_ball_volume};

use crate::model::{ModelError, ModelSpec, SpeedDistribution};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("quadrature did not converge: achieved error {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Birth-time intensity `θ(dt)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TimeIntensity {
    /// `θ(dt) = t^τ dt`, `τ > -1`.
    PowerLaw { tau: f64 },
    /// Lebesgue measure on the half-line.
    Lebesgue,
}

impl TimeIntensity {
    pub fn tau(&self) -> f64 {
        match self {
            TimeIntensity::PowerLaw { tau } => *tau,
            TimeIntensity::Lebesgue => 0.0,
        }
    }

    pub fn check(&self) -> Result<(), String> {
        let tau = self.tau();
        if !(tau > -1.0) || !tau.is_finite() {
            return Err(format!("tau must exceed -1, got {tau}"));
        }
        Ok(())
    }

    pub fn density(&self, t: f64) -> f64 {
        match self {
            TimeIntensity::Lebesgue => 1.0,
            TimeIntensity::PowerLaw { tau } => {
                if *tau == 0.0 {
                    1.0
                } else {
                    t.powf(*tau)
                }
            }
        }
    }

    /// `∫_0^a (a - t)^k θ(dt) = a^{k+τ+1} B(k+1, τ+1)`.
    pub fn falling_moment(&self, k: f64, a: f64) -> f64 {
        if a <= 0.0 {
            return 0.0;
        }
        let tau = self.tau();
        a.powf(k + tau + 1.0) * beta(k + 1.0, tau + 1.0)
    }

    /// `θ([0, t])`.
    pub fn cumulative(&self, t: f64) -> f64 {
        let tau = self.tau();
        t.max(0.0).powf(tau + 1.0) / (tau + 1.0)
    }

    /// `∫_lo^hi f(t) θ(dt)` with `0 <= lo <= hi`.
    ///
    /// For `τ < 0` the density singularity at the origin is removed by the
    /// substitution `u = t^{τ+1}`.
    pub fn integrate<F: Fn(f64) -> f64>(
        &self,
        f: F,
        lo: f64,
        hi: f64,
        spec: &QuadratureSpec,
    ) -> Result<f64, AnalyticError> {
        let tau = self.tau();
        if tau < 0.0 {
            let e = tau + 1.0;
            let inv = 1.0 / e;
            let v = integrate(|u| f(u.powf(inv)), lo.powf(e), hi.powf(e), spec)?;
            Ok(v / e)
        } else {
            integrate(|t| f(t) * self.density(t), lo, hi, spec)
        }
    }
}

/// `Λ(t) = κ_d ∫_0^t (t - s)^d θ(ds)`: the influence-set content per unit
/// `d`-th speed moment.
pub fn influence_content(ti: TimeIntensity, d: usize, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    match ti {
        TimeIntensity::Lebesgue => unit_ball_volume(d) * t.powi(d as i32 + 1) / (d as f64 + 1.0),
        TimeIntensity::PowerLaw { .. } => unit_ball_volume(d) * ti.falling_moment(d as f64, t),
    }
}

/// `w(t) = exp(-ν_d Λ(t))`: probability that a seed born at `t` is exposed.
pub fn exposure_probability(ti: TimeIntensity, d: usize, nu_d: f64, t: f64) -> f64 {
    (-nu_d * influence_content(ti, d, t)).exp()
}

/// `l_{a,τ}(x) = γ(p, a^{d+τ+1} x) x^{-p}` with `p = (τ+1)/(d+τ+1)`.
pub fn variance_scale(a: f64, tau: f64, d: usize, x: f64) -> Result<f64, AnalyticError> {
    if !(a > 0.0) || !(x > 0.0) {
        return Err(AnalyticError::Domain(format!(
            "variance scale needs a > 0 and x > 0, got a={a}, x={x}"
        )));
    }
    if !(tau > -1.0) {
        return Err(AnalyticError::Domain(format!("tau must exceed -1, got {tau}")));
    }
    let q = d as f64 + tau + 1.0;
    let p = (tau + 1.0) / q;
    let z = a.powf(q) * x;
    Ok(lower_incomplete_gamma(p, z)? * x.powf(-p))
}

/// `Q(x, y) = ∫_0^∞ t^x e^{-yΛ(t)} θ(dt)` in closed form.
pub fn exposure_moment(x: f64, y: f64, ti: TimeIntensity, d: usize) -> Result<f64, AnalyticError> {
    if !(x >= 0.0) || !(y > 0.0) {
        return Err(AnalyticError::Domain(format!(
            "exposure moment needs x >= 0 and y > 0, got x={x}, y={y}"
        )));
    }
    let tau = ti.tau();
    let q = d as f64 + tau + 1.0;
    let b = beta(d as f64 + 1.0, tau + 1.0);
    let e = (x + tau + 1.0) / q;
    Ok((y * unit_ball_volume(d) * b).powf(-e) / q * gamma(e))
}

/// `ℓ(t_1, t_2) = κ_d² ν_{2d} ∫_0^{t_1∧t_2} (t_1-s)^d (t_2-s)^d θ(ds)`.
///
/// Writing `t_2 - s = (t_2 - m) + (m - s)` with `m = t_1 ∧ t_2` turns the
/// integrand into a positive combination of Beta integrals.
pub fn overlap_kernel(t1: f64, t2: f64, ti: TimeIntensity, d: usize, nu_2d: f64) -> f64 {
    let m = t1.min(t2);
    if m <= 0.0 {
        return 0.0;
    }
    let gap = t1.max(t2) - m;
    let sum: f64 = (0..=d)
        .map(|k| {
            special::binomial(d, k)
                * gap.powi((d - k) as i32)
                * ti.falling_moment((d + k) as f64, m)
        })
        .sum();
    let kd = unit_ball_volume(d);
    kd * kd * nu_2d * sum
}

/// `V_ν(W) = Σ_i V_{d-i}(W) ν_{d+i}`.
pub fn speed_weighted_volume(
    window: &WindowGeometry,
    speed: &SpeedDistribution,
    d: usize,
) -> Result<f64, AnalyticError> {
    if speed.mass_at_zero() >= 1.0 {
        return Err(AnalyticError::Domain(
            "speed distribution concentrated at zero".into(),
        ));
    }
    let v = window.intrinsic_volumes();
    let mut total = 0.0;
    for i in 0..=d {
        total += v[d - i] * speed.moment((d + i) as f64)?;
    }
    Ok(total)
}

/// Everything the time integrals need, with the intensity multiplier folded
/// into `θ`.
#[derive(Debug, Clone, Copy)]
pub struct GrowthKernel {
    pub ti: TimeIntensity,
    pub dim: usize,
    pub nu_d: f64,
    pub nu_2d: f64,
    pub intensity: f64,
    pub quad: QuadratureSpec,
}

impl GrowthKernel {
    pub fn from_spec(spec: &ModelSpec) -> Result<Self, AnalyticError> {
        let d = spec.dim;
        Ok(Self {
            ti: spec.time_intensity,
            dim: d,
            nu_d: spec.speed.moment(d as f64)?,
            nu_2d: spec.speed.moment(2.0 * d as f64)?,
            intensity: spec.intensity,
            quad: spec.quadrature,
        })
    }

    pub fn w(&self, t: f64) -> f64 {
        (-self.intensity * self.nu_d * influence_content(self.ti, self.dim, t)).exp()
    }

    fn theta_integral<F: Fn(f64) -> f64>(
        &self,
        f: F,
        lo: f64,
        hi: f64,
        spec: &QuadratureSpec,
    ) -> Result<f64, AnalyticError> {
        Ok(self.intensity * self.ti.integrate(f, lo, hi, spec)?)
    }

    /// `∫_0^a w(t) θ(dt)`.
    pub fn mean_density(&self, a: f64) -> Result<f64, AnalyticError> {
        if a <= 0.0 {
            return Ok(0.0);
        }
        self.theta_integral(|t| self.w(t), 0.0, a, &self.quad)
    }

    /// Bracket of the variance lower bound, per unit window volume.
    pub fn lower_density(&self, a: f64) -> Result<f64, AnalyticError> {
        if a <= 0.0 {
            return Ok(0.0);
        }
        let d = self.dim as i32;
        let inner_spec = self.quad.tightened();
        let first = self.mean_density(a)?;
        let failure = std::cell::Cell::new(None);
        let cross = self.theta_integral(
            |t| {
                let inner = self.theta_integral(
                    |s| (t - s).powi(d) * self.w(s),
                    0.0,
                    t,
                    &inner_spec,
                );
                match inner {
                    Ok(v) => self.w(t) * v,
                    Err(e) => {
                        failure.set(Some(e));
                        f64::NAN
                    }
                }
            },
            0.0,
            a,
            &self.quad,
        );
        if let Some(e) = failure.take() {
            return Err(e);
        }
        let kd = unit_ball_volume(self.dim);
        Ok(first - 2.0 * kd * self.nu_d * cross?)
    }

    /// Bracket of the variance upper bound, per unit window volume.
    pub fn upper_density(&self, a: f64) -> Result<f64, AnalyticError> {
        if a <= 0.0 {
            return Ok(0.0);
        }
        let d = self.dim as i32;
        let inner_spec = self.quad.tightened();
        let first = 2.0 * self.theta_integral(|t| self.w(t).sqrt(), 0.0, a, &self.quad)?;
        let failure = std::cell::Cell::new(None);
        let pair = self.theta_integral(
            |s| {
                let inner = self.theta_integral(
                    |t| (t - s).powi(d) * self.w(t).sqrt(),
                    s,
                    a,
                    &inner_spec,
                );
                match inner {
                    Ok(v) => v * v,
                    Err(e) => {
                        failure.set(Some(e));
                        f64::NAN
                    }
                }
            },
            0.0,
            a,
            &self.quad,
        );
        if let Some(e) = failure.take() {
            return Err(e);
        }
        let kd = unit_ball_volume(self.dim);
        Ok(first + kd * kd * self.nu_2d * pair?)
    }
}

/// A variance lower bound; `vacuous` when the bound is not positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBound {
    pub value: f64,
    pub vacuous: bool,
}

/// `E F = λ(W) ∫_0^a w(t) θ(dt)` for the effective window and intensity.
pub fn mean_exposed(spec: &ModelSpec) -> Result<f64, AnalyticError> {
    let kernel = GrowthKernel::from_spec(spec)?;
    Ok(spec.effective_window().volume() * kernel.mean_density(spec.horizon)?)
}

pub fn variance_lower_bound(spec: &ModelSpec) -> Result<LowerBound, AnalyticError> {
    let kernel = GrowthKernel::from_spec(spec)?;
    let value = spec.effective_window().volume() * kernel.lower_density(spec.horizon)?;
    Ok(LowerBound {
        value,
        vacuous: !(value > 0.0),
    })
}

pub fn variance_upper_bound(spec: &ModelSpec) -> Result<f64, AnalyticError> {
    let kernel = GrowthKernel::from_spec(spec)?;
    Ok(spec.effective_window().volume() * kernel.upper_density(spec.horizon)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const LEB: TimeIntensity = TimeIntensity::Lebesgue;
    const TAU0: TimeIntensity = TimeIntensity::PowerLaw { tau: 0.0 };

    #[test]
    fn influence_content_examples() {
        assert_eq!(influence_content(LEB, 1, 1.0), 1.0);
        assert_eq!(influence_content(LEB, 3, 0.0), 0.0);
        assert_eq!(influence_content(TimeIntensity::PowerLaw { tau: -0.5 }, 2, 0.0), 0.0);
        let v = influence_content(TimeIntensity::PowerLaw { tau: 1.0 }, 2, 2.0);
        assert!((v - 4.0 * PI / 3.0).abs() < 1e-13, "{v}");
        // Lebesgue and τ = 0 agree.
        for d in 1..5 {
            let a = influence_content(LEB, d, 1.3);
            let b = influence_content(TAU0, d, 1.3);
            assert!((a - b).abs() < 1e-13 * a);
        }
    }

    #[test]
    fn exposure_probability_examples() {
        let v = exposure_probability(LEB, 1, 1.0, 1.0);
        assert!((v - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(exposure_probability(TAU0, 2, 3.0, 0.0), 1.0);
        let v = exposure_probability(TAU0, 1, 2.0, 1.0);
        assert!((v - (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn variance_scale_example() {
        // γ(1/2, 1) = √π erf(1)
        let v = variance_scale(1.0, 0.0, 1, 1.0).unwrap();
        assert!((v - 1.493_648_265_624_854).abs() < 1e-13, "{v}");
        assert!(variance_scale(0.0, 0.0, 1, 1.0).is_err());
        assert!(variance_scale(1.0, 0.0, 1, 0.0).is_err());
    }

    #[test]
    fn variance_scale_small_x_is_finite_and_monotone() {
        // γ(p, z) ≈ z^p / p as z → 0, so l → a^{τ+1} / p.
        let (a, tau, d) = (1.3f64, 0.5f64, 2);
        let p = (tau + 1.0) / (d as f64 + tau + 1.0);
        let limit = a.powf(tau + 1.0) / p;
        let mut prev = f64::INFINITY;
        for k in (1..12).rev() {
            let x = 10f64.powi(-k);
            let v = variance_scale(a, tau, d, x).unwrap();
            assert!(v.is_finite());
            assert!(v <= prev, "increasing in x");
            prev = v;
        }
        let tiny = variance_scale(a, tau, d, 1e-12).unwrap();
        assert!((tiny - limit).abs() < 1e-6 * limit);
    }

    #[test]
    fn variance_scale_large_x_asymptotics() {
        let (a, tau, d) = (1.0, 0.0, 1);
        let p = 0.5;
        let x = 1e4;
        let v = variance_scale(a, tau, d, x).unwrap();
        let asym = gamma(p) * x.powf(-p);
        assert!((v / asym - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exposure_moment_examples() {
        let q = exposure_moment(0.0, 1.0, TAU0, 1).unwrap();
        assert!((q - PI.sqrt() / 2.0).abs() < 1e-14);
        let q4 = exposure_moment(0.0, 4.0, TAU0, 1).unwrap();
        assert!((q4 - PI.sqrt() / 4.0).abs() < 1e-14);
        // ∫ t² e^{-t²} dt = √π/4
        let q2 = exposure_moment(2.0, 1.0, TAU0, 1).unwrap();
        assert!((q2 - PI.sqrt() / 4.0).abs() < 1e-14);
        assert!(exposure_moment(-1.0, 1.0, TAU0, 1).is_err());
        assert!(exposure_moment(0.0, 0.0, TAU0, 1).is_err());
    }

    #[test]
    fn overlap_kernel_examples() {
        assert_eq!(overlap_kernel(0.0, 3.0, TAU0, 2, 1.0), 0.0);
        let v = overlap_kernel(1.0, 1.0, TAU0, 1, 1.0);
        assert!((v - 4.0 / 3.0).abs() < 1e-14);
        // d = 1, τ = 0, t1 = 1, t2 = 2: 4 ∫_0^1 (1-s)(2-s) ds = 4 · 5/6
        let v = overlap_kernel(1.0, 2.0, TAU0, 1, 1.0);
        assert!((v - 10.0 / 3.0).abs() < 1e-14);
        assert_eq!(v, overlap_kernel(2.0, 1.0, TAU0, 1, 1.0));
    }

    #[test]
    fn speed_weighted_volume_examples() {
        let w = WindowGeometry::unit_box(1);
        let v = speed_weighted_volume(&w, &SpeedDistribution::PointMass { value: 1.0 }, 1).unwrap();
        assert_eq!(v, 2.0);
        assert!(speed_weighted_volume(&w, &SpeedDistribution::PointMass { value: 0.0 }, 1).is_err());
        let c: f64 = 1.7;
        let w2 = WindowGeometry::Box { sides: vec![2.0, 3.0] };
        let v = speed_weighted_volume(&w2, &SpeedDistribution::PointMass { value: c }, 2).unwrap();
        let expected = 6.0 * c.powi(2) + 5.0 * c.powi(3) + c.powi(4);
        assert!((v - expected).abs() < 1e-12);
    }

    #[test]
    fn negative_tau_integration_is_accurate() {
        let ti = TimeIntensity::PowerLaw { tau: -0.7 };
        let spec = QuadratureSpec::default();
        // ∫_0^2 t^{-0.7} dt = 2^{0.3} / 0.3
        let v = ti.integrate(|_| 1.0, 0.0, 2.0, &spec).unwrap();
        assert!((v - 2f64.powf(0.3) / 0.3).abs() < 1e-12);
        assert!((ti.cumulative(2.0) - v).abs() < 1e-12);
    }
}
