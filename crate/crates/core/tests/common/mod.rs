//! Independent numerical oracles and shared fixtures for the integration
//! tests. Nothing here calls the library's quadrature.
#![allow(dead_code)]

use std::f64::consts::FRAC_PI_2;

use birthgrowth::analytic::TimeIntensity;
use birthgrowth::model::{ModelSpec, SpeedDistribution};

/// Double-exponential quadrature of `f(x, x - a, b - x)` over `[a, b]`.
///
/// The endpoint distances are computed without cancellation, so integrands
/// singular at an endpoint can use them directly.
pub fn tanh_sinh_ends<F: Fn(f64, f64, f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let eval = |u: f64| -> f64 {
        let s = FRAC_PI_2 * u.sinh();
        // distance from the nearer endpoint, scaled: 1 - tanh|s| = 2 / (1 + e^{2|s|})
        let near = half * 2.0 / (1.0 + (2.0 * s.abs()).exp());
        if near <= 0.0 {
            return 0.0;
        }
        let weight = half * FRAC_PI_2 * u.cosh() / s.cosh().powi(2);
        let (x, dl, dr) = if s < 0.0 {
            (a + near, near, b - a - near)
        } else {
            (b - near, b - a - near, near)
        };
        let v = f(x, dl, dr);
        if v.is_finite() {
            weight * v
        } else {
            0.0
        }
    };
    let t_max = 6.5;
    let mut h = 0.5;
    let mut prev = {
        let n = (t_max / h) as i64;
        (-n..=n).map(|k| eval(k as f64 * h)).sum::<f64>() * h
    };
    for _ in 0..10 {
        h *= 0.5;
        let n = (t_max / h) as i64;
        // only the new (odd) nodes
        let fresh: f64 = (-n..=n).filter(|k| k % 2 != 0).map(|k| eval(k as f64 * h)).sum();
        let cur = 0.5 * prev + h * fresh;
        if (cur - prev).abs() <= 1e-15 * cur.abs() && h < 0.1 {
            return cur;
        }
        prev = cur;
    }
    prev
}

pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    tanh_sinh_ends(|x, _, _| f(x), a, b)
}

/// `∫_0^∞ f` through `t = u / (1 - u)`.
pub fn tanh_sinh_half_line<F: Fn(f64) -> f64>(f: F) -> f64 {
    tanh_sinh_ends(
        |u, _, r| {
            let t = u / r;
            f(t) / (r * r)
        },
        0.0,
        1.0,
    )
}

/// `∫_a^b f(t) θ(dt)` for `θ(dt) = t^τ dt`.
pub fn theta_integral<F: Fn(f64) -> f64>(f: F, tau: f64, a: f64, b: f64) -> f64 {
    tanh_sinh_ends(|t, dl, _| f(t) * if a == 0.0 { dl.powf(tau) } else { t.powf(tau) }, a, b)
}

/// Composite midpoint rule with `n` cells.
pub fn midpoint<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    (0..n).map(|i| f(a + (i as f64 + 0.5) * h)).sum::<f64>() * h
}

pub fn unit_ball(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI / 3.0,
        _ => panic!("fixture covers d <= 3"),
    }
}

/// `d = 1, τ = 0, ν = δ_1, a = 1, W = [0, 1]`.
pub fn reference_spec() -> ModelSpec {
    ModelSpec::new(1, TimeIntensity::PowerLaw { tau: 0.0 }, SpeedDistribution::PointMass { value: 1.0 })
}

pub fn two_point_speeds() -> SpeedDistribution {
    SpeedDistribution::FiniteDiscrete {
        values: vec![1.0, 3.0],
        probabilities: vec![0.5, 0.5],
    }
}

/// One of every speed family, all with finite moments of every order.
pub fn speed_zoo() -> Vec<SpeedDistribution> {
    vec![
        SpeedDistribution::PointMass { value: 1.0 },
        two_point_speeds(),
        SpeedDistribution::Uniform { upper: 2.0 },
        SpeedDistribution::TruncatedPareto {
            alpha: 2.5,
            scale: 0.5,
            cap: 4.0,
        },
        SpeedDistribution::LogNormal { mu: 0.0, sigma: 0.5 },
    ]
}

/// `(mean, unbiased variance)`.
pub fn moments(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, v)
}
