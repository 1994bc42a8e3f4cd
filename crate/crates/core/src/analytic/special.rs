//! Special functions: incomplete gamma, Beta, unit-ball volumes, normal CDF.

use std::f64::consts::PI;

use statrs::function::erf::erfc_inv;

use super::AnalyticError;

const MAX_ITER: usize = 1000;
const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

/// Lower incomplete gamma function `γ(p, z) = ∫_0^z t^{p-1} e^{-t} dt`.
///
/// Series expansion for `z < p + 1`, Lentz continued fraction for the upper
/// function otherwise.
pub fn lower_incomplete_gamma(p: f64, z: f64) -> Result<f64, AnalyticError> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(AnalyticError::Domain(format!(
            "incomplete gamma shape must be positive and finite, got {p}"
        )));
    }
    if !(z >= 0.0) {
        return Err(AnalyticError::Domain(format!(
            "incomplete gamma argument must be nonnegative, got {z}"
        )));
    }
    if z == 0.0 {
        return Ok(0.0);
    }
    if z.is_infinite() {
        return Ok(gamma(p));
    }
    if z < p + 1.0 {
        Ok(lower_series(p, z))
    } else {
        let upper = upper_continued_fraction(p, z);
        Ok(gamma(p) - upper)
    }
}

/// `z^p e^{-z} Σ_n z^n / (p (p+1) ... (p+n))`.
fn lower_series(p: f64, z: f64) -> f64 {
    let mut term = 1.0 / p;
    let mut sum = term;
    let mut denom = p;
    for _ in 0..MAX_ITER {
        denom += 1.0;
        term *= z / denom;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    (p * z.ln() - z).exp() * sum
}

/// Upper incomplete gamma `Γ(p, z)` by the modified Lentz algorithm.
fn upper_continued_fraction(p: f64, z: f64) -> f64 {
    let mut b = z + 1.0 - p;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=MAX_ITER {
        let an = -(i as f64) * (i as f64 - p);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    (p * z.ln() - z).exp() * h
}

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Euler Beta function `B(x, y)`.
pub fn beta(x: f64, y: f64) -> f64 {
    (ln_gamma(x) + ln_gamma(y) - ln_gamma(x + y)).exp()
}

/// Volume of the unit ball in `R^d` (`κ_0 = 1`, `κ_1 = 2`, `κ_2 = π`, ...).
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => {
            let half = d as f64 / 2.0;
            (half * PI.ln() - ln_gamma(half + 1.0)).exp()
        }
    }
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Standard normal CDF.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal quantile: a starting value from `erfc_inv`, polished by
/// two Newton steps against the full-precision CDF.
pub fn std_normal_quantile(p: f64) -> f64 {
    if !(p > 0.0 && p < 1.0) {
        return if p == 0.0 {
            f64::NEG_INFINITY
        } else if p == 1.0 {
            f64::INFINITY
        } else {
            f64::NAN
        };
    }
    let mut x = -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p);
    for _ in 0..2 {
        let pdf = std_normal_pdf(x);
        if pdf > 0.0 {
            let err = if x < 0.0 {
                std_normal_cdf(x) - p
            } else {
                (1.0 - p) - std_normal_cdf(-x)
            };
            x -= err / pdf;
        }
    }
    x
}
