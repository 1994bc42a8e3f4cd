//! Observation windows: axis-aligned boxes anchored at the origin and balls
//! centred at the origin.

use serde::{Deserialize, Serialize};

use super::special::{binomial, unit_ball_volume};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WindowGeometry {
    /// `[0, ℓ_1] × ... × [0, ℓ_d]`.
    Box { sides: Vec<f64> },
    /// Closed ball of the given radius about the origin.
    Ball { dim: usize, radius: f64 },
}

impl WindowGeometry {
    pub fn unit_box(dim: usize) -> Self {
        WindowGeometry::Box {
            sides: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            WindowGeometry::Box { sides } => sides.len(),
            WindowGeometry::Ball { dim, .. } => *dim,
        }
    }

    pub fn check(&self) -> Result<(), String> {
        match self {
            WindowGeometry::Box { sides } => {
                if sides.is_empty() {
                    return Err("box window needs at least one side".into());
                }
                if let Some(s) = sides.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
                    return Err(format!("box sides must be positive and finite, got {s}"));
                }
            }
            WindowGeometry::Ball { dim, radius } => {
                if *dim == 0 {
                    return Err("ball window needs dimension >= 1".into());
                }
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(format!("ball radius must be positive and finite, got {radius}"));
                }
            }
        }
        Ok(())
    }

    pub fn volume(&self) -> f64 {
        match self {
            WindowGeometry::Box { sides } => sides.iter().product(),
            WindowGeometry::Ball { dim, radius } => unit_ball_volume(*dim) * radius.powi(*dim as i32),
        }
    }

    /// `V_0(W), ..., V_d(W)`.
    pub fn intrinsic_volumes(&self) -> Vec<f64> {
        match self {
            WindowGeometry::Box { sides } => elementary_symmetric(sides),
            WindowGeometry::Ball { dim, radius } => {
                let d = *dim;
                let kd = unit_ball_volume(d);
                (0..=d)
                    .map(|j| binomial(d, j) * kd / unit_ball_volume(d - j) * radius.powi(j as i32))
                    .collect()
            }
        }
    }

    pub fn intrinsic_volume(&self, j: usize) -> f64 {
        self.intrinsic_volumes().get(j).copied().unwrap_or(0.0)
    }

    /// `max_j V_j(W)`.
    pub fn max_intrinsic_volume(&self) -> f64 {
        self.intrinsic_volumes().into_iter().fold(0.0, f64::max)
    }

    /// Volume of the parallel body `W ⊕ B_ρ`, by the Steiner polynomial.
    pub fn dilated_volume(&self, rho: f64) -> f64 {
        let d = self.dim();
        let v = self.intrinsic_volumes();
        (0..=d)
            .map(|j| unit_ball_volume(j) * rho.powi(j as i32) * v[d - j])
            .sum()
    }

    /// Euclidean distance from `y` to the window (zero inside).
    pub fn distance(&self, y: &[f64]) -> f64 {
        self.distance_squared(y).sqrt()
    }

    pub fn distance_squared(&self, y: &[f64]) -> f64 {
        match self {
            WindowGeometry::Box { sides } => sides
                .iter()
                .zip(y)
                .map(|(&l, &c)| {
                    let gap = if c < 0.0 {
                        -c
                    } else if c > l {
                        c - l
                    } else {
                        0.0
                    };
                    gap * gap
                })
                .sum(),
            WindowGeometry::Ball { radius, .. } => {
                let r = y.iter().map(|c| c * c).sum::<f64>().sqrt();
                let gap = (r - radius).max(0.0);
                gap * gap
            }
        }
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        match self {
            WindowGeometry::Box { sides } => {
                sides.iter().zip(y).all(|(&l, &c)| (0.0..=l).contains(&c))
            }
            WindowGeometry::Ball { radius, .. } => {
                y.iter().map(|c| c * c).sum::<f64>() <= radius * radius
            }
        }
    }

    /// Per-coordinate bounds `(lo, hi)` of the bounding box of `W ⊕ B_ρ`.
    pub fn dilated_bounds(&self, rho: f64) -> Vec<(f64, f64)> {
        match self {
            WindowGeometry::Box { sides } => sides.iter().map(|&l| (-rho, l + rho)).collect(),
            WindowGeometry::Ball { dim, radius } => vec![(-(radius + rho), radius + rho); *dim],
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            WindowGeometry::Box { sides } => sides.iter().map(|s| s * s).sum::<f64>().sqrt(),
            WindowGeometry::Ball { radius, .. } => 2.0 * radius,
        }
    }

    /// The window scaled by `factor` about the origin.
    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            WindowGeometry::Box { sides } => WindowGeometry::Box {
                sides: sides.iter().map(|s| s * factor).collect(),
            },
            WindowGeometry::Ball { dim, radius } => WindowGeometry::Ball {
                dim: *dim,
                radius: radius * factor,
            },
        }
    }

    /// A point well inside the window.
    pub fn center(&self) -> Vec<f64> {
        match self {
            WindowGeometry::Box { sides } => sides.iter().map(|s| 0.5 * s).collect(),
            WindowGeometry::Ball { dim, .. } => vec![0.0; *dim],
        }
    }
}

/// `e_0, ..., e_n` of the given values.
fn elementary_symmetric(values: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; values.len() + 1];
    e[0] = 1.0;
    for (k, &x) in values.iter().enumerate() {
        for j in (1..=k + 1).rev() {
            e[j] += x * e[j - 1];
        }
    }
    e
}
