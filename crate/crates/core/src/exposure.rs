//! Which seeds are exposed, i.e. not covered at birth by any earlier seed's
//! growth region.
//!
//! Shaded seeds keep growing and can shade later seeds, so every earlier
//! seed is a potential witness, exposed or not.

use std::collections::{BTreeMap, HashMap};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::model::Seed;
use crate::sampler::Realization;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Naive,
    Indexed,
}

#[derive(Debug, Clone)]
pub struct ExposureResult {
    /// Exposure flag per seed, in the realization's seed order.
    pub flags: Vec<bool>,
    /// Exposed seeds located in the window and born by the horizon.
    pub count: u64,
    pub algorithm: Algorithm,
    pub elapsed: Duration,
}

pub fn compute(realization: &Realization, algorithm: Algorithm) -> ExposureResult {
    match algorithm {
        Algorithm::Naive => exposed_naive(realization),
        Algorithm::Indexed => exposed_indexed(realization),
    }
}

fn birth_order(seeds: &[Seed]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..seeds.len()).collect();
    order.sort_by(|&a, &b| {
        seeds[a]
            .birth_time
            .total_cmp(&seeds[b].birth_time)
            .then(seeds[a].id.cmp(&seeds[b].id))
    });
    order
}

/// Reference `O(n²)` check of every earlier seed.
pub fn exposed_naive(realization: &Realization) -> ExposureResult {
    let start = Instant::now();
    let seeds = &realization.seeds;
    let order = birth_order(seeds);
    let mut flags = vec![false; seeds.len()];
    for (pos, &j) in order.iter().enumerate() {
        let target = &seeds[j];
        flags[j] = !order[..pos].iter().any(|&i| seeds[i].shades(target));
    }
    let count = functional_count(realization, &flags);
    ExposureResult {
        flags,
        count,
        algorithm: Algorithm::Naive,
        elapsed: start.elapsed(),
    }
}

/// `F`: exposed seeds in the window born by the horizon.
pub fn functional_count(realization: &Realization, flags: &[bool]) -> u64 {
    realization
        .seeds
        .iter()
        .zip(flags)
        .filter(|(s, &f)| f && realization.is_counted(s))
        .count() as u64
}

type CellKey = SmallVec<[i64; 4]>;

struct Cell {
    members: Vec<u32>,
    t_min: f64,
    v_max: f64,
}

#[derive(Default)]
struct Bucket {
    cells: HashMap<CellKey, Cell>,
    t_min: f64,
    v_max: f64,
}

/// Uniform grid per dyadic speed class.
struct SpeedGrid {
    cell: f64,
    dim: usize,
    buckets: BTreeMap<i32, Bucket>,
}

const ZERO_SPEED: i32 = i32::MIN;

fn speed_class(v: f64) -> i32 {
    if v > 0.0 {
        v.log2().floor() as i32
    } else {
        ZERO_SPEED
    }
}

impl SpeedGrid {
    fn new(cell: f64, dim: usize) -> Self {
        Self {
            cell,
            dim,
            buckets: BTreeMap::new(),
        }
    }

    fn key(&self, x: &[f64]) -> CellKey {
        x.iter().map(|c| (c / self.cell).floor() as i64).collect()
    }

    fn insert(&mut self, idx: u32, seed: &Seed) {
        let key = self.key(&seed.location);
        let bucket = self.buckets.entry(speed_class(seed.speed)).or_insert_with(|| Bucket {
            cells: HashMap::new(),
            t_min: f64::INFINITY,
            v_max: 0.0,
        });
        bucket.t_min = bucket.t_min.min(seed.birth_time);
        bucket.v_max = bucket.v_max.max(seed.speed);
        let cell = bucket.cells.entry(key).or_insert_with(|| Cell {
            members: Vec::new(),
            t_min: f64::INFINITY,
            v_max: 0.0,
        });
        cell.members.push(idx);
        cell.t_min = cell.t_min.min(seed.birth_time);
        cell.v_max = cell.v_max.max(seed.speed);
    }

    /// Lower bound on the squared distance from `x` to the closed cell `key`.
    fn cell_gap2(&self, key: &[i64], x: &[f64]) -> f64 {
        key.iter()
            .zip(x)
            .map(|(&k, &c)| {
                let lo = k as f64 * self.cell;
                let hi = lo + self.cell;
                let gap = (lo - c).max(c - hi).max(0.0);
                let slack = 1e-9 * (c.abs() + self.cell);
                let g = (gap - slack).max(0.0);
                g * g
            })
            .sum()
    }

    fn cell_may_shade(&self, key: &[i64], cell: &Cell, target: &Seed) -> bool {
        let reach = cell.v_max * (target.birth_time - cell.t_min);
        if reach < 0.0 {
            return false;
        }
        self.cell_gap2(key, &target.location) <= reach * reach
    }

    fn shaded(&self, seeds: &[Seed], target: &Seed) -> bool {
        let x = &target.location;
        for bucket in self.buckets.values() {
            if bucket.t_min > target.birth_time {
                continue;
            }
            let reach = bucket.v_max * (target.birth_time - bucket.t_min);
            let lo: CellKey = x.iter().map(|c| ((c - reach) / self.cell).floor() as i64 - 1).collect();
            let hi: CellKey = x.iter().map(|c| ((c + reach) / self.cell).floor() as i64 + 1).collect();
            let span: f64 = lo.iter().zip(&hi).map(|(l, h)| (h - l + 1) as f64).product();
            let check = |key: &[i64], cell: &Cell| {
                self.cell_may_shade(key, cell, target)
                    && cell.members.iter().any(|&m| seeds[m as usize].shades(target))
            };
            if span <= bucket.cells.len() as f64 {
                let mut key = lo.clone();
                loop {
                    if let Some(cell) = bucket.cells.get(&key) {
                        if check(&key, cell) {
                            return true;
                        }
                    }
                    // odometer increment over the key range
                    let mut k = 0;
                    loop {
                        if k == self.dim {
                            break;
                        }
                        if key[k] < hi[k] {
                            key[k] += 1;
                            break;
                        }
                        key[k] = lo[k];
                        k += 1;
                    }
                    if k == self.dim {
                        break;
                    }
                }
            } else if bucket.cells.iter().any(|(key, cell)| check(key, cell)) {
                return true;
            }
        }
        false
    }
}

fn grid_cell_size(realization: &Realization) -> f64 {
    let diam = realization.window.diameter();
    let a = realization.spec.horizon;
    let mut reach: Vec<f64> = realization.seeds.iter().map(|s| s.speed * a).collect();
    let median = if reach.is_empty() {
        diam
    } else {
        let mid = reach.len() / 2;
        *reach.select_nth_unstable_by(mid, |a, b| a.total_cmp(b)).1
    };
    median.clamp(diam / 64.0, diam)
}

/// Same flags as [`exposed_naive`], using a spatial grid per dyadic speed
/// class. A class only needs the cells within `v_max (t - t_min)` of the
/// query, and each cell is pruned by its own earliest birth and top speed.
pub fn exposed_indexed(realization: &Realization) -> ExposureResult {
    let start = Instant::now();
    let seeds = &realization.seeds;
    let order = birth_order(seeds);
    let dim = realization.spec.dim;
    let mut grid = SpeedGrid::new(grid_cell_size(realization), dim);
    let mut flags = vec![false; seeds.len()];
    for &j in &order {
        let target = &seeds[j];
        flags[j] = !grid.shaded(seeds, target);
        grid.insert(j as u32, target);
    }
    let count = functional_count(realization, &flags);
    ExposureResult {
        flags,
        count,
        algorithm: Algorithm::Indexed,
        elapsed: start.elapsed(),
    }
}
