//! Birth-growth (Johnson–Mehl type) seed models: exact simulation, exposure
//! counting, analytic moments and Gaussian-approximation diagnostics.

// `!(x > 0.0)` style guards also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod exposure;
pub mod mc;
pub mod model;
pub mod rng;
pub mod sampler;
pub mod cli;
