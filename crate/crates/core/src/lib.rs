//! Segment-level advantage estimation for sparse terminal-reward sequence RL.
//!
//! The crate is organized bottom-up:
//!
//! - [`traj`]: trajectories, value series, TD errors and the token-level
//!   estimators (GAE, Monte Carlo, adaptive-λ, group-relative).
//! - [`segmentation`]: boundary sets from generation probabilities, fixed
//!   intervals or delimiter tokens.
//! - [`sae`]: the segment-aware estimator, its decay schedule, slow reference
//!   forms, and the [`sae::estimate`] dispatch façade.
//! - [`bias_lab`]: synthetic value-error envelopes and the closed-form bias bound
//!   for uniformly segmented estimates.
//! - [`env`]: a corridor-and-junction token MDP with exact values and Monte
//!   Carlo value oracles.
//! - [`trainer`]: a small PPO loop over tabular policies and critics.
//! - [`analysis`]: ground-truth segment advantages and correlation studies.
//! - [`config`] and [`cli`]: run configuration and the `segadv` command line.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod bias_lab;
pub mod cli;
pub mod config;
pub mod env;
mod error;
pub mod io;
pub mod rng;
pub mod sae;
pub mod segmentation;
pub mod trainer;
pub mod traj;

pub use error::{Error, Result};
pub use segmentation::{BoundarySet, SegmentationConfig, SegmentationMethod};
pub use traj::{
    AdvantageSeries, DeltaSeries, EstimatorKind, EstimatorSpec, Trajectory, ValueSeries,
};
