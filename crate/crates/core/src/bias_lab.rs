//! Bias of the segment-aware estimate `A_0` under uniform segmentation.
//!
//! Value errors `ε(s_t) = V(s_t) - V*(s_t)` are drawn inside the envelope
//! `|ε(s_t)| <= α·exp((T - t)/β)` with `ε(s_T) = 0`. Because the TD sum
//! telescopes within each segment, only the errors at `s_0` and at interior
//! boundaries `s_{kM}` survive:
//!
//! ```text
//! bias = -ε(s_0) + Σ_{k=1}^{T/M-1} λ^{k-1} (1-λ) ε(s_{kM})
//! ```
//!
//! and the closed-form bound is `α·exp(T/β)·[1 + (1-λ)/(exp(M/β) - λ)]`.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng;
use crate::sae::sae;
use crate::segmentation::segment_uniform;
use crate::traj::{check_lambda, ValueSeries};
use crate::{Error, Result};

/// Absolute slack allowed when checking `|bias| <= bound`.
pub const BOUND_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignPattern {
    /// `ε(s_0) = -envelope`, every other non-terminal state at `+envelope`.
    WorstCase,
    /// `ε(s_t) = envelope · u_t` with `u_t ~ U[-1, 1]`.
    Random,
    /// `ε(s_t) = (-1)^{t+1} · envelope`.
    Alternating,
}

impl SignPattern {
    pub const ALL: [SignPattern; 3] = [
        SignPattern::WorstCase,
        SignPattern::Random,
        SignPattern::Alternating,
    ];

    pub fn label(self) -> &'static str {
        match self {
            SignPattern::WorstCase => "worst_case",
            SignPattern::Random => "random",
            SignPattern::Alternating => "alternating",
        }
    }
}

impl std::str::FromStr for SignPattern {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "worst_case" | "worst" => Ok(SignPattern::WorstCase),
            "random" => Ok(SignPattern::Random),
            "alternating" => Ok(SignPattern::Alternating),
            other => Err(Error::invalid(format!("unknown sign pattern `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueErrorModel {
    pub alpha: f64,
    pub beta: f64,
    pub pattern: SignPattern,
    pub seed: u64,
}

impl ValueErrorModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::invalid(format!(
                "beta must be positive, got {}",
                self.beta
            )));
        }
        Ok(())
    }

    /// `α·exp((T - t)/β)`.
    pub fn envelope(&self, horizon: usize, t: usize) -> f64 {
        self.alpha * ((horizon - t) as f64 / self.beta).exp()
    }
}

fn check_divides(horizon: usize, segment_len: usize) -> Result<()> {
    if horizon == 0 || segment_len == 0 || !horizon.is_multiple_of(segment_len) {
        return Err(Error::invalid(format!(
            "segment length M={segment_len} must divide the horizon T={horizon}"
        )));
    }
    Ok(())
}

/// `α·exp(T/β)·[1 + (1-λ)/(exp(M/β) - λ)]`.
pub fn bias_bound(
    alpha: f64,
    beta: f64,
    horizon: usize,
    segment_len: usize,
    lambda: f64,
) -> Result<f64> {
    ValueErrorModel {
        alpha,
        beta,
        pattern: SignPattern::Random,
        seed: 0,
    }
    .validate()?;
    check_lambda(lambda)?;
    check_divides(horizon, segment_len)?;
    let head = alpha * (horizon as f64 / beta).exp();
    Ok(head * (1.0 + (1.0 - lambda) / ((segment_len as f64 / beta).exp() - lambda)))
}

/// Value errors `ε(s_0..s_T)` for a uniformly segmented horizon.
///
/// `segment_len` locates the interior boundaries for the worst-case sign
/// construction; the other patterns ignore it apart from the divisibility check.
pub fn sample_errors(
    model: &ValueErrorModel,
    horizon: usize,
    segment_len: usize,
) -> Result<Vec<f64>> {
    model.validate()?;
    check_divides(horizon, segment_len)?;
    let mut rng = rng::child(model.seed, rng::stream::ERRORS, horizon as u64);
    let mut errors: Vec<f64> = (0..horizon)
        .map(|t| {
            let env = model.envelope(horizon, t);
            match model.pattern {
                SignPattern::WorstCase if t == 0 => -env,
                SignPattern::WorstCase => env,
                SignPattern::Random => env * rng.random_range(-1.0..=1.0),
                SignPattern::Alternating if t % 2 == 0 => -env,
                SignPattern::Alternating => env,
            }
        })
        .collect();
    errors.push(0.0);
    Ok(errors)
}

/// `V* ≡ 0` with terminal value 1.
pub fn synthetic_values(horizon: usize) -> ValueSeries {
    ValueSeries::pinned(vec![0.0; horizon], 1.0).expect("finite synthetic values")
}

/// Per-step bias `A_t(V* + ε) - A_t(V*)` under uniform segmentation.
pub fn bias_profile(
    true_values: &ValueSeries,
    errors: &[f64],
    segment_len: usize,
    lambda: f64,
) -> Result<Vec<f64>> {
    let horizon = true_values.horizon();
    check_divides(horizon, segment_len)?;
    if errors.len() != horizon + 1 {
        return Err(Error::Alignment {
            what: "value errors",
            expected: horizon + 1,
            actual: errors.len(),
        });
    }
    if errors[horizon] != 0.0 {
        return Err(Error::invalid("terminal value error must be zero"));
    }
    let noisy: Vec<f64> = true_values.iter().zip(errors).map(|(v, e)| v + e).collect();
    let noisy = ValueSeries::with_terminal(noisy, horizon, true_values[horizon])?;
    let boundaries = segment_uniform(horizon, segment_len)?;
    let clean = sae(true_values, &boundaries, lambda)?;
    let perturbed = sae(&noisy, &boundaries, lambda)?;
    Ok(perturbed
        .iter()
        .zip(clean.iter())
        .map(|(a, b)| a - b)
        .collect())
}

/// `-ε(s_0) + Σ_{k=1}^{T/M-1} λ^{k-1}(1-λ) ε(s_{kM})`.
pub fn telescoped_bias(errors: &[f64], segment_len: usize, lambda: f64) -> Result<f64> {
    let horizon = errors.len().saturating_sub(1);
    check_divides(horizon, segment_len)?;
    let segments = horizon / segment_len;
    let interior: f64 = (1..segments)
        .map(|k| lambda.powi(k as i32 - 1) * (1.0 - lambda) * errors[k * segment_len])
        .sum();
    Ok(-errors[0] + interior)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasReport {
    #[serde(rename = "T")]
    pub horizon: usize,
    #[serde(rename = "M")]
    pub segment_len: usize,
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
    pub pattern: SignPattern,
    pub seed: u64,
    pub empirical_bias: f64,
    pub bound: f64,
    pub slack: f64,
    /// Closed-form telescoped bias for the same errors; not part of the CSV.
    #[serde(skip)]
    pub telescoped_bias: f64,
}

/// Measure the bias of `A_0` for one error draw and check it against the bound.
pub fn empirical_bias(
    horizon: usize,
    segment_len: usize,
    lambda: f64,
    model: &ValueErrorModel,
    true_values: &ValueSeries,
) -> Result<BiasReport> {
    if true_values.horizon() != horizon {
        return Err(Error::Alignment {
            what: "true values",
            expected: horizon + 1,
            actual: true_values.len(),
        });
    }
    let bound = bias_bound(model.alpha, model.beta, horizon, segment_len, lambda)?;
    let errors = sample_errors(model, horizon, segment_len)?;
    let bias = bias_profile(true_values, &errors, segment_len, lambda)?[0];
    if bias.abs() > bound + BOUND_TOLERANCE {
        return Err(Error::BoundViolation {
            bias,
            bound,
            horizon,
            segment_len,
            lambda,
        });
    }
    Ok(BiasReport {
        horizon,
        segment_len,
        lambda,
        alpha: model.alpha,
        beta: model.beta,
        pattern: model.pattern,
        seed: model.seed,
        empirical_bias: bias,
        bound,
        slack: bound - bias.abs(),
        telescoped_bias: telescoped_bias(&errors, segment_len, lambda)?,
    })
}

pub fn divisors(n: usize) -> Vec<usize> {
    (1..=n).filter(|m| n.is_multiple_of(*m)).collect()
}

/// Parameter grid for a batch of bias measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BiasGrid {
    #[serde(rename = "T")]
    pub horizons: Vec<usize>,
    /// Segment lengths; empty means every divisor of each horizon.
    #[serde(rename = "M")]
    pub segment_lens: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub patterns: Vec<SignPattern>,
    pub seeds: u64,
}

impl Default for BiasGrid {
    fn default() -> Self {
        Self {
            horizons: vec![24],
            segment_lens: Vec::new(),
            lambdas: vec![0.5, 0.9, 0.99],
            alphas: vec![1.0],
            betas: vec![4.0, 8.0, 16.0],
            patterns: SignPattern::ALL.to_vec(),
            seeds: 200,
        }
    }
}

impl BiasGrid {
    /// All grid points in a fixed nested order: T, M, λ, α, β, pattern, seed.
    pub fn points(&self) -> Vec<(usize, usize, f64, ValueErrorModel)> {
        let mut out = Vec::new();
        for &horizon in &self.horizons {
            let lens = if self.segment_lens.is_empty() {
                divisors(horizon)
            } else {
                self.segment_lens.clone()
            };
            for &m in &lens {
                for &lambda in &self.lambdas {
                    for &alpha in &self.alphas {
                        for &beta in &self.betas {
                            for &pattern in &self.patterns {
                                for seed in 0..self.seeds {
                                    out.push((
                                        horizon,
                                        m,
                                        lambda,
                                        ValueErrorModel {
                                            alpha,
                                            beta,
                                            pattern,
                                            seed,
                                        },
                                    ));
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// Evaluate every grid point. Output order is the grid order regardless of `threads`.
pub fn run_grid(grid: &BiasGrid, threads: usize) -> Result<Vec<BiasReport>> {
    let points = grid.points();
    let eval = |(horizon, m, lambda, model): &(usize, usize, f64, ValueErrorModel)| {
        empirical_bias(*horizon, *m, *lambda, model, &synthetic_values(*horizon))
    };
    if threads <= 1 {
        return points.iter().map(eval).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    pool.install(|| points.par_iter().map(eval).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(pattern: SignPattern, seed: u64) -> ValueErrorModel {
        ValueErrorModel {
            alpha: 1.0,
            beta: 8.0,
            pattern,
            seed,
        }
    }

    #[test]
    fn bound_values() {
        let b = bias_bound(1.0, 10.0, 20, 4, 1.0).unwrap();
        assert_eq!(b, 2.0f64.exp());
        let b = bias_bound(1.0, 10.0, 20, 4, 0.9).unwrap();
        let expected = 2.0f64.exp() * (1.0 + 0.1 / (0.4f64.exp() - 0.9));
        assert!((b - expected).abs() < 1e-12);
        assert!((b - 8.6376).abs() < 1e-4);
        assert!(bias_bound(1.0, 10.0, 20, 3, 0.9).is_err());
        assert!(bias_bound(0.0, 10.0, 20, 4, 0.9).is_err());
        let big = bias_bound(1.0, 2.0, 400, 400, 0.5).unwrap();
        assert!((big / (200.0f64).exp() - 1.0) < 1e-40);
    }

    #[test]
    fn bound_monotone_in_m() {
        for lambda in [0.0, 0.5, 0.9, 0.99, 1.0] {
            for beta in [1.0, 4.0, 8.0, 16.0] {
                let bounds: Vec<f64> = divisors(24)
                    .into_iter()
                    .map(|m| bias_bound(1.0, beta, 24, m, lambda).unwrap())
                    .collect();
                assert!(bounds.windows(2).all(|w| w[1] <= w[0]));
            }
        }
    }

    #[test]
    fn error_samples() {
        for pattern in SignPattern::ALL {
            let e = sample_errors(&model(pattern, 3), 24, 4).unwrap();
            assert_eq!(e.len(), 25);
            assert_eq!(e[24], 0.0);
            for (t, x) in e.iter().enumerate().take(24) {
                assert!(x.abs() <= model(pattern, 3).envelope(24, t) * (1.0 + 1e-15));
            }
        }
        let w = sample_errors(&model(SignPattern::WorstCase, 0), 24, 4).unwrap();
        assert_eq!(w[0], -(3.0f64).exp());
        let a = sample_errors(&model(SignPattern::Random, 9), 24, 4).unwrap();
        let b = sample_errors(&model(SignPattern::Random, 9), 24, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(
            a,
            sample_errors(&model(SignPattern::Random, 10), 24, 4).unwrap()
        );
    }

    #[test]
    fn zero_noise_zero_bias() {
        let v = synthetic_values(12);
        let bias = bias_profile(&v, &[0.0; 13], 3, 0.9).unwrap();
        assert!(bias.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn lambda_one_keeps_only_initial_error() {
        let v = synthetic_values(24);
        let e = sample_errors(&model(SignPattern::Random, 4), 24, 6).unwrap();
        let bias = bias_profile(&v, &e, 6, 1.0).unwrap()[0];
        assert!((bias + e[0]).abs() < 1e-12);
    }

    #[test]
    fn worst_case_decreasing_in_m() {
        let v = synthetic_values(24);
        let biases: Vec<f64> = divisors(24)
            .into_iter()
            .map(|m| {
                let r = empirical_bias(24, m, 0.9, &model(SignPattern::WorstCase, 0), &v).unwrap();
                assert!(r.empirical_bias.abs() <= r.bound + BOUND_TOLERANCE);
                r.empirical_bias.abs()
            })
            .collect();
        assert!(biases.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn non_dividing_rejected() {
        let v = synthetic_values(24);
        assert!(empirical_bias(24, 5, 0.9, &model(SignPattern::Random, 0), &v).is_err());
    }

    #[test]
    fn grid_order_is_thread_independent() {
        let grid = BiasGrid {
            seeds: 3,
            ..BiasGrid::default()
        };
        let a = run_grid(&grid, 1).unwrap();
        let b = run_grid(&grid, 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 8 * 3 * 3 * 3 * 3);
    }
}
