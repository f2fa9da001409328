//! Trajectories, value series and the token-level advantage estimators.
//!
//! Indexing is 0-based throughout: action steps run over `0..T` and states
//! over `0..=T`, where state `u` is the state after `u` tokens have been
//! emitted. The discount factor is fixed to 1 and the only reward is the
//! binary terminal reward, so the TD error at step `t` is
//! `V(s_{t+1}) - V(s_t)` with `V(s_T)` pinned to the reward.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::segmentation::SegmentationConfig;
use crate::{Error, Result};

/// Default additive guard on the group standard deviation.
pub const GRPO_EPSILON: f64 = 1e-8;

/// Default coefficient `c` in the length-adaptive `λ = 1 - 1/(c·l)`.
pub const ADAPTIVE_COEFF: f64 = 0.2;

/// One generated episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    tokens: Vec<u32>,
    gen_probs: Vec<f64>,
    terminal_reward: f64,
}

impl Trajectory {
    pub fn new(tokens: Vec<u32>, gen_probs: Vec<f64>, terminal_reward: f64) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::invalid("trajectory must contain at least one token"));
        }
        if gen_probs.len() != tokens.len() {
            return Err(Error::Alignment {
                what: "gen_probs",
                expected: tokens.len(),
                actual: gen_probs.len(),
            });
        }
        if let Some((i, p)) = gen_probs
            .iter()
            .enumerate()
            .find(|(_, &p)| !(p > 0.0 && p <= 1.0))
        {
            return Err(Error::invalid(format!(
                "gen_probs[{i}] = {p} is outside (0, 1]"
            )));
        }
        if terminal_reward != 0.0 && terminal_reward != 1.0 {
            return Err(Error::invalid(format!(
                "terminal reward must be 0 or 1, got {terminal_reward}"
            )));
        }
        Ok(Self {
            tokens,
            gen_probs,
            terminal_reward,
        })
    }

    /// Number of emitted tokens `T`.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[u32] {
        &self.tokens
    }

    pub fn gen_probs(&self) -> &[f64] {
        &self.gen_probs
    }

    pub fn terminal_reward(&self) -> f64 {
        self.terminal_reward
    }
}

/// State values `V(s_0), ..., V(s_T)` aligned to a trajectory.
///
/// The terminal entry always equals the trajectory's reward.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueSeries(Vec<f64>);

impl ValueSeries {
    /// Wrap a full `T + 1` value vector, checking alignment and the pinned terminal value.
    pub fn new(values: Vec<f64>, traj: &Trajectory) -> Result<Self> {
        Self::with_terminal(values, traj.len(), traj.terminal_reward())
    }

    /// Like [`ValueSeries::new`] for callers that only know the horizon and reward.
    pub fn with_terminal(values: Vec<f64>, horizon: usize, reward: f64) -> Result<Self> {
        if values.len() != horizon + 1 {
            return Err(Error::Alignment {
                what: "values",
                expected: horizon + 1,
                actual: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("values[{i}] is not finite")));
        }
        if values[horizon] != reward {
            return Err(Error::invalid(format!(
                "terminal value {} must equal the reward {reward}",
                values[horizon]
            )));
        }
        Ok(Self(values))
    }

    /// Build from predictions for the non-terminal states `0..T` and pin `V(s_T)` to the reward.
    pub fn pinned(mut predictions: Vec<f64>, reward: f64) -> Result<Self> {
        let horizon = predictions.len();
        predictions.push(reward);
        Self::with_terminal(predictions, horizon, reward)
    }

    /// Trajectory length `T` this series is aligned to.
    pub fn horizon(&self) -> usize {
        self.0.len() - 1
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ValueSeries {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Per-step TD errors `δ_0, ..., δ_{T-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaSeries(Vec<f64>);

impl DeltaSeries {
    pub fn new(deltas: Vec<f64>) -> Self {
        Self(deltas)
    }

    /// TD errors of an already pinned value series.
    pub fn from_values(values: &ValueSeries) -> Self {
        deltas_from_values(values)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for DeltaSeries {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Per-step advantages `A_0, ..., A_{T-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdvantageSeries(Vec<f64>);

impl AdvantageSeries {
    pub fn new(advantages: Vec<f64>) -> Self {
        Self(advantages)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for AdvantageSeries {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Gae,
    Sae,
    Mc,
    AdaptiveLambda,
    Grpo,
}

impl EstimatorKind {
    pub fn label(self) -> &'static str {
        match self {
            EstimatorKind::Gae => "gae",
            EstimatorKind::Sae => "sae",
            EstimatorKind::Mc => "mc",
            EstimatorKind::AdaptiveLambda => "adaptive",
            EstimatorKind::Grpo => "grpo",
        }
    }
}

/// Which advantage estimator to run and with which parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorSpec {
    pub kind: EstimatorKind,
    /// Decay used by GAE and SAE.
    pub lambda: f64,
    /// Required iff `kind == Sae`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub segmentation: Option<SegmentationConfig>,
    /// `c` in `λ = 1 - 1/(c·l)` for the adaptive estimator.
    pub adaptive_coeff: f64,
}

impl Default for EstimatorSpec {
    fn default() -> Self {
        Self::gae(1.0)
    }
}

impl EstimatorSpec {
    pub fn gae(lambda: f64) -> Self {
        Self {
            kind: EstimatorKind::Gae,
            lambda,
            segmentation: None,
            adaptive_coeff: ADAPTIVE_COEFF,
        }
    }

    pub fn sae(lambda: f64, segmentation: SegmentationConfig) -> Self {
        Self {
            kind: EstimatorKind::Sae,
            segmentation: Some(segmentation),
            ..Self::gae(lambda)
        }
    }

    pub fn mc() -> Self {
        Self {
            kind: EstimatorKind::Mc,
            ..Self::gae(1.0)
        }
    }

    pub fn adaptive(coeff: f64) -> Self {
        Self {
            kind: EstimatorKind::AdaptiveLambda,
            adaptive_coeff: coeff,
            ..Self::gae(1.0)
        }
    }

    pub fn grpo() -> Self {
        Self {
            kind: EstimatorKind::Grpo,
            ..Self::gae(1.0)
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_lambda(self.lambda)?;
        match (self.kind, &self.segmentation) {
            (EstimatorKind::Sae, None) => {
                return Err(Error::invalid(
                    "SAE estimator requires a segmentation config",
                ))
            }
            (EstimatorKind::Sae, Some(seg)) => seg.validate()?,
            _ => {}
        }
        if self.kind == EstimatorKind::AdaptiveLambda
            && !(self.adaptive_coeff > 0.0 && self.adaptive_coeff.is_finite())
        {
            return Err(Error::invalid(format!(
                "adaptive_coeff must be positive, got {}",
                self.adaptive_coeff
            )));
        }
        Ok(())
    }

    /// Short human-readable label, e.g. `sae(p=0.5,lambda=0.95)`.
    pub fn label(&self) -> String {
        match self.kind {
            EstimatorKind::Gae => format!("gae(lambda={})", self.lambda),
            EstimatorKind::Sae => match &self.segmentation {
                Some(seg) => format!("sae({},lambda={})", seg.label(), self.lambda),
                None => format!("sae(lambda={})", self.lambda),
            },
            EstimatorKind::Mc => "mc".to_string(),
            EstimatorKind::AdaptiveLambda => format!("adaptive(c={})", self.adaptive_coeff),
            EstimatorKind::Grpo => "grpo".to_string(),
        }
    }
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::invalid(format!(
            "lambda must lie in [0, 1], got {lambda}"
        )));
    }
    Ok(())
}

/// TD errors under γ = 1 and a terminal-only reward.
///
/// The last entry uses the pinned terminal value, so it equals
/// `reward - V(s_{T-1})`.
pub fn compute_deltas(traj: &Trajectory, values: &ValueSeries) -> Result<DeltaSeries> {
    if values.len() != traj.len() + 1 {
        return Err(Error::Alignment {
            what: "values",
            expected: traj.len() + 1,
            actual: values.len(),
        });
    }
    if values[traj.len()] != traj.terminal_reward() {
        return Err(Error::invalid(
            "terminal value is not pinned to the trajectory reward",
        ));
    }
    Ok(deltas_from_values(values))
}

/// `δ_t = V(s_{t+1}) - V(s_t)` for a value vector whose last entry is already the terminal value.
pub(crate) fn deltas_from_values(values: &[f64]) -> DeltaSeries {
    DeltaSeries(values.windows(2).map(|w| w[1] - w[0]).collect())
}

/// Backward `A_t = δ_t + factor_t · A_{t+1}` with `A_T = 0`.
pub(crate) fn discounted_suffix(deltas: &[f64], factor: impl Fn(usize) -> f64) -> Vec<f64> {
    let mut out = vec![0.0; deltas.len()];
    let mut acc = 0.0;
    for t in (0..deltas.len()).rev() {
        acc = deltas[t] + factor(t) * acc;
        out[t] = acc;
    }
    out
}

/// Generalized advantage estimation, `A_t = Σ_l λ^l δ_{t+l}`.
pub fn gae(deltas: &DeltaSeries, lambda: f64) -> Result<AdvantageSeries> {
    check_lambda(lambda)?;
    Ok(AdvantageSeries(discounted_suffix(deltas, |_| lambda)))
}

/// Monte Carlo advantage `G - V(s_t)`, i.e. GAE with λ = 1.
pub fn mc_advantage(deltas: &DeltaSeries) -> AdvantageSeries {
    AdvantageSeries(discounted_suffix(deltas, |_| 1.0))
}

/// Result of the length-adaptive λ rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveLambda {
    pub lambda: f64,
    /// `coeff · length <= 1`; λ was clamped to 0.
    pub degenerate: bool,
}

/// `λ = 1 - 1/(coeff · length)`, clamped to `[0, 1)`.
pub fn adaptive_lambda(length: usize, coeff: f64) -> Result<AdaptiveLambda> {
    if length == 0 {
        return Err(Error::invalid("adaptive lambda needs a positive length"));
    }
    if !(coeff > 0.0 && coeff.is_finite()) {
        return Err(Error::invalid(format!(
            "adaptive coeff must be positive, got {coeff}"
        )));
    }
    let scaled = coeff * length as f64;
    if scaled <= 1.0 {
        return Ok(AdaptiveLambda {
            lambda: 0.0,
            degenerate: true,
        });
    }
    Ok(AdaptiveLambda {
        lambda: 1.0 - 1.0 / scaled,
        degenerate: false,
    })
}

/// Group-relative advantages `(r_i - mean) / (std + epsilon)` using the
/// population standard deviation.
pub fn grpo_advantages(group_rewards: &[f64], epsilon: f64) -> Result<Vec<f64>> {
    if group_rewards.len() < 2 {
        return Err(Error::invalid(format!(
            "GRPO needs a group of at least 2 rollouts, got {}",
            group_rewards.len()
        )));
    }
    if !(epsilon >= 0.0) {
        return Err(Error::invalid("GRPO epsilon must be non-negative"));
    }
    let n = group_rewards.len() as f64;
    let mean = group_rewards.iter().sum::<f64>() / n;
    let var = group_rewards
        .iter()
        .map(|r| (r - mean).powi(2))
        .sum::<f64>()
        / n;
    let denom = var.sqrt() + epsilon;
    Ok(group_rewards
        .iter()
        .map(|r| {
            let centered = r - mean;
            if centered == 0.0 {
                0.0
            } else {
                centered / denom
            }
        })
        .collect())
}
