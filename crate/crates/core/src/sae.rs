//! Segment-aware advantage estimation.
//!
//! The estimator bootstraps from the value function only at segment
//! boundaries. In TD form it is GAE with a per-step decay that is 1 inside a
//! segment and λ when the next state is a boundary:
//!
//! ```text
//! A_t = δ_t + f_t · A_{t+1},   f_t = λ if (t+1) ∈ B else 1,   A_T = 0
//! ```
//!
//! [`sae_recursive`] is the production path. The [`reference`] module holds
//! the boundary-weighted and product forms as slow oracles for it.

use std::ops::Deref;

use crate::segmentation::BoundarySet;
use crate::traj::{
    adaptive_lambda, check_lambda, compute_deltas, discounted_suffix, gae, grpo_advantages,
    mc_advantage, AdvantageSeries, DeltaSeries, EstimatorKind, EstimatorSpec, Trajectory,
    ValueSeries, GRPO_EPSILON,
};
use crate::{Error, Result};

/// Per-step decay factors `f_0, ..., f_{T-1}`, each either 1 or λ.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSchedule(Vec<f64>);

impl LambdaSchedule {
    /// Wrap raw factors. Used by tests and callers that build schedules by hand.
    pub fn from_factors(factors: Vec<f64>) -> Self {
        Self(factors)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for LambdaSchedule {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// `f_t = λ` iff state `t + 1` is a boundary.
pub fn lambda_schedule(
    boundaries: &BoundarySet,
    lambda: f64,
    horizon: usize,
) -> Result<LambdaSchedule> {
    check_lambda(lambda)?;
    if boundaries.horizon() != horizon {
        return Err(Error::Alignment {
            what: "boundary horizon",
            expected: horizon,
            actual: boundaries.horizon(),
        });
    }
    if let Some(&u) = boundaries
        .positions()
        .iter()
        .find(|&&u| u == 0 || u > horizon)
    {
        return Err(Error::invalid(format!(
            "boundary position {u} is outside [1, {horizon}]"
        )));
    }
    let mut factors = vec![1.0; horizon];
    for &u in boundaries.positions() {
        factors[u - 1] = lambda;
    }
    Ok(LambdaSchedule(factors))
}

/// Single backward pass `A_t = δ_t + f_t · A_{t+1}`.
pub fn sae_recursive(deltas: &DeltaSeries, schedule: &LambdaSchedule) -> Result<AdvantageSeries> {
    check_aligned(deltas, schedule)?;
    Ok(AdvantageSeries::new(discounted_suffix(deltas, |t| {
        schedule[t]
    })))
}

fn check_aligned(deltas: &DeltaSeries, schedule: &LambdaSchedule) -> Result<()> {
    if deltas.len() != schedule.len() {
        return Err(Error::Alignment {
            what: "lambda schedule",
            expected: deltas.len(),
            actual: schedule.len(),
        });
    }
    Ok(())
}

/// Segment-aware advantages straight from values and boundaries.
pub fn sae(values: &ValueSeries, boundaries: &BoundarySet, lambda: f64) -> Result<AdvantageSeries> {
    let horizon = values.horizon();
    let schedule = lambda_schedule(boundaries, lambda, horizon)?;
    let deltas = crate::traj::deltas_from_values(values);
    sae_recursive(&deltas, &schedule)
}

/// Slow reference evaluations, kept as executable statements of the
/// equivalence between the three forms.
pub mod reference {
    use super::*;

    /// Bootstrap targets and their weights for step `t`:
    /// `(1-λ)·λ^{k-j}` on interior boundaries after `t`, and `λ^{|B|-j}` on `T`.
    pub fn boundary_weights(boundaries: &BoundarySet, t: usize, lambda: f64) -> Vec<(usize, f64)> {
        let positions = boundaries.positions();
        let last = positions.len() - 1;
        // first boundary strictly after t; always exists since T > t
        let j = positions.partition_point(|&u| u <= t);
        let mut weights: Vec<(usize, f64)> = positions[j..last]
            .iter()
            .enumerate()
            .map(|(offset, &u)| (u, (1.0 - lambda) * lambda.powi(offset as i32)))
            .collect();
        weights.push((positions[last], lambda.powi((last - j) as i32)));
        weights
    }

    /// Weighted combination of multi-step advantages `V(s_{t_k}) - V(s_t)`
    /// over the boundaries after `t`. `O(T·|B|)`.
    pub fn sae_boundary_form(
        values: &ValueSeries,
        boundaries: &BoundarySet,
        lambda: f64,
    ) -> Result<AdvantageSeries> {
        check_lambda(lambda)?;
        let horizon = values.horizon();
        if boundaries.horizon() != horizon {
            return Err(Error::Alignment {
                what: "boundary horizon",
                expected: horizon,
                actual: boundaries.horizon(),
            });
        }
        let out = (0..horizon)
            .map(|t| {
                boundary_weights(boundaries, t, lambda)
                    .into_iter()
                    .map(|(u, w)| w * (values[u] - values[t]))
                    .sum()
            })
            .collect();
        Ok(AdvantageSeries::new(out))
    }

    /// `A_t = Σ_l (Π_{i<l} f_{t+i}) δ_{t+l}`. `O(T²)`.
    pub fn sae_product_form(
        deltas: &DeltaSeries,
        schedule: &LambdaSchedule,
    ) -> Result<AdvantageSeries> {
        check_aligned(deltas, schedule)?;
        let n = deltas.len();
        let out = (0..n)
            .map(|t| {
                let mut coeff = 1.0;
                let mut acc = 0.0;
                for l in 0..n - t {
                    acc += coeff * deltas[t + l];
                    coeff *= schedule[t + l];
                }
                acc
            })
            .collect();
        Ok(AdvantageSeries::new(out))
    }
}

/// Group membership needed by the value-free group-relative estimator.
#[derive(Debug, Clone, Copy)]
pub struct GroupContext<'a> {
    /// Terminal rewards of every rollout in the group, including this one.
    pub rewards: &'a [f64],
    /// Position of this rollout within `rewards`.
    pub index: usize,
}

/// Run the estimator described by `spec` on one trajectory.
///
/// Value-based estimators need `values`; GRPO needs `group` and ignores values.
pub fn estimate(
    traj: &Trajectory,
    values: Option<&ValueSeries>,
    spec: &EstimatorSpec,
    group: Option<GroupContext<'_>>,
) -> Result<AdvantageSeries> {
    spec.validate()?;
    if spec.kind == EstimatorKind::Grpo {
        let group = group.ok_or_else(|| Error::invalid("GRPO requires group context"))?;
        let advantages = grpo_advantages(group.rewards, GRPO_EPSILON)?;
        let scalar = *advantages.get(group.index).ok_or_else(|| {
            Error::invalid(format!(
                "group index {} out of range for a group of {}",
                group.index,
                group.rewards.len()
            ))
        })?;
        return Ok(AdvantageSeries::new(vec![scalar; traj.len()]));
    }

    let values = values.ok_or_else(|| {
        Error::invalid(format!("estimator {} requires values", spec.kind.label()))
    })?;
    let deltas = compute_deltas(traj, values)?;
    match spec.kind {
        EstimatorKind::Gae => gae(&deltas, spec.lambda),
        EstimatorKind::Mc => Ok(mc_advantage(&deltas)),
        EstimatorKind::AdaptiveLambda => {
            let lambda = adaptive_lambda(traj.len(), spec.adaptive_coeff)?.lambda;
            gae(&deltas, lambda)
        }
        EstimatorKind::Sae => {
            let seg = spec
                .segmentation
                .as_ref()
                .ok_or_else(|| Error::invalid("SAE estimator requires a segmentation config"))?;
            let boundaries = seg.segment(traj)?;
            let schedule = lambda_schedule(&boundaries, spec.lambda, traj.len())?;
            sae_recursive(&deltas, &schedule)
        }
        EstimatorKind::Grpo => unreachable!(),
    }
}
