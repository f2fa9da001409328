//! Desk-scale PPO over tabular junction policies.
//!
//! Each update collects a batch with the current policy, estimates advantages
//! with the configured estimator using the critic's current values, takes
//! `epochs_per_batch` gradient-ascent steps on the clipped surrogate, then
//! regresses the critic toward the observed terminal rewards. There is no KL
//! or entropy term.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{exact_values, rollout, JunctionEnv, Policy, Rollout, StateId};
use crate::rng;
use crate::sae::{estimate, GroupContext};
use crate::traj::{AdvantageSeries, EstimatorSpec, ValueSeries};
use crate::{Error, Result};

/// Per-token PPO objective `min(r·A, clip(r, 1-ε, 1+ε)·A)`.
pub fn ppo_surrogate(ratio: f64, advantage: f64, clip_epsilon: f64) -> Result<f64> {
    if !(ratio > 0.0) {
        return Err(Error::invalid(format!(
            "importance ratio must be positive, got {ratio}"
        )));
    }
    let clipped = ratio.clamp(1.0 - clip_epsilon, 1.0 + clip_epsilon);
    Ok((ratio * advantage).min(clipped * advantage))
}

/// Whether the clipped branch is strictly smaller, i.e. the token carries no gradient.
fn clip_binds(ratio: f64, advantage: f64, clip_epsilon: f64) -> bool {
    let clipped = ratio.clamp(1.0 - clip_epsilon, 1.0 + clip_epsilon);
    clipped * advantage < ratio * advantage
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PpoConfig {
    pub clip_epsilon: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub rollouts_per_update: usize,
    /// Rollouts sharing one group for group-relative normalization.
    pub group_size: usize,
    pub epochs_per_batch: usize,
    /// Critic-only updates run before the first policy update.
    pub value_warmup_updates: usize,
    pub estimator: EstimatorSpec,
    pub seed: u64,
    pub max_updates: usize,
    /// Critic capacity: positions per value cell (1 = exact tabular).
    pub value_bucket: usize,
    /// Whether the critic sees the mistake flag.
    pub value_mistake_flag: bool,
    /// Exact success probability at which training stops early; 0 disables.
    pub stop_at_success: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            clip_epsilon: 0.2,
            actor_lr: 2.0,
            critic_lr: 0.5,
            rollouts_per_update: 64,
            group_size: 8,
            epochs_per_batch: 1,
            value_warmup_updates: 10,
            estimator: EstimatorSpec::gae(1.0),
            seed: 0,
            max_updates: 500,
            value_bucket: 8,
            value_mistake_flag: true,
            stop_at_success: 0.0,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.clip_epsilon > 0.0 && self.clip_epsilon < 1.0) {
            return Err(Error::invalid(format!(
                "clip_epsilon must lie in (0, 1), got {}",
                self.clip_epsilon
            )));
        }
        if !(self.actor_lr > 0.0 && self.critic_lr > 0.0) {
            return Err(Error::invalid("learning rates must be positive"));
        }
        if self.critic_lr > 1.0 {
            return Err(Error::invalid(
                "critic_lr above 1 overshoots the regression target",
            ));
        }
        if self.group_size < 2 {
            return Err(Error::invalid("group_size must be at least 2"));
        }
        if self.rollouts_per_update == 0
            || !self.rollouts_per_update.is_multiple_of(self.group_size)
        {
            return Err(Error::invalid(format!(
                "rollouts_per_update ({}) must be a positive multiple of group_size ({})",
                self.rollouts_per_update, self.group_size
            )));
        }
        if self.epochs_per_batch == 0 || self.max_updates == 0 {
            return Err(Error::invalid(
                "epochs_per_batch and max_updates must be positive",
            ));
        }
        if self.value_bucket == 0 {
            return Err(Error::invalid("value_bucket must be at least 1"));
        }
        self.estimator.validate()
    }
}

/// Tabular critic over coarsened states `(position / bucket, mistake flag)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueHead {
    bucket: usize,
    use_flag: bool,
    table: Vec<f64>,
}

impl ValueHead {
    pub fn new(horizon: usize, bucket: usize, use_flag: bool) -> Result<Self> {
        if bucket == 0 {
            return Err(Error::invalid("value bucket width must be at least 1"));
        }
        let cells = horizon.div_ceil(bucket) * 2;
        Ok(Self {
            bucket,
            use_flag,
            table: vec![0.0; cells.max(2)],
        })
    }

    fn cell(&self, state: StateId) -> usize {
        let flag = usize::from(self.use_flag && state.mistaken);
        (state.position / self.bucket) * 2 + flag
    }

    pub fn predict(&self, state: StateId) -> f64 {
        self.table[self.cell(state)]
    }

    /// Predictions for the non-terminal states of a rollout, with `V(s_T)` pinned to its reward.
    pub fn values_for(&self, rollout: &Rollout) -> Result<ValueSeries> {
        let horizon = rollout.trajectory.len();
        let preds = rollout.states[..horizon]
            .iter()
            .map(|&s| self.predict(s))
            .collect();
        ValueSeries::pinned(preds, rollout.reward())
    }

    /// One regression step toward the empirical terminal return of every
    /// non-terminal state visit: each cell moves `lr` of the way to its mean target.
    pub fn regress(&mut self, rollouts: &[Rollout], lr: f64) {
        let mut sums = vec![0.0; self.table.len()];
        let mut counts = vec![0usize; self.table.len()];
        for r in rollouts {
            let target = r.reward();
            for &s in &r.states[..r.trajectory.len()] {
                let c = self.cell(s);
                sums[c] += target;
                counts[c] += 1;
            }
        }
        for (c, v) in self.table.iter_mut().enumerate() {
            if counts[c] > 0 {
                let mean = sums[c] / counts[c] as f64;
                *v += lr * (mean - *v);
            }
        }
    }

    /// Add a draw from `noise` to every cell.
    pub fn perturb(&mut self, mut noise: impl FnMut() -> f64) {
        for v in &mut self.table {
            *v += noise();
        }
    }

    pub fn is_finite(&self) -> bool {
        self.table.iter().all(|v| v.is_finite())
    }
}

/// Rollouts of one collection phase, in groups of consecutive rollouts.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub rollouts: Vec<Rollout>,
    pub group_size: usize,
}

impl Batch {
    pub fn group_of(&self, i: usize) -> usize {
        i / self.group_size
    }

    pub fn num_groups(&self) -> usize {
        self.rollouts.len().div_ceil(self.group_size)
    }

    pub fn groups(&self) -> impl Iterator<Item = &[Rollout]> {
        self.rollouts.chunks(self.group_size)
    }

    pub fn success_rate(&self) -> f64 {
        self.rollouts.iter().map(Rollout::reward).sum::<f64>() / self.rollouts.len() as f64
    }
}

pub(crate) fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if threads <= 1 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// `n` independent rollouts; rollout `i` draws from its own seed derived from `seed`.
pub fn collect_batch(
    env: &JunctionEnv,
    policy: &Policy,
    n: usize,
    group_size: usize,
    seed: u64,
    threads: usize,
) -> Result<Batch> {
    if n == 0 {
        return Err(Error::invalid("batch needs at least one rollout"));
    }
    if group_size == 0 || !n.is_multiple_of(group_size) {
        return Err(Error::invalid(format!(
            "batch size {n} must be a multiple of group size {group_size}"
        )));
    }
    let one = |i: usize| {
        rollout(
            env,
            policy,
            &mut rng::child(seed, rng::stream::ROLLOUT, i as u64),
        )
    };
    let rollouts = if threads <= 1 {
        (0..n).map(one).collect::<Result<Vec<_>>>()?
    } else {
        with_threads(threads, || {
            (0..n).into_par_iter().map(one).collect::<Result<Vec<_>>>()
        })??
    };
    Ok(Batch {
        rollouts,
        group_size,
    })
}

/// Advantages for every rollout of a batch with the given critic.
pub fn batch_advantages(
    batch: &Batch,
    critic: &ValueHead,
    spec: &EstimatorSpec,
) -> Result<Vec<AdvantageSeries>> {
    let rewards: Vec<f64> = batch.rollouts.iter().map(Rollout::reward).collect();
    batch
        .rollouts
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let g = batch.group_of(i);
            let start = g * batch.group_size;
            let end = (start + batch.group_size).min(rewards.len());
            let group = GroupContext {
                rewards: &rewards[start..end],
                index: i - start,
            };
            let values = critic.values_for(r)?;
            estimate(&r.trajectory, Some(&values), spec, Some(group))
        })
        .collect()
}

/// Batch surrogate: per-rollout sum over tokens, averaged over rollouts.
///
/// The behavior probabilities recorded at generation time are the `π_old`
/// of the importance ratio.
pub fn batch_surrogate(
    env: &JunctionEnv,
    policy: &Policy,
    batch: &Batch,
    advantages: &[AdvantageSeries],
    clip_epsilon: f64,
) -> Result<f64> {
    let mut total = 0.0;
    for (r, adv) in batch.rollouts.iter().zip(advantages) {
        let probs = r.trajectory.gen_probs();
        for t in 0..r.trajectory.len() {
            let ratio = match env.junction_at(t) {
                Some(j) => policy.prob(j, r.trajectory.tokens()[t] as usize) / probs[t],
                None => 1.0,
            };
            total += ppo_surrogate(ratio, adv[t], clip_epsilon)?;
        }
    }
    Ok(total / batch.rollouts.len() as f64)
}

/// Analytic gradient of [`batch_surrogate`] with respect to the policy logits,
/// plus the fraction of junction tokens whose clipped branch binds.
pub fn surrogate_gradient(
    env: &JunctionEnv,
    policy: &Policy,
    batch: &Batch,
    advantages: &[AdvantageSeries],
    clip_epsilon: f64,
) -> (Vec<Vec<f64>>, f64) {
    let probs: Vec<Vec<f64>> = (0..policy.num_junctions())
        .map(|j| policy.probs(j))
        .collect();
    let mut grad: Vec<Vec<f64>> = probs.iter().map(|p| vec![0.0; p.len()]).collect();
    let mut clipped = 0usize;
    let mut tokens = 0usize;
    let scale = 1.0 / batch.rollouts.len() as f64;
    for (r, adv) in batch.rollouts.iter().zip(advantages) {
        for &(j, a) in &r.choices {
            let t = env.junction_step(j);
            tokens += 1;
            let ratio = probs[j][a] / r.trajectory.gen_probs()[t];
            if clip_binds(ratio, adv[t], clip_epsilon) {
                clipped += 1;
                continue;
            }
            // d(ratio)/d(logit_b) = ratio · (1[b = a] - π_b)
            let w = scale * adv[t] * ratio;
            for (b, g) in grad[j].iter_mut().enumerate() {
                let indicator = if b == a { 1.0 } else { 0.0 };
                *g += w * (indicator - probs[j][b]);
            }
        }
    }
    let frac = if tokens == 0 {
        0.0
    } else {
        clipped as f64 / tokens as f64
    };
    (grad, frac)
}

/// One row of training metrics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRow {
    pub update: usize,
    /// Mean terminal reward of the collected batch.
    pub success_rate: f64,
    /// Exact success probability of the policy that collected the batch.
    pub exact_success: f64,
    pub mean_advantage: f64,
    /// Mean squared critic error against exact values over visited states.
    pub value_mse: f64,
    pub clip_fraction: f64,
    pub entropy: f64,
    #[serde(skip)]
    pub wall_clock_s: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainMetrics {
    pub rows: Vec<MetricsRow>,
}

impl TrainMetrics {
    /// First update whose collecting policy had exact success `>= threshold`.
    pub fn steps_to_threshold(&self, threshold: f64) -> Option<usize> {
        self.rows
            .iter()
            .find(|r| r.exact_success >= threshold)
            .map(|r| r.update)
    }

    pub fn final_success(&self) -> Option<f64> {
        self.rows.last().map(|r| r.exact_success)
    }

    /// Write the metrics CSV; the wall-clock column is optional since it breaks byte-level reproducibility.
    pub fn write_csv<W: std::io::Write>(&self, out: W, wall_clock: bool) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![
            "update",
            "success_rate",
            "exact_success",
            "mean_advantage",
            "value_mse",
            "clip_fraction",
            "entropy",
        ];
        if wall_clock {
            header.push("wall_clock_s");
        }
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![
                r.update.to_string(),
                r.success_rate.to_string(),
                r.exact_success.to_string(),
                r.mean_advantage.to_string(),
                r.value_mse.to_string(),
                r.clip_fraction.to_string(),
                r.entropy.to_string(),
            ];
            if wall_clock {
                rec.push(format!("{:.6}", r.wall_clock_s));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Stateful PPO loop; [`train`] drives it to completion.
pub struct Trainer<'a> {
    env: &'a JunctionEnv,
    config: PpoConfig,
    threads: usize,
    policy: Policy,
    critic: ValueHead,
    update: usize,
    started: Instant,
}

impl<'a> Trainer<'a> {
    pub fn new(env: &'a JunctionEnv, config: PpoConfig, threads: usize) -> Result<Self> {
        config.validate()?;
        let critic = ValueHead::new(
            env.horizon(),
            config.value_bucket,
            config.value_mistake_flag,
        )?;
        Ok(Self {
            env,
            policy: Policy::uniform(env),
            critic,
            config,
            threads,
            update: 0,
            started: Instant::now(),
        })
    }

    pub fn policy(&self) -> &Policy {
        &self.policy
    }

    pub fn critic(&self) -> &ValueHead {
        &self.critic
    }

    /// Critic-only regression with the policy frozen.
    pub fn warmup(&mut self) -> Result<()> {
        for w in 0..self.config.value_warmup_updates {
            let seed = rng::derive_seed(self.config.seed, rng::stream::WARMUP, w as u64);
            let batch = self.collect(seed)?;
            self.critic.regress(&batch.rollouts, self.config.critic_lr);
            if !self.critic.is_finite() {
                return Err(Error::Diverged {
                    update: 0,
                    detail: format!("critic became non-finite during warm-up step {w}"),
                });
            }
        }
        Ok(())
    }

    fn collect(&self, seed: u64) -> Result<Batch> {
        collect_batch(
            self.env,
            &self.policy,
            self.config.rollouts_per_update,
            self.config.group_size,
            seed,
            self.threads,
        )
    }

    /// Batch the next update would train on.
    pub fn next_batch(&self) -> Result<Batch> {
        let seed = rng::derive_seed(self.config.seed, rng::stream::ROLLOUT, self.update as u64);
        self.collect(seed)
    }

    /// Collect, estimate, update actor and critic; returns the metrics row.
    pub fn step(&mut self) -> Result<MetricsRow> {
        let batch = self.next_batch()?;
        let exact = exact_values(self.env, &self.policy)?;
        let exact_success = exact.value(StateId::START);
        let entropy = self.policy.mean_entropy();

        let mut sq = 0.0;
        let mut visits = 0usize;
        for r in &batch.rollouts {
            for &s in &r.states[..r.trajectory.len()] {
                sq += (self.critic.predict(s) - exact.value(s)).powi(2);
                visits += 1;
            }
        }

        let advantages = batch_advantages(&batch, &self.critic, &self.config.estimator)?;
        let (adv_sum, adv_n) = advantages.iter().fold((0.0, 0usize), |(s, n), a| {
            (s + a.iter().sum::<f64>(), n + a.len())
        });

        let mut clip_fraction = 0.0;
        for _ in 0..self.config.epochs_per_batch {
            let (grad, frac) = surrogate_gradient(
                self.env,
                &self.policy,
                &batch,
                &advantages,
                self.config.clip_epsilon,
            );
            clip_fraction = frac;
            for (row, g) in self.policy.logits_mut().iter_mut().zip(&grad) {
                for (l, d) in row.iter_mut().zip(g) {
                    *l += self.config.actor_lr * d;
                }
            }
        }
        self.critic.regress(&batch.rollouts, self.config.critic_lr);

        if self
            .policy
            .logits()
            .iter()
            .flatten()
            .any(|l| !l.is_finite())
        {
            return Err(Error::Diverged {
                update: self.update,
                detail: "non-finite policy logit".into(),
            });
        }
        if !self.critic.is_finite() {
            return Err(Error::Diverged {
                update: self.update,
                detail: "non-finite critic value".into(),
            });
        }

        let row = MetricsRow {
            update: self.update,
            success_rate: batch.success_rate(),
            exact_success,
            mean_advantage: adv_sum / adv_n as f64,
            value_mse: sq / visits as f64,
            clip_fraction,
            entropy,
            wall_clock_s: self.started.elapsed().as_secs_f64(),
        };
        self.update += 1;
        Ok(row)
    }
}

/// Warm up the critic, then run PPO updates until `max_updates` or early stop.
pub fn train(env: &JunctionEnv, config: &PpoConfig, threads: usize) -> Result<TrainMetrics> {
    let mut trainer = Trainer::new(env, config.clone(), threads)?;
    trainer.warmup()?;
    let mut metrics = TrainMetrics::default();
    for _ in 0..config.max_updates {
        let row = trainer.step()?;
        let done = config.stop_at_success > 0.0 && row.exact_success >= config.stop_at_success;
        metrics.rows.push(row);
        if done {
            break;
        }
    }
    Ok(metrics)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segmentation::SegmentationConfig;

    #[test]
    fn surrogate_examples() {
        assert!((ppo_surrogate(1.0, 0.7, 0.2).unwrap() - 0.7).abs() < 1e-15);
        assert!((ppo_surrogate(2.0, 1.0, 0.2).unwrap() - 1.2).abs() < 1e-15);
        // exhaustive branches: r·A = -0.5, clip(0.5)·A = 0.8·(-1) = -0.8; min is -0.8
        let branches = [-0.5, -0.8];
        let oracle = branches.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(oracle, -0.8);
        assert!((ppo_surrogate(0.5, -1.0, 0.2).unwrap() - oracle).abs() < 1e-15);
        assert!(ppo_surrogate(0.0, 1.0, 0.2).is_err());
        assert!(ppo_surrogate(-1.0, 1.0, 0.2).is_err());
    }

    #[test]
    fn surrogate_is_pessimistic() {
        let mut rng = rng::seeded(3);
        use rand::Rng as _;
        for _ in 0..10_000 {
            let r: f64 = rng.random_range(1e-3..5.0);
            let a: f64 = rng.random_range(-3.0..3.0);
            let e: f64 = rng.random_range(0.01..0.99);
            assert!(ppo_surrogate(r, a, e).unwrap() <= r * a);
        }
    }

    #[test]
    fn config_validation() {
        assert!(PpoConfig::default().validate().is_ok());
        let bad = |f: fn(&mut PpoConfig)| {
            let mut c = PpoConfig::default();
            f(&mut c);
            c.validate().is_err()
        };
        assert!(bad(|c| c.clip_epsilon = 0.0));
        assert!(bad(|c| c.clip_epsilon = 1.0));
        assert!(bad(|c| c.actor_lr = 0.0));
        assert!(bad(|c| c.group_size = 1));
        assert!(bad(|c| c.rollouts_per_update = 12));
        assert!(bad(|c| c.value_bucket = 0));
    }

    #[test]
    fn batch_grouping() {
        let env = JunctionEnv::from_seed(2, 1, 2, 0).unwrap();
        let p = Policy::uniform(&env);
        let b = collect_batch(&env, &p, 8, 8, 1, 1).unwrap();
        assert_eq!(b.num_groups(), 1);
        let b = collect_batch(&env, &p, 16, 8, 1, 1).unwrap();
        assert_eq!(b.num_groups(), 2);
        assert!((0..8).all(|i| b.group_of(i) == 0));
        assert!((8..16).all(|i| b.group_of(i) == 1));
        assert_eq!(b, collect_batch(&env, &p, 16, 8, 1, 1).unwrap());
        assert_eq!(b, collect_batch(&env, &p, 16, 8, 1, 4).unwrap());
        // the first group is the same rollouts whatever the batch size
        let small = collect_batch(&env, &p, 8, 8, 1, 1).unwrap();
        assert_eq!(&b.rollouts[..8], &small.rollouts[..]);
        assert!(collect_batch(&env, &p, 0, 8, 1, 1).is_err());
        assert!(collect_batch(&env, &p, 10, 8, 1, 1).is_err());
    }

    #[test]
    fn value_head_regression() {
        let env = JunctionEnv::from_seed(1, 2, 2, 0).unwrap();
        let p = Policy::uniform(&env);
        let b = collect_batch(&env, &p, 32, 8, 2, 1).unwrap();
        let mut exact = ValueHead::new(env.horizon(), 1, true).unwrap();
        exact.regress(&b.rollouts, 1.0);
        // a mistaken state always returns 0
        for r in &b.rollouts {
            for &s in &r.states[..r.trajectory.len()] {
                if s.mistaken {
                    assert_eq!(exact.predict(s), 0.0);
                }
            }
            let v = exact.values_for(r).unwrap();
            assert_eq!(v[r.trajectory.len()], r.reward());
        }
        assert!(ValueHead::new(5, 0, true).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let env = JunctionEnv::from_seed(3, 2, 3, 4).unwrap();
        let behavior = Policy::from_logits(vec![vec![0.1, -0.3, 0.2]; 3]).unwrap();
        let batch = collect_batch(&env, &behavior, 16, 8, 11, 1).unwrap();
        let critic = ValueHead::new(env.horizon(), 2, true).unwrap();
        let adv = batch_advantages(&batch, &critic, &EstimatorSpec::gae(0.9)).unwrap();
        // evaluate away from the behavior policy so ratios differ from 1
        let current = Policy::from_logits(vec![
            vec![0.15, -0.32, 0.21],
            vec![0.05, -0.25, 0.22],
            vec![0.12, -0.31, 0.18],
        ])
        .unwrap();
        let (grad, _) = surrogate_gradient(&env, &current, &batch, &adv, 0.2);
        let h = 1e-6;
        for j in 0..3 {
            for b in 0..3 {
                let mut plus = current.clone();
                plus.logits_mut()[j][b] += h;
                let mut minus = current.clone();
                minus.logits_mut()[j][b] -= h;
                let fd = (batch_surrogate(&env, &plus, &batch, &adv, 0.2).unwrap()
                    - batch_surrogate(&env, &minus, &batch, &adv, 0.2).unwrap())
                    / (2.0 * h);
                let g = grad[j][b];
                let rel = (g - fd).abs() / g.abs().max(fd.abs()).max(1e-12);
                assert!(
                    rel <= 1e-4 || (g - fd).abs() < 1e-10,
                    "j={j} b={b} g={g} fd={fd}"
                );
            }
        }
    }

    #[test]
    fn grpo_identical_rewards_leave_policy_unchanged() {
        let env = JunctionEnv::from_seed(2, 1, 2, 0).unwrap();
        let cfg = PpoConfig {
            estimator: EstimatorSpec::grpo(),
            rollouts_per_update: 8,
            value_warmup_updates: 0,
            ..PpoConfig::default()
        };
        let mut trainer = Trainer::new(&env, cfg, 1).unwrap();
        // the always-correct policy makes every reward 1
        trainer.policy = Policy::always_correct(&env);
        let before = trainer.policy.clone();
        let row = trainer.step().unwrap();
        assert_eq!(row.success_rate, 1.0);
        assert_eq!(row.mean_advantage, 0.0);
        assert_eq!(trainer.policy, before);
    }

    #[test]
    fn warmup_leaves_policy_untouched() {
        let env = JunctionEnv::from_seed(2, 3, 3, 0).unwrap();
        let cfg = PpoConfig {
            value_warmup_updates: 5,
            ..PpoConfig::default()
        };
        let mut trainer = Trainer::new(&env, cfg, 1).unwrap();
        let before = trainer.policy().clone();
        let critic_before = trainer.critic().clone();
        trainer.warmup().unwrap();
        assert_eq!(trainer.policy(), &before);
        assert_ne!(trainer.critic(), &critic_before);
    }

    #[test]
    fn estimator_swap_keeps_first_batch() {
        let env = JunctionEnv::from_seed(3, 4, 4, 1).unwrap();
        let specs = [
            EstimatorSpec::gae(1.0),
            EstimatorSpec::sae(0.9, SegmentationConfig::probability(0.5)),
            EstimatorSpec::grpo(),
        ];
        let batches: Vec<Batch> = specs
            .iter()
            .map(|spec| {
                let cfg = PpoConfig {
                    estimator: spec.clone(),
                    seed: 5,
                    ..PpoConfig::default()
                };
                let mut t = Trainer::new(&env, cfg, 1).unwrap();
                t.warmup().unwrap();
                t.next_batch().unwrap()
            })
            .collect();
        assert!(batches.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn single_junction_is_learned() {
        let env = JunctionEnv::from_seed(1, 0, 2, 3).unwrap();
        for spec in [
            EstimatorSpec::gae(1.0),
            EstimatorSpec::gae(0.5),
            EstimatorSpec::sae(0.95, SegmentationConfig::probability(0.5)),
            EstimatorSpec::adaptive(0.2),
            EstimatorSpec::grpo(),
        ] {
            let cfg = PpoConfig {
                estimator: spec.clone(),
                max_updates: 200,
                value_bucket: 1,
                ..PpoConfig::default()
            };
            let m = train(&env, &cfg, 1).unwrap();
            let last = m.rows.last().unwrap();
            assert!(
                last.exact_success >= 0.95,
                "{}: {}",
                spec.label(),
                last.exact_success
            );
            assert!(m.rows.iter().all(|r| (0.0..=1.0).contains(&r.success_rate)));
            assert!(m.rows.iter().enumerate().all(|(i, r)| r.update == i));
        }
    }

    #[test]
    fn training_is_deterministic() {
        let env = JunctionEnv::from_seed(2, 2, 3, 0).unwrap();
        let cfg = PpoConfig {
            max_updates: 20,
            ..PpoConfig::default()
        };
        let strip = |m: TrainMetrics| {
            m.rows
                .into_iter()
                .map(|mut r| {
                    r.wall_clock_s = 0.0;
                    r
                })
                .collect::<Vec<_>>()
        };
        let a = strip(train(&env, &cfg, 1).unwrap());
        let b = strip(train(&env, &cfg, 1).unwrap());
        let c = strip(train(&env, &cfg, 3).unwrap());
        assert_eq!(a, b);
        assert_eq!(a, c);
    }
}
