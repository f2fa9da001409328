//! Corridor-and-junction token MDP.
//!
//! An episode has a fixed length `T = J·(C + 1) + C`. Each of the `J` junctions
//! is preceded by a corridor of `C` forced tokens, and a final corridor of `C`
//! tokens follows the last junction:
//!
//! ```text
//! [C corridor] J_0 [C corridor] J_1 ... J_{J-1} [C corridor]
//! ```
//!
//! At a junction the policy picks one of `K` choice tokens (ids `0..K`); on a
//! corridor the single legal token for that position (id `K + t`) is emitted
//! with probability 1. The terminal reward is 1 iff every junction choice
//! was correct. A state is `(u, mistaken)`: tokens emitted so far and whether
//! a wrong choice has been made.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::rng::{self, Rng};
use crate::traj::{Trajectory, ValueSeries};
use crate::{Error, Result};

/// Structured description of a junction environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    pub junctions: usize,
    pub corridor_len: usize,
    pub choices: usize,
    /// Seed from which the correct choice at each junction is drawn.
    pub correct_seed: u64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            junctions: 6,
            corridor_len: 20,
            choices: 4,
            correct_seed: 0,
        }
    }
}

impl EnvConfig {
    pub fn build(&self) -> Result<JunctionEnv> {
        JunctionEnv::from_seed(
            self.junctions,
            self.corridor_len,
            self.choices,
            self.correct_seed,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateId {
    /// Tokens emitted so far, `0..=T`.
    pub position: usize,
    pub mistaken: bool,
}

impl StateId {
    pub const START: StateId = StateId {
        position: 0,
        mistaken: false,
    };
}

#[derive(Debug, Clone, PartialEq)]
pub struct JunctionEnv {
    corridor_len: usize,
    choices: usize,
    correct: Vec<usize>,
}

impl JunctionEnv {
    pub fn new(corridor_len: usize, choices: usize, correct: Vec<usize>) -> Result<Self> {
        if correct.is_empty() {
            return Err(Error::invalid("environment needs at least one junction"));
        }
        if choices < 2 {
            return Err(Error::invalid(format!(
                "junctions need at least 2 choices, got {choices}"
            )));
        }
        if let Some(&c) = correct.iter().find(|&&c| c >= choices) {
            return Err(Error::invalid(format!(
                "correct choice {c} out of range 0..{choices}"
            )));
        }
        Ok(Self {
            corridor_len,
            choices,
            correct,
        })
    }

    /// Draw the correct choices deterministically from `seed`.
    pub fn from_seed(
        junctions: usize,
        corridor_len: usize,
        choices: usize,
        seed: u64,
    ) -> Result<Self> {
        if choices < 2 {
            return Err(Error::invalid(format!(
                "junctions need at least 2 choices, got {choices}"
            )));
        }
        let mut rng = rng::child(seed, rng::stream::ENV, 0);
        let correct = (0..junctions)
            .map(|_| rng.random_range(0..choices))
            .collect();
        Self::new(corridor_len, choices, correct)
    }

    pub fn num_junctions(&self) -> usize {
        self.correct.len()
    }

    pub fn corridor_len(&self) -> usize {
        self.corridor_len
    }

    pub fn choices(&self) -> usize {
        self.choices
    }

    pub fn correct_choices(&self) -> &[usize] {
        &self.correct
    }

    /// Episode length `J·(C + 1) + C`.
    pub fn horizon(&self) -> usize {
        self.num_junctions() * (self.corridor_len + 1) + self.corridor_len
    }

    /// Action step at which junction `j` is decided.
    pub fn junction_step(&self, j: usize) -> usize {
        j * (self.corridor_len + 1) + self.corridor_len
    }

    /// Junction decided at action step `t`, if any.
    pub fn junction_at(&self, t: usize) -> Option<usize> {
        let block = self.corridor_len + 1;
        let j = t / block;
        (t % block == self.corridor_len && j < self.num_junctions()).then_some(j)
    }

    /// Token id emitted on a corridor at step `t`.
    pub fn corridor_token(&self, t: usize) -> u32 {
        (self.choices + t) as u32
    }

    /// Number of junctions decided at action steps `>= position`.
    pub fn junctions_from(&self, position: usize) -> usize {
        (0..self.num_junctions())
            .filter(|&j| self.junction_step(j) >= position)
            .count()
    }
}

/// Tabular softmax policy over junction choices.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    logits: Vec<Vec<f64>>,
}

impl Policy {
    pub fn uniform(env: &JunctionEnv) -> Self {
        Self {
            logits: vec![vec![0.0; env.choices()]; env.num_junctions()],
        }
    }

    pub fn from_logits(logits: Vec<Vec<f64>>) -> Result<Self> {
        if logits.is_empty() || logits.iter().any(|row| row.len() < 2) {
            return Err(Error::invalid(
                "policy needs at least one junction with >= 2 logits",
            ));
        }
        if logits.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::invalid("policy logits must be finite"));
        }
        Ok(Self { logits })
    }

    /// Probability `correct_prob` on the correct choice, the rest spread evenly.
    pub fn with_correct_prob(env: &JunctionEnv, correct_prob: f64) -> Result<Self> {
        if !(correct_prob > 0.0 && correct_prob < 1.0) {
            return Err(Error::invalid(format!(
                "correct choice probability must lie in (0, 1), got {correct_prob}"
            )));
        }
        let k = env.choices();
        let other = (1.0 - correct_prob) / (k - 1) as f64;
        let logits = env
            .correct_choices()
            .iter()
            .map(|&c| {
                (0..k)
                    .map(|a| {
                        if a == c {
                            correct_prob.ln()
                        } else {
                            other.ln()
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(Self { logits })
    }

    /// Always picks the correct choice (limit of a deterministic policy).
    pub fn always_correct(env: &JunctionEnv) -> Self {
        let k = env.choices();
        let logits = env
            .correct_choices()
            .iter()
            .map(|&c| (0..k).map(|a| if a == c { 0.0 } else { -1e3 }).collect())
            .collect();
        Self { logits }
    }

    pub fn logits(&self) -> &[Vec<f64>] {
        &self.logits
    }

    pub fn logits_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.logits
    }

    pub fn num_junctions(&self) -> usize {
        self.logits.len()
    }

    /// Softmax over the logits of junction `j`.
    pub fn probs(&self, j: usize) -> Vec<f64> {
        softmax(&self.logits[j])
    }

    pub fn prob(&self, j: usize, choice: usize) -> f64 {
        self.probs(j)[choice]
    }

    /// Mean entropy (nats) of the junction distributions.
    pub fn mean_entropy(&self) -> f64 {
        let total: f64 = (0..self.num_junctions())
            .map(|j| {
                self.probs(j)
                    .iter()
                    .filter(|&&p| p > 0.0)
                    .map(|p| -p * p.ln())
                    .sum::<f64>()
            })
            .sum();
        total / self.num_junctions() as f64
    }

    /// Probability that a full episode is all-correct.
    pub fn success_prob(&self, env: &JunctionEnv) -> f64 {
        env.correct_choices()
            .iter()
            .enumerate()
            .map(|(j, &c)| self.prob(j, c))
            .product()
    }

    fn check_matches(&self, env: &JunctionEnv) -> Result<()> {
        if self.num_junctions() != env.num_junctions()
            || self.logits.iter().any(|row| row.len() != env.choices())
        {
            return Err(Error::invalid(format!(
                "policy shape does not match the environment ({} junctions x {} choices)",
                env.num_junctions(),
                env.choices()
            )));
        }
        Ok(())
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

fn sample_categorical(probs: &[f64], rng: &mut Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// One episode plus the environment state visited before each step.
#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    pub trajectory: Trajectory,
    /// `T + 1` states; `states[u]` is the state after `u` tokens.
    pub states: Vec<StateId>,
    /// `(junction, chosen option)` in the order the junctions were visited.
    pub choices: Vec<(usize, usize)>,
}

impl Rollout {
    pub fn reward(&self) -> f64 {
        self.trajectory.terminal_reward()
    }
}

/// Sample one full episode from the start state.
pub fn rollout(env: &JunctionEnv, policy: &Policy, rng: &mut Rng) -> Result<Rollout> {
    policy.check_matches(env)?;
    let horizon = env.horizon();
    let mut tokens = Vec::with_capacity(horizon);
    let mut gen_probs = Vec::with_capacity(horizon);
    let mut states = Vec::with_capacity(horizon + 1);
    let mut choices = Vec::with_capacity(env.num_junctions());
    let mut state = StateId::START;
    states.push(state);
    for t in 0..horizon {
        match env.junction_at(t) {
            Some(j) => {
                let probs = policy.probs(j);
                let a = sample_categorical(&probs, rng);
                tokens.push(a as u32);
                gen_probs.push(probs[a]);
                choices.push((j, a));
                state.mistaken |= a != env.correct_choices()[j];
            }
            None => {
                tokens.push(env.corridor_token(t));
                gen_probs.push(1.0);
            }
        }
        state.position = t + 1;
        states.push(state);
    }
    let reward = if state.mistaken { 0.0 } else { 1.0 };
    Ok(Rollout {
        trajectory: Trajectory::new(tokens, gen_probs, reward)?,
        states,
        choices,
    })
}

/// Rollout seeded from `seed`.
pub fn rollout_seeded(env: &JunctionEnv, policy: &Policy, seed: u64) -> Result<Rollout> {
    rollout(env, policy, &mut rng::seeded(seed))
}

/// Exact state values under a fixed policy.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactValues {
    /// `clean[u]` is `V*((u, not mistaken))`; mistaken states are worth 0.
    clean: Vec<f64>,
}

impl ExactValues {
    pub fn value(&self, state: StateId) -> f64 {
        if state.mistaken {
            0.0
        } else {
            self.clean[state.position]
        }
    }

    /// Values along a rollout; the terminal entry equals its reward.
    pub fn along(&self, rollout: &Rollout) -> Result<ValueSeries> {
        let values = rollout.states.iter().map(|&s| self.value(s)).collect();
        ValueSeries::new(values, &rollout.trajectory)
    }
}

/// Backward dynamic program over positions.
///
/// A clean state's value is the product of the correct-choice probabilities of
/// the junctions not yet decided; corridor positions inherit the value of the
/// next decision.
pub fn exact_values(env: &JunctionEnv, policy: &Policy) -> Result<ExactValues> {
    policy.check_matches(env)?;
    let horizon = env.horizon();
    let mut clean = vec![0.0; horizon + 1];
    clean[horizon] = 1.0;
    for t in (0..horizon).rev() {
        clean[t] = match env.junction_at(t) {
            Some(j) => policy.prob(j, env.correct_choices()[j]) * clean[t + 1],
            None => clean[t + 1],
        };
    }
    Ok(ExactValues { clean })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    /// Standard error of the mean, `sd / sqrt(n)` with the sample standard deviation.
    pub std_err: f64,
    pub n: usize,
}

/// Continue an episode from `state` to the end and return the terminal reward.
pub fn continue_from(env: &JunctionEnv, policy: &Policy, state: StateId, rng: &mut Rng) -> f64 {
    let mut mistaken = state.mistaken;
    for t in state.position..env.horizon() {
        if let Some(j) = env.junction_at(t) {
            let a = sample_categorical(&policy.probs(j), rng);
            mistaken |= a != env.correct_choices()[j];
        }
    }
    if mistaken {
        0.0
    } else {
        1.0
    }
}

/// Monte Carlo value estimate from `n_rollouts` independent continuations of `state`.
pub fn mc_value(
    env: &JunctionEnv,
    policy: &Policy,
    state: StateId,
    n_rollouts: usize,
    seed: u64,
) -> Result<McEstimate> {
    policy.check_matches(env)?;
    if n_rollouts == 0 {
        return Err(Error::invalid(
            "Monte Carlo value needs at least one rollout",
        ));
    }
    if state.position > env.horizon() {
        return Err(Error::invalid(format!(
            "state position {} beyond horizon",
            state.position
        )));
    }
    let mut rng = rng::seeded(seed);
    let successes: f64 = (0..n_rollouts)
        .map(|_| continue_from(env, policy, state, &mut rng))
        .sum();
    let n = n_rollouts as f64;
    let mean = successes / n;
    let std_err = if n_rollouts > 1 {
        let var = (successes * (1.0 - mean).powi(2) + (n - successes) * mean.powi(2)) / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok(McEstimate {
        mean,
        std_err,
        n: n_rollouts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout() {
        let env = JunctionEnv::from_seed(2, 3, 2, 0).unwrap();
        assert_eq!(env.horizon(), 11);
        assert_eq!(env.junction_step(0), 3);
        assert_eq!(env.junction_step(1), 7);
        let junction_steps: Vec<usize> =
            (0..11).filter(|&t| env.junction_at(t).is_some()).collect();
        assert_eq!(junction_steps, vec![3, 7]);
        let policy = Policy::uniform(&env);
        for seed in 0..100 {
            let r = rollout_seeded(&env, &policy, seed).unwrap();
            assert_eq!(r.trajectory.len(), 11);
            assert_eq!(r.states.len(), 12);
        }
    }

    #[test]
    fn single_junction() {
        let env = JunctionEnv::from_seed(1, 0, 2, 5).unwrap();
        let policy = Policy::uniform(&env);
        for seed in 0..20 {
            let r = rollout_seeded(&env, &policy, seed).unwrap();
            assert_eq!(r.trajectory.gen_probs(), &[0.5]);
            assert!(r.reward() == 0.0 || r.reward() == 1.0);
        }
    }

    #[test]
    fn correct_policy_always_succeeds() {
        let env = JunctionEnv::from_seed(4, 2, 3, 1).unwrap();
        let policy = Policy::always_correct(&env);
        for seed in 0..50 {
            assert_eq!(rollout_seeded(&env, &policy, seed).unwrap().reward(), 1.0);
        }
        let m = mc_value(&env, &policy, StateId::START, 17, 3).unwrap();
        assert_eq!(m.mean, 1.0);
    }

    #[test]
    fn rollouts_are_deterministic() {
        let env = JunctionEnv::from_seed(3, 4, 3, 2).unwrap();
        let policy = Policy::uniform(&env);
        assert_eq!(
            rollout_seeded(&env, &policy, 42).unwrap(),
            rollout_seeded(&env, &policy, 42).unwrap()
        );
    }

    #[test]
    fn corridor_probability_is_one() {
        let env = JunctionEnv::from_seed(3, 4, 3, 2).unwrap();
        let r = rollout_seeded(&env, &Policy::uniform(&env), 1).unwrap();
        for t in 0..env.horizon() {
            if env.junction_at(t).is_none() {
                assert_eq!(r.trajectory.gen_probs()[t], 1.0);
                assert_eq!(r.trajectory.tokens()[t], env.corridor_token(t));
            }
        }
    }

    #[test]
    fn distributions_normalized() {
        let p = Policy::from_logits(vec![vec![0.3, -2.0, 5.0], vec![100.0, 0.0, -50.0]]).unwrap();
        for j in 0..2 {
            assert!((p.probs(j).iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }

    // Exhaustive enumeration over all joint choices.
    fn enumerate_success(env: &JunctionEnv, policy: &Policy) -> f64 {
        let k = env.choices();
        let j = env.num_junctions();
        let mut total = 0.0;
        for code in 0..k.pow(j as u32) {
            let mut c = code;
            let mut prob = 1.0;
            let mut ok = true;
            for jj in 0..j {
                let a = c % k;
                c /= k;
                prob *= policy.prob(jj, a);
                ok &= a == env.correct_choices()[jj];
            }
            if ok {
                total += prob;
            }
        }
        total
    }

    #[test]
    fn exact_values_match_enumeration() {
        let env = JunctionEnv::from_seed(2, 1, 2, 0).unwrap();
        let policy = Policy::uniform(&env);
        let v = exact_values(&env, &policy).unwrap();
        assert_eq!(enumerate_success(&env, &policy), 0.25);
        assert_eq!(v.value(StateId::START), 0.25);

        let p = Policy::from_logits(vec![
            vec![0.4, -1.0, 2.0],
            vec![1.0, 0.0, 0.5],
            vec![0.0, 3.0, 0.0],
        ])
        .unwrap();
        let env = JunctionEnv::from_seed(3, 2, 3, 9).unwrap();
        let v = exact_values(&env, &p).unwrap();
        assert!((v.value(StateId::START) - enumerate_success(&env, &p)).abs() < 1e-15);
        assert!((p.success_prob(&env) - enumerate_success(&env, &p)).abs() < 1e-15);
    }

    #[test]
    fn values_after_outcomes() {
        let env = JunctionEnv::from_seed(2, 2, 2, 0).unwrap();
        let policy = Policy::uniform(&env);
        let v = exact_values(&env, &policy).unwrap();
        for seed in 0..40 {
            let r = rollout_seeded(&env, &policy, seed).unwrap();
            let series = v.along(&r).unwrap();
            for (u, s) in r.states.iter().enumerate() {
                if s.mistaken {
                    assert_eq!(series[u], 0.0);
                }
            }
            if r.reward() == 1.0 {
                // after both junctions, on the final corridor
                assert_eq!(series[env.horizon() - 1], 1.0);
            }
        }
    }

    #[test]
    fn mc_zero_after_mistake() {
        let env = JunctionEnv::from_seed(2, 2, 2, 0).unwrap();
        let policy = Policy::uniform(&env);
        let s = StateId {
            position: 4,
            mistaken: true,
        };
        let m = mc_value(&env, &policy, s, 32, 0).unwrap();
        assert_eq!(m.mean, 0.0);
        assert!(mc_value(&env, &policy, s, 0, 0).is_err());
    }

    #[test]
    fn mc32_concentrates() {
        let env = JunctionEnv::from_seed(2, 0, 2, 0).unwrap();
        let policy = Policy::uniform(&env);
        let seeds = 1000;
        let within = (0..seeds)
            .filter(|&seed| {
                let m = mc_value(&env, &policy, StateId::START, 32, seed).unwrap();
                (m.mean - 0.25).abs() <= 3.0 * m.std_err
            })
            .count();
        assert!(within as f64 >= 0.99 * seeds as f64, "{within}/{seeds}");
    }

    #[test]
    fn shape_mismatch_rejected() {
        let env = JunctionEnv::from_seed(2, 0, 2, 0).unwrap();
        let other = JunctionEnv::from_seed(3, 0, 2, 0).unwrap();
        assert!(rollout_seeded(&env, &Policy::uniform(&other), 0).is_err());
        assert!(JunctionEnv::new(0, 1, vec![0]).is_err());
        assert!(JunctionEnv::new(0, 2, vec![2]).is_err());
    }
}
