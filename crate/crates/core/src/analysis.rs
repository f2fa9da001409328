//! Correlation of advantage estimators with a segment-level ground truth.
//!
//! For a sampled segment `[t, t+m)` of a trajectory the approximate
//! ground-truth advantage is `A* = V*(s_{t+m}) - V*(s_t)`, assigned to every
//! token of the segment. `V*` comes either from the exact dynamic program of
//! the junction environment or from Monte Carlo continuations. Each
//! estimator's per-token advantages are then correlated with `A*`.

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{exact_values, mc_value, JunctionEnv, Policy, Rollout};
use crate::rng;
use crate::segmentation::SegmentationConfig;
use crate::trainer::{batch_advantages, collect_batch, with_threads, Batch, ValueHead};
use crate::traj::EstimatorSpec;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    /// Exact dynamic-programming values.
    Dp,
    /// Mean of independent Monte Carlo continuations.
    Mc,
}

impl OracleKind {
    pub fn label(self, mc_rollouts: usize) -> String {
        match self {
            OracleKind::Dp => "exact-dp".to_string(),
            OracleKind::Mc => format!("mc-{mc_rollouts}"),
        }
    }
}

/// How segments are drawn from each trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub segments_per_trajectory: usize,
    pub allow_overlap: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            segments_per_trajectory: 4,
            allow_overlap: false,
        }
    }
}

/// Draw up to `segments_per_trajectory` segments `(t, m)` with `t` uniform on
/// `0..T` and `m` uniform on `1..=T-t`. Without overlap, colliding draws are
/// rejected, so fewer segments may come back. Returned sorted by start.
pub fn sample_segments(
    horizon: usize,
    sampler: &SamplerConfig,
    rng: &mut rng::Rng,
) -> Vec<(usize, usize)> {
    let want = sampler.segments_per_trajectory;
    let mut out: Vec<(usize, usize)> = Vec::with_capacity(want);
    let mut attempts = 0;
    while out.len() < want && attempts < want * 64 {
        attempts += 1;
        let t = rng.random_range(0..horizon);
        let m = rng.random_range(1..=horizon - t);
        let overlaps = out.iter().any(|&(s, len)| t < s + len && s < t + m);
        if sampler.allow_overlap || !overlaps {
            out.push((t, m));
        }
    }
    out.sort_unstable();
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruthSegment {
    /// Index of the trajectory in the batch.
    pub trajectory: usize,
    pub start: usize,
    pub end: usize,
    pub v_start: f64,
    pub v_end: f64,
    pub a_star: f64,
    /// Pooled standard error of `a_star` for the Monte Carlo oracle, 0 for the exact one.
    pub std_err: f64,
}

/// `A*` for sampled segments of every rollout.
#[allow(clippy::too_many_arguments)]
pub fn ground_truth_advantages(
    env: &JunctionEnv,
    policy: &Policy,
    rollouts: &[Rollout],
    sampler: &SamplerConfig,
    oracle: OracleKind,
    mc_rollouts: usize,
    seed: u64,
) -> Result<Vec<GroundTruthSegment>> {
    let spans: Vec<Vec<(usize, usize)>> = rollouts
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut rng = rng::child(seed, rng::stream::SEGMENTS, i as u64);
            sample_segments(r.trajectory.len(), sampler, &mut rng)
        })
        .collect();
    segments_for_spans(env, policy, rollouts, &spans, oracle, mc_rollouts, seed)
}

/// `A*` for explicitly chosen segments; `spans[i]` holds `(t, m)` pairs for rollout `i`.
pub fn segments_for_spans(
    env: &JunctionEnv,
    policy: &Policy,
    rollouts: &[Rollout],
    spans: &[Vec<(usize, usize)>],
    oracle: OracleKind,
    mc_rollouts: usize,
    seed: u64,
) -> Result<Vec<GroundTruthSegment>> {
    if oracle == OracleKind::Mc && mc_rollouts == 0 {
        return Err(Error::invalid(
            "Monte Carlo oracle needs at least one rollout",
        ));
    }
    let exact = exact_values(env, policy)?;
    let mut out = Vec::new();
    let mut k = 0u64;
    for (i, (r, segs)) in rollouts.iter().zip(spans).enumerate() {
        for &(t, m) in segs {
            let end = t + m;
            if m == 0 || end > r.trajectory.len() {
                return Err(Error::invalid(format!(
                    "segment ({t}, {m}) outside trajectory {i}"
                )));
            }
            let (s0, s1) = (r.states[t], r.states[end]);
            let (v_start, v_end, std_err) = match oracle {
                OracleKind::Dp => (exact.value(s0), exact.value(s1), 0.0),
                OracleKind::Mc => {
                    let a = mc_value(
                        env,
                        policy,
                        s0,
                        mc_rollouts,
                        rng::derive_seed(seed, rng::stream::MC_ORACLE, 2 * k),
                    )?;
                    let b = mc_value(
                        env,
                        policy,
                        s1,
                        mc_rollouts,
                        rng::derive_seed(seed, rng::stream::MC_ORACLE, 2 * k + 1),
                    )?;
                    (a.mean, b.mean, a.std_err.hypot(b.std_err))
                }
            };
            k += 1;
            out.push(GroundTruthSegment {
                trajectory: i,
                start: t,
                end,
                v_start,
                v_end,
                a_star: v_end - v_start,
                std_err,
            });
        }
    }
    Ok(out)
}

/// Product-moment correlation of two equal-length vectors.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::Alignment {
            what: "pearson ys",
            expected: xs.len(),
            actual: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::invalid(
            "pearson correlation needs at least 2 points",
        ));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::UndefinedCorrelation("first vector is constant"));
    }
    if syy == 0.0 {
        return Err(Error::UndefinedCorrelation("second vector is constant"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Parameters of a correlation study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StudyConfig {
    /// Trajectories sampled per seed.
    pub trajectories: usize,
    pub group_size: usize,
    /// Probability the study policy puts on each correct choice.
    pub policy_correct_prob: f64,
    /// Critic capacity (positions per value cell).
    pub value_bucket: usize,
    pub value_mistake_flag: bool,
    /// Rollouts used to fit the critic.
    pub value_fit_rollouts: usize,
    /// Std of Gaussian noise added to every critic cell.
    pub value_noise: f64,
    pub sampler: SamplerConfig,
    pub oracle: OracleKind,
    pub mc_rollouts: usize,
    /// λ for the segment-aware estimator.
    pub sae_lambda: f64,
    /// Thresholds for the segment-aware estimator.
    pub sae_ps: Vec<f64>,
    /// λ values for GAE.
    pub gae_lambdas: Vec<f64>,
    pub adaptive_coeff: f64,
    pub seeds: Vec<u64>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            trajectories: 64,
            group_size: 8,
            policy_correct_prob: 0.45,
            value_bucket: 8,
            value_mistake_flag: true,
            value_fit_rollouts: 256,
            value_noise: 0.0,
            sampler: SamplerConfig::default(),
            oracle: OracleKind::Dp,
            mc_rollouts: 32,
            sae_lambda: 0.95,
            sae_ps: vec![0.5],
            gae_lambdas: vec![0.95],
            adaptive_coeff: crate::traj::ADAPTIVE_COEFF,
            seeds: (0..20).collect(),
        }
    }
}

/// `λ ∈ {0, 0.1, ..., 1.0}`.
pub fn lambda_sweep() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

/// One estimator entry of a study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyEstimator {
    pub name: &'static str,
    /// Swept parameter, e.g. `p=0.5` or `lambda=0.3`; empty when none.
    pub param: String,
    pub spec: EstimatorSpec,
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trajectories == 0
            || self.group_size < 2
            || !self.trajectories.is_multiple_of(self.group_size)
        {
            return Err(Error::invalid(
                "trajectories must be a positive multiple of group_size (>= 2)",
            ));
        }
        if self.seeds.is_empty() {
            return Err(Error::invalid("correlation study needs at least one seed"));
        }
        if self.value_bucket == 0 || self.value_fit_rollouts == 0 {
            return Err(Error::invalid(
                "value_bucket and value_fit_rollouts must be positive",
            ));
        }
        if !(self.value_noise >= 0.0) {
            return Err(Error::invalid("value_noise must be non-negative"));
        }
        for e in self.estimators() {
            e.spec.validate()?;
        }
        Ok(())
    }

    /// Estimators in report order: SAE per p, GAE per λ, MC, adaptive, GRPO.
    pub fn estimators(&self) -> Vec<StudyEstimator> {
        let mut out = Vec::new();
        for &p in &self.sae_ps {
            out.push(StudyEstimator {
                name: "sae",
                param: format!("p={p}"),
                spec: EstimatorSpec::sae(self.sae_lambda, SegmentationConfig::probability(p)),
            });
        }
        for &l in &self.gae_lambdas {
            out.push(StudyEstimator {
                name: "gae",
                param: format!("lambda={l}"),
                spec: EstimatorSpec::gae(l),
            });
        }
        out.push(StudyEstimator {
            name: "mc",
            param: String::new(),
            spec: EstimatorSpec::mc(),
        });
        out.push(StudyEstimator {
            name: "adaptive",
            param: format!("c={}", self.adaptive_coeff),
            spec: EstimatorSpec::adaptive(self.adaptive_coeff),
        });
        out.push(StudyEstimator {
            name: "grpo",
            param: String::new(),
            spec: EstimatorSpec::grpo(),
        });
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub estimator: String,
    pub param: String,
    pub seed: u64,
    /// Missing when either side is constant.
    pub pearson_r: Option<f64>,
    pub n_points: usize,
    pub oracle: String,
    /// λ of GAE/SAE rows.
    pub lambda: Option<f64>,
    /// Why `pearson_r` is missing, or a caveat such as zero group variance.
    pub note: Option<String>,
}

/// Imperfect critic for a study seed: regression fit on coarsened states plus optional noise.
pub fn study_critic(
    env: &JunctionEnv,
    policy: &Policy,
    cfg: &StudyConfig,
    seed: u64,
) -> Result<ValueHead> {
    let mut head = ValueHead::new(env.horizon(), cfg.value_bucket, cfg.value_mistake_flag)?;
    let fit = collect_batch(
        env,
        policy,
        cfg.value_fit_rollouts,
        1,
        rng::derive_seed(seed, rng::stream::VALUE_FIT, 0),
        1,
    )?;
    head.regress(&fit.rollouts, 1.0);
    if cfg.value_noise > 0.0 {
        let normal = Normal::new(0.0, cfg.value_noise)
            .map_err(|e| Error::invalid(format!("value noise: {e}")))?;
        let mut rng = rng::child(seed, rng::stream::VALUE_NOISE, 0);
        head.perturb(|| normal.sample(&mut rng));
    }
    Ok(head)
}

/// Pairs (estimator advantage, broadcast A*) for every token of every segment.
pub fn paired_points(
    segments: &[GroundTruthSegment],
    advantages: &[crate::traj::AdvantageSeries],
) -> (Vec<f64>, Vec<f64>) {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for s in segments {
        xs.extend_from_slice(&advantages[s.trajectory][s.start..s.end]);
        ys.resize(xs.len(), s.a_star);
    }
    (xs, ys)
}

fn study_seed(
    env: &JunctionEnv,
    policy: &Policy,
    cfg: &StudyConfig,
    seed: u64,
) -> Result<Vec<CorrelationReport>> {
    let batch: Batch = collect_batch(
        env,
        policy,
        cfg.trajectories,
        cfg.group_size,
        rng::derive_seed(seed, rng::stream::ROLLOUT, 0),
        1,
    )?;
    let critic = study_critic(env, policy, cfg, seed)?;
    let segments = ground_truth_advantages(
        env,
        policy,
        &batch.rollouts,
        &cfg.sampler,
        cfg.oracle,
        cfg.mc_rollouts,
        seed,
    )?;
    let oracle = cfg.oracle.label(cfg.mc_rollouts);
    cfg.estimators()
        .into_iter()
        .map(|e| {
            let adv = batch_advantages(&batch, &critic, &e.spec)?;
            let (xs, ys) = paired_points(&segments, &adv);
            let (pearson_r, mut note) = match pearson(&xs, &ys) {
                Ok(r) => (Some(r), None),
                Err(Error::UndefinedCorrelation(why)) => (None, Some(why.to_string())),
                Err(Error::Validation(why)) => (None, Some(why)),
                Err(e) => return Err(e),
            };
            if e.spec.kind == crate::traj::EstimatorKind::Grpo
                && batch
                    .groups()
                    .all(|g| g.iter().all(|r| r.reward() == g[0].reward()))
            {
                note = Some("zero within-group reward variance".to_string());
            }
            Ok(CorrelationReport {
                estimator: e.name.to_string(),
                param: e.param,
                seed,
                pearson_r,
                n_points: xs.len(),
                oracle: oracle.clone(),
                lambda: match e.spec.kind {
                    crate::traj::EstimatorKind::Gae | crate::traj::EstimatorKind::Sae => {
                        Some(e.spec.lambda)
                    }
                    _ => None,
                },
                note,
            })
        })
        .collect()
}

/// Run the study for every configured seed. Rows are ordered by seed, then estimator.
pub fn correlation_study(
    env: &JunctionEnv,
    cfg: &StudyConfig,
    threads: usize,
) -> Result<Vec<CorrelationReport>> {
    cfg.validate()?;
    let policy = Policy::with_correct_prob(env, cfg.policy_correct_prob)?;
    let mut seeds = cfg.seeds.clone();
    seeds.sort_unstable();
    seeds.dedup();
    let per_seed: Vec<Vec<CorrelationReport>> = if threads <= 1 {
        seeds
            .iter()
            .map(|&s| study_seed(env, &policy, cfg, s))
            .collect::<Result<_>>()?
    } else {
        with_threads(threads, || {
            seeds
                .par_iter()
                .map(|&s| study_seed(env, &policy, cfg, s))
                .collect::<Result<Vec<_>>>()
        })??
    };
    Ok(per_seed.into_iter().flatten().collect())
}

/// Mean Pearson r over seeds with its standard error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationSummary {
    pub estimator: String,
    pub param: String,
    pub mean_r: Option<f64>,
    /// Standard error of the mean over seeds; 0 with a single seed.
    pub std_err: Option<f64>,
    pub n_seeds: usize,
    pub n_missing: usize,
}

pub fn summarize(reports: &[CorrelationReport]) -> Vec<CorrelationSummary> {
    let mut keys: Vec<(String, String)> = Vec::new();
    for r in reports {
        let k = (r.estimator.clone(), r.param.clone());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(estimator, param)| {
            let rows: Vec<&CorrelationReport> = reports
                .iter()
                .filter(|r| r.estimator == estimator && r.param == param)
                .collect();
            let vals: Vec<f64> = rows.iter().filter_map(|r| r.pearson_r).collect();
            let n = vals.len();
            let (mean_r, std_err) = if n == 0 {
                (None, None)
            } else {
                let mean = vals.iter().sum::<f64>() / n as f64;
                let se = if n > 1 {
                    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                    (var / n as f64).sqrt()
                } else {
                    0.0
                };
                (Some(mean), Some(se))
            };
            CorrelationSummary {
                estimator,
                param,
                mean_r,
                std_err,
                n_seeds: rows.len(),
                n_missing: rows.len() - n,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::rollout_seeded;
    use crate::sae::sae;
    use crate::segmentation::BoundarySet;

    #[test]
    fn pearson_examples() {
        let xs = [1.0, 2.0, 3.0, 5.0];
        assert!((pearson(&xs, &xs).unwrap() - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert!((pearson(&xs, &neg).unwrap() + 1.0).abs() < 1e-12);
        // hand evaluation: mx=2, my=13/3, sxy=5, sxx=2, syy=38/3
        let expected = 5.0 / (2.0f64.sqrt() * (38.0f64 / 3.0).sqrt());
        let r = pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 7.0]).unwrap();
        assert!((r - expected).abs() < 1e-12);
        assert!((r - 0.99340).abs() < 1e-5);
        assert!(matches!(
            pearson(&[1.0, 1.0], &[1.0, 2.0]),
            Err(Error::UndefinedCorrelation(_))
        ));
        assert!(matches!(
            pearson(&[1.0, 2.0], &[3.0, 3.0]),
            Err(Error::UndefinedCorrelation(_))
        ));
        assert!(pearson(&[1.0], &[1.0]).is_err());
        assert!(pearson(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn pearson_affine_invariant() {
        let mut rng = rng::seeded(1);
        let xs: Vec<f64> = (0..50).map(|_| rng.random::<f64>()).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x * 0.5 + rng.random::<f64>()).collect();
        let scaled: Vec<f64> = xs.iter().map(|x| 3.7 * x - 11.0).collect();
        assert!((pearson(&xs, &ys).unwrap() - pearson(&scaled, &ys).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn segment_sampling() {
        let mut rng = rng::seeded(0);
        for _ in 0..200 {
            let s = sample_segments(30, &SamplerConfig::default(), &mut rng);
            assert!(!s.is_empty());
            for &(t, m) in &s {
                assert!(m >= 1 && t + m <= 30);
            }
            for w in s.windows(2) {
                assert!(w[0].0 + w[0].1 <= w[1].0);
            }
        }
    }

    #[test]
    fn dp_segment_after_mistake_is_zero() {
        let env = JunctionEnv::new(2, 2, vec![0, 1]).unwrap();
        let policy = Policy::uniform(&env);
        let r = (0..)
            .map(|s| rollout_seeded(&env, &policy, s).unwrap())
            .find(|r| r.choices[0].1 != 0)
            .unwrap();
        // first junction at step 2 was wrong; segment [3, 7) lies after it
        let segs =
            segments_for_spans(&env, &policy, &[r], &[vec![(3, 4)]], OracleKind::Dp, 0, 0).unwrap();
        assert_eq!(segs[0].a_star, 0.0);
    }

    #[test]
    fn dp_segment_over_correct_junction() {
        let env = JunctionEnv::new(2, 2, vec![1]).unwrap();
        let policy = Policy::uniform(&env);
        let r = (0..)
            .map(|s| rollout_seeded(&env, &policy, s).unwrap())
            .find(|r| r.reward() == 1.0)
            .unwrap();
        let segs =
            segments_for_spans(&env, &policy, &[r], &[vec![(0, 4)]], OracleKind::Dp, 0, 0).unwrap();
        assert_eq!((segs[0].v_start, segs[0].v_end), (0.5, 1.0));
        assert_eq!(segs[0].a_star, 0.5);
    }

    #[test]
    fn aligned_boundaries_recover_a_star() {
        let env = JunctionEnv::from_seed(3, 4, 3, 2).unwrap();
        let policy = Policy::uniform(&env);
        let exact = exact_values(&env, &policy).unwrap();
        let mut rng = rng::seeded(9);
        for seed in 0..30 {
            let r = rollout_seeded(&env, &policy, seed).unwrap();
            let spans = sample_segments(r.trajectory.len(), &SamplerConfig::default(), &mut rng);
            let segs = segments_for_spans(
                &env,
                &policy,
                std::slice::from_ref(&r),
                std::slice::from_ref(&spans),
                OracleKind::Dp,
                0,
                0,
            )
            .unwrap();
            let horizon = r.trajectory.len();
            let mut cuts: Vec<usize> = spans
                .iter()
                .flat_map(|&(t, m)| [t, t + m])
                .filter(|&u| u > 0)
                .collect();
            cuts.push(horizon);
            cuts.sort_unstable();
            cuts.dedup();
            let boundaries = BoundarySet::new(cuts, horizon).unwrap();
            let values = exact.along(&r).unwrap();
            let adv = sae(&values, &boundaries, 0.0).unwrap();
            for s in &segs {
                assert!((adv[s.start] - s.a_star).abs() < 1e-15);
                for t in s.start..s.end {
                    let junction_before = (s.start..t).any(|u| env.junction_at(u).is_some());
                    if !junction_before {
                        assert!((adv[t] - s.a_star).abs() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn estimators_coincide_on_trivial_env() {
        // single decision, exact values: every value-based estimator agrees
        let env = JunctionEnv::from_seed(1, 0, 2, 0).unwrap();
        let policy = Policy::uniform(&env);
        let exact = exact_values(&env, &policy).unwrap();
        let r = rollout_seeded(&env, &policy, 3).unwrap();
        let v = exact.along(&r).unwrap();
        let specs = [
            EstimatorSpec::gae(0.3),
            EstimatorSpec::mc(),
            EstimatorSpec::sae(0.3, SegmentationConfig::probability(0.9)),
        ];
        let outs: Vec<_> = specs
            .iter()
            .map(|s| crate::sae::estimate(&r.trajectory, Some(&v), s, None).unwrap())
            .collect();
        assert!(outs.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn mc_oracle_tracks_dp() {
        let env = JunctionEnv::from_seed(3, 2, 2, 0).unwrap();
        let policy = Policy::uniform(&env);
        let batch = collect_batch(&env, &policy, 16, 8, 4, 1).unwrap();
        let dp = ground_truth_advantages(
            &env,
            &policy,
            &batch.rollouts,
            &SamplerConfig::default(),
            OracleKind::Dp,
            0,
            7,
        )
        .unwrap();
        let mut prev = f64::INFINITY;
        for n in [8, 32, 128, 512] {
            let mc = ground_truth_advantages(
                &env,
                &policy,
                &batch.rollouts,
                &SamplerConfig::default(),
                OracleKind::Mc,
                n,
                7,
            )
            .unwrap();
            assert_eq!(mc.len(), dp.len());
            let mad = mc
                .iter()
                .zip(&dp)
                .map(|(a, b)| (a.a_star - b.a_star).abs())
                .sum::<f64>()
                / mc.len() as f64;
            assert!(mad < prev, "n={n}: {mad} >= {prev}");
            prev = mad;
        }
    }

    #[test]
    fn sweep_emits_eleven_gae_rows() {
        let env = JunctionEnv::from_seed(2, 3, 4, 0).unwrap();
        let cfg = StudyConfig {
            gae_lambdas: lambda_sweep(),
            seeds: vec![0, 1],
            trajectories: 16,
            value_fit_rollouts: 32,
            ..StudyConfig::default()
        };
        let reports = correlation_study(&env, &cfg, 1).unwrap();
        let gae_rows = reports
            .iter()
            .filter(|r| r.estimator == "gae" && r.seed == 0)
            .count();
        assert_eq!(gae_rows, 11);
        assert_eq!(reports.len(), 2 * (1 + 11 + 3));
        let summary = summarize(&reports);
        assert_eq!(summary.len(), 15);
        assert_eq!(reports, correlation_study(&env, &cfg, 3).unwrap());
    }
}
