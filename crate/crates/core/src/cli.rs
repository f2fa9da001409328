//! Command-line interface.
//!
//! Every subcommand reads an optional TOML run configuration (`--config`);
//! flags override the corresponding config keys. Relative output paths are
//! resolved against the output directory (`--out-dir`, then `out_dir` in the
//! config, then `SEGADV_OUT_DIR`, then the working directory).
//!
//! Exit codes: 0 on success, 2 on usage errors, 1 on runtime failures.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analysis::{self, lambda_sweep, OracleKind};
use crate::bias_lab::{self, SignPattern};
use crate::config::RunConfig;
use crate::env::{self, Policy};
use crate::io::{read_jsonl, write_jsonl, TrajectoryRecord};
use crate::rng;
use crate::sae::{estimate, GroupContext};
use crate::segmentation::{BoundarySet, SegmentationConfig, SegmentationMethod};
use crate::trainer;
use crate::traj::EstimatorKind;
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "segadv",
    version,
    about = "Segment-aware advantage estimation toolkit"
)]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory against which relative output paths are resolved.
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    /// Root seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute per-token advantages for trajectories in a JSONL file.
    Estimate(EstimateArgs),
    /// Segment trajectories and summarize segment statistics.
    Segment(SegmentArgs),
    /// Measure segment-aware bias under synthetic value errors.
    BiasLab(BiasLabArgs),
    /// Train a policy on the junction environment with PPO.
    Train(TrainArgs),
    /// Correlate estimator advantages with ground-truth segment advantages.
    Correlate(CorrelateArgs),
    /// Sample junction-environment rollouts as trajectory JSONL.
    Rollout(RolloutArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    Gae,
    Sae,
    Mc,
    Adaptive,
    Grpo,
}

impl From<KindArg> for EstimatorKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Gae => EstimatorKind::Gae,
            KindArg::Sae => EstimatorKind::Sae,
            KindArg::Mc => EstimatorKind::Mc,
            KindArg::Adaptive => EstimatorKind::AdaptiveLambda,
            KindArg::Grpo => EstimatorKind::Grpo,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Probability,
    Uniform,
    Delimiter,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OracleArg {
    Dp,
    Mc,
}

#[derive(Debug, Args)]
struct SegFlags {
    /// Segmentation method.
    #[arg(long)]
    seg_method: Option<MethodArg>,
    /// Probability threshold: boundary where the emitted token's probability is below p.
    #[arg(long)]
    p: Option<f64>,
    /// Segment length for uniform segmentation.
    #[arg(long = "M", value_name = "M")]
    segment_len: Option<usize>,
    /// Comma-separated delimiter token ids.
    #[arg(long, value_delimiter = ',')]
    delimiters: Vec<u32>,
}

impl SegFlags {
    fn apply(&self, seg: &mut SegmentationConfig) {
        if let Some(m) = self.seg_method {
            seg.method = match m {
                MethodArg::Probability => SegmentationMethod::Probability,
                MethodArg::Uniform => SegmentationMethod::Uniform,
                MethodArg::Delimiter => SegmentationMethod::Delimiter,
            };
        }
        if let Some(p) = self.p {
            seg.p = p;
        }
        if let Some(m) = self.segment_len {
            seg.segment_len = m;
        }
        if !self.delimiters.is_empty() {
            seg.delimiters = self.delimiters.clone();
        }
    }
}

#[derive(Debug, Args)]
struct EstimatorFlags {
    #[arg(long)]
    estimator: Option<KindArg>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Coefficient c of the length-adaptive λ = 1 - 1/(c·l).
    #[arg(long)]
    adaptive_coeff: Option<f64>,
    #[command(flatten)]
    seg: SegFlags,
}

impl EstimatorFlags {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(k) = self.estimator {
            cfg.estimator.kind = k.into();
        }
        if let Some(l) = self.lambda {
            cfg.estimator.lambda = l;
        }
        if let Some(c) = self.adaptive_coeff {
            cfg.estimator.adaptive_coeff = c;
        }
        self.seg.apply(&mut cfg.segmentation);
    }
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// Input trajectory JSONL.
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Output JSONL: input records with an `advantages` field.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    #[command(flatten)]
    est: EstimatorFlags,
    /// Treat consecutive chunks of this many records as GRPO groups
    /// (used when records carry no `group` field).
    #[arg(long)]
    group_size: Option<usize>,
}

#[derive(Debug, Args)]
struct SegmentArgs {
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Output JSONL: input records with `boundaries` and `mean_segment_length`.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Summary CSV: one row per segmentation setting.
    #[arg(long, value_name = "FILE")]
    summary: Option<PathBuf>,
    /// Comma-separated thresholds to summarize with probability segmentation.
    #[arg(long, value_delimiter = ',')]
    p_sweep: Vec<f64>,
    #[command(flatten)]
    seg: SegFlags,
}

#[derive(Debug, Args)]
struct BiasLabArgs {
    /// Output CSV, one row per grid point.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Optional CSV with the per-step bias profile of every grid point.
    #[arg(long, value_name = "FILE")]
    per_t_out: Option<PathBuf>,
    #[arg(long = "T", value_delimiter = ',', value_name = "T")]
    horizons: Vec<usize>,
    #[arg(long = "M", value_delimiter = ',', value_name = "M")]
    segment_lens: Vec<usize>,
    #[arg(long = "lambda", value_delimiter = ',')]
    lambdas: Vec<f64>,
    #[arg(long = "alpha", value_delimiter = ',')]
    alphas: Vec<f64>,
    #[arg(long = "beta", value_delimiter = ',')]
    betas: Vec<f64>,
    /// worst_case, random or alternating.
    #[arg(long = "pattern", value_delimiter = ',', value_parser = parse_pattern)]
    patterns: Vec<SignPattern>,
    /// Number of error draws per grid point.
    #[arg(long)]
    seeds: Option<u64>,
}

fn parse_pattern(s: &str) -> std::result::Result<SignPattern, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Metrics CSV.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    #[command(flatten)]
    est: EstimatorFlags,
    #[arg(long)]
    max_updates: Option<usize>,
    #[arg(long)]
    actor_lr: Option<f64>,
    #[arg(long)]
    critic_lr: Option<f64>,
    #[arg(long)]
    clip_epsilon: Option<f64>,
    #[arg(long)]
    rollouts_per_update: Option<usize>,
    #[arg(long)]
    group_size: Option<usize>,
    /// Stop once the exact success probability reaches this value.
    #[arg(long)]
    stop_at_success: Option<f64>,
    /// Add a wall-clock column (makes output non-reproducible byte-for-byte).
    #[arg(long)]
    wall_clock: bool,
}

#[derive(Debug, Args)]
struct CorrelateArgs {
    /// Per-seed correlation CSV.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Summary CSV: mean r and its standard error per estimator.
    #[arg(long, value_name = "FILE")]
    summary: Option<PathBuf>,
    /// Sweep GAE over λ ∈ {0, 0.1, ..., 1}.
    #[arg(long)]
    lambda_sweep: bool,
    /// Comma-separated SAE thresholds.
    #[arg(long, value_delimiter = ',')]
    p_sweep: Vec<f64>,
    #[arg(long)]
    oracle: Option<OracleArg>,
    /// Continuations per state for the Monte Carlo oracle.
    #[arg(long)]
    mc_rollouts: Option<usize>,
    /// Number of study seeds (0..n).
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long)]
    trajectories: Option<usize>,
    #[arg(long)]
    sae_lambda: Option<f64>,
}

#[derive(Debug, Args)]
struct RolloutArgs {
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    #[arg(long, default_value_t = 16)]
    n: usize,
    /// Probability on each correct choice; uniform policy when omitted.
    #[arg(long)]
    correct_prob: Option<f64>,
    /// Attach exact state values under the sampling policy.
    #[arg(long)]
    with_values: bool,
    /// Tag records with consecutive group ids of this size.
    #[arg(long)]
    group_size: Option<usize>,
}

/// Parse `args` (including the program name) and run. Returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

struct Ctx {
    cfg: RunConfig,
    out_dir: PathBuf,
}

impl Ctx {
    fn output(&self, path: &Path) -> Result<PathBuf> {
        let full = if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.out_dir.join(path)
        };
        if let Some(parent) = full.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        Ok(full)
    }
}

fn execute(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(dir) = cli.out_dir {
        cfg.out_dir = Some(dir);
    }
    if cfg.threads == 0 {
        return Err(Error::Config("threads must be at least 1".into()));
    }
    let out_dir = cfg.resolve_out_dir();
    let mut ctx = Ctx { cfg, out_dir };
    match cli.command {
        Command::Estimate(a) => cmd_estimate(&mut ctx, a),
        Command::Segment(a) => cmd_segment(&mut ctx, a),
        Command::BiasLab(a) => cmd_bias_lab(&mut ctx, a),
        Command::Train(a) => cmd_train(&mut ctx, a),
        Command::Correlate(a) => cmd_correlate(&mut ctx, a),
        Command::Rollout(a) => cmd_rollout(&mut ctx, a),
    }
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// For each record, the (member indices, position) of its GRPO group.
fn grpo_groups(
    records: &[TrajectoryRecord],
    group_size: Option<usize>,
) -> Result<Vec<(Vec<usize>, usize)>> {
    let mut membership: Vec<(Vec<usize>, usize)> = Vec::with_capacity(records.len());
    if records.iter().all(|r| r.group.is_some()) && !records.is_empty() {
        let mut groups: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
        for (i, r) in records.iter().enumerate() {
            groups.entry(r.group.unwrap()).or_default().push(i);
        }
        for r in records {
            let members = &groups[&r.group.unwrap()];
            membership.push((members.clone(), 0));
        }
        for (i, m) in membership.iter_mut().enumerate() {
            m.1 = m.0.iter().position(|&j| j == i).unwrap();
        }
        return Ok(membership);
    }
    let size = group_size.ok_or_else(|| {
        Error::invalid("GRPO needs a `group` field on every record or --group-size")
    })?;
    if size == 0 || !records.len().is_multiple_of(size) {
        return Err(Error::invalid(format!(
            "{} records cannot be split into groups of {size}",
            records.len()
        )));
    }
    for i in 0..records.len() {
        let start = i / size * size;
        membership.push(((start..start + size).collect(), i - start));
    }
    Ok(membership)
}

fn cmd_estimate(ctx: &mut Ctx, a: EstimateArgs) -> Result<()> {
    a.est.apply(&mut ctx.cfg);
    let spec = ctx.cfg.estimator_spec();
    spec.validate()?;
    let records = read_jsonl(&a.input)?;
    let trajs = records
        .iter()
        .map(TrajectoryRecord::trajectory)
        .collect::<Result<Vec<_>>>()?;
    let groups = if spec.kind == EstimatorKind::Grpo {
        Some(grpo_groups(&records, a.group_size)?)
    } else {
        None
    };
    let mut out = Vec::with_capacity(records.len());
    for (i, (rec, traj)) in records.iter().zip(&trajs).enumerate() {
        let adv = match &groups {
            Some(groups) => {
                let (members, index) = &groups[i];
                let rewards: Vec<f64> = members
                    .iter()
                    .map(|&j| trajs[j].terminal_reward())
                    .collect();
                estimate(
                    traj,
                    None,
                    &spec,
                    Some(GroupContext {
                        rewards: &rewards,
                        index: *index,
                    }),
                )?
            }
            None => {
                let values = rec
                    .value_series(traj)
                    .ok_or_else(|| Error::invalid(format!("record {} has no `values`", i + 1)))??;
                estimate(traj, Some(&values), &spec, None)?
            }
        };
        out.push(rec.with_field("advantages", &adv.to_vec())?);
    }
    write_jsonl(&ctx.output(&a.out)?, &out)
}

#[derive(Serialize)]
struct SegmentSummaryRow {
    method: String,
    threshold: Option<f64>,
    trajectories: usize,
    mean_segment_length: f64,
    mean_boundary_count: f64,
    /// `length:count` pairs of segment lengths, ascending.
    histogram: String,
}

fn summarize_segments(
    label: String,
    threshold: Option<f64>,
    sets: &[BoundarySet],
) -> SegmentSummaryRow {
    let mut hist: BTreeMap<usize, usize> = BTreeMap::new();
    let mut total_len = 0usize;
    let mut total_count = 0usize;
    for b in sets {
        let mut prev = 0;
        for &pos in b.positions() {
            *hist.entry(pos - prev).or_default() += 1;
            prev = pos;
        }
        total_len += b.horizon();
        total_count += b.len();
    }
    let n = sets.len().max(1) as f64;
    SegmentSummaryRow {
        method: label,
        threshold,
        trajectories: sets.len(),
        mean_segment_length: if total_count == 0 {
            0.0
        } else {
            total_len as f64 / total_count as f64
        },
        mean_boundary_count: total_count as f64 / n,
        histogram: hist
            .iter()
            .map(|(l, c)| format!("{l}:{c}"))
            .collect::<Vec<_>>()
            .join(";"),
    }
}

fn cmd_segment(ctx: &mut Ctx, a: SegmentArgs) -> Result<()> {
    a.seg.apply(&mut ctx.cfg.segmentation);
    let seg = ctx.cfg.segmentation.clone();
    seg.validate()?;
    let records = read_jsonl(&a.input)?;
    let trajs = records
        .iter()
        .map(TrajectoryRecord::trajectory)
        .collect::<Result<Vec<_>>>()?;
    let sets = trajs
        .iter()
        .map(|t| seg.segment(t))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(records.len());
    for (rec, b) in records.iter().zip(&sets) {
        let mut v = rec.with_field("boundaries", &b.positions())?;
        v["mean_segment_length"] = serde_json::json!(b.mean_segment_length());
        out.push(v);
    }
    write_jsonl(&ctx.output(&a.out)?, &out)?;

    let mut rows = Vec::new();
    if a.p_sweep.is_empty() {
        let threshold = (seg.method == SegmentationMethod::Probability).then_some(seg.p);
        rows.push(summarize_segments(seg.label(), threshold, &sets));
    } else {
        for &p in &a.p_sweep {
            let cfg = SegmentationConfig::probability(p);
            let sets = trajs
                .iter()
                .map(|t| cfg.segment(t))
                .collect::<Result<Vec<_>>>()?;
            rows.push(summarize_segments(cfg.label(), Some(p), &sets));
        }
    }
    for r in &rows {
        eprintln!(
            "{}: mean segment length {:.3}, mean boundaries {:.3}",
            r.method, r.mean_segment_length, r.mean_boundary_count
        );
    }
    if let Some(path) = &a.summary {
        write_csv(&ctx.output(path)?, &rows)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct BiasStepRow {
    #[serde(rename = "T")]
    horizon: usize,
    #[serde(rename = "M")]
    segment_len: usize,
    lambda: f64,
    alpha: f64,
    beta: f64,
    pattern: SignPattern,
    seed: u64,
    t: usize,
    bias: f64,
}

fn cmd_bias_lab(ctx: &mut Ctx, a: BiasLabArgs) -> Result<()> {
    let grid = &mut ctx.cfg.bias_lab;
    if !a.horizons.is_empty() {
        grid.horizons = a.horizons.clone();
    }
    if !a.segment_lens.is_empty() {
        grid.segment_lens = a.segment_lens.clone();
    }
    if !a.lambdas.is_empty() {
        grid.lambdas = a.lambdas.clone();
    }
    if !a.alphas.is_empty() {
        grid.alphas = a.alphas.clone();
    }
    if !a.betas.is_empty() {
        grid.betas = a.betas.clone();
    }
    if !a.patterns.is_empty() {
        grid.patterns = a.patterns.clone();
    }
    if let Some(s) = a.seeds {
        grid.seeds = s;
    }
    let grid = grid.clone();
    let reports = bias_lab::run_grid(&grid, ctx.cfg.threads)?;
    let min_slack = reports
        .iter()
        .map(|r| r.slack)
        .fold(f64::INFINITY, f64::min);
    eprintln!(
        "{} grid points, 0 bound violations, minimum slack {min_slack:.6}",
        reports.len()
    );
    write_csv(&ctx.output(&a.out)?, &reports)?;

    if let Some(path) = &a.per_t_out {
        let mut w = csv::Writer::from_path(ctx.output(path)?)?;
        for (horizon, m, lambda, model) in grid.points() {
            let errors = bias_lab::sample_errors(&model, horizon, m)?;
            let profile =
                bias_lab::bias_profile(&bias_lab::synthetic_values(horizon), &errors, m, lambda)?;
            for (t, bias) in profile.into_iter().enumerate() {
                w.serialize(BiasStepRow {
                    horizon,
                    segment_len: m,
                    lambda,
                    alpha: model.alpha,
                    beta: model.beta,
                    pattern: model.pattern,
                    seed: model.seed,
                    t,
                    bias,
                })?;
            }
        }
        w.flush()?;
    }
    Ok(())
}

fn cmd_train(ctx: &mut Ctx, a: TrainArgs) -> Result<()> {
    a.est.apply(&mut ctx.cfg);
    let p = &mut ctx.cfg.ppo;
    if let Some(v) = a.max_updates {
        p.max_updates = v;
    }
    if let Some(v) = a.actor_lr {
        p.actor_lr = v;
    }
    if let Some(v) = a.critic_lr {
        p.critic_lr = v;
    }
    if let Some(v) = a.clip_epsilon {
        p.clip_epsilon = v;
    }
    if let Some(v) = a.rollouts_per_update {
        p.rollouts_per_update = v;
    }
    if let Some(v) = a.group_size {
        p.group_size = v;
    }
    if let Some(v) = a.stop_at_success {
        p.stop_at_success = v;
    }
    ctx.cfg.validate()?;
    let env = ctx.cfg.env.build()?;
    let ppo = ctx.cfg.ppo_config();
    let metrics = trainer::train(&env, &ppo, ctx.cfg.threads)?;
    let file = std::fs::File::create(ctx.output(&a.out)?)?;
    metrics.write_csv(std::io::BufWriter::new(file), a.wall_clock)?;
    match metrics.steps_to_threshold(0.9) {
        Some(s) => eprintln!("{}: success >= 0.9 at update {s}", ppo.estimator.label()),
        None => eprintln!(
            "{}: success 0.9 not reached; final {:.4}",
            ppo.estimator.label(),
            metrics.final_success().unwrap_or(0.0)
        ),
    }
    Ok(())
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    estimator: &'a str,
    param: &'a str,
    oracle: &'a str,
    mean_r: Option<f64>,
    std_err: Option<f64>,
    n_seeds: usize,
    n_missing: usize,
}

fn cmd_correlate(ctx: &mut Ctx, a: CorrelateArgs) -> Result<()> {
    let study = &mut ctx.cfg.analysis;
    if a.lambda_sweep {
        study.gae_lambdas = lambda_sweep();
    }
    if !a.p_sweep.is_empty() {
        study.sae_ps = a.p_sweep.clone();
    }
    if let Some(o) = a.oracle {
        study.oracle = match o {
            OracleArg::Dp => OracleKind::Dp,
            OracleArg::Mc => OracleKind::Mc,
        };
    }
    if let Some(n) = a.mc_rollouts {
        study.mc_rollouts = n;
    }
    if let Some(n) = a.seeds {
        study.seeds = (0..n).collect();
    }
    if let Some(n) = a.trajectories {
        study.trajectories = n;
    }
    if let Some(l) = a.sae_lambda {
        study.sae_lambda = l;
    }
    let study = study.clone();
    let env = ctx.cfg.env.build()?;
    let reports = analysis::correlation_study(&env, &study, ctx.cfg.threads)?;
    write_csv(&ctx.output(&a.out)?, &reports)?;

    let oracle = study.oracle.label(study.mc_rollouts);
    let summary = analysis::summarize(&reports);
    for s in &summary {
        match (s.mean_r, s.std_err) {
            (Some(m), Some(se)) => eprintln!(
                "{:<9} {:<12} r = {m:.4} ± {se:.4} ({oracle})",
                s.estimator, s.param
            ),
            _ => eprintln!("{:<9} {:<12} r undefined ({oracle})", s.estimator, s.param),
        }
    }
    if let Some(path) = &a.summary {
        let rows: Vec<SummaryRow> = summary
            .iter()
            .map(|s| SummaryRow {
                estimator: &s.estimator,
                param: &s.param,
                oracle: &oracle,
                mean_r: s.mean_r,
                std_err: s.std_err,
                n_seeds: s.n_seeds,
                n_missing: s.n_missing,
            })
            .collect();
        write_csv(&ctx.output(path)?, &rows)?;
    }
    Ok(())
}

fn cmd_rollout(ctx: &mut Ctx, a: RolloutArgs) -> Result<()> {
    let env = ctx.cfg.env.build()?;
    let policy = match a.correct_prob {
        Some(p) => Policy::with_correct_prob(&env, p)?,
        None => Policy::uniform(&env),
    };
    let exact = if a.with_values {
        Some(env::exact_values(&env, &policy)?)
    } else {
        None
    };
    if a.group_size == Some(0) {
        return Err(Error::invalid("group size must be positive"));
    }
    let mut out = Vec::with_capacity(a.n);
    for i in 0..a.n {
        let seed = rng::derive_seed(ctx.cfg.seed, rng::stream::ROLLOUT, i as u64);
        let r = env::rollout_seeded(&env, &policy, seed)?;
        let values = exact.as_ref().map(|e| e.along(&r)).transpose()?;
        let mut rec = TrajectoryRecord::from_rollout(&r, values.as_ref());
        rec.group = a.group_size.map(|g| (i / g) as u64);
        out.push(rec);
    }
    write_jsonl(&ctx.output(&a.out)?, &out)
}
