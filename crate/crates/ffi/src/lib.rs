//! C ABI for the segadv estimators.
//!
//! Conventions:
//! - Every fallible function returns a [`SegadvStatus`]; on failure a
//!   description is available from [`segadv_last_error_message`] on the same
//!   thread until the next failing call.
//! - Outputs are written into caller-allocated buffers whose required length
//!   is documented per function.
//! - Handles (`SegadvEstimator`, `SegadvEnv`) are opaque; release them with
//!   their `_free` function. Passing NULL to a `_free` function is a no-op.
//! - Panics never cross the boundary; they surface as `SEGADV_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use segadv::bias_lab::bias_bound;
use segadv::env::{rollout_seeded, JunctionEnv, Policy};
use segadv::sae::{estimate, sae};
use segadv::segmentation::segment_probability;
use segadv::traj::{gae, grpo_advantages, GRPO_EPSILON};
use segadv::{
    BoundarySet, DeltaSeries, Error, EstimatorSpec, SegmentationConfig, Trajectory, ValueSeries,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegadvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Alignment = 3,
    BoundViolation = 4,
    BufferTooSmall = 5,
    Internal = 6,
    Panic = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &Error) -> SegadvStatus {
    match err {
        Error::Validation(_) | Error::Config(_) | Error::UndefinedCorrelation(_) => {
            SegadvStatus::InvalidArgument
        }
        Error::Alignment { .. } => SegadvStatus::Alignment,
        Error::BoundViolation { .. } => SegadvStatus::BoundViolation,
        _ => SegadvStatus::Internal,
    }
}

struct Failure(SegadvStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(SegadvStatus::NullPointer, format!("{what} is NULL"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SegadvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SegadvStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SegadvStatus::Panic
        }
    }
}

/// # Safety
/// `p` must be NULL or point to `len` readable elements.
unsafe fn input<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

/// # Safety
/// `p` must be NULL or point to `len` writable elements.
unsafe fn output<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

/// Message for the most recent failure on this thread, or NULL if none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn segadv_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// TD errors `out[t] = values[t+1] - values[t]` for `t < horizon`.
///
/// `values` has `horizon + 1` entries and its last entry must equal `reward`.
///
/// # Safety
/// `values` must hold `horizon + 1` readable doubles and `out` `horizon` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn segadv_compute_deltas(
    values: *const f64,
    horizon: usize,
    reward: f64,
    out: *mut f64,
) -> SegadvStatus {
    guard(|| {
        let v = input(values, horizon + 1, "values")?;
        let series = ValueSeries::with_terminal(v.to_vec(), horizon, reward)?;
        let deltas = DeltaSeries::from_values(&series);
        output(out, horizon, "out")?.copy_from_slice(&deltas);
        Ok(())
    })
}

/// Generalized advantage estimation over `len` TD errors.
///
/// # Safety
/// `deltas` and `out` must each hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn segadv_gae(
    deltas: *const f64,
    len: usize,
    lambda: f64,
    out: *mut f64,
) -> SegadvStatus {
    guard(|| {
        let d = DeltaSeries::new(input(deltas, len, "deltas")?.to_vec());
        let adv = gae(&d, lambda)?;
        output(out, len, "out")?.copy_from_slice(&adv);
        Ok(())
    })
}

/// Segment-aware advantages for explicit boundaries.
///
/// `boundaries` are strictly increasing positions in `1..=horizon` ending at `horizon`.
///
/// # Safety
/// `values` must hold `horizon + 1` doubles, `boundaries` `n_boundaries`
/// entries and `out` `horizon` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn segadv_sae(
    values: *const f64,
    horizon: usize,
    reward: f64,
    boundaries: *const usize,
    n_boundaries: usize,
    lambda: f64,
    out: *mut f64,
) -> SegadvStatus {
    guard(|| {
        let v = input(values, horizon + 1, "values")?;
        let series = ValueSeries::with_terminal(v.to_vec(), horizon, reward)?;
        let b = input(boundaries, n_boundaries, "boundaries")?;
        let set = BoundarySet::new(b.to_vec(), horizon)?;
        let adv = sae(&series, &set, lambda)?;
        output(out, horizon, "out")?.copy_from_slice(&adv);
        Ok(())
    })
}

/// Probability-threshold segmentation.
///
/// Writes boundary positions to `out` (capacity `len` always suffices) and
/// their number to `out_count`.
///
/// # Safety
/// `gen_probs` must hold `len` doubles, `out` `capacity` writable entries.
#[no_mangle]
pub unsafe extern "C" fn segadv_segment_probability(
    gen_probs: *const f64,
    len: usize,
    p: f64,
    out: *mut usize,
    capacity: usize,
    out_count: *mut usize,
) -> SegadvStatus {
    guard(|| {
        if out_count.is_null() {
            return Err(null("out_count"));
        }
        let probs = input(gen_probs, len, "gen_probs")?;
        let traj = Trajectory::new(vec![0; len], probs.to_vec(), 0.0)?;
        let set = segment_probability(&traj, p)?;
        *out_count = set.len();
        if set.len() > capacity {
            return Err(Failure(
                SegadvStatus::BufferTooSmall,
                format!(
                    "{} boundaries do not fit in a buffer of {capacity}",
                    set.len()
                ),
            ));
        }
        output(out, set.len(), "out")?.copy_from_slice(set.positions());
        Ok(())
    })
}

/// Bias bound `α·exp(T/β)·[1 + (1-λ)/(exp(M/β) - λ)]`; `M` must divide `T`.
///
/// # Safety
/// `out` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn segadv_bias_bound(
    alpha: f64,
    beta: f64,
    horizon: usize,
    segment_len: usize,
    lambda: f64,
    out: *mut f64,
) -> SegadvStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = bias_bound(alpha, beta, horizon, segment_len, lambda)?;
        Ok(())
    })
}

/// Group-relative advantages `(r - mean) / (std + 1e-8)`.
///
/// # Safety
/// `rewards` and `out` must each hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn segadv_grpo(rewards: *const f64, n: usize, out: *mut f64) -> SegadvStatus {
    guard(|| {
        let r = input(rewards, n, "rewards")?;
        let adv = grpo_advantages(r, GRPO_EPSILON)?;
        output(out, n, "out")?.copy_from_slice(&adv);
        Ok(())
    })
}

/// Configured value-based estimator.
pub struct SegadvEstimator {
    spec: EstimatorSpec,
}

fn boxed_estimator(spec: EstimatorSpec) -> *mut SegadvEstimator {
    match spec.validate() {
        Ok(()) => Box::into_raw(Box::new(SegadvEstimator { spec })),
        Err(e) => {
            set_error(e.to_string());
            ptr::null_mut()
        }
    }
}

/// GAE estimator; NULL (with an error message) if `lambda` is outside [0, 1].
#[no_mangle]
pub extern "C" fn segadv_estimator_new_gae(lambda: f64) -> *mut SegadvEstimator {
    boxed_estimator(EstimatorSpec::gae(lambda))
}

/// Segment-aware estimator with probability-threshold segmentation.
#[no_mangle]
pub extern "C" fn segadv_estimator_new_sae(lambda: f64, p: f64) -> *mut SegadvEstimator {
    boxed_estimator(EstimatorSpec::sae(
        lambda,
        SegmentationConfig::probability(p),
    ))
}

/// Monte Carlo estimator (GAE with λ = 1).
#[no_mangle]
pub extern "C" fn segadv_estimator_new_mc() -> *mut SegadvEstimator {
    boxed_estimator(EstimatorSpec::mc())
}

/// Run the estimator on one trajectory.
///
/// # Safety
/// `estimator` must come from a `segadv_estimator_new_*` function and not be
/// freed. `tokens`, `gen_probs` and `out` hold `len` elements; `values` holds
/// `len + 1` doubles with the last equal to `reward`.
#[no_mangle]
pub unsafe extern "C" fn segadv_estimator_estimate(
    estimator: *const SegadvEstimator,
    tokens: *const u32,
    gen_probs: *const f64,
    len: usize,
    reward: f64,
    values: *const f64,
    out: *mut f64,
) -> SegadvStatus {
    guard(|| {
        let est = estimator.as_ref().ok_or_else(|| null("estimator"))?;
        let traj = Trajectory::new(
            input(tokens, len, "tokens")?.to_vec(),
            input(gen_probs, len, "gen_probs")?.to_vec(),
            reward,
        )?;
        let series = ValueSeries::new(input(values, len + 1, "values")?.to_vec(), &traj)?;
        let adv = estimate(&traj, Some(&series), &est.spec, None)?;
        output(out, len, "out")?.copy_from_slice(&adv);
        Ok(())
    })
}

/// # Safety
/// `estimator` must be NULL or a live handle; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn segadv_estimator_free(estimator: *mut SegadvEstimator) {
    if !estimator.is_null() {
        drop(Box::from_raw(estimator));
    }
}

/// Junction environment: corridors of deterministic tokens separated by
/// `junctions` choice points with `choices` options each.
pub struct SegadvEnv {
    env: JunctionEnv,
}

/// NULL (with an error message) on invalid dimensions.
#[no_mangle]
pub extern "C" fn segadv_env_new(
    junctions: usize,
    corridor_len: usize,
    choices: usize,
    seed: u64,
) -> *mut SegadvEnv {
    match catch_unwind(|| JunctionEnv::from_seed(junctions, corridor_len, choices, seed)) {
        Ok(Ok(env)) => Box::into_raw(Box::new(SegadvEnv { env })),
        Ok(Err(e)) => {
            set_error(e.to_string());
            ptr::null_mut()
        }
        Err(_) => {
            set_error("internal panic");
            ptr::null_mut()
        }
    }
}

/// Trajectory length `T`, or 0 for a NULL handle.
///
/// # Safety
/// `env` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn segadv_env_horizon(env: *const SegadvEnv) -> usize {
    env.as_ref().map_or(0, |e| e.env.horizon())
}

/// Sample one rollout under a policy that puts `correct_prob` on every correct choice.
///
/// # Safety
/// `env` must be a live handle; `tokens` and `gen_probs` must hold
/// `segadv_env_horizon(env)` writable elements and `reward` one double.
#[no_mangle]
pub unsafe extern "C" fn segadv_env_rollout(
    env: *const SegadvEnv,
    correct_prob: f64,
    seed: u64,
    tokens: *mut u32,
    gen_probs: *mut f64,
    reward: *mut f64,
) -> SegadvStatus {
    guard(|| {
        let env = &env.as_ref().ok_or_else(|| null("env"))?.env;
        if reward.is_null() {
            return Err(null("reward"));
        }
        let policy = Policy::with_correct_prob(env, correct_prob)?;
        let r = rollout_seeded(env, &policy, seed)?;
        let t = env.horizon();
        output(tokens, t, "tokens")?.copy_from_slice(r.trajectory.tokens());
        output(gen_probs, t, "gen_probs")?.copy_from_slice(r.trajectory.gen_probs());
        *reward = r.reward();
        Ok(())
    })
}

/// # Safety
/// `env` must be NULL or a live handle; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn segadv_env_free(env: *mut SegadvEnv) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}
