//! C ABI over the `semibandit` crate.
//!
//! Every function returns an [`SbStatus`]. On failure a description is kept
//! per thread and can be read with [`sb_last_error_message`]. Arms are
//! numbered from 1 across this interface. Handles are opaque and must be
//! released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use rand::SeedableRng;
use semibandit::bandit::{Decision, Feedback, Policy, RoundContext, SimRng};
use semibandit::baselines::{ActionCenteredTs, LinTs, SemiTs, TsConfig};
use semibandit::envs::{Confounder, ContextMode, Environment, EnvironmentSpec};
use semibandit::gbose::{Gbose, GboseConfig};
use semibandit::harness::run_episode;
use semibandit::Error;

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SbStatus {
    Ok = 0,
    InvalidArgument = 1,
    NumericDomain = 2,
    Config = 3,
    Io = 4,
    Internal = 5,
    NullPointer = 6,
    Panic = 7,
}

/// Context layout codes accepted by [`sb_env_new`] and [`sb_run_episode`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SbContextMode {
    Block = 0,
    Sphere = 1,
}

/// A bandit policy with its own random generator.
pub struct SbPolicy {
    inner: Box<dyn Policy>,
    rng: SimRng,
    pending: Option<(RoundContext, Decision)>,
}

/// A simulated environment and the round it last produced.
pub struct SbEnvironment {
    inner: Environment,
    round: Option<RoundContext>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SbStatus {
    match e {
        Error::InvalidArgument(_) => SbStatus::InvalidArgument,
        Error::NotPositiveDefinite { .. } => SbStatus::NumericDomain,
        Error::Config(_) | Error::Parse(_) => SbStatus::Config,
        Error::Io(_) => SbStatus::Io,
        Error::Internal(_) => SbStatus::Internal,
    }
}

enum Failure {
    Lib(Error),
    Null(&'static str),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> SbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SbStatus::Ok,
        Ok(Err(Failure::Lib(e))) => {
            let s = status_of(&e);
            set_error(e.to_string());
            s
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            SbStatus::NullPointer
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            SbStatus::Panic
        }
    }
}

unsafe fn as_mut<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn as_ref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize, what: &'static str) -> Result<&'a mut [f64], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

fn check_buffer(what: &str, got: usize, need: usize) -> Result<(), Failure> {
    if got < need {
        Err(Error::InvalidArgument(format!("{what}: buffer holds {got}, need {need}")).into())
    } else {
        Ok(())
    }
}

unsafe fn emit_policy(policy: Box<dyn Policy>, seed: u64, out: *mut *mut SbPolicy) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null("out"));
    }
    let handle = Box::new(SbPolicy {
        inner: policy,
        rng: SimRng::seed_from_u64(seed),
        pending: None,
    });
    *out = Box::into_raw(handle);
    Ok(())
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Creates a GBOSE policy. `gamma_multiplier` scales the theoretical filter width.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn sb_policy_new_gbose(
    horizon: usize,
    delta: f64,
    gamma_multiplier: f64,
    seed: u64,
    out: *mut *mut SbPolicy,
) -> SbStatus {
    guard(|| {
        let p = Gbose::new(GboseConfig::new(horizon, delta, gamma_multiplier)?)?;
        emit_policy(Box::new(p), seed, out)
    })
}

/// Creates a linear Thompson-sampling policy.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn sb_policy_new_lints(scale: f64, ridge: f64, seed: u64, out: *mut *mut SbPolicy) -> SbStatus {
    guard(|| {
        let p = LinTs::new(TsConfig {
            scale,
            ridge,
            ..TsConfig::default()
        })?;
        emit_policy(Box::new(p), seed, out)
    })
}

/// Creates a semiparametric Thompson-sampling policy.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn sb_policy_new_semits(
    scale: f64,
    ridge: f64,
    mc_samples: usize,
    seed: u64,
    out: *mut *mut SbPolicy,
) -> SbStatus {
    guard(|| {
        let p = SemiTs::new(TsConfig {
            scale,
            ridge,
            mc_samples,
            ..TsConfig::default()
        })?;
        emit_policy(Box::new(p), seed, out)
    })
}

/// Creates an action-centered Thompson-sampling policy with play
/// probabilities clipped to `[p_min, p_max]`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn sb_policy_new_acts(
    scale: f64,
    ridge: f64,
    p_min: f64,
    p_max: f64,
    seed: u64,
    out: *mut *mut SbPolicy,
) -> SbStatus {
    guard(|| {
        let p = ActionCenteredTs::new(TsConfig {
            scale,
            ridge,
            clip: (p_min, p_max),
            ..TsConfig::default()
        })?;
        emit_policy(Box::new(p), seed, out)
    })
}

/// Clears learned state for a new episode in dimension `dim`.
///
/// # Safety
/// `policy` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sb_policy_reset(policy: *mut SbPolicy, dim: usize, horizon: usize) -> SbStatus {
    guard(|| {
        let p = as_mut(policy, "policy")?;
        p.inner.reset(dim, horizon)?;
        p.pending = None;
        Ok(())
    })
}

/// Picks an arm for one round. `contexts` holds `n_arms * dim` values, arm by
/// arm. Writes the 1-based arm to `out_arm`; when `out_distribution` is not
/// null it receives the `n_arms` play probabilities.
///
/// # Safety
/// `policy` must be a live handle; buffers must hold the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn sb_policy_choose(
    policy: *mut SbPolicy,
    t: usize,
    n_arms: usize,
    dim: usize,
    contexts: *const f64,
    out_arm: *mut usize,
    out_distribution: *mut f64,
) -> SbStatus {
    guard(|| {
        let p = as_mut(policy, "policy")?;
        let out_arm = as_mut(out_arm, "out_arm")?;
        let data = slice(contexts, n_arms.saturating_mul(dim), "contexts")?;
        let round = RoundContext::new(t, n_arms, dim, data.to_vec())?;
        let decision = p.inner.choose(&round, &mut p.rng)?;
        *out_arm = decision.chosen + 1;
        if !out_distribution.is_null() {
            slice_mut(out_distribution, n_arms, "out_distribution")?.copy_from_slice(&decision.distribution);
        }
        p.pending = Some((round, decision));
        Ok(())
    })
}

/// Feeds back the reward of the most recent [`sb_policy_choose`].
///
/// # Safety
/// `policy` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sb_policy_update(policy: *mut SbPolicy, reward: f64) -> SbStatus {
    guard(|| {
        let p = as_mut(policy, "policy")?;
        let (round, decision) = p
            .pending
            .take()
            .ok_or_else(|| Error::InvalidArgument("update without a preceding choose".into()))?;
        p.inner.update(&Feedback {
            reward,
            round: &round,
            decision: &decision,
        })?;
        Ok(())
    })
}

/// Copies the current coefficient estimate into `out` (length `len >= dim`).
///
/// # Safety
/// `policy` must be a live handle and `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn sb_policy_mu_hat(policy: *const SbPolicy, out: *mut f64, len: usize) -> SbStatus {
    guard(|| {
        let p = as_ref(policy, "policy")?;
        let est = p
            .inner
            .estimator()
            .ok_or_else(|| Error::InvalidArgument("policy has no estimate; call reset first".into()))?;
        let mu = est.mu_hat();
        check_buffer("out", len, mu.len())?;
        slice_mut(out, len, "out")?[..mu.len()].copy_from_slice(mu);
        Ok(())
    })
}

/// Releases a policy handle. Null is ignored.
///
/// # Safety
/// `policy` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sb_policy_free(policy: *mut SbPolicy) {
    if !policy.is_null() {
        drop(Box::from_raw(policy));
    }
}

fn parse_setting(setting: *const c_char) -> Result<Confounder, Failure> {
    if setting.is_null() {
        return Err(Failure::Null("setting"));
    }
    let s = unsafe { CStr::from_ptr(setting) }
        .to_str()
        .map_err(|_| Error::InvalidArgument("setting is not UTF-8".into()))?;
    Ok(Confounder::parse(s))
}

fn env_spec(
    n_arms: usize,
    dim: usize,
    setting: *const c_char,
    mode: u32,
    noise_variance: f64,
    seed: u64,
) -> Result<EnvironmentSpec, Failure> {
    let mode = match mode {
        m if m == SbContextMode::Block as u32 => ContextMode::Block,
        m if m == SbContextMode::Sphere as u32 => ContextMode::Sphere,
        other => return Err(Error::InvalidArgument(format!("unknown context mode {other}")).into()),
    };
    let mut spec = EnvironmentSpec::new(n_arms, dim, parse_setting(setting)?, mode)?.with_seed(seed);
    spec.noise_variance = noise_variance;
    spec.validate()?;
    Ok(spec)
}

/// Creates an environment. `setting` is "I", "II", "III" or a registered tag.
///
/// # Safety
/// `setting` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sb_env_new(
    n_arms: usize,
    dim: usize,
    setting: *const c_char,
    mode: u32,
    noise_variance: f64,
    seed: u64,
    out: *mut *mut SbEnvironment,
) -> SbStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let env = Environment::new(env_spec(n_arms, dim, setting, mode, noise_variance, seed)?)?;
        *out = Box::into_raw(Box::new(SbEnvironment {
            inner: env,
            round: None,
        }));
        Ok(())
    })
}

/// Advances to the next round and writes its `n_arms * dim` context values
/// to `out` and the round number to `out_t`.
///
/// # Safety
/// `env` must be a live handle; `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn sb_env_next_contexts(
    env: *mut SbEnvironment,
    out: *mut f64,
    len: usize,
    out_t: *mut usize,
) -> SbStatus {
    guard(|| {
        let e = as_mut(env, "env")?;
        let need = e.inner.spec().n_arms * e.inner.spec().dim;
        check_buffer("out", len, need)?;
        let buf = slice_mut(out, len, "out")?;
        let out_t = as_mut(out_t, "out_t")?;
        let round = e.inner.gen_contexts()?;
        buf[..need].copy_from_slice(round.as_slice());
        *out_t = round.t();
        e.round = Some(round);
        Ok(())
    })
}

/// Plays 1-based `arm` in the current round and writes the observed reward.
///
/// # Safety
/// `env` must be a live handle and `out_reward` writable.
#[no_mangle]
pub unsafe extern "C" fn sb_env_reward(env: *mut SbEnvironment, arm: usize, out_reward: *mut f64) -> SbStatus {
    guard(|| {
        let e = as_mut(env, "env")?;
        let out_reward = as_mut(out_reward, "out_reward")?;
        let round = e
            .round
            .take()
            .ok_or_else(|| Error::InvalidArgument("reward requested before next_contexts".into()))?;
        if arm == 0 || arm > round.n_arms() {
            e.round = Some(round);
            return Err(Error::InvalidArgument(format!("arm {arm} outside 1..={}", e.inner.spec().n_arms)).into());
        }
        *out_reward = e.inner.realize_reward(&round, arm - 1)?;
        Ok(())
    })
}

/// Cumulative regret so far.
///
/// # Safety
/// `env` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sb_env_cumulative_regret(env: *const SbEnvironment, out: *mut f64) -> SbStatus {
    guard(|| {
        let e = as_ref(env, "env")?;
        *as_mut(out, "out")? = e.inner.cumulative_regret();
        Ok(())
    })
}

/// Releases an environment handle. Null is ignored.
///
/// # Safety
/// `env` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sb_env_free(env: *mut SbEnvironment) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

/// Runs a full episode of `policy` (reset first) and writes the cumulative
/// regret after each of the `horizon` steps to `out_curve`.
///
/// # Safety
/// `policy` must be a live handle, `setting` NUL-terminated and `out_curve`
/// must hold `len >= horizon` values.
#[no_mangle]
pub unsafe extern "C" fn sb_run_episode(
    policy: *mut SbPolicy,
    n_arms: usize,
    dim: usize,
    setting: *const c_char,
    mode: u32,
    noise_variance: f64,
    horizon: usize,
    seed: u64,
    out_curve: *mut f64,
    len: usize,
) -> SbStatus {
    guard(|| {
        let p = as_mut(policy, "policy")?;
        check_buffer("out_curve", len, horizon)?;
        let out = slice_mut(out_curve, len, "out_curve")?;
        let spec = env_spec(n_arms, dim, setting, mode, noise_variance, seed)?;
        let result = run_episode(p.inner.as_mut(), &spec, horizon, seed)?;
        out[..horizon].copy_from_slice(&result.cumulative_regret);
        p.pending = None;
        Ok(())
    })
}
