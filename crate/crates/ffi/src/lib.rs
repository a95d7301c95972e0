//! C interface to the `ragc` simulator and agent.
//!
//! Objects are exposed as opaque handles created by `*_new` functions and
//! released with the matching `*_free`. Every fallible function returns a
//! [`RagcStatus`]; on failure a message is available from
//! [`ragc_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use ragc::agent::DdpgAgent;
use ragc::env::{Environment, RadarEnv, SceneData};
use ragc::experiment::{ExperimentConfig, Manifest, Split};
use ragc::scene::{generate_scene, SceneConfig};
use ragc::seed::derive_seed;
use ragc::tensor::Tensor;
use ragc::Error;

/// Result codes of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RagcStatus {
    Ok = 0,
    NullPointer = 1,
    Config = 2,
    Data = 3,
    Runtime = 4,
    Domain = 5,
    Shape = 6,
    Io = 7,
    BufferTooSmall = 8,
    InvalidUtf8 = 9,
    Panic = 10,
}

/// Dataset split selector for [`ragc_env_new_from_dataset`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RagcSplit {
    TrainRl = 0,
    TrainDet = 1,
    Test = 2,
}

/// Per-step outputs of [`ragc_env_step`].
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RagcStepInfo {
    pub reward: f64,
    pub f1: f64,
    pub action_norm: f64,
    pub power_db: f64,
    pub num_targets: u32,
    pub num_detections: u32,
    pub done: bool,
}

/// Opaque radar environment.
pub struct RagcEnv {
    inner: RadarEnv,
}

/// Opaque DDPG agent.
pub struct RagcAgent {
    inner: DdpgAgent,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> RagcStatus {
    match e {
        Error::Config(_) => RagcStatus::Config,
        Error::Data(_) | Error::Csv(_) => RagcStatus::Data,
        Error::Runtime(_) => RagcStatus::Runtime,
        Error::Domain(_) => RagcStatus::Domain,
        Error::Shape { .. } => RagcStatus::Shape,
        Error::Io(_) => RagcStatus::Io,
    }
}

struct Failure(RagcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RagcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            RagcStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            RagcStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(RagcStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(RagcStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

fn config_from(toml: &str) -> Result<ExperimentConfig, Failure> {
    if toml.trim().is_empty() {
        Ok(ExperimentConfig::default())
    } else {
        Ok(ExperimentConfig::from_toml_str(toml)?)
    }
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    *out = value;
    Ok(())
}

unsafe fn copy_state(state: &Tensor, out: *mut f32, capacity: usize) -> Result<(), Failure> {
    let data = state.data();
    if data.len() > capacity {
        return Err(Failure(
            RagcStatus::BufferTooSmall,
            format!("state needs {} floats, buffer holds {capacity}", data.len()),
        ));
    }
    if out.is_null() {
        return Err(null("state buffer"));
    }
    let dst = std::slice::from_raw_parts_mut(out, data.len());
    for (d, s) in dst.iter_mut().zip(data) {
        *d = *s as f32;
    }
    Ok(())
}

/// Copies the calling thread's last error message into `buf` as a
/// NUL-terminated string, truncating to `capacity - 1` bytes. Returns the
/// full message length in bytes, excluding the terminator.
///
/// # Safety
/// `buf` must be null or valid for `capacity` bytes.
#[no_mangle]
pub unsafe extern "C" fn ragc_last_error_message(buf: *mut c_char, capacity: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && capacity > 0 {
            let n = msg.len().min(capacity - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ragc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates an environment over `num_scenes` freshly generated scenes.
/// `config_toml` uses the experiment file format; an empty string selects
/// the defaults.
///
/// # Safety
/// `config_toml` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ragc_env_new_generated(
    config_toml: *const c_char,
    num_scenes: u32,
    seed: u64,
    out: *mut *mut RagcEnv,
) -> RagcStatus {
    guard(|| {
        let cfg = config_from(str_arg(config_toml, "config_toml")?)?;
        if num_scenes == 0 {
            return Err(Failure(RagcStatus::Config, "num_scenes must be positive".into()));
        }
        let scenes = (0..num_scenes as u64)
            .map(|i| {
                let sc = SceneConfig {
                    rng_seed: derive_seed(seed, &[i]),
                    ..cfg.scene.clone()
                };
                Ok(SceneData::from_scene(format!("scene_{i:03}"), &generate_scene(&sc, &cfg.chirp)?))
            })
            .collect::<Result<Vec<_>, Error>>()?;
        let env = RadarEnv::new(cfg.env_config(), cfg.chirp, scenes, seed)?;
        write_out(out, Box::into_raw(Box::new(RagcEnv { inner: env })), "out")
    })
}

/// Creates an environment over one split of a dataset written by
/// `ragc generate`. `out_dir` is the experiment output directory.
///
/// # Safety
/// String arguments must be valid C strings and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ragc_env_new_from_dataset(
    config_toml: *const c_char,
    out_dir: *const c_char,
    split: RagcSplit,
    seed: u64,
    out: *mut *mut RagcEnv,
) -> RagcStatus {
    guard(|| {
        let cfg = config_from(str_arg(config_toml, "config_toml")?)?;
        let dir = Path::new(str_arg(out_dir, "out_dir")?);
        let split = match split {
            RagcSplit::TrainRl => Split::TrainRl,
            RagcSplit::TrainDet => Split::TrainDet,
            RagcSplit::Test => Split::Test,
        };
        let manifest = Manifest::load_checked(&cfg, dir)?;
        let scenes = manifest.load_split(dir, split)?;
        let env = RadarEnv::new(cfg.env_config(), cfg.chirp, scenes, seed)?;
        write_out(out, Box::into_raw(Box::new(RagcEnv { inner: env })), "out")
    })
}

/// Releases an environment. Null is ignored.
///
/// # Safety
/// `env` must come from a `ragc_env_new_*` call and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ragc_env_free(env: *mut RagcEnv) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

/// Number of floats in one state (`channels * height * width`).
///
/// # Safety
/// `env` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn ragc_env_state_len(env: *const RagcEnv) -> usize {
    match env.as_ref() {
        Some(e) => e.inner.state_shape().iter().product(),
        None => 0,
    }
}

/// Starts the next episode and writes its first state into `state`.
///
/// # Safety
/// `env` must be a live handle and `state` valid for `capacity` floats.
#[no_mangle]
pub unsafe extern "C" fn ragc_env_reset(env: *mut RagcEnv, state: *mut f32, capacity: usize) -> RagcStatus {
    guard(|| {
        let env = env.as_mut().ok_or_else(|| null("env"))?;
        let s = env.inner.reset()?;
        copy_state(&s, state, capacity)
    })
}

/// Applies `action` in `[-1, 1]`, writes the next state and step results.
///
/// # Safety
/// `env` must be a live handle, `state` valid for `capacity` floats and
/// `info` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ragc_env_step(
    env: *mut RagcEnv,
    action: f64,
    state: *mut f32,
    capacity: usize,
    info: *mut RagcStepInfo,
) -> RagcStatus {
    guard(|| {
        let env = env.as_mut().ok_or_else(|| null("env"))?;
        if info.is_null() {
            return Err(null("info"));
        }
        let r = env.inner.step(action)?;
        copy_state(&r.next_state, state, capacity)?;
        *info = RagcStepInfo {
            reward: r.reward,
            f1: r.info.f1,
            action_norm: r.info.action_norm,
            power_db: r.info.power_db,
            num_targets: r.info.num_targets as u32,
            num_detections: r.info.detections.len() as u32,
            done: r.done,
        };
        Ok(())
    })
}

/// Creates an agent with freshly initialised networks.
///
/// # Safety
/// `config_toml` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ragc_agent_new(config_toml: *const c_char, seed: u64, out: *mut *mut RagcAgent) -> RagcStatus {
    guard(|| {
        let cfg = config_from(str_arg(config_toml, "config_toml")?)?;
        let agent = DdpgAgent::new(cfg.agent, seed)?;
        write_out(out, Box::into_raw(Box::new(RagcAgent { inner: agent })), "out")
    })
}

/// Releases an agent. Null is ignored.
///
/// # Safety
/// `agent` must come from [`ragc_agent_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ragc_agent_free(agent: *mut RagcAgent) {
    if !agent.is_null() {
        drop(Box::from_raw(agent));
    }
}

/// Loads network weights written by `ragc train`.
///
/// # Safety
/// `agent` must be a live handle and `path` a valid C string.
#[no_mangle]
pub unsafe extern "C" fn ragc_agent_load(agent: *mut RagcAgent, path: *const c_char) -> RagcStatus {
    guard(|| {
        let agent = agent.as_mut().ok_or_else(|| null("agent"))?;
        let path = str_arg(path, "path")?;
        agent.inner.load_networks(Path::new(path))?;
        Ok(())
    })
}

/// Saves all networks of the agent.
///
/// # Safety
/// `agent` must be a live handle and `path` a valid C string.
#[no_mangle]
pub unsafe extern "C" fn ragc_agent_save(agent: *const RagcAgent, path: *const c_char) -> RagcStatus {
    guard(|| {
        let agent = agent.as_ref().ok_or_else(|| null("agent"))?;
        let path = str_arg(path, "path")?;
        agent.inner.save_networks(Path::new(path))?;
        Ok(())
    })
}

/// Greedy action in `[-1, 1]` for one state of `len` floats.
///
/// # Safety
/// `agent` must be a live handle, `state` valid for `len` floats and
/// `action` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ragc_agent_act(
    agent: *const RagcAgent,
    state: *const f32,
    len: usize,
    action: *mut f64,
) -> RagcStatus {
    guard(|| {
        let agent = agent.as_ref().ok_or_else(|| null("agent"))?;
        if state.is_null() {
            return Err(null("state"));
        }
        let shape = agent.inner.state_shape();
        let want: usize = shape.iter().product();
        if len != want {
            return Err(Failure(
                RagcStatus::Shape,
                format!("state has {len} floats, agent expects {want}"),
            ));
        }
        let data: Vec<f64> = std::slice::from_raw_parts(state, len).iter().map(|&v| v as f64).collect();
        let t = Tensor::from_vec(&shape, data)?;
        let a = agent.inner.policy(&t)?.clamp(-1.0, 1.0);
        write_out(action, a, "action")
    })
}
