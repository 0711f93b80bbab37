//! C ABI for `waypoint_rl`.
//!
//! Every fallible function returns a [`WrlStatus`]. On failure the message is
//! available from [`wrl_last_error`] on the calling thread; the pointer stays
//! valid until the next failing call on that thread. Results are written
//! through out-pointers, which are left untouched on failure.
//!
//! Trainers are opaque handles created by [`wrl_trainer_new`] or
//! [`wrl_trainer_resume`] and released with [`wrl_trainer_free`]. A handle
//! must not be used from two threads at once.
//!
//! Grid cells are 1-based `(x, y)` with `y` pointing north. Actions are
//! numbered 0 = north, 1 = east, 2 = south, 3 = west.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use nalgebra::Vector2;
use waypoint_rl::flight::{overshoot, settling_time};
use waypoint_rl::runner::{equivalence_report, greedy_path_len};
use waypoint_rl::{
    step_response, store, Action, Error, GridState, PidGains, PlantParams, PlantState, TrainConfig, Trainer,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WrlStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The configuration JSON was malformed or violated a parameter range.
    InvalidConfig = 3,
    /// An index, cell, action or numeric argument was out of range.
    InvalidArgument = 4,
    Io = 5,
    /// A file existed but could not be parsed.
    Parse = 6,
    /// A checkpoint was written for a different configuration.
    FingerprintMismatch = 7,
    /// A maneuver failed to reach its waypoint before the plant timeout.
    ManeuverTimeout = 8,
    /// The simulation produced a NaN or infinity.
    NonFinite = 9,
    /// The trainer has already run every configured episode.
    Finished = 10,
    /// The caller's output buffer is shorter than required.
    BufferTooSmall = 11,
    /// An internal panic was caught at the boundary.
    Panic = 12,
}

/// Opaque training session.
pub struct WrlTrainer {
    inner: Trainer,
}

/// One row of the episode log.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WrlEpisodeSummary {
    pub episode: u32,
    pub steps: u32,
    pub total_reward: f64,
    pub reached_goal: bool,
    /// Simulated flight time in seconds; zero without dynamics.
    pub duration_s: f64,
}

/// Metrics of a step-response maneuver.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WrlStepResponse {
    pub overshoot_m: f64,
    /// Infinity when the vehicle never settles inside the radius.
    pub settling_time_s: f64,
    pub final_error_m: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Fail {
    status: WrlStatus,
    msg: String,
}

impl Fail {
    fn new(status: WrlStatus, msg: impl Into<String>) -> Self {
        Fail {
            status,
            msg: msg.into(),
        }
    }
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidConfig(_) => WrlStatus::InvalidConfig,
            Error::IndexOutOfRange { .. } | Error::UndefinedAxis | Error::DimensionMismatch(_) => {
                WrlStatus::InvalidArgument
            }
            Error::NonFinite(_) => WrlStatus::NonFinite,
            Error::Parse { .. } | Error::Json { .. } => WrlStatus::Parse,
            Error::FingerprintMismatch { .. } => WrlStatus::FingerprintMismatch,
            Error::ManeuverTimeout { .. } => WrlStatus::ManeuverTimeout,
            Error::Io { .. } => WrlStatus::Io,
        };
        Fail::new(status, e.to_string())
    }
}

fn set_last_error(msg: &str) {
    // Interior NULs cannot cross the boundary; replace them.
    let c = CString::new(msg.replace('\0', " ")).expect("NULs removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> WrlStatus {
    let fail = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => return WrlStatus::Ok,
        Ok(Err(fail)) => fail,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            Fail::new(WrlStatus::Panic, format!("panic: {msg}"))
        }
    };
    set_last_error(&fail.msg);
    fail.status
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::new(WrlStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail::new(WrlStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Fail> {
    p.as_mut()
        .ok_or_else(|| Fail::new(WrlStatus::NullArgument, format!("{name} is null")))
}

unsafe fn trainer_ref<'a>(t: *const WrlTrainer) -> Result<&'a Trainer, Fail> {
    t.as_ref()
        .map(|t| &t.inner)
        .ok_or_else(|| Fail::new(WrlStatus::NullArgument, "trainer is null"))
}

fn config_from(json: &str) -> Result<TrainConfig, Fail> {
    Ok(TrainConfig::from_json(json)?)
}

fn cell(trainer: &Trainer, x: u32, y: u32) -> Result<GridState, Fail> {
    let s = GridState::new(x, y);
    if trainer.config().env.contains(s) {
        Ok(s)
    } else {
        Err(Fail::new(
            WrlStatus::InvalidArgument,
            format!("cell {s} outside the grid"),
        ))
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn wrl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Static name of a status code, e.g. `"invalid_config"`.
#[no_mangle]
pub extern "C" fn wrl_status_name(status: WrlStatus) -> *const c_char {
    let name: &'static str = match status {
        WrlStatus::Ok => "ok\0",
        WrlStatus::NullArgument => "null_argument\0",
        WrlStatus::InvalidUtf8 => "invalid_utf8\0",
        WrlStatus::InvalidConfig => "invalid_config\0",
        WrlStatus::InvalidArgument => "invalid_argument\0",
        WrlStatus::Io => "io\0",
        WrlStatus::Parse => "parse\0",
        WrlStatus::FingerprintMismatch => "fingerprint_mismatch\0",
        WrlStatus::ManeuverTimeout => "maneuver_timeout\0",
        WrlStatus::NonFinite => "non_finite\0",
        WrlStatus::Finished => "finished\0",
        WrlStatus::BufferTooSmall => "buffer_too_small\0",
        WrlStatus::Panic => "panic\0",
    };
    name.as_ptr().cast()
}

/// Message of the most recent failure on this thread, or null if none.
/// Owned by the library; do not free.
#[no_mangle]
pub extern "C" fn wrl_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Creates a trainer at episode 1 from a JSON training config.
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wrl_trainer_new(config_json: *const c_char, out: *mut *mut WrlTrainer) -> WrlStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let cfg = config_from(str_arg(config_json, "config_json")?)?;
        let inner = Trainer::new(cfg)?;
        *out = Box::into_raw(Box::new(WrlTrainer { inner }));
        Ok(())
    })
}

/// Restores a trainer from a checkpoint file written for the same config.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wrl_trainer_resume(
    config_json: *const c_char,
    checkpoint_path: *const c_char,
    out: *mut *mut WrlTrainer,
) -> WrlStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let cfg = config_from(str_arg(config_json, "config_json")?)?;
        let cp = store::load_checkpoint(Path::new(str_arg(checkpoint_path, "checkpoint_path")?))?;
        let inner = Trainer::resume(cfg, &cp)?;
        *out = Box::into_raw(Box::new(WrlTrainer { inner }));
        Ok(())
    })
}

/// Releases a trainer. Null is ignored.
///
/// # Safety
/// `trainer` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn wrl_trainer_free(trainer: *mut WrlTrainer) {
    if !trainer.is_null() {
        drop(Box::from_raw(trainer));
    }
}

/// Episode the next call to [`wrl_trainer_run_episode`] will run; one past
/// the configured count once training is done. Returns 0 for null.
///
/// # Safety
/// `trainer` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wrl_trainer_next_episode(trainer: *const WrlTrainer) -> u32 {
    trainer.as_ref().map_or(0, |t| t.inner.next_episode())
}

/// Runs one episode. Returns `WRL_STATUS_FINISHED` once every episode is done.
/// On `WRL_STATUS_MANEUVER_TIMEOUT` the episode is not counted and the table
/// keeps the updates made before the failed maneuver.
///
/// # Safety
/// `trainer` must be a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn wrl_trainer_run_episode(trainer: *mut WrlTrainer, out: *mut WrlEpisodeSummary) -> WrlStatus {
    guard(|| {
        let t = &mut trainer
            .as_mut()
            .ok_or_else(|| Fail::new(WrlStatus::NullArgument, "trainer is null"))?
            .inner;
        let Some(outcome) = t.run_next(false)? else {
            return Err(Fail::new(
                WrlStatus::Finished,
                format!("all {} episodes have run", t.config().episodes),
            ));
        };
        if let Some(out) = out.as_mut() {
            let log = outcome.log;
            *out = WrlEpisodeSummary {
                episode: log.episode,
                steps: log.steps,
                total_reward: log.total_reward,
                reached_goal: log.reached_goal,
                duration_s: log.duration_s,
            };
        }
        Ok(())
    })
}

/// Reads `Q((x, y), action)`.
///
/// # Safety
/// `trainer` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wrl_trainer_q_value(
    trainer: *const WrlTrainer,
    x: u32,
    y: u32,
    action: u32,
    out: *mut f64,
) -> WrlStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let t = trainer_ref(trainer)?;
        let s = cell(t, x, y)?;
        let a = Action::from_index(action as usize)
            .ok_or_else(|| Fail::new(WrlStatus::InvalidArgument, format!("action {action} is not 0..=3")))?;
        *out = t.qtable().get(t.config().env.index_of(s), a);
        Ok(())
    })
}

/// Length of the greedy path from `(x, y)` to the goal, or -1 if it does not
/// reach the goal within the per-episode step cap.
///
/// # Safety
/// `trainer` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wrl_trainer_greedy_path_len(
    trainer: *const WrlTrainer,
    x: u32,
    y: u32,
    out: *mut i64,
) -> WrlStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let t = trainer_ref(trainer)?;
        let s = cell(t, x, y)?;
        let cfg = t.config();
        *out = greedy_path_len(t.qtable(), &cfg.env, s, cfg.max_steps_per_episode as usize).map_or(-1, |n| n as i64);
        Ok(())
    })
}

/// Writes a checkpoint JSON that [`wrl_trainer_resume`] accepts.
///
/// # Safety
/// `trainer` must be a live handle; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn wrl_trainer_save_checkpoint(trainer: *const WrlTrainer, path: *const c_char) -> WrlStatus {
    guard(|| {
        let t = trainer_ref(trainer)?;
        store::save_checkpoint(&t.checkpoint(), Path::new(str_arg(path, "path")?))?;
        Ok(())
    })
}

/// Writes the Q-table as CSV.
///
/// # Safety
/// `trainer` must be a live handle; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn wrl_trainer_save_qtable(trainer: *const WrlTrainer, path: *const c_char) -> WrlStatus {
    guard(|| {
        let t = trainer_ref(trainer)?;
        store::save_qtable(t.qtable(), &t.config().env, Path::new(str_arg(path, "path")?))?;
        Ok(())
    })
}

/// Solves for the optimal Q-table of the config's grid. Values are written
/// row-major, four actions per cell, cells ordered by `(y - 1) * width + (x - 1)`.
/// `required` always receives the number of values; if `len` is smaller
/// nothing else is written and `WRL_STATUS_BUFFER_TOO_SMALL` is returned.
///
/// # Safety
/// `config_json` must be NUL-terminated; `values` must hold `len` doubles
/// (it may be null when `len` is 0); `required` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wrl_value_iteration(
    config_json: *const c_char,
    gamma: f64,
    tol: f64,
    values: *mut f64,
    len: usize,
    required: *mut usize,
) -> WrlStatus {
    guard(|| {
        let required = out_arg(required, "required")?;
        let cfg = config_from(str_arg(config_json, "config_json")?)?;
        if tol.is_nan() || tol <= 0.0 {
            return Err(Fail::new(
                WrlStatus::InvalidArgument,
                format!("tol must be positive, got {tol}"),
            ));
        }
        let need = cfg.env.num_states() * Action::COUNT;
        *required = need;
        if len < need {
            return Err(Fail::new(
                WrlStatus::BufferTooSmall,
                format!("buffer holds {len} values, {need} required"),
            ));
        }
        if values.is_null() {
            return Err(Fail::new(WrlStatus::NullArgument, "values is null"));
        }
        let q = cfg.env.value_iteration(gamma, tol)?;
        std::slice::from_raw_parts_mut(values, need).copy_from_slice(q.values());
        Ok(())
    })
}

/// Flies a step of `step_m` meters along +x from rest, holding the setpoint
/// for `duration_s`, and reports overshoot, settling time inside `radius_m`
/// and the final error. Plant parameters come from `config_json` when it is
/// non-null, otherwise the defaults are used.
///
/// # Safety
/// `config_json` must be null or NUL-terminated; `out` must be writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn wrl_step_response(
    config_json: *const c_char,
    kp: f64,
    ki: f64,
    kd: f64,
    step_m: f64,
    duration_s: f64,
    radius_m: f64,
    out: *mut WrlStepResponse,
) -> WrlStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let plant = if config_json.is_null() {
            PlantParams::default()
        } else {
            config_from(str_arg(config_json, "config_json")?)?.plant
        };
        for (name, v) in [("step_m", step_m), ("duration_s", duration_s), ("radius_m", radius_m)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Fail::new(
                    WrlStatus::InvalidArgument,
                    format!("{name} must be positive, got {v}"),
                ));
            }
        }
        let gains = PidGains::new(kp, ki, kd);
        gains.validate()?;
        let start = Vector2::zeros();
        let waypoint = Vector2::new(step_m, 0.0);
        let flown = step_response(&PlantState::at_rest(start), waypoint, &gains, &plant, duration_s)?;
        *out = WrlStepResponse {
            overshoot_m: overshoot(&flown.trajectory, start, waypoint)?,
            settling_time_s: settling_time(&flown.trajectory, waypoint, radius_m),
            final_error_m: (flown.state.position - waypoint).norm(),
        };
        Ok(())
    })
}

/// Trains the config with and without flight dynamics and reports whether
/// both runs made identical decisions and ended with identical tables.
///
/// # Safety
/// `config_json` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wrl_equivalence_check(config_json: *const c_char, out: *mut bool) -> WrlStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let cfg = config_from(str_arg(config_json, "config_json")?)?;
        *out = equivalence_report(&cfg)?.equivalent;
        Ok(())
    })
}
