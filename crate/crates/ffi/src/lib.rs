//! C ABI over the simulator. Every function returns a [`MacdoallStatus`];
//! on failure the message is available from [`macdoall_last_error`] on the
//! same thread. Handles are opaque and must be released with their `_free`
//! function. Strings handed out by the library are freed with
//! [`macdoall_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use macdoall::config::{parse_poset_file, PosetSummary, RunConfig};
use macdoall::engine::{trace_to_jsonl, verify_reliability, ExecutionTrace, Simulation};
use macdoall::poset::Poset;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MacdoallStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ConfigError = 3,
    EngineError = 4,
    NotFinished = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MacdoallMetrics {
    pub work: u64,
    pub time: u64,
    pub energy: u64,
}

/// A simulation built from a JSON run config.
pub struct MacdoallSim {
    sim: Option<Simulation>,
    trace: Option<ExecutionTrace>,
    t: usize,
}

/// A crash order.
pub struct MacdoallPoset {
    poset: Poset,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn guard(f: impl FnOnce() -> Result<(), (MacdoallStatus, String)>) -> MacdoallStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MacdoallStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            MacdoallStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, (MacdoallStatus, String)> {
    if s.is_null() {
        return Err((MacdoallStatus::NullPointer, "null string".into()));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|e| (MacdoallStatus::InvalidUtf8, e.to_string()))
}

fn null(what: &str) -> (MacdoallStatus, String) {
    (MacdoallStatus::NullPointer, format!("null {what}"))
}

fn hand_out(text: String, out: *mut *mut c_char) -> Result<(), (MacdoallStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    let c = CString::new(text).map_err(|e| (MacdoallStatus::EngineError, e.to_string()))?;
    unsafe { *out = c.into_raw() };
    Ok(())
}

/// Last error message on this thread, or null. Valid until the next failing
/// call on the same thread; do not free.
#[no_mangle]
pub extern "C" fn macdoall_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn macdoall_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn macdoall_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a simulation from a JSON run config.
///
/// # Safety
/// `config_json` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn macdoall_sim_new(
    config_json: *const c_char,
    out: *mut *mut MacdoallSim,
) -> MacdoallStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let text = read_str(config_json)?;
        let cfg =
            RunConfig::from_json(text).map_err(|e| (MacdoallStatus::ConfigError, e.to_string()))?;
        let sim = cfg
            .simulation()
            .map_err(|e| (MacdoallStatus::ConfigError, e.to_string()))?;
        let handle = Box::new(MacdoallSim {
            sim: Some(sim),
            trace: None,
            t: cfg.t,
        });
        *out = Box::into_raw(handle);
        Ok(())
    })
}

fn finish(handle: &mut MacdoallSim) -> Result<(), (MacdoallStatus, String)> {
    if let Some(sim) = handle.sim.take() {
        let (trace, _) = sim
            .run()
            .map_err(|e| (MacdoallStatus::EngineError, e.to_string()))?;
        handle.trace = Some(trace);
    }
    Ok(())
}

/// Runs one round. `*running` becomes false once the run is over.
///
/// # Safety
/// `sim` must be a live handle; `running` must be writable.
#[no_mangle]
pub unsafe extern "C" fn macdoall_sim_step(
    sim: *mut MacdoallSim,
    running: *mut bool,
) -> MacdoallStatus {
    guard(|| {
        let handle = sim.as_mut().ok_or_else(|| null("simulation"))?;
        if running.is_null() {
            return Err(null("output pointer"));
        }
        let more = match handle.sim.as_mut() {
            Some(s) => s
                .step()
                .map_err(|e| (MacdoallStatus::EngineError, e.to_string()))?,
            None => false,
        };
        if !more {
            finish(handle)?;
        }
        *running = more;
        Ok(())
    })
}

/// Runs to completion and writes the metrics.
///
/// # Safety
/// `sim` must be a live handle; `metrics` may be null.
#[no_mangle]
pub unsafe extern "C" fn macdoall_sim_run(
    sim: *mut MacdoallSim,
    metrics: *mut MacdoallMetrics,
) -> MacdoallStatus {
    guard(|| {
        let handle = sim.as_mut().ok_or_else(|| null("simulation"))?;
        finish(handle)?;
        if let (Some(out), Some(trace)) = (metrics.as_mut(), handle.trace.as_ref()) {
            let m = trace.ledger.metrics;
            *out = MacdoallMetrics {
                work: m.work,
                time: m.time,
                energy: m.energy,
            };
        }
        Ok(())
    })
}

/// Current metrics, whether or not the run is over.
///
/// # Safety
/// `sim` must be a live handle; `metrics` must be writable.
#[no_mangle]
pub unsafe extern "C" fn macdoall_sim_metrics(
    sim: *const MacdoallSim,
    metrics: *mut MacdoallMetrics,
) -> MacdoallStatus {
    guard(|| {
        let handle = sim.as_ref().ok_or_else(|| null("simulation"))?;
        let out = metrics.as_mut().ok_or_else(|| null("output pointer"))?;
        let m = match (&handle.sim, &handle.trace) {
            (Some(s), _) => s.metrics(),
            (None, Some(trace)) => trace.ledger.metrics,
            (None, None) => Default::default(),
        };
        *out = MacdoallMetrics {
            work: m.work,
            time: m.time,
            energy: m.energy,
        };
        Ok(())
    })
}

/// Whether the finished run passed the reliability check.
///
/// # Safety
/// `sim` must be a live handle; `reliable` must be writable.
#[no_mangle]
pub unsafe extern "C" fn macdoall_sim_reliable(
    sim: *const MacdoallSim,
    reliable: *mut bool,
) -> MacdoallStatus {
    guard(|| {
        let handle = sim.as_ref().ok_or_else(|| null("simulation"))?;
        let out = reliable.as_mut().ok_or_else(|| null("output pointer"))?;
        let trace = handle
            .trace
            .as_ref()
            .ok_or((MacdoallStatus::NotFinished, "run not finished".to_string()))?;
        *out = trace.outcome.is_success() && verify_reliability(trace, handle.t).passed();
        Ok(())
    })
}

/// The finished trace as JSON lines, one round per line.
///
/// # Safety
/// `sim` must be a live handle; `out` must be writable. Free the result with
/// [`macdoall_string_free`].
#[no_mangle]
pub unsafe extern "C" fn macdoall_sim_trace_jsonl(
    sim: *const MacdoallSim,
    out: *mut *mut c_char,
) -> MacdoallStatus {
    guard(|| {
        let handle = sim.as_ref().ok_or_else(|| null("simulation"))?;
        let trace = handle
            .trace
            .as_ref()
            .ok_or((MacdoallStatus::NotFinished, "run not finished".to_string()))?;
        hand_out(trace_to_jsonl(trace), out)
    })
}

/// # Safety
/// `sim` must be null or a handle from [`macdoall_sim_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn macdoall_sim_free(sim: *mut MacdoallSim) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Parses a poset file (explicit literal, or family literal with `size`).
///
/// # Safety
/// `json` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn macdoall_poset_new(
    json: *const c_char,
    out: *mut *mut MacdoallPoset,
) -> MacdoallStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let poset = parse_poset_file(read_str(json)?)
            .map_err(|e| (MacdoallStatus::ConfigError, e.to_string()))?;
        *out = Box::into_raw(Box::new(MacdoallPoset { poset }));
        Ok(())
    })
}

/// Size of a maximum antichain.
///
/// # Safety
/// `poset` must be a live handle; `thickness` must be writable.
#[no_mangle]
pub unsafe extern "C" fn macdoall_poset_thickness(
    poset: *const MacdoallPoset,
    thickness: *mut usize,
) -> MacdoallStatus {
    guard(|| {
        let handle = poset.as_ref().ok_or_else(|| null("poset"))?;
        let out = thickness.as_mut().ok_or_else(|| null("output pointer"))?;
        *out = handle.poset.thickness();
        Ok(())
    })
}

/// Width, antichain and chain cover as a JSON object.
///
/// # Safety
/// `poset` must be a live handle; `out` must be writable. Free the result
/// with [`macdoall_string_free`].
#[no_mangle]
pub unsafe extern "C" fn macdoall_poset_summary_json(
    poset: *const MacdoallPoset,
    out: *mut *mut c_char,
) -> MacdoallStatus {
    guard(|| {
        let handle = poset.as_ref().ok_or_else(|| null("poset"))?;
        let summary = PosetSummary::of(&handle.poset)
            .map_err(|e| (MacdoallStatus::ConfigError, e.to_string()))?;
        let text = serde_json::to_string(&summary)
            .map_err(|e| (MacdoallStatus::EngineError, e.to_string()))?;
        hand_out(text, out)
    })
}

/// # Safety
/// `poset` must be null or a handle from [`macdoall_poset_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn macdoall_poset_free(poset: *mut MacdoallPoset) {
    if !poset.is_null() {
        drop(Box::from_raw(poset));
    }
}
