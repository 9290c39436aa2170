//! C interface to the samu agent and experiment harness.
//!
//! Every fallible function returns a [`SamuStatus`]; on failure the message
//! is available from [`samu_last_error`] on the same thread. Strings handed
//! out by the library are owned by the caller and must be released with
//! [`samu_string_free`]. Agents are opaque handles released with
//! [`samu_agent_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::ptr;

use samu::agent::{AgentResponse, AgentSession, SessionOptions};
use samu::harness::{self, ExperimentConfig, ExperimentKind};

/// Result codes of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SamuStatus {
    Ok = 0,
    /// A required pointer argument was null.
    Null = -1,
    /// A string argument was not valid UTF-8.
    Utf8 = -2,
    Io = -3,
    Parse = -4,
    /// Invalid configuration, triplet or argument value.
    Invalid = -5,
    /// A Rust panic was caught at the boundary.
    Panic = -99,
}

/// Experiment codes accepted by [`samu_run_experiment`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SamuExperiment {
    Story = 1,
    Intro = 2,
    Incremental = 3,
}

/// Opaque agent handle.
pub struct SamuAgent {
    session: AgentSession,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(SamuStatus, String);

impl From<samu::Error> for Failure {
    fn from(e: samu::Error) -> Self {
        let status = match e {
            samu::Error::Io { .. } => SamuStatus::Io,
            samu::Error::Parse { .. } | samu::Error::Version { .. } => SamuStatus::Parse,
            _ => SamuStatus::Invalid,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SamuStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            SamuStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_last_error(&message);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            SamuStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(SamuStatus::Null, format!("{what} is null"))
}

/// # Safety
/// `p` must be null or a valid NUL-terminated string.
unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(SamuStatus::Utf8, format!("{what} is not valid UTF-8")))
}

/// # Safety
/// `p` must be null or a valid NUL-terminated string.
unsafe fn opt_str_arg<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, what).map(Some)
    }
}

fn out_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    let c = CString::new(s.replace('\0', " ")).expect("nul bytes removed");
    // SAFETY: checked non-null above; the caller provides writable storage.
    unsafe { *out = c.into_raw() };
    Ok(())
}

/// The last error message on this thread, or null after a successful call.
/// The pointer stays valid until the next library call on this thread.
#[no_mangle]
pub extern "C" fn samu_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn samu_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a pointer obtained from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn samu_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Opens an agent named `name` keeping its soul and conversation logs in
/// `data_dir`. `soul_path` may be null for `<data_dir>/samu.soul.txt`. An
/// existing soul is loaded.
///
/// # Safety
/// String arguments must be null or valid NUL-terminated strings; `out` must
/// be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn samu_agent_open(
    name: *const c_char,
    data_dir: *const c_char,
    soul_path: *const c_char,
    out: *mut *mut SamuAgent,
) -> SamuStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let name = str_arg(name, "name")?;
        let data_dir = Path::new(str_arg(data_dir, "data_dir")?);
        let mut options = SessionOptions::new(name, data_dir);
        if let Some(soul) = opt_str_arg(soul_path, "soul_path")? {
            options.soul_path = PathBuf::from(soul);
        }
        std::fs::create_dir_all(data_dir).map_err(|e| Failure(SamuStatus::Io, format!("{}: {e}", data_dir.display())))?;
        let session = AgentSession::open(options)?;
        *out = Box::into_raw(Box::new(SamuAgent { session }));
        Ok(())
    })
}

/// Releases an agent without saving. Null is ignored.
///
/// # Safety
/// `agent` must be null or a handle from [`samu_agent_open`], not yet freed.
#[no_mangle]
pub unsafe extern "C" fn samu_agent_free(agent: *mut SamuAgent) {
    if !agent.is_null() {
        drop(Box::from_raw(agent));
    }
}

/// Passes one caregiver line (sentence or `___` command) to the agent and
/// returns the response text in `*out`. Set `*quit` (when not null) to 1
/// after `___quit`, 0 otherwise.
///
/// # Safety
/// `agent` must be a live handle, `line` a valid NUL-terminated string,
/// `out` writable and `quit` null or writable.
#[no_mangle]
pub unsafe extern "C" fn samu_agent_handle_line(
    agent: *mut SamuAgent,
    line: *const c_char,
    out: *mut *mut c_char,
    quit: *mut i32,
) -> SamuStatus {
    guard(|| {
        let agent = agent.as_mut().ok_or_else(|| null("agent"))?;
        let line = str_arg(line, "line")?;
        let response = agent.session.handle_line(line);
        if let AgentResponse::Error(message) = &response {
            return Err(Failure(SamuStatus::Invalid, message.clone()));
        }
        if !quit.is_null() {
            *quit = i32::from(matches!(response, AgentResponse::Quit(_)));
        }
        out_string(out, response.text())
    })
}

/// The status prompt, e.g. `Samu@listen.7.50.0%`.
///
/// # Safety
/// `agent` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn samu_agent_prompt(agent: *const SamuAgent, out: *mut *mut c_char) -> SamuStatus {
    guard(|| {
        let agent = agent.as_ref().ok_or_else(|| null("agent"))?;
        out_string(out, agent.session.prompt())
    })
}

/// The current imagery as text, one line per row.
///
/// # Safety
/// `agent` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn samu_agent_imagery(agent: *const SamuAgent, out: *mut *mut c_char) -> SamuStatus {
    guard(|| {
        let agent = agent.as_ref().ok_or_else(|| null("agent"))?;
        let pane = samu::tui::render_imagery_pane(&agent.session.statement_image());
        out_string(out, pane.join("\n"))
    })
}

/// Number of distinct triplets (actions) the agent knows.
///
/// # Safety
/// `agent` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn samu_agent_known_actions(agent: *const SamuAgent, out: *mut usize) -> SamuStatus {
    guard(|| {
        let agent = agent.as_ref().ok_or_else(|| null("agent"))?;
        let out = out.as_mut().ok_or_else(|| null("output pointer"))?;
        *out = agent.session.engine().known_actions();
        Ok(())
    })
}

/// Writes the soul file.
///
/// # Safety
/// `agent` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn samu_agent_save(agent: *mut SamuAgent) -> SamuStatus {
    guard(|| {
        let agent = agent.as_mut().ok_or_else(|| null("agent"))?;
        agent.session.save()?;
        Ok(())
    })
}

/// Runs one experiment (a [`SamuExperiment`] code) and writes its learning curve CSV to `out_csv`.
/// `config_path` may be null for the defaults; `seed` overrides the
/// config's seed.
///
/// # Safety
/// String arguments must be null (where allowed) or valid NUL-terminated
/// strings.
#[no_mangle]
pub unsafe extern "C" fn samu_run_experiment(
    kind: i32,
    config_path: *const c_char,
    seed: u64,
    out_csv: *const c_char,
) -> SamuStatus {
    guard(|| {
        let kind = match kind {
            k if k == SamuExperiment::Story as i32 => ExperimentKind::Story,
            k if k == SamuExperiment::Intro as i32 => ExperimentKind::Intro,
            k if k == SamuExperiment::Incremental as i32 => ExperimentKind::Incremental,
            k => return Err(Failure(SamuStatus::Invalid, format!("unknown experiment {k}"))),
        };
        let config = match opt_str_arg(config_path, "config_path")? {
            Some(p) => ExperimentConfig::load(Path::new(p), kind)?,
            None => ExperimentConfig::defaults(kind),
        }
        .with_seed(seed);
        config.validate()?;
        let out = Path::new(str_arg(out_csv, "out_csv")?);
        let outcome = harness::run(kind, &config, false)?;
        harness::emit_csv(&outcome.curve, out)?;
        Ok(())
    })
}
