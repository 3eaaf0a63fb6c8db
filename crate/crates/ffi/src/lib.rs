//! C ABI for the secrecy-policy solver.
//!
//! The surface is handle-based: parse a configuration into an opaque
//! `OspConfig`, solve it into an opaque `OspReport`, query scalars and
//! buffers, simulate, free. Every function returns an [`OspStatus`] code;
//! `osp_last_error` retrieves a thread-local message for the most recent
//! failure on the calling thread.
//!
//! The companion header `include/osp.h` is generated by cbindgen during the
//! build.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use osp_core::experiment::{self, Variant};
use osp_core::mdp::{self, SolveOptions, SolveReport};
use osp_core::models::SystemConfig;
use osp_core::powersplit::Splitter;
use osp_core::sim::{self, SimOptions};

/// Status codes returned by every FFI entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OspStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidArgument = 4,
    SolveError = 5,
    SimError = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Channel-knowledge scenario selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OspVariant {
    Full = 0,
    PartialConstantRate = 1,
    PartialVariableRate = 2,
    Statistical = 3,
}

/// Opaque parsed configuration.
pub struct OspConfig {
    inner: SystemConfig,
}

/// Opaque solve outcome; keeps the configuration it was solved for.
pub struct OspReport {
    config: SystemConfig,
    report: SolveReport,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn guard<F: FnOnce() -> OspStatus>(f: F) -> OspStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            OspStatus::Panic
        }
    }
}

/// Parses an experiment configuration (the `[system]`/`[channels]` sections
/// define the problem; any sweep section is ignored here) into a config
/// handle. The handle must be released with `osp_config_free`.
///
/// # Safety
/// `text` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn osp_config_parse(text: *const c_char, out: *mut *mut OspConfig) -> OspStatus {
    guard(|| {
        if text.is_null() || out.is_null() {
            set_error("null pointer argument");
            return OspStatus::NullPointer;
        }
        let raw = unsafe { CStr::from_ptr(text) };
        let Ok(text) = raw.to_str() else {
            set_error("configuration text is not valid UTF-8");
            return OspStatus::InvalidUtf8;
        };
        match experiment::parse_experiment(text) {
            Ok(spec) => {
                let handle = Box::new(OspConfig { inner: spec.base });
                unsafe { *out = Box::into_raw(handle) };
                OspStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                OspStatus::ParseError
            }
        }
    })
}

/// Rewrites the channel-knowledge scenario of a parsed configuration.
///
/// # Safety
/// `config` must be a live handle from `osp_config_parse`.
#[no_mangle]
pub unsafe extern "C" fn osp_config_set_variant(config: *mut OspConfig, variant: OspVariant) -> OspStatus {
    guard(|| {
        let Some(config) = (unsafe { config.as_mut() }) else {
            set_error("null config handle");
            return OspStatus::NullPointer;
        };
        let v = match variant {
            OspVariant::Full => Variant::Full,
            OspVariant::PartialConstantRate => Variant::ParCon,
            OspVariant::PartialVariableRate => Variant::ParVar,
            OspVariant::Statistical => Variant::Stat,
        };
        // Validate on a copy so a rejected switch leaves the handle usable.
        let mut updated = config.inner.clone();
        v.apply(&mut updated);
        if let Err(e) = updated.validate() {
            set_error(&e.to_string());
            return OspStatus::InvalidArgument;
        }
        config.inner = updated;
        OspStatus::Ok
    })
}

/// Battery capacity of a parsed configuration, in energy quanta.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn osp_config_battery_capacity(config: *const OspConfig) -> u32 {
    unsafe { config.as_ref() }.map_or(0, |c| c.inner.e_max)
}

/// Releases a config handle. Passing NULL is a no-op.
///
/// # Safety
/// `config` must be NULL or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn osp_config_free(config: *mut OspConfig) {
    if !config.is_null() {
        drop(unsafe { Box::from_raw(config) });
    }
}

/// Solves a configuration for its optimal secrecy policy.
///
/// `uniform_split` nonzero replaces the optimal power splitting with the
/// uniform baseline. The report handle must be released with
/// `osp_report_free`.
///
/// # Safety
/// `config` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn osp_solve(
    config: *const OspConfig,
    uniform_split: i32,
    out: *mut *mut OspReport,
) -> OspStatus {
    guard(|| {
        let Some(config) = (unsafe { config.as_ref() }) else {
            set_error("null config handle");
            return OspStatus::NullPointer;
        };
        if out.is_null() {
            set_error("null output pointer");
            return OspStatus::NullPointer;
        }
        let opts = SolveOptions {
            splitter: if uniform_split != 0 { Splitter::Uniform } else { Splitter::Optimal },
            ..SolveOptions::default()
        };
        match mdp::solve(&config.inner, &opts) {
            Ok(report) => {
                let handle = Box::new(OspReport { config: config.inner.clone(), report });
                unsafe { *out = Box::into_raw(handle) };
                OspStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                OspStatus::SolveError
            }
        }
    })
}

/// Long-run secrecy rate of a solved policy in bits per slot.
///
/// # Safety
/// `report` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn osp_report_gain(report: *const OspReport) -> f64 {
    unsafe { report.as_ref() }.map_or(f64::NAN, |r| r.report.gain)
}

/// Policy-iteration rounds the solve took.
///
/// # Safety
/// `report` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn osp_report_iterations(report: *const OspReport) -> u32 {
    unsafe { report.as_ref() }.map_or(0, |r| r.report.iterations as u32)
}

/// Number of battery levels (e_max + 1) in the steady-state vector.
///
/// # Safety
/// `report` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn osp_report_battery_levels(report: *const OspReport) -> usize {
    unsafe { report.as_ref() }.map_or(0, |r| r.report.battery_steady_state.len())
}

/// Number of channel states the policy distinguishes.
///
/// # Safety
/// `report` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn osp_report_channel_states(report: *const OspReport) -> usize {
    unsafe { report.as_ref() }.map_or(0, |r| r.report.channel_states.len())
}

/// Copies the battery steady-state distribution into `buf`.
///
/// # Safety
/// `report` must be a live handle and `buf` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn osp_report_battery_steady_state(
    report: *const OspReport,
    buf: *mut f64,
    len: usize,
) -> OspStatus {
    guard(|| {
        let Some(report) = (unsafe { report.as_ref() }) else {
            set_error("null report handle");
            return OspStatus::NullPointer;
        };
        if buf.is_null() {
            set_error("null buffer");
            return OspStatus::NullPointer;
        }
        let pi = &report.report.battery_steady_state;
        if len < pi.len() {
            set_error("steady-state buffer too small");
            return OspStatus::BufferTooSmall;
        }
        unsafe { ptr::copy_nonoverlapping(pi.as_ptr(), buf, pi.len()) };
        OspStatus::Ok
    })
}

/// Total transmit power (in quanta) the policy assigns to one state.
///
/// # Safety
/// `report` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn osp_report_action(
    report: *const OspReport,
    battery: u32,
    channel_state: usize,
    out: *mut u32,
) -> OspStatus {
    guard(|| {
        let Some(report) = (unsafe { report.as_ref() }) else {
            set_error("null report handle");
            return OspStatus::NullPointer;
        };
        if out.is_null() {
            set_error("null output pointer");
            return OspStatus::NullPointer;
        }
        if battery > report.report.e_max || channel_state >= report.report.channel_states.len() {
            set_error("state index out of range");
            return OspStatus::InvalidArgument;
        }
        unsafe { *out = report.report.policy.total.action(battery, channel_state) };
        OspStatus::Ok
    })
}

/// Simulates the solved policy and returns the empirical rate and its
/// batch-means standard error.
///
/// # Safety
/// `report` must be a live handle; `rate_out` and `std_err_out` must be
/// valid pointers.
#[no_mangle]
pub unsafe extern "C" fn osp_simulate(
    report: *const OspReport,
    slots: u64,
    seed: u64,
    rate_out: *mut f64,
    std_err_out: *mut f64,
) -> OspStatus {
    guard(|| {
        let Some(report) = (unsafe { report.as_ref() }) else {
            set_error("null report handle");
            return OspStatus::NullPointer;
        };
        if rate_out.is_null() || std_err_out.is_null() {
            set_error("null output pointer");
            return OspStatus::NullPointer;
        }
        let opts = SimOptions { slots, seed, ..SimOptions::default() };
        match sim::simulate(&report.config, &report.report.policy, &opts) {
            Ok(res) => {
                unsafe {
                    *rate_out = res.rate;
                    *std_err_out = res.std_err;
                }
                OspStatus::Ok
            }
            Err(e) => {
                set_error(&e.to_string());
                OspStatus::SimError
            }
        }
    })
}

/// Releases a report handle. Passing NULL is a no-op.
///
/// # Safety
/// `report` must be NULL or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn osp_report_free(report: *mut OspReport) {
    if !report.is_null() {
        drop(unsafe { Box::from_raw(report) });
    }
}

/// Message of the most recent error on this thread. The pointer stays valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn osp_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;

    const CONFIG: &str = "
[system]
e_max = 6
quant_levels = 3
arrival_b_max = 3
arrival_mean = 1.0
[channels]
legit = gamma m=1 mean=2.0
eave = gamma m=1 mean=1.0
";

    fn parse(text: &str) -> *mut OspConfig {
        let ctext = CString::new(text).unwrap();
        let mut handle: *mut OspConfig = ptr::null_mut();
        let status = unsafe { osp_config_parse(ctext.as_ptr(), &mut handle) };
        assert_eq!(status, OspStatus::Ok);
        handle
    }

    #[test]
    fn parse_solve_query_simulate_free() {
        let config = parse(CONFIG);
        assert_eq!(unsafe { osp_config_battery_capacity(config) }, 6);
        let mut report: *mut OspReport = ptr::null_mut();
        assert_eq!(unsafe { osp_solve(config, 0, &mut report) }, OspStatus::Ok);
        let gain = unsafe { osp_report_gain(report) };
        assert!(gain > 0.0);
        assert!(unsafe { osp_report_iterations(report) } >= 1);

        let levels = unsafe { osp_report_battery_levels(report) };
        assert_eq!(levels, 7);
        let mut pi = vec![0.0; levels];
        assert_eq!(
            unsafe { osp_report_battery_steady_state(report, pi.as_mut_ptr(), pi.len()) },
            OspStatus::Ok
        );
        assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-9);

        let mut action = 0u32;
        let states = unsafe { osp_report_channel_states(report) };
        assert_eq!(states, 9);
        assert_eq!(unsafe { osp_report_action(report, 6, 0, &mut action) }, OspStatus::Ok);
        assert!(action <= 6);

        let mut rate = 0.0;
        let mut std_err = 0.0;
        assert_eq!(
            unsafe { osp_simulate(report, 100_000, 7, &mut rate, &mut std_err) },
            OspStatus::Ok
        );
        assert!((rate - gain).abs() <= (3.0 * std_err).max(0.02 * gain));

        unsafe {
            osp_report_free(report);
            osp_config_free(config);
        }
    }

    #[test]
    fn variant_switch_changes_solution() {
        let config = parse(CONFIG);
        let mut full: *mut OspReport = ptr::null_mut();
        assert_eq!(unsafe { osp_solve(config, 0, &mut full) }, OspStatus::Ok);
        assert_eq!(
            unsafe { osp_config_set_variant(config, OspVariant::Statistical) },
            OspStatus::Ok
        );
        let mut stat: *mut OspReport = ptr::null_mut();
        assert_eq!(unsafe { osp_solve(config, 0, &mut stat) }, OspStatus::Ok);
        let full_gain = unsafe { osp_report_gain(full) };
        let stat_gain = unsafe { osp_report_gain(stat) };
        assert!(full_gain > stat_gain, "full knowledge must beat statistics ({full_gain} vs {stat_gain})");
        unsafe {
            osp_report_free(full);
            osp_report_free(stat);
            osp_config_free(config);
        }
    }

    #[test]
    fn rejected_variant_switch_keeps_handle_usable() {
        // Discrete eavesdropper models cannot serve the expectation-based
        // variants, so the switch fails but the handle still solves.
        let text = "
[system]
e_max = 4
quant_levels = 2
arrival_b_max = 2
arrival_mean = 0.8
[channels]
legit = discrete gains=1/30,3/30 probs=0.7,0.3
eave = discrete gains=1/30,3/30 probs=0.7,0.3
";
        let config = parse(text);
        let status = unsafe { osp_config_set_variant(config, OspVariant::Statistical) };
        assert_eq!(status, OspStatus::InvalidArgument);
        let mut report: *mut OspReport = ptr::null_mut();
        assert_eq!(unsafe { osp_solve(config, 0, &mut report) }, OspStatus::Ok);
        unsafe {
            osp_report_free(report);
            osp_config_free(config);
        }
    }

    #[test]
    fn errors_set_message_and_status() {
        let bad = CString::new("[system]\ne_max = banana\n").unwrap();
        let mut handle: *mut OspConfig = ptr::null_mut();
        let status = unsafe { osp_config_parse(bad.as_ptr(), &mut handle) };
        assert_eq!(status, OspStatus::ParseError);
        let msg = unsafe { CStr::from_ptr(osp_last_error()) }.to_str().unwrap();
        assert!(msg.contains("e_max"), "unexpected message: {msg}");

        let status = unsafe { osp_config_parse(ptr::null(), &mut handle) };
        assert_eq!(status, OspStatus::NullPointer);

        let mut out = 0u32;
        let report: *const OspReport = ptr::null();
        assert_eq!(unsafe { osp_report_action(report, 0, 0, &mut out) }, OspStatus::NullPointer);
        assert!(unsafe { osp_report_gain(report) }.is_nan());
    }
}
