//! C ABI for netra-core.
//!
//! Every function returns a [`NetraStatus`]; results come back through out
//! pointers. Handles are opaque and must be released with their `_free`
//! function. Strings returned to C are owned by the caller and released with
//! [`netra_string_free`]. On failure, [`netra_last_error_message`] describes
//! the most recent error on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use netra_core::alerting::{self, Alert, PAYLOAD_LEN};
use netra_core::classify::{Label, Priority};
use netra_core::fusion::{self, FusionConfig, RejectReason};
use netra_core::sensing::{calibrate_background, tof_distance, CalibrationState};
use netra_core::sim::{self, ReportFile, Scenario};
use netra_core::NetraError;

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetraStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Parse = 4,
    Integrity = 5,
    Length = 6,
    Version = 7,
    Malformed = 8,
    InvalidInput = 9,
    Calibration = 10,
    NotFound = 11,
    Io = 12,
    Undefined = 13,
    BufferTooSmall = 14,
    Panic = 99,
}

/// Bytes in an encoded alert frame.
pub const NETRA_PAYLOAD_LEN: usize = 31;

const _: () = assert!(NETRA_PAYLOAD_LEN == PAYLOAD_LEN);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &NetraError) -> NetraStatus {
    match err {
        NetraError::Config { .. } => NetraStatus::Config,
        NetraError::Parse { .. } => NetraStatus::Parse,
        NetraError::Integrity { .. } => NetraStatus::Integrity,
        NetraError::Length { .. } => NetraStatus::Length,
        NetraError::Version(_) => NetraStatus::Version,
        NetraError::Malformed(_) => NetraStatus::Malformed,
        NetraError::InvalidSample(_) | NetraError::InvalidDetection(_) | NetraError::InvalidAlert(_) => {
            NetraStatus::InvalidInput
        }
        NetraError::CalibrationArity { .. } | NetraError::CalibrationIncomplete { .. } => {
            NetraStatus::Calibration
        }
        NetraError::Io { kind, .. } if *kind == std::io::ErrorKind::NotFound => NetraStatus::NotFound,
        NetraError::Io { .. } => NetraStatus::Io,
        NetraError::Undefined(_) => NetraStatus::Undefined,
    }
}

fn fail(err: NetraError) -> NetraStatus {
    let status = status_of(&err);
    set_error(err.to_string());
    status
}

fn guard(f: impl FnOnce() -> NetraStatus) -> NetraStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| {
        set_error("internal panic");
        NetraStatus::Panic
    })
}

fn null_ptr(what: &str) -> NetraStatus {
    set_error(format!("{what} is NULL"));
    NetraStatus::NullPointer
}

/// Alert fields. `label` and `priority` use the wire codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetraAlert {
    pub alert_id: u64,
    /// 0 background, 1 human, 2 animal, 3 elephant, 4 obstruction.
    pub label: u8,
    /// 0 critical, 1 high, 2 medium, 3 low.
    pub priority: u8,
    pub ips: f64,
    pub lat: f64,
    pub lon: f64,
    pub timestamp_ms: u64,
}

impl From<&Alert> for NetraAlert {
    fn from(a: &Alert) -> Self {
        NetraAlert {
            alert_id: a.alert_id,
            label: a.label.code(),
            priority: a.priority.code(),
            ips: a.ips,
            lat: a.lat,
            lon: a.lon,
            timestamp_ms: a.timestamp_ms,
        }
    }
}

fn to_alert(a: &NetraAlert) -> Result<Alert, NetraError> {
    let label = Label::from_code(a.label)
        .ok_or_else(|| NetraError::InvalidAlert(format!("unknown label code {}", a.label)))?;
    let priority = Priority::from_code(a.priority)
        .ok_or_else(|| NetraError::InvalidAlert(format!("unknown priority code {}", a.priority)))?;
    Ok(Alert {
        alert_id: a.alert_id,
        label,
        priority,
        ips: a.ips,
        lat: a.lat,
        lon: a.lon,
        timestamp_ms: a.timestamp_ms,
    })
}

/// Message for the last failure on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn netra_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn netra_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Build a quantized alert and derive its id.
///
/// # Safety
/// `out` must be NULL or point to writable memory for one `NetraAlert`.
#[no_mangle]
pub unsafe extern "C" fn netra_alert_new(
    label: u8,
    priority: u8,
    ips: f64,
    lat: f64,
    lon: f64,
    timestamp_ms: u64,
    out: *mut NetraAlert,
) -> NetraStatus {
    guard(|| {
        if out.is_null() {
            return null_ptr("out");
        }
        let raw = NetraAlert {
            alert_id: 0,
            label,
            priority,
            ips,
            lat,
            lon,
            timestamp_ms,
        };
        let built = to_alert(&raw)
            .and_then(|a| Alert::new(a.label, a.priority, ips, lat, lon, timestamp_ms));
        match built {
            Ok(a) => {
                *out = NetraAlert::from(&a);
                NetraStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Encode `alert` into `out`, which must hold at least `NETRA_PAYLOAD_LEN`
/// bytes.
///
/// # Safety
/// `alert` must point to a valid `NetraAlert`; `out` to `out_len` writable
/// bytes.
#[no_mangle]
pub unsafe extern "C" fn netra_encode_payload(
    alert: *const NetraAlert,
    out: *mut u8,
    out_len: usize,
) -> NetraStatus {
    guard(|| {
        if alert.is_null() {
            return null_ptr("alert");
        }
        if out.is_null() {
            return null_ptr("out");
        }
        if out_len < PAYLOAD_LEN {
            set_error(format!("output buffer holds {out_len} bytes, need {PAYLOAD_LEN}"));
            return NetraStatus::BufferTooSmall;
        }
        match to_alert(&*alert).and_then(|a| alerting::encode_payload(&a)) {
            Ok(frame) => {
                std::ptr::copy_nonoverlapping(frame.as_ptr(), out, PAYLOAD_LEN);
                NetraStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Decode and verify a frame.
///
/// # Safety
/// `buf` must point to `len` readable bytes; `out` to one writable
/// `NetraAlert`.
#[no_mangle]
pub unsafe extern "C" fn netra_decode_payload(
    buf: *const u8,
    len: usize,
    out: *mut NetraAlert,
) -> NetraStatus {
    guard(|| {
        if buf.is_null() {
            return null_ptr("buf");
        }
        if out.is_null() {
            return null_ptr("out");
        }
        let bytes = std::slice::from_raw_parts(buf, len);
        match alerting::decode_payload(bytes) {
            Ok(a) => {
                *out = NetraAlert::from(&a);
                NetraStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// LoRa time on air at 125 kHz, CR 4/5.
///
/// # Safety
/// `out_s` must point to a writable `double`.
#[no_mangle]
pub unsafe extern "C" fn netra_airtime_s(payload_len: usize, sf: u8, out_s: *mut f64) -> NetraStatus {
    guard(|| {
        if out_s.is_null() {
            return null_ptr("out_s");
        }
        match alerting::LoraParams::new(sf).airtime(payload_len) {
            Ok(t) => {
                *out_s = t;
                NetraStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Calibrated fusion gate.
pub struct NetraFusion {
    calib: CalibrationState,
    cfg: FusionConfig,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetraDecision {
    pub camera: bool,
    pub p_intrusion: f64,
    pub p_dist: f64,
    /// 0 none, 1 no motion, 2 non-positive change, 3 out of range, 4 below
    /// threshold.
    pub reject_reason: u8,
}

/// Calibrate from exactly five empty-track distances, in metres.
///
/// # Safety
/// `distances` must point to `n` readable doubles; `out` to a writable
/// handle pointer.
#[no_mangle]
pub unsafe extern "C" fn netra_fusion_new(
    distances: *const f64,
    n: usize,
    out: *mut *mut NetraFusion,
) -> NetraStatus {
    guard(|| {
        if distances.is_null() {
            return null_ptr("distances");
        }
        if out.is_null() {
            return null_ptr("out");
        }
        let d = std::slice::from_raw_parts(distances, n);
        match calibrate_background(d) {
            Ok(calib) => {
                *out = Box::into_raw(Box::new(NetraFusion {
                    calib,
                    cfg: FusionConfig::default(),
                }));
                NetraStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `handle` must come from `netra_fusion_new`.
#[no_mangle]
pub unsafe extern "C" fn netra_fusion_set_tau(handle: *mut NetraFusion, tau_c: f64) -> NetraStatus {
    guard(|| {
        let Some(h) = handle.as_mut() else {
            return null_ptr("handle");
        };
        let cfg = FusionConfig { tau_c, ..h.cfg.clone() };
        match cfg.validate() {
            Ok(()) => {
                h.cfg = cfg;
                NetraStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Score one sensing cycle. A negative `echo_time_s` means no echo.
///
/// # Safety
/// `handle` must come from `netra_fusion_new`; `out` must point to a
/// writable `NetraDecision`.
#[no_mangle]
pub unsafe extern "C" fn netra_fusion_decide(
    handle: *const NetraFusion,
    pir: bool,
    echo_time_s: f64,
    out: *mut NetraDecision,
) -> NetraStatus {
    guard(|| {
        let Some(h) = handle.as_ref() else {
            return null_ptr("handle");
        };
        if out.is_null() {
            return null_ptr("out");
        }
        let d = if echo_time_s < 0.0 {
            None
        } else {
            match tof_distance(echo_time_s, h.cfg.v_sound) {
                Ok(d) => Some(d),
                Err(e) => return fail(e),
            }
        };
        match fusion::decide(pir, d, &h.calib, &h.cfg) {
            Ok(dec) => {
                *out = NetraDecision {
                    camera: dec.camera,
                    p_intrusion: dec.p_intrusion,
                    p_dist: dec.p_dist,
                    reject_reason: match dec.reject_reason {
                        RejectReason::None => 0,
                        RejectReason::NoMotion => 1,
                        RejectReason::NonPositiveDelta => 2,
                        RejectReason::OutOfRange => 3,
                        RejectReason::BelowThreshold => 4,
                    },
                };
                NetraStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `handle` must be NULL or come from `netra_fusion_new`, freed once.
#[no_mangle]
pub unsafe extern "C" fn netra_fusion_free(handle: *mut NetraFusion) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Loaded scenario, ready to run.
pub struct NetraScenario {
    inner: Scenario,
}

/// Load a scenario file. Pass `has_seed = false` to keep the file's seed.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` a writable handle pointer.
#[no_mangle]
pub unsafe extern "C" fn netra_scenario_load(
    path: *const c_char,
    has_seed: bool,
    seed: u64,
    out: *mut *mut NetraScenario,
) -> NetraStatus {
    guard(|| {
        if path.is_null() {
            return null_ptr("path");
        }
        if out.is_null() {
            return null_ptr("out");
        }
        let Ok(p) = CStr::from_ptr(path).to_str() else {
            set_error("path is not valid UTF-8");
            return NetraStatus::InvalidUtf8;
        };
        match Scenario::load(Path::new(p), has_seed.then_some(seed)) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(NetraScenario { inner }));
                NetraStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Run the scenario and return the report as JSON. Free the string with
/// `netra_string_free`.
///
/// # Safety
/// `handle` must come from `netra_scenario_load`; `out_json` must be a
/// writable pointer.
#[no_mangle]
pub unsafe extern "C" fn netra_scenario_run_json(
    handle: *const NetraScenario,
    out_json: *mut *mut c_char,
) -> NetraStatus {
    guard(|| {
        let Some(h) = handle.as_ref() else {
            return null_ptr("handle");
        };
        if out_json.is_null() {
            return null_ptr("out_json");
        }
        match sim::run(&h.inner) {
            Ok(r) => match CString::new(ReportFile::run(r).to_json()) {
                Ok(s) => {
                    *out_json = s.into_raw();
                    NetraStatus::Ok
                }
                Err(_) => {
                    set_error("report contains NUL");
                    NetraStatus::Panic
                }
            },
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `handle` must be NULL or come from `netra_scenario_load`, freed once.
#[no_mangle]
pub unsafe extern "C" fn netra_scenario_free(handle: *mut NetraScenario) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// # Safety
/// `s` must be NULL or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn netra_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
