//! C ABI over `pmt-core`, the boundary scripting-language bindings link
//! against. The matching declarations live in `include/pmt.h`.
//!
//! Every function returns a [`PmtStatus`]; on failure the message is kept in
//! a thread-local slot readable with [`pmt_last_error`]. Handles are opaque
//! and owned by the caller until passed to their `_free`/`_destroy`
//! function. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pmt_core::{Config, Error, Measurement, Sensor, State};

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PmtStatus {
    Ok = 0,
    UnknownBackend = 1,
    DeviceUnavailable = 2,
    InvalidConfig = 3,
    IntervalTooSmall = 4,
    SensorStopped = 5,
    BackendReadFailed = 6,
    NegativeInterval = 7,
    DegenerateMeasurement = 8,
    DumpAlreadyActive = 9,
    DumpNotActive = 10,
    Io = 11,
    Parse = 12,
    NullPointer = 13,
    InvalidUtf8 = 14,
    Panic = 15,
}

impl From<&Error> for PmtStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::UnknownBackend(_) => PmtStatus::UnknownBackend,
            Error::DeviceUnavailable(_) | Error::NoDomainsFound(_) | Error::MixedKinds(_) => {
                PmtStatus::DeviceUnavailable
            }
            Error::InvalidConfig(_) => PmtStatus::InvalidConfig,
            Error::IntervalTooSmall { .. } => PmtStatus::IntervalTooSmall,
            Error::SensorStopped(_) => PmtStatus::SensorStopped,
            Error::BackendReadFailed(_) => PmtStatus::BackendReadFailed,
            Error::NegativeInterval => PmtStatus::NegativeInterval,
            Error::DegenerateMeasurement(_) => PmtStatus::DegenerateMeasurement,
            Error::DumpAlreadyActive => PmtStatus::DumpAlreadyActive,
            Error::DumpNotActive => PmtStatus::DumpNotActive,
            Error::Io { .. } => PmtStatus::Io,
            Error::Parse { .. } | Error::TraceParse { .. } | Error::EmptyTrace => PmtStatus::Parse,
        }
    }
}

/// Opaque sensor handle.
pub struct PmtSensor(Sensor);

/// Opaque snapshot handle.
pub struct PmtState(State);

/// Energy, average power and duration of one region.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PmtMeasurement {
    pub joules: f64,
    pub watts: f64,
    pub seconds: f64,
}

impl From<&Measurement> for PmtMeasurement {
    fn from(m: &Measurement) -> Self {
        PmtMeasurement {
            joules: m.joules,
            watts: m.watts,
            seconds: m.seconds,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

struct Failure(PmtStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(PmtStatus::from(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PmtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            PmtStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            PmtStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(PmtStatus::NullPointer, format!("{what} is null"))
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn as_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(PmtStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

/// Creates a sensor. `config` may be null or a `key=value;key=value` string.
///
/// # Safety
/// `backend` and non-null `config` must be NUL-terminated strings; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn pmt_create(
    backend: *const c_char,
    device: u32,
    config: *const c_char,
    out: *mut *mut PmtSensor,
) -> PmtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        out.write(ptr::null_mut());
        let name = as_str(backend, "backend")?;
        let config: Config = if config.is_null() {
            Config::new()
        } else {
            as_str(config, "config")?.parse()?
        };
        let sensor = pmt_core::create_sensor(name, device, &config)?;
        out.write(Box::into_raw(Box::new(PmtSensor(sensor))));
        Ok(())
    })
}

/// Stops and frees a sensor. Null is ignored.
///
/// # Safety
/// `sensor` must come from [`pmt_create`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pmt_destroy(sensor: *mut PmtSensor) {
    if !sensor.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(sensor))));
    }
}

/// Takes a snapshot; free it with [`pmt_state_free`].
///
/// # Safety
/// `sensor` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pmt_read(sensor: *const PmtSensor, out: *mut *mut PmtState) -> PmtStatus {
    guard(|| {
        let state = as_ref(sensor, "sensor")?.0.read()?;
        write_out(out, Box::into_raw(Box::new(PmtState(state))))
    })
}

/// # Safety
/// `state` must come from [`pmt_read`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pmt_state_free(state: *mut PmtState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Seconds since the sensor started.
///
/// # Safety
/// `state` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pmt_state_timestamp(state: *const PmtState, out: *mut f64) -> PmtStatus {
    guard(|| write_out(out, as_ref(state, "state")?.0.timestamp()))
}

/// Cumulative joules since the sensor started.
///
/// # Safety
/// `state` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pmt_state_joules(state: *const PmtState, out: *mut f64) -> PmtStatus {
    guard(|| write_out(out, as_ref(state, "state")?.0.joules_total()))
}

unsafe fn between(
    start: *const PmtState,
    end: *const PmtState,
    out: *mut f64,
    f: fn(&State, &State) -> pmt_core::Result<f64>,
) -> PmtStatus {
    guard(|| {
        let v = f(&as_ref(start, "start")?.0, &as_ref(end, "end")?.0)?;
        write_out(out, v)
    })
}

/// # Safety
/// `start` and `end` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pmt_joules(start: *const PmtState, end: *const PmtState, out: *mut f64) -> PmtStatus {
    between(start, end, out, pmt_core::joules)
}

/// # Safety
/// `start` and `end` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pmt_watts(start: *const PmtState, end: *const PmtState, out: *mut f64) -> PmtStatus {
    between(start, end, out, pmt_core::watts)
}

/// # Safety
/// `start` and `end` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pmt_seconds(start: *const PmtState, end: *const PmtState, out: *mut f64) -> PmtStatus {
    between(start, end, out, pmt_core::seconds)
}

/// # Safety
/// `start` and `end` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pmt_measurement_between(
    start: *const PmtState,
    end: *const PmtState,
    out: *mut PmtMeasurement,
) -> PmtStatus {
    guard(|| {
        let m = Measurement::between("", &as_ref(start, "start")?.0, &as_ref(end, "end")?.0)?;
        write_out(out, PmtMeasurement::from(&m))
    })
}

fn to_core(m: &PmtMeasurement) -> Measurement {
    Measurement {
        joules: m.joules,
        watts: m.watts,
        seconds: m.seconds,
        backend_name: String::new(),
    }
}

/// Joules times seconds.
///
/// # Safety
/// `m` must be readable; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pmt_energy_delay_product(m: *const PmtMeasurement, out: *mut f64) -> PmtStatus {
    guard(|| write_out(out, pmt_core::energy_delay_product(&to_core(as_ref(m, "measurement")?))))
}

/// GFLOP/s per watt.
///
/// # Safety
/// `m` must be readable; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pmt_flops_efficiency(
    m: *const PmtMeasurement,
    flop_count: u64,
    out: *mut f64,
) -> PmtStatus {
    guard(|| {
        let v = pmt_core::flops_efficiency(&to_core(as_ref(m, "measurement")?), flop_count)?;
        write_out(out, v)
    })
}

/// # Safety
/// `sensor` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn pmt_start_dump(sensor: *const PmtSensor, path: *const c_char) -> PmtStatus {
    guard(|| {
        let sensor = as_ref(sensor, "sensor")?;
        sensor.0.start_dump(as_str(path, "path")?)?;
        Ok(())
    })
}

/// Flushes and closes the active dump.
///
/// # Safety
/// `sensor` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pmt_stop_dump(sensor: *const PmtSensor) -> PmtStatus {
    guard(|| {
        as_ref(sensor, "sensor")?.0.stop_dump()?;
        Ok(())
    })
}

/// Stops sampling; later reads return the final snapshot.
///
/// # Safety
/// `sensor` must be a live handle not used concurrently by other calls.
#[no_mangle]
pub unsafe extern "C" fn pmt_stop(sensor: *mut PmtSensor) -> PmtStatus {
    guard(|| {
        sensor.as_mut().ok_or_else(|| null("sensor"))?.0.stop();
        Ok(())
    })
}

/// Copies the calling thread's last error message into `buf` (truncated and
/// NUL-terminated) and returns its full length in bytes, excluding the NUL.
///
/// # Safety
/// `buf` must be null or writable for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn pmt_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast(), buf, n);
            buf.add(n).write(0);
        }
        msg.len()
    })
}
