//! GPU power through vendor management libraries.
//!
//! Every vendor is reduced to [`GpuReader`]: initialize, count devices, query
//! board power in milliwatts, shut down. Real libraries are loaded at run
//! time ([`nvml`], [`rocm`]); tests use [`scripted::ScriptedReader`].

pub mod nvml;
pub mod rocm;
pub mod scripted;

use std::fmt;
use std::time::Duration;

use libloading::Library;

use crate::backend::{CounterKind, RawBackend, Reading, SensorDescriptor};
use crate::error::{Error, Result};
use crate::state::Channel;

pub const MIN_INTERVAL: Duration = Duration::from_millis(10);

fn open_first(names: &[&str]) -> Result<Library, String> {
    let mut last = String::from("no candidates");
    for name in names {
        // SAFETY: loading a vendor management library runs its initializers,
        // which have no preconditions.
        match unsafe { Library::new(name) } {
            Ok(lib) => return Ok(lib),
            Err(e) => last = e.to_string(),
        }
    }
    Err(last)
}

/// # Safety
/// `T` must be the exact function pointer type of the exported symbol.
unsafe fn symbol<T: Copy>(library: &Library, name: &[u8]) -> Result<T, String> {
    library.get::<T>(name).map(|s| *s).map_err(|e| e.to_string())
}

/// Status code returned by a vendor call, with the call that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GpuError {
    pub code: i64,
    pub context: String,
}

impl GpuError {
    pub fn new(code: impl Into<i64>, context: impl Into<String>) -> Self {
        GpuError {
            code: code.into(),
            context: context.into(),
        }
    }
}

impl fmt::Display for GpuError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} returned {}", self.context, self.code)
    }
}

impl std::error::Error for GpuError {}

/// Minimal low-level contract for a GPU management interface.
///
/// `power_mw` is only valid between a successful `initialize` and the
/// matching `shutdown`.
pub trait GpuReader: Send {
    /// Short backend identifier, e.g. `nvml`.
    fn name(&self) -> &str;
    fn initialize(&mut self) -> Result<(), GpuError>;
    fn device_count(&mut self) -> Result<u32, GpuError>;
    fn power_mw(&mut self, device_index: u32) -> Result<u64, GpuError>;
    fn shutdown(&mut self) -> Result<(), GpuError>;
}

/// Current board power in watts.
pub fn sample_power(reader: &mut dyn GpuReader, device_index: u32) -> Result<f64> {
    reader
        .power_mw(device_index)
        .map(|mw| mw as f64 / 1000.0)
        .map_err(|e| Error::BackendReadFailed(e.to_string()))
}

/// One GPU as a power-kind sensor backend. Owns an initialized reader and
/// shuts it down exactly once.
pub struct GpuBackend {
    descriptor: SensorDescriptor,
    reader: Box<dyn GpuReader>,
    device_index: u32,
    initialized: bool,
}

impl fmt::Debug for GpuBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GpuBackend")
            .field("descriptor", &self.descriptor)
            .field("initialized", &self.initialized)
            .finish_non_exhaustive()
    }
}

impl GpuBackend {
    pub fn open(mut reader: Box<dyn GpuReader>, device_index: u32) -> Result<Self> {
        let name = reader.name().to_string();
        reader
            .initialize()
            .map_err(|e| Error::DeviceUnavailable(format!("{name}: {e}")))?;
        let mut backend = GpuBackend {
            descriptor: SensorDescriptor::new(
                name.clone(),
                device_index,
                CounterKind::InstantaneousPower,
                MIN_INTERVAL,
                vec![Channel::new(format!("gpu{device_index}"))],
            )?,
            reader,
            device_index,
            initialized: true,
        };
        // dropping `backend` on the error paths below shuts the reader down
        let count = backend
            .reader
            .device_count()
            .map_err(|e| Error::DeviceUnavailable(format!("{name}: {e}")))?;
        if device_index >= count {
            return Err(Error::DeviceUnavailable(format!(
                "{name}: device {device_index} requested, {count} present"
            )));
        }
        Ok(backend)
    }
}

impl RawBackend for GpuBackend {
    fn descriptor(&self) -> &SensorDescriptor {
        &self.descriptor
    }

    fn sample(&mut self) -> Result<Vec<Reading>> {
        let watts = sample_power(self.reader.as_mut(), self.device_index)?;
        Ok(vec![Reading::PowerWatts(watts)])
    }

    fn shutdown(&mut self) {
        if std::mem::take(&mut self.initialized) {
            if let Err(e) = self.reader.shutdown() {
                log::warn!("{e}");
            }
        }
    }
}

impl Drop for GpuBackend {
    fn drop(&mut self) {
        self.shutdown();
    }
}
