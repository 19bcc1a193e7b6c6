//! NVIDIA Management Library, loaded at run time.

use std::ffi::{c_int, c_uint, c_void};

use libloading::Library;

use super::{open_first, symbol, GpuError, GpuReader};

pub const BACKEND_NAME: &str = "nvml";

const LIBRARY_NAMES: &[&str] = &["libnvidia-ml.so.1", "libnvidia-ml.so"];
const NVML_SUCCESS: c_int = 0;

type NvmlDevice = *mut c_void;

pub struct NvmlReader {
    init: unsafe extern "C" fn() -> c_int,
    shutdown: unsafe extern "C" fn() -> c_int,
    device_count: unsafe extern "C" fn(*mut c_uint) -> c_int,
    handle_by_index: unsafe extern "C" fn(c_uint, *mut NvmlDevice) -> c_int,
    power_usage: unsafe extern "C" fn(NvmlDevice, *mut c_uint) -> c_int,
    // keeps the function pointers above valid
    _library: Library,
}

fn check(code: c_int, context: &str) -> Result<(), GpuError> {
    if code == NVML_SUCCESS {
        Ok(())
    } else {
        Err(GpuError::new(code, context))
    }
}

impl NvmlReader {
    /// Loads the driver library; fails if it is not installed.
    pub fn load() -> Result<Self, String> {
        let library = open_first(LIBRARY_NAMES)?;
        Ok(NvmlReader {
            init: unsafe { symbol(&library, b"nvmlInit_v2\0")? },
            shutdown: unsafe { symbol(&library, b"nvmlShutdown\0")? },
            device_count: unsafe { symbol(&library, b"nvmlDeviceGetCount_v2\0")? },
            handle_by_index: unsafe { symbol(&library, b"nvmlDeviceGetHandleByIndex_v2\0")? },
            power_usage: unsafe { symbol(&library, b"nvmlDeviceGetPowerUsage\0")? },
            _library: library,
        })
    }
}

impl GpuReader for NvmlReader {
    fn name(&self) -> &str {
        BACKEND_NAME
    }

    fn initialize(&mut self) -> Result<(), GpuError> {
        check(unsafe { (self.init)() }, "nvmlInit_v2")
    }

    fn device_count(&mut self) -> Result<u32, GpuError> {
        let mut count: c_uint = 0;
        check(unsafe { (self.device_count)(&mut count) }, "nvmlDeviceGetCount_v2")?;
        Ok(count)
    }

    fn power_mw(&mut self, device_index: u32) -> Result<u64, GpuError> {
        let mut device: NvmlDevice = std::ptr::null_mut();
        check(
            unsafe { (self.handle_by_index)(device_index, &mut device) },
            "nvmlDeviceGetHandleByIndex_v2",
        )?;
        let mut milliwatts: c_uint = 0;
        check(
            unsafe { (self.power_usage)(device, &mut milliwatts) },
            "nvmlDeviceGetPowerUsage",
        )?;
        Ok(u64::from(milliwatts))
    }

    fn shutdown(&mut self) -> Result<(), GpuError> {
        check(unsafe { (self.shutdown)() }, "nvmlShutdown")
    }
}
