//! AMD ROCm System Management Interface, loaded at run time.

use std::ffi::c_int;

use libloading::Library;

use super::{open_first, symbol, GpuError, GpuReader};

pub const BACKEND_NAME: &str = "rocm-smi";

const LIBRARY_NAMES: &[&str] = &[
    "librocm_smi64.so.1",
    "librocm_smi64.so",
    "/opt/rocm/lib/librocm_smi64.so.1",
    "/opt/rocm/lib/librocm_smi64.so",
];
const RSMI_STATUS_SUCCESS: c_int = 0;

pub struct RocmSmiReader {
    init: unsafe extern "C" fn(u64) -> c_int,
    shut_down: unsafe extern "C" fn() -> c_int,
    num_devices: unsafe extern "C" fn(*mut u32) -> c_int,
    power_ave: unsafe extern "C" fn(u32, u32, *mut u64) -> c_int,
    _library: Library,
}

fn check(code: c_int, context: &str) -> Result<(), GpuError> {
    if code == RSMI_STATUS_SUCCESS {
        Ok(())
    } else {
        Err(GpuError::new(code, context))
    }
}

impl RocmSmiReader {
    pub fn load() -> Result<Self, String> {
        let library = open_first(LIBRARY_NAMES)?;
        Ok(RocmSmiReader {
            init: unsafe { symbol(&library, b"rsmi_init\0")? },
            shut_down: unsafe { symbol(&library, b"rsmi_shut_down\0")? },
            num_devices: unsafe { symbol(&library, b"rsmi_num_monitor_devices\0")? },
            power_ave: unsafe { symbol(&library, b"rsmi_dev_power_ave_get\0")? },
            _library: library,
        })
    }
}

impl GpuReader for RocmSmiReader {
    fn name(&self) -> &str {
        BACKEND_NAME
    }

    fn initialize(&mut self) -> Result<(), GpuError> {
        check(unsafe { (self.init)(0) }, "rsmi_init")
    }

    fn device_count(&mut self) -> Result<u32, GpuError> {
        let mut count = 0u32;
        check(unsafe { (self.num_devices)(&mut count) }, "rsmi_num_monitor_devices")?;
        Ok(count)
    }

    fn power_mw(&mut self, device_index: u32) -> Result<u64, GpuError> {
        let mut microwatts = 0u64;
        check(
            unsafe { (self.power_ave)(device_index, 0, &mut microwatts) },
            "rsmi_dev_power_ave_get",
        )?;
        Ok(microwatts / 1000)
    }

    fn shutdown(&mut self) -> Result<(), GpuError> {
        check(unsafe { (self.shut_down)() }, "rsmi_shut_down")
    }
}
