//! Scriptable [`GpuReader`] double.

use std::sync::{Arc, Mutex};
use std::time::Instant;

use super::{GpuError, GpuReader};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GpuCall {
    Initialize,
    DeviceCount,
    PowerMw(u32),
    Shutdown,
}

/// Shared record of the calls made on a [`ScriptedReader`].
#[derive(Debug, Clone, Default)]
pub struct CallLog(Arc<Mutex<Vec<GpuCall>>>);

impl CallLog {
    fn push(&self, call: GpuCall) {
        self.0.lock().unwrap_or_else(|e| e.into_inner()).push(call);
    }

    pub fn calls(&self) -> Vec<GpuCall> {
        self.0.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }

    pub fn count(&self, call: GpuCall) -> usize {
        self.calls().iter().filter(|c| **c == call).count()
    }

    pub fn power_queries(&self) -> usize {
        self.calls()
            .iter()
            .filter(|c| matches!(c, GpuCall::PowerMw(_)))
            .count()
    }

    /// Every query and shutdown happened inside an initialize/shutdown pair.
    pub fn is_well_ordered(&self) -> bool {
        let mut open = false;
        for call in self.calls() {
            match call {
                GpuCall::Initialize if open => return false,
                GpuCall::Initialize => open = true,
                GpuCall::Shutdown if !open => return false,
                GpuCall::Shutdown => open = false,
                GpuCall::DeviceCount | GpuCall::PowerMw(_) if !open => return false,
                _ => {}
            }
        }
        true
    }
}

type PowerScript = dyn Fn(f64) -> Result<u64, i64> + Send + Sync;

/// A fake GPU whose power draw is a function of seconds since `initialize`.
pub struct ScriptedReader {
    devices: u32,
    script: Arc<PowerScript>,
    fail_initialize: bool,
    initialized_at: Option<Instant>,
    log: CallLog,
}

impl ScriptedReader {
    pub fn with_profile(
        devices: u32,
        script: impl Fn(f64) -> Result<u64, i64> + Send + Sync + 'static,
    ) -> Self {
        ScriptedReader {
            devices,
            script: Arc::new(script),
            fail_initialize: false,
            initialized_at: None,
            log: CallLog::default(),
        }
    }

    pub fn constant(devices: u32, milliwatts: u64) -> Self {
        Self::with_profile(devices, move |_| Ok(milliwatts))
    }

    /// Idle/burst square wave: `peak_mw` during the first half of each
    /// period, `idle_mw` during the second.
    pub fn square(devices: u32, idle_mw: u64, peak_mw: u64, period_s: f64) -> Self {
        Self::with_profile(devices, move |t| {
            Ok(if t % period_s < period_s / 2.0 { peak_mw } else { idle_mw })
        })
    }

    pub fn failing_initialize(mut self) -> Self {
        self.fail_initialize = true;
        self
    }

    pub fn call_log(&self) -> CallLog {
        self.log.clone()
    }
}

impl GpuReader for ScriptedReader {
    fn name(&self) -> &str {
        "scripted-gpu"
    }

    fn initialize(&mut self) -> Result<(), GpuError> {
        self.log.push(GpuCall::Initialize);
        if self.fail_initialize {
            return Err(GpuError::new(1, "initialize"));
        }
        self.initialized_at = Some(Instant::now());
        Ok(())
    }

    fn device_count(&mut self) -> Result<u32, GpuError> {
        self.log.push(GpuCall::DeviceCount);
        Ok(self.devices)
    }

    fn power_mw(&mut self, device_index: u32) -> Result<u64, GpuError> {
        self.log.push(GpuCall::PowerMw(device_index));
        let since = self
            .initialized_at
            .ok_or_else(|| GpuError::new(-1, "power_mw before initialize"))?;
        if device_index >= self.devices {
            return Err(GpuError::new(2, format!("power_mw({device_index})")));
        }
        (self.script)(since.elapsed().as_secs_f64())
            .map_err(|code| GpuError::new(code, format!("power_mw({device_index})")))
    }

    fn shutdown(&mut self) -> Result<(), GpuError> {
        self.log.push(GpuCall::Shutdown);
        self.initialized_at = None;
        Ok(())
    }
}
