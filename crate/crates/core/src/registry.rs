//! Static table of the built-in backends.

use std::path::PathBuf;
use std::time::Duration;

use crate::backend::{CounterKind, RawBackend, SensorDescriptor};
use crate::config::{sysfs_class_dir, Config};
use crate::error::{Error, Result};
use crate::gpu::nvml::NvmlReader;
use crate::gpu::rocm::RocmSmiReader;
use crate::gpu::{self, GpuBackend, GpuReader};
use crate::hwmon::{self, HwmonBackend};
use crate::powercap::{self, PowercapBackend};
use crate::sampler::SamplerConfig;
use crate::sensor::Sensor;
use crate::state::Channel;
use crate::synthetic::{self, SyntheticBackend, SyntheticProfile};

/// What a probe found for one backend.
#[derive(Debug, Clone, Default)]
struct Probe {
    devices: u32,
    usable: bool,
    channels: Vec<Channel>,
    detail: Option<String>,
}

impl Probe {
    fn unavailable(detail: impl ToString) -> Self {
        Probe {
            detail: Some(detail.to_string()),
            ..Probe::default()
        }
    }
}

struct BackendEntry {
    name: &'static str,
    kind: CounterKind,
    min_interval: Duration,
    default_interval: Duration,
    open: fn(u32, &Config) -> Result<Box<dyn RawBackend>>,
    probe: fn(&Config) -> Probe,
}

static BACKENDS: &[BackendEntry] = &[
    BackendEntry {
        name: synthetic::BACKEND_NAME,
        kind: CounterKind::InstantaneousPower,
        min_interval: synthetic::MIN_INTERVAL,
        default_interval: synthetic::DEFAULT_INTERVAL,
        open: open_synthetic,
        probe: probe_synthetic,
    },
    BackendEntry {
        name: powercap::BACKEND_NAME,
        kind: CounterKind::CumulativeEnergy,
        min_interval: powercap::MIN_INTERVAL,
        default_interval: powercap::MIN_INTERVAL,
        open: open_powercap,
        probe: probe_powercap,
    },
    BackendEntry {
        name: hwmon::BACKEND_NAME,
        kind: CounterKind::InstantaneousPower,
        min_interval: hwmon::MIN_INTERVAL,
        default_interval: hwmon::MIN_INTERVAL,
        open: open_hwmon,
        probe: probe_hwmon,
    },
    BackendEntry {
        name: gpu::nvml::BACKEND_NAME,
        kind: CounterKind::InstantaneousPower,
        min_interval: gpu::MIN_INTERVAL,
        default_interval: gpu::MIN_INTERVAL,
        open: open_nvml,
        probe: probe_nvml,
    },
    BackendEntry {
        name: gpu::rocm::BACKEND_NAME,
        kind: CounterKind::InstantaneousPower,
        min_interval: gpu::MIN_INTERVAL,
        default_interval: gpu::MIN_INTERVAL,
        open: open_rocm,
        probe: probe_rocm,
    },
];

fn powercap_root(config: &Config) -> PathBuf {
    sysfs_class_dir(config, "powercap_root", "powercap")
}

fn hwmon_root(config: &Config) -> PathBuf {
    sysfs_class_dir(config, "hwmon_root", "hwmon")
}

fn open_synthetic(device: u32, config: &Config) -> Result<Box<dyn RawBackend>> {
    let profile = SyntheticProfile::from_config(config)?;
    Ok(Box::new(SyntheticBackend::new(device, profile)?))
}

fn probe_synthetic(_: &Config) -> Probe {
    Probe {
        devices: 1,
        usable: true,
        channels: vec![Channel::new(synthetic::BACKEND_NAME)],
        detail: None,
    }
}

fn open_powercap(device: u32, config: &Config) -> Result<Box<dyn RawBackend>> {
    if device != 0 {
        return Err(Error::DeviceUnavailable(format!(
            "rapl covers all packages as device 0, got device {device}"
        )));
    }
    Ok(Box::new(PowercapBackend::open(&powercap_root(config))?))
}

fn probe_powercap(config: &Config) -> Probe {
    let mut backend = match PowercapBackend::open(&powercap_root(config)) {
        Ok(b) => b,
        Err(e) => return Probe::unavailable(e),
    };
    if let Err(e) = backend.sample() {
        return Probe::unavailable(e);
    }
    Probe {
        devices: 1,
        usable: true,
        channels: backend.descriptor().channels.to_vec(),
        detail: None,
    }
}

fn open_hwmon(device: u32, config: &Config) -> Result<Box<dyn RawBackend>> {
    Ok(Box::new(HwmonBackend::open(&hwmon_root(config), device)?))
}

fn probe_hwmon(config: &Config) -> Probe {
    let devices = match hwmon::discover_devices(&hwmon_root(config)) {
        Ok(d) => d,
        Err(e) => return Probe::unavailable(e),
    };
    let first_ok = devices.iter().find_map(|d| d.as_ref().ok());
    let problems: Vec<String> = devices
        .iter()
        .filter_map(|d| d.as_ref().err().map(ToString::to_string))
        .collect();
    Probe {
        devices: devices.len() as u32,
        usable: first_ok.is_some(),
        channels: first_ok
            .map(|d| d.channels.iter().map(|c| Channel::new(c.label.clone())).collect())
            .unwrap_or_default(),
        detail: if devices.is_empty() {
            Some("no power or energy inputs".into())
        } else if problems.is_empty() {
            None
        } else {
            Some(problems.join("; "))
        },
    }
}

fn open_gpu(reader: std::result::Result<impl GpuReader + 'static, String>, device: u32) -> Result<Box<dyn RawBackend>> {
    let reader = reader.map_err(Error::DeviceUnavailable)?;
    Ok(Box::new(GpuBackend::open(Box::new(reader), device)?))
}

fn probe_gpu(reader: std::result::Result<impl GpuReader, String>) -> Probe {
    let mut reader = match reader {
        Ok(r) => r,
        Err(e) => return Probe::unavailable(e),
    };
    if let Err(e) = reader.initialize() {
        return Probe::unavailable(e);
    }
    let count = reader.device_count();
    let _ = reader.shutdown();
    match count {
        Ok(n) => Probe {
            devices: n,
            usable: n > 0,
            channels: if n > 0 { vec![Channel::new("gpu0")] } else { Vec::new() },
            detail: None,
        },
        Err(e) => Probe::unavailable(e),
    }
}

fn open_nvml(device: u32, _: &Config) -> Result<Box<dyn RawBackend>> {
    open_gpu(NvmlReader::load(), device)
}

fn probe_nvml(_: &Config) -> Probe {
    probe_gpu(NvmlReader::load())
}

fn open_rocm(device: u32, _: &Config) -> Result<Box<dyn RawBackend>> {
    open_gpu(RocmSmiReader::load(), device)
}

fn probe_rocm(_: &Config) -> Probe {
    probe_gpu(RocmSmiReader::load())
}

fn entry(name: &str) -> Result<&'static BackendEntry> {
    BACKENDS
        .iter()
        .find(|b| b.name == name)
        .ok_or_else(|| Error::UnknownBackend(name.to_string()))
}

/// Names of all registered backends, in registry order.
pub fn backend_names() -> impl Iterator<Item = &'static str> {
    BACKENDS.iter().map(|b| b.name)
}

/// Registry entry plus what a probe of the current system found.
#[derive(Debug, Clone)]
pub struct BackendInfo {
    /// Descriptor of device 0; `channels` is empty when unavailable.
    pub descriptor: SensorDescriptor,
    pub available: bool,
    pub devices: u32,
    /// Why the backend is unavailable, or warnings about some devices.
    pub detail: Option<String>,
}

/// Lists every registered backend and probes whether it can be used.
pub fn list_backends(config: &Config) -> Vec<BackendInfo> {
    BACKENDS
        .iter()
        .map(|b| {
            let probe = (b.probe)(config);
            BackendInfo {
                descriptor: SensorDescriptor {
                    backend_name: b.name.to_string(),
                    device_index: 0,
                    counter_kind: b.kind,
                    min_interval: b.min_interval,
                    default_interval: b.default_interval,
                    channels: probe.channels.into(),
                },
                available: probe.usable,
                devices: probe.devices,
                detail: probe.detail,
            }
        })
        .collect()
}

/// Opens the raw backend without starting a sampler.
pub fn open_backend(
    backend_name: &str,
    device_index: u32,
    config: &Config,
) -> Result<Box<dyn RawBackend>> {
    let entry = entry(backend_name)?;
    (entry.open)(device_index, config).map_err(|e| match e {
        Error::NoDomainsFound(_) | Error::Io { .. } => {
            Error::DeviceUnavailable(format!("{backend_name}: {e}"))
        }
        other => other,
    })
}

/// Creates a sensor and starts its sampler.
///
/// Recognized keys besides the backend's own: `interval_ms` (defaults to
/// the backend's default interval) and `dump_path` (starts dump mode
/// immediately).
pub fn create_sensor(backend_name: &str, device_index: u32, config: &Config) -> Result<Sensor> {
    let backend = open_backend(backend_name, device_index, config)?;
    let interval = match config.parse::<u64>("interval_ms")? {
        Some(ms) => Duration::from_millis(ms),
        None => backend.descriptor().default_interval,
    };
    let mut sampler_config = SamplerConfig::new(interval);
    if let Some(path) = config.get("dump_path") {
        sampler_config = sampler_config.with_dump(path);
    }
    Sensor::from_backend(backend, sampler_config)
}
