//! Generic hwmon sensors exposing `power<k>_input` (µW) or
//! `energy<k>_input` (µJ).
//!
//! One sensor covers one `hwmon<n>` directory, and all of its channels must
//! be of the same kind.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use crate::backend::{CounterKind, RawBackend, Reading, SensorDescriptor};
use crate::error::{Error, Result};
use crate::state::Channel;
use crate::sysfs::{read_label, read_u64};

pub const BACKEND_NAME: &str = "hwmon";
pub const MIN_INTERVAL: Duration = Duration::from_millis(100);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HwmonKind {
    PowerMicrowatts,
    EnergyMicrojoules,
}

impl HwmonKind {
    fn prefix(self) -> &'static str {
        match self {
            HwmonKind::PowerMicrowatts => "power",
            HwmonKind::EnergyMicrojoules => "energy",
        }
    }

    pub fn counter_kind(self) -> CounterKind {
        match self {
            HwmonKind::PowerMicrowatts => CounterKind::InstantaneousPower,
            HwmonKind::EnergyMicrojoules => CounterKind::CumulativeEnergy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HwmonChannel {
    pub file_path: PathBuf,
    pub kind: HwmonKind,
    pub label: String,
    pub hwmon_index: u32,
    pub channel_index: u32,
}

/// Reads the raw integer of a channel (µW or µJ depending on its kind).
pub fn read_channel(channel: &HwmonChannel) -> Result<u64> {
    read_u64(&channel.file_path)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HwmonDevice {
    pub path: PathBuf,
    pub index: u32,
    pub kind: HwmonKind,
    pub channels: Vec<HwmonChannel>,
}

fn parse_input_name(file_name: &str) -> Option<(HwmonKind, u32)> {
    let base = file_name.strip_suffix("_input")?;
    for kind in [HwmonKind::PowerMicrowatts, HwmonKind::EnergyMicrojoules] {
        if let Some(k) = base.strip_prefix(kind.prefix()) {
            return k.parse().ok().map(|k| (kind, k));
        }
    }
    None
}

/// `hwmon<n>` directories under `root` in index order.
fn hwmon_dirs(root: &Path) -> Result<Vec<(u32, PathBuf)>> {
    let entries = fs::read_dir(root).map_err(|_| Error::NoDomainsFound(root.to_path_buf()))?;
    let mut dirs: Vec<(u32, PathBuf)> = entries
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let n = e.file_name().to_str()?.strip_prefix("hwmon")?.parse().ok()?;
            Some((n, e.path()))
        })
        .collect();
    dirs.sort();
    Ok(dirs)
}

/// Scans one hwmon directory. `Ok(None)` if it has no power or energy inputs.
fn scan_device(index: u32, path: &Path) -> Result<Option<HwmonDevice>> {
    let entries = fs::read_dir(path).map_err(|e| Error::io(path, e))?;
    let mut found: Vec<(HwmonKind, u32, PathBuf)> = entries
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let (kind, k) = parse_input_name(e.file_name().to_str()?)?;
            Some((kind, k, e.path()))
        })
        .collect();
    if found.is_empty() {
        return Ok(None);
    }
    let kind = found[0].0;
    if found.iter().any(|(k, _, _)| *k != kind) {
        return Err(Error::MixedKinds(path.to_path_buf()));
    }
    found.sort_by_key(|(_, k, _)| *k);

    let device_name = read_label(&path.join("name"))
        .unwrap_or_else(|| format!("hwmon{index}"));
    let single = found.len() == 1;
    let channels = found
        .into_iter()
        .map(|(kind, k, file_path)| {
            let label = read_label(&path.join(format!("{}{k}_label", kind.prefix())))
                .unwrap_or_else(|| {
                    if single {
                        device_name.clone()
                    } else {
                        format!("{device_name}-{}{k}", kind.prefix())
                    }
                });
            HwmonChannel {
                file_path,
                kind,
                label,
                hwmon_index: index,
                channel_index: k,
            }
        })
        .collect();
    Ok(Some(HwmonDevice {
        path: path.to_path_buf(),
        index,
        kind,
        channels,
    }))
}

/// Every hwmon directory that has power or energy inputs, each either a
/// valid device or the error that makes it unusable.
pub fn discover_devices(root: &Path) -> Result<Vec<Result<HwmonDevice>>> {
    Ok(hwmon_dirs(root)?
        .into_iter()
        .filter_map(|(n, path)| scan_device(n, &path).transpose())
        .collect())
}

/// All channels under `root`, ordered by hwmon index then channel index.
pub fn discover_channels(root: &Path) -> Result<Vec<HwmonChannel>> {
    let mut channels = Vec::new();
    for device in discover_devices(root)? {
        channels.extend(device?.channels);
    }
    if channels.is_empty() {
        return Err(Error::NoDomainsFound(root.to_path_buf()));
    }
    Ok(channels)
}

#[derive(Debug)]
pub struct HwmonBackend {
    descriptor: SensorDescriptor,
    device: HwmonDevice,
}

impl HwmonBackend {
    /// Opens the `device_index`-th hwmon directory that exposes power or
    /// energy inputs.
    pub fn open(root: &Path, device_index: u32) -> Result<Self> {
        let devices = discover_devices(root)?;
        if devices.is_empty() {
            return Err(Error::NoDomainsFound(root.to_path_buf()));
        }
        let count = devices.len();
        let device = devices
            .into_iter()
            .nth(device_index as usize)
            .ok_or_else(|| {
                Error::DeviceUnavailable(format!(
                    "hwmon device {device_index} requested, {count} present"
                ))
            })??;
        let channels = device
            .channels
            .iter()
            .map(|c| Channel::new(c.label.clone()))
            .collect();
        let descriptor = SensorDescriptor::new(
            BACKEND_NAME,
            device_index,
            device.kind.counter_kind(),
            MIN_INTERVAL,
            channels,
        )?;
        Ok(HwmonBackend { descriptor, device })
    }

    pub fn device(&self) -> &HwmonDevice {
        &self.device
    }
}

impl RawBackend for HwmonBackend {
    fn descriptor(&self) -> &SensorDescriptor {
        &self.descriptor
    }

    fn sample(&mut self) -> Result<Vec<Reading>> {
        self.device
            .channels
            .iter()
            .map(|c| {
                let raw = read_channel(c)?;
                Ok(match c.kind {
                    HwmonKind::PowerMicrowatts => Reading::PowerWatts(raw as f64 / 1e6),
                    HwmonKind::EnergyMicrojoules => Reading::EnergyMicrojoules {
                        value: raw,
                        range_uj: u64::MAX,
                    },
                })
            })
            .collect()
    }
}
