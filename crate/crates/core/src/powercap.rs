//! CPU package energy via the Linux powercap (RAPL) sysfs interface.
//!
//! Zones appear flat under the powercap class directory as
//! `intel-rapl:<n>` (packages) and `intel-rapl:<n>:<m>` (sub-domains such as
//! `core` or `dram`). Each holds `name`, `energy_uj` and
//! `max_energy_range_uj`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use crate::backend::{CounterKind, RawBackend, Reading, SensorDescriptor};
use crate::error::{Error, Result};
use crate::state::Channel;
use crate::sysfs::{read_label, read_u64};

pub const BACKEND_NAME: &str = "rapl";
pub const MIN_INTERVAL: Duration = Duration::from_millis(100);

const ZONE_PREFIX: &str = "intel-rapl:";

/// Counter difference with at most one wrap at `max_range`.
pub fn wrap_corrected_delta(prev_raw: u64, cur_raw: u64, max_range: u64) -> u64 {
    if cur_raw >= prev_raw {
        cur_raw - prev_raw
    } else {
        cur_raw + max_range.saturating_sub(prev_raw)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PowercapDomain {
    pub path: PathBuf,
    pub name: String,
    pub package: u32,
    /// `Some(m)` for `intel-rapl:<n>:<m>` sub-domains.
    pub subdomain: Option<u32>,
    pub max_energy_range_uj: u64,
    pub last_raw_uj: u64,
}

impl PowercapDomain {
    pub fn is_package(&self) -> bool {
        self.subdomain.is_none()
    }

    /// Reads `energy_uj`, which must lie within `[0, max_energy_range_uj]`.
    pub fn read_raw(&mut self) -> Result<u64> {
        let path = self.path.join("energy_uj");
        let raw = read_u64(&path)?;
        if raw > self.max_energy_range_uj {
            return Err(Error::Parse {
                path,
                content: raw.to_string(),
                reason: format!("exceeds max_energy_range_uj {}", self.max_energy_range_uj),
            });
        }
        self.last_raw_uj = raw;
        Ok(raw)
    }
}

fn parse_zone_name(dir_name: &str) -> Option<(u32, Option<u32>)> {
    let rest = dir_name.strip_prefix(ZONE_PREFIX)?;
    let mut parts = rest.split(':');
    let package = parts.next()?.parse().ok()?;
    let sub = match parts.next() {
        None => None,
        Some(m) => Some(m.parse().ok()?),
    };
    if parts.next().is_some() {
        return None;
    }
    Some((package, sub))
}

/// Lists RAPL zones under `root`, ordered by package then sub-domain.
pub fn enumerate_domains(root: &Path) -> Result<Vec<PowercapDomain>> {
    let entries = match fs::read_dir(root) {
        Ok(entries) => entries,
        Err(_) => return Err(Error::NoDomainsFound(root.to_path_buf())),
    };
    let mut domains = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(root, e))?;
        let file_name = entry.file_name();
        let Some((package, subdomain)) = file_name.to_str().and_then(parse_zone_name) else {
            continue;
        };
        let path = entry.path();
        let max_energy_range_uj = read_u64(&path.join("max_energy_range_uj"))?;
        if max_energy_range_uj == 0 {
            return Err(Error::Parse {
                path: path.join("max_energy_range_uj"),
                content: "0".into(),
                reason: "counter range must be positive".into(),
            });
        }
        let name = read_label(&path.join("name"))
            .unwrap_or_else(|| file_name.to_string_lossy().into_owned());
        domains.push(PowercapDomain {
            path,
            name,
            package,
            subdomain,
            max_energy_range_uj,
            last_raw_uj: 0,
        });
    }
    if domains.is_empty() {
        return Err(Error::NoDomainsFound(root.to_path_buf()));
    }
    domains.sort_by_key(|d| (d.package, d.subdomain.map_or(0, |m| m + 1)));
    Ok(domains)
}

/// Whole-CPU energy: every package is a counted channel, sub-domains are
/// reported but left out of the total.
#[derive(Debug)]
pub struct PowercapBackend {
    descriptor: SensorDescriptor,
    domains: Vec<PowercapDomain>,
}

impl PowercapBackend {
    pub fn open(root: &Path) -> Result<Self> {
        let domains = enumerate_domains(root)?;
        let channels = domains
            .iter()
            .map(|d| {
                if d.is_package() {
                    Channel::new(d.name.clone())
                } else {
                    Channel::uncounted(d.name.clone())
                }
            })
            .collect();
        let descriptor = SensorDescriptor::new(
            BACKEND_NAME,
            0,
            CounterKind::CumulativeEnergy,
            MIN_INTERVAL,
            channels,
        )?;
        Ok(PowercapBackend {
            descriptor,
            domains,
        })
    }

    pub fn domains(&self) -> &[PowercapDomain] {
        &self.domains
    }
}

impl RawBackend for PowercapBackend {
    fn descriptor(&self) -> &SensorDescriptor {
        &self.descriptor
    }

    fn sample(&mut self) -> Result<Vec<Reading>> {
        self.domains
            .iter_mut()
            .map(|d| {
                Ok(Reading::EnergyMicrojoules {
                    value: d.read_raw()?,
                    range_uj: d.max_energy_range_uj,
                })
            })
            .collect()
    }
}
