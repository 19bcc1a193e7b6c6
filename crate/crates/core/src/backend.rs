//! The raw backend abstraction driven by the sampler.

use std::sync::Arc;
use std::time::Duration;

use crate::error::{Error, Result};
use crate::state::Channel;

/// What a backend's raw readings represent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CounterKind {
    /// Monotonic (modulo wraparound) energy counters.
    CumulativeEnergy,
    /// Instantaneous power, integrated by the sampler.
    InstantaneousPower,
}

impl CounterKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CounterKind::CumulativeEnergy => "energy",
            CounterKind::InstantaneousPower => "power",
        }
    }
}

/// Identity and capabilities of one backend instance.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorDescriptor {
    pub backend_name: String,
    pub device_index: u32,
    pub counter_kind: CounterKind,
    /// Shortest sampling interval the source sustains; at least 1 ms.
    pub min_interval: Duration,
    /// Interval used when the caller does not ask for one.
    pub default_interval: Duration,
    pub channels: Arc<[Channel]>,
}

impl SensorDescriptor {
    pub fn new(
        backend_name: impl Into<String>,
        device_index: u32,
        counter_kind: CounterKind,
        min_interval: Duration,
        channels: Vec<Channel>,
    ) -> Result<Self> {
        if min_interval < Duration::from_millis(1) {
            return Err(Error::InvalidConfig(format!(
                "min_interval {min_interval:?} is below 1 ms"
            )));
        }
        Ok(SensorDescriptor {
            backend_name: backend_name.into(),
            device_index,
            counter_kind,
            min_interval,
            default_interval: min_interval,
            channels: channels.into(),
        })
    }

    pub fn with_default_interval(mut self, interval: Duration) -> Self {
        self.default_interval = interval.max(self.min_interval);
        self
    }

    pub fn channel_names(&self) -> impl Iterator<Item = &str> {
        self.channels.iter().map(|c| c.name.as_str())
    }
}

/// One raw channel reading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reading {
    /// Energy counter value in microjoules, wrapping at `range_uj`.
    EnergyMicrojoules { value: u64, range_uj: u64 },
    /// Instantaneous power in watts.
    PowerWatts(f64),
}

/// A source of raw per-channel readings.
///
/// A backend is owned by exactly one sampler thread, which calls
/// [`RawBackend::sample`] once per tick and [`RawBackend::shutdown`] once
/// when it exits.
pub trait RawBackend: Send {
    fn descriptor(&self) -> &SensorDescriptor;

    /// Returns one reading per descriptor channel, in channel order.
    fn sample(&mut self) -> Result<Vec<Reading>>;

    fn shutdown(&mut self) {}
}
