//! Snapshots, measurements and the arithmetic between them.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// One physical sub-source of a sensor (a CPU package, a RAPL sub-domain, a GPU).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Channel {
    pub name: String,
    /// Whether this channel contributes to `joules_total`. RAPL sub-domains
    /// are already contained in their package counter and do not.
    pub counted: bool,
}

impl Channel {
    pub fn new(name: impl Into<String>) -> Self {
        Channel {
            name: name.into(),
            counted: true,
        }
    }

    pub fn uncounted(name: impl Into<String>) -> Self {
        Channel {
            name: name.into(),
            counted: false,
        }
    }
}

/// Sums the counted entries of `values`.
pub(crate) fn counted_sum(channels: &[Channel], values: &[f64]) -> f64 {
    channels
        .iter()
        .zip(values)
        .filter(|(c, _)| c.counted)
        .map(|(_, v)| v)
        .sum()
}

/// A consistent snapshot of a sensor: monotonic timestamp plus cumulative
/// energy since sensor creation.
///
/// States are plain values; they stay valid after the sensor is stopped.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    timestamp: f64,
    joules_total: f64,
    joules_per_channel: Vec<f64>,
    channels: Arc<[Channel]>,
}

impl State {
    /// Builds a state; `joules_total` is the sum over counted channels.
    pub fn new(timestamp: f64, joules_per_channel: Vec<f64>, channels: Arc<[Channel]>) -> Self {
        assert_eq!(
            joules_per_channel.len(),
            channels.len(),
            "one joules value per channel"
        );
        let joules_total = counted_sum(&channels, &joules_per_channel);
        State {
            timestamp,
            joules_total,
            joules_per_channel,
            channels,
        }
    }

    /// Single-channel state, mostly useful for tests and custom backends.
    pub fn single(timestamp: f64, joules: f64) -> Self {
        Self::new(timestamp, vec![joules], Arc::from([Channel::new("total")]))
    }

    /// Seconds since sensor creation on a monotonic clock.
    pub fn timestamp(&self) -> f64 {
        self.timestamp
    }

    pub fn joules_total(&self) -> f64 {
        self.joules_total
    }

    pub fn joules_per_channel(&self) -> &[f64] {
        &self.joules_per_channel
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn channel_names(&self) -> impl Iterator<Item = &str> {
        self.channels.iter().map(|c| c.name.as_str())
    }
}

fn check_order(start: &State, end: &State) -> Result<()> {
    if end.timestamp < start.timestamp {
        Err(Error::NegativeInterval)
    } else {
        Ok(())
    }
}

/// Energy consumed between two states of the same sensor.
pub fn joules(start: &State, end: &State) -> Result<f64> {
    check_order(start, end)?;
    Ok(end.joules_total - start.joules_total)
}

/// Time elapsed between two states of the same sensor.
pub fn seconds(start: &State, end: &State) -> Result<f64> {
    check_order(start, end)?;
    Ok(end.timestamp - start.timestamp)
}

/// Average power between two states. A zero-length interval yields 0 W.
pub fn watts(start: &State, end: &State) -> Result<f64> {
    let s = seconds(start, end)?;
    let j = joules(start, end)?;
    Ok(if s > 0.0 { j / s } else { 0.0 })
}

/// Energy, average power and duration of a region, tagged with its backend.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub joules: f64,
    pub watts: f64,
    pub seconds: f64,
    pub backend_name: String,
}

impl Measurement {
    /// Derives watts from `joules / seconds` (0 when `seconds` is 0).
    pub fn new(backend_name: impl Into<String>, joules: f64, seconds: f64) -> Self {
        let watts = if seconds > 0.0 { joules / seconds } else { 0.0 };
        Measurement {
            joules,
            watts,
            seconds,
            backend_name: backend_name.into(),
        }
    }

    pub fn between(backend_name: impl Into<String>, start: &State, end: &State) -> Result<Self> {
        Ok(Self::new(backend_name, joules(start, end)?, seconds(start, end)?))
    }
}

impl fmt::Display for Measurement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:.6} J {:.6} W {:.6} s",
            self.backend_name, self.joules, self.watts, self.seconds
        )
    }
}

/// Energy-delay product in J·s.
pub fn energy_delay_product(m: &Measurement) -> f64 {
    m.joules * m.seconds
}

/// Throughput per watt in GFLOP/s/W.
pub fn flops_efficiency(m: &Measurement, flop_count: u64) -> Result<f64> {
    if m.seconds <= 0.0 {
        return Err(Error::DegenerateMeasurement("zero duration"));
    }
    if m.watts <= 0.0 {
        return Err(Error::DegenerateMeasurement("zero power"));
    }
    Ok((flop_count as f64 / m.seconds / 1e9) / m.watts)
}
