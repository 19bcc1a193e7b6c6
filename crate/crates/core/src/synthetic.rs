//! Deterministic in-process power source driven by the monotonic clock.

use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::backend::{CounterKind, RawBackend, Reading, SensorDescriptor};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::state::Channel;

pub const BACKEND_NAME: &str = "synthetic";
pub const MIN_INTERVAL: Duration = Duration::from_millis(1);
pub const DEFAULT_INTERVAL: Duration = Duration::from_millis(10);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Constant,
    /// Linear from base to peak over `duration`, then flat at peak.
    Ramp,
    /// Peak during the first half of each period, base during the second.
    Square,
}

impl FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(Shape::Constant),
            "ramp" => Ok(Shape::Ramp),
            "square" => Ok(Shape::Square),
            other => Err(Error::InvalidConfig(format!(
                "unknown synthetic shape {other:?} (constant, ramp, square)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticProfile {
    pub shape: Shape,
    pub base_watts: f64,
    pub peak_watts: f64,
    /// Seconds; used by [`Shape::Square`].
    pub period: f64,
    /// Seconds; used by [`Shape::Ramp`].
    pub duration: f64,
}

impl SyntheticProfile {
    pub fn constant(watts: f64) -> Self {
        SyntheticProfile {
            shape: Shape::Constant,
            base_watts: watts,
            peak_watts: watts,
            period: 1.0,
            duration: 1.0,
        }
    }

    pub fn ramp(base_watts: f64, peak_watts: f64, duration: f64) -> Self {
        SyntheticProfile {
            shape: Shape::Ramp,
            base_watts,
            peak_watts,
            period: 1.0,
            duration,
        }
    }

    pub fn square(base_watts: f64, peak_watts: f64, period: f64) -> Self {
        SyntheticProfile {
            shape: Shape::Square,
            base_watts,
            peak_watts,
            period,
            duration: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.base_watts, self.peak_watts, self.period, self.duration]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidConfig("synthetic profile values must be finite".into()));
        }
        if self.base_watts < 0.0 {
            return Err(Error::InvalidConfig("base_watts must be >= 0".into()));
        }
        if self.shape != Shape::Constant && self.peak_watts < self.base_watts {
            return Err(Error::InvalidConfig("peak_watts must be >= base_watts".into()));
        }
        if self.shape == Shape::Square && self.period <= 0.0 {
            return Err(Error::InvalidConfig("period_s must be > 0".into()));
        }
        if self.shape == Shape::Ramp && self.duration <= 0.0 {
            return Err(Error::InvalidConfig("duration_s must be > 0".into()));
        }
        Ok(())
    }

    /// Reads `shape`, `base_watts`, `peak_watts`, `period_s`, `duration_s`;
    /// `power_watts` is shorthand for a constant profile.
    pub fn from_config(config: &Config) -> Result<Self> {
        let shape = config.parse::<Shape>("shape")?.unwrap_or(Shape::Constant);
        let base = match config.parse::<f64>("base_watts")? {
            Some(b) => b,
            None => config.parse::<f64>("power_watts")?.unwrap_or(0.0),
        };
        let peak = config.parse::<f64>("peak_watts")?.unwrap_or(base);
        let profile = SyntheticProfile {
            shape,
            base_watts: base,
            peak_watts: if shape == Shape::Constant { base } else { peak },
            period: config.parse("period_s")?.unwrap_or(1.0),
            duration: config.parse("duration_s")?.unwrap_or(1.0),
        };
        profile.validate()?;
        Ok(profile)
    }

    pub fn power_at(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        match self.shape {
            Shape::Constant => self.base_watts,
            Shape::Ramp => {
                self.base_watts + (self.peak_watts - self.base_watts) * (t / self.duration).min(1.0)
            }
            Shape::Square => {
                if (t % self.period) < self.period / 2.0 {
                    self.peak_watts
                } else {
                    self.base_watts
                }
            }
        }
    }
}

#[derive(Debug)]
pub struct SyntheticBackend {
    descriptor: SensorDescriptor,
    profile: SyntheticProfile,
    origin: Instant,
}

impl SyntheticBackend {
    pub fn new(device_index: u32, profile: SyntheticProfile) -> Result<Self> {
        profile.validate()?;
        let descriptor = SensorDescriptor::new(
            BACKEND_NAME,
            device_index,
            CounterKind::InstantaneousPower,
            MIN_INTERVAL,
            vec![Channel::new(BACKEND_NAME)],
        )?
        .with_default_interval(DEFAULT_INTERVAL);
        Ok(SyntheticBackend {
            descriptor,
            profile,
            origin: Instant::now(),
        })
    }

    pub fn profile(&self) -> &SyntheticProfile {
        &self.profile
    }
}

impl RawBackend for SyntheticBackend {
    fn descriptor(&self) -> &SensorDescriptor {
        &self.descriptor
    }

    fn sample(&mut self) -> Result<Vec<Reading>> {
        let t = self.origin.elapsed().as_secs_f64();
        Ok(vec![Reading::PowerWatts(self.profile.power_at(t))])
    }
}
