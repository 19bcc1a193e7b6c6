use std::path::{Path, PathBuf};
use std::time::Duration;

use crate::backend::{RawBackend, SensorDescriptor};
use crate::error::Result;
use crate::sampler::{Sampler, SamplerConfig};
use crate::state::{self, Measurement, State};

/// A running sensor: a backend driven by its own sampler thread.
///
/// ```no_run
/// # fn main() -> pmt_core::Result<()> {
/// let sensor = pmt_core::create_sensor("rapl", 0, &Default::default())?;
/// let start = sensor.read()?;
/// std::thread::sleep(std::time::Duration::from_secs(5));
/// let end = sensor.read()?;
/// println!("{} [J]", sensor.joules(&start, &end)?);
/// println!("{} [W]", sensor.watts(&start, &end)?);
/// println!("{} [S]", sensor.seconds(&start, &end)?);
/// # Ok(())
/// # }
/// ```
#[derive(Debug)]
pub struct Sensor {
    sampler: Sampler,
}

impl Sensor {
    /// Wraps any backend, including ones defined outside this crate.
    pub fn from_backend(backend: Box<dyn RawBackend>, config: SamplerConfig) -> Result<Self> {
        Ok(Sensor {
            sampler: Sampler::start(backend, config)?,
        })
    }

    pub fn descriptor(&self) -> &SensorDescriptor {
        self.sampler.descriptor()
    }

    pub fn backend_name(&self) -> &str {
        &self.descriptor().backend_name
    }

    pub fn interval(&self) -> Duration {
        self.sampler.interval()
    }

    pub fn ticks(&self) -> u64 {
        self.sampler.ticks()
    }

    /// Copies the latest snapshot; never touches the hardware.
    pub fn read(&self) -> Result<State> {
        self.sampler.read()
    }

    pub fn joules(&self, start: &State, end: &State) -> Result<f64> {
        state::joules(start, end)
    }

    pub fn watts(&self, start: &State, end: &State) -> Result<f64> {
        state::watts(start, end)
    }

    pub fn seconds(&self, start: &State, end: &State) -> Result<f64> {
        state::seconds(start, end)
    }

    /// Runs `f` between two reads.
    pub fn measure<R>(&self, f: impl FnOnce() -> R) -> Result<(R, Measurement)> {
        let start = self.read()?;
        let out = f();
        let end = self.read()?;
        Ok((out, Measurement::between(self.backend_name(), &start, &end)?))
    }

    pub fn start_dump(&self, path: impl AsRef<Path>) -> Result<()> {
        self.sampler.start_dump(path)
    }

    pub fn stop_dump(&self) -> Result<PathBuf> {
        self.sampler.stop_dump()
    }

    pub fn dump_active(&self) -> bool {
        self.sampler.dump_active()
    }

    pub fn is_running(&self) -> bool {
        self.sampler.is_running()
    }

    /// Takes a final sample and stops the sampler; later reads return that
    /// final state.
    pub fn stop(&mut self) {
        self.sampler.stop();
    }
}
