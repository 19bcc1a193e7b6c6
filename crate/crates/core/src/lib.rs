//! Power and energy measurement through one sensor interface.
//!
//! A [`Sensor`] wraps a backend (RAPL powercap counters, hwmon files, GPU
//! management libraries or a synthetic source) and samples it on a
//! background thread. [`Sensor::read`] returns a [`State`] snapshot; the
//! difference between two states gives energy, time and average power.
//! Dump mode streams per-tick power to a text trace (see [`trace`]).

pub mod backend;
pub mod config;
pub mod error;
pub mod fixture;
pub mod gpu;
pub mod hwmon;
pub mod powercap;
pub mod registry;
pub mod sampler;
mod sensor;
pub mod state;
pub mod synthetic;
mod sysfs;
pub mod trace;

pub use backend::{CounterKind, RawBackend, Reading, SensorDescriptor};
pub use config::{Config, SYSFS_ROOT_ENV};
pub use error::{Error, Result};
pub use registry::{backend_names, create_sensor, list_backends, open_backend, BackendInfo};
pub use sampler::{EnergyAccumulator, SamplerConfig};
pub use sensor::Sensor;
pub use state::{
    energy_delay_product, flops_efficiency, joules, seconds, watts, Channel, Measurement, State,
};
pub use trace::{Trace, TraceHeader, TraceRecord, TraceSummary};
