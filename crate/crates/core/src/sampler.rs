//! Background sampling loop.
//!
//! Each sensor owns one sampler thread. The thread polls its backend every
//! `interval`, folds the readings into per-channel [`EnergyAccumulator`]s,
//! publishes a fresh [`State`] and, while a dump is active, appends a
//! [`TraceRecord`] to the dump file.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::{self, RecvTimeoutError};
use std::sync::{Arc, Mutex, RwLock};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use crate::backend::{RawBackend, Reading, SensorDescriptor};
use crate::error::{Error, Result};
use crate::powercap::wrap_corrected_delta;
use crate::state::{counted_sum, Channel, State};
use crate::trace::{TraceHeader, TraceRecord, TraceWriter};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplerConfig {
    pub interval: Duration,
    pub dump_path: Option<PathBuf>,
    pub dump_enabled: bool,
}

impl SamplerConfig {
    pub fn new(interval: Duration) -> Self {
        SamplerConfig {
            interval,
            dump_path: None,
            dump_enabled: false,
        }
    }

    pub fn with_dump(mut self, path: impl Into<PathBuf>) -> Self {
        self.dump_path = Some(path.into());
        self.dump_enabled = true;
        self
    }

    pub fn validate(&self, descriptor: &SensorDescriptor) -> Result<()> {
        if self.interval < descriptor.min_interval {
            return Err(Error::IntervalTooSmall {
                requested: self.interval,
                minimum: descriptor.min_interval,
            });
        }
        if self.dump_enabled && self.dump_path.is_none() {
            return Err(Error::InvalidConfig("dump enabled without a path".into()));
        }
        Ok(())
    }
}

/// Energy added by one tick and the power it implies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Increment {
    pub joules: f64,
    pub watts: f64,
}

/// Integrates one channel's raw readings into cumulative joules.
///
/// Energy counters accumulate wrap-corrected microjoule deltas exactly in
/// integer arithmetic. Power readings are integrated with the left rectangle
/// rule: the previous reading times the elapsed time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnergyAccumulator {
    last: Option<Reading>,
    microjoules: u64,
    integrated_joules: f64,
    wraps: u64,
}

impl EnergyAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Folds in `reading`, taken `dt` seconds after the previous one. The
    /// first reading only establishes the baseline.
    pub fn tick(&mut self, reading: Reading, dt: f64) -> Increment {
        let increment = match (self.last, reading) {
            (
                Some(Reading::EnergyMicrojoules { value: prev, .. }),
                Reading::EnergyMicrojoules { value, range_uj },
            ) => {
                if value < prev {
                    self.wraps += 1;
                }
                let delta = wrap_corrected_delta(prev, value, range_uj);
                self.microjoules += delta;
                let joules = delta as f64 / 1e6;
                Increment {
                    joules,
                    watts: if dt > 0.0 { joules / dt } else { 0.0 },
                }
            }
            (Some(Reading::PowerWatts(prev)), Reading::PowerWatts(now)) => {
                let joules = prev * dt.max(0.0);
                self.integrated_joules += joules;
                Increment { joules, watts: now }
            }
            (_, Reading::PowerWatts(now)) => Increment {
                joules: 0.0,
                watts: now,
            },
            (_, Reading::EnergyMicrojoules { .. }) => Increment {
                joules: 0.0,
                watts: 0.0,
            },
        };
        self.last = Some(reading);
        increment
    }

    pub fn accumulated_joules(&self) -> f64 {
        self.microjoules as f64 / 1e6 + self.integrated_joules
    }

    pub fn wraps(&self) -> u64 {
        self.wraps
    }

    pub fn last_reading(&self) -> Option<Reading> {
        self.last
    }
}

#[derive(Debug)]
struct Snapshot {
    state: State,
    failure: Option<String>,
}

#[derive(Debug)]
struct Shared {
    snapshot: RwLock<Snapshot>,
    dump: Mutex<Option<Dump>>,
    ticks: AtomicU64,
}

#[derive(Debug)]
struct Dump {
    writer: TraceWriter,
    error: Option<std::io::Error>,
}

impl Shared {
    fn publish(&self, state: State) {
        self.snapshot.write().unwrap_or_else(|e| e.into_inner()).state = state;
    }

    fn fail(&self, reason: String) {
        self.snapshot.write().unwrap_or_else(|e| e.into_inner()).failure = Some(reason);
    }
}

struct Worker {
    backend: Box<dyn RawBackend>,
    channels: Arc<[Channel]>,
    accumulators: Vec<EnergyAccumulator>,
    origin: Instant,
    last_tick: f64,
    shared: Arc<Shared>,
}

impl Worker {
    fn tick(&mut self) -> Result<()> {
        let readings = self.backend.sample()?;
        let now = self.origin.elapsed().as_secs_f64();
        let dt = now - self.last_tick;
        self.last_tick = now;
        if readings.len() != self.channels.len() {
            return Err(Error::BackendReadFailed(format!(
                "expected {} readings, got {}",
                self.channels.len(),
                readings.len()
            )));
        }

        let mut watts = Vec::with_capacity(readings.len());
        for (acc, reading) in self.accumulators.iter_mut().zip(readings) {
            watts.push(acc.tick(reading, dt).watts);
        }
        let joules = self
            .accumulators
            .iter()
            .map(EnergyAccumulator::accumulated_joules)
            .collect();
        self.shared
            .publish(State::new(now, joules, Arc::clone(&self.channels)));
        self.shared.ticks.fetch_add(1, Ordering::Release);

        let mut dump = self.shared.dump.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(dump) = dump.as_mut().filter(|d| d.error.is_none()) {
            let record = TraceRecord {
                timestamp: now,
                watts_total: counted_sum(&self.channels, &watts),
                watts_per_channel: watts,
            };
            if let Err(e) = dump.writer.write_record(&record) {
                log::warn!("dump to {} failed: {e}", dump.writer.path().display());
                dump.error = Some(e);
            }
        }
        Ok(())
    }

    fn run(mut self, stop: mpsc::Receiver<()>, interval: Duration) {
        let mut deadline = Instant::now() + interval;
        loop {
            let timeout = deadline.saturating_duration_since(Instant::now());
            let stopping = match stop.recv_timeout(timeout) {
                Ok(()) | Err(RecvTimeoutError::Disconnected) => true,
                Err(RecvTimeoutError::Timeout) => false,
            };
            if let Err(e) = self.tick() {
                log::warn!("{} sampler stopped: {e}", self.backend.descriptor().backend_name);
                self.shared.fail(e.to_string());
                break;
            }
            if stopping {
                break;
            }
            deadline += interval;
            let now = Instant::now();
            if deadline <= now {
                // overrun: skip the missed ticks rather than bursting
                deadline = now + interval;
            }
        }
        self.backend.shutdown();
    }
}

/// Handle to a running (or stopped) sampler thread.
#[derive(Debug)]
pub struct Sampler {
    descriptor: SensorDescriptor,
    interval: Duration,
    shared: Arc<Shared>,
    stop_tx: Option<mpsc::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

impl Sampler {
    /// Validates `config`, takes the zero-point sample on the calling thread
    /// and starts the loop.
    pub fn start(mut backend: Box<dyn RawBackend>, config: SamplerConfig) -> Result<Self> {
        let descriptor = backend.descriptor().clone();
        if let Err(e) = config.validate(&descriptor) {
            backend.shutdown();
            return Err(e);
        }
        let channels = Arc::clone(&descriptor.channels);

        let origin = Instant::now();
        let first = match backend.sample() {
            Ok(r) if r.len() == channels.len() => r,
            Ok(r) => {
                backend.shutdown();
                return Err(Error::BackendReadFailed(format!(
                    "expected {} readings, got {}",
                    channels.len(),
                    r.len()
                )));
            }
            Err(e) => {
                backend.shutdown();
                return Err(match e {
                    Error::BackendReadFailed(m) => Error::BackendReadFailed(m),
                    other => Error::BackendReadFailed(other.to_string()),
                });
            }
        };
        let last_tick = origin.elapsed().as_secs_f64();
        let mut accumulators = vec![EnergyAccumulator::new(); channels.len()];
        for (acc, reading) in accumulators.iter_mut().zip(first) {
            acc.tick(reading, 0.0);
        }

        let shared = Arc::new(Shared {
            snapshot: RwLock::new(Snapshot {
                state: State::new(last_tick, vec![0.0; channels.len()], Arc::clone(&channels)),
                failure: None,
            }),
            dump: Mutex::new(None),
            ticks: AtomicU64::new(1),
        });

        let (stop_tx, stop_rx) = mpsc::channel();
        let mut sampler = Sampler {
            descriptor: descriptor.clone(),
            interval: config.interval,
            shared: Arc::clone(&shared),
            stop_tx: Some(stop_tx),
            thread: None,
        };
        if let (true, Some(path)) = (config.dump_enabled, &config.dump_path) {
            if let Err(e) = sampler.start_dump(path) {
                backend.shutdown();
                return Err(e);
            }
        }

        let worker = Worker {
            backend,
            channels,
            accumulators,
            origin,
            last_tick,
            shared,
        };
        let interval = config.interval;
        let thread = thread::Builder::new()
            .name(format!("pmt-{}", descriptor.backend_name))
            .spawn(move || worker.run(stop_rx, interval))
            .map_err(|e| Error::io("<sampler thread>", e))?;
        sampler.thread = Some(thread);
        Ok(sampler)
    }

    pub fn descriptor(&self) -> &SensorDescriptor {
        &self.descriptor
    }

    pub fn interval(&self) -> Duration {
        self.interval
    }

    /// Number of completed ticks, including the zero-point sample.
    pub fn ticks(&self) -> u64 {
        self.shared.ticks.load(Ordering::Acquire)
    }

    /// Latest published snapshot. Fails only if the loop died on a backend
    /// error; after [`Sampler::stop`] the final snapshot is returned.
    pub fn read(&self) -> Result<State> {
        let snapshot = self.shared.snapshot.read().unwrap_or_else(|e| e.into_inner());
        match &snapshot.failure {
            Some(reason) => Err(Error::SensorStopped(reason.clone())),
            None => Ok(snapshot.state.clone()),
        }
    }

    pub fn is_running(&self) -> bool {
        self.thread.as_ref().is_some_and(|t| !t.is_finished())
    }

    /// Starts appending one trace record per tick to `path`.
    pub fn start_dump(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut dump = self.shared.dump.lock().unwrap_or_else(|e| e.into_inner());
        if dump.is_some() {
            return Err(Error::DumpAlreadyActive);
        }
        let header = TraceHeader {
            backend: self.descriptor.backend_name.clone(),
            device: self.descriptor.device_index,
            interval_ms: self.interval.as_millis() as u64,
            channels: self.descriptor.channel_names().map(str::to_string).collect(),
        };
        *dump = Some(Dump {
            writer: TraceWriter::create(path, &header)?,
            error: None,
        });
        Ok(())
    }

    /// Flushes and closes the active dump; the sampler keeps running.
    pub fn stop_dump(&self) -> Result<PathBuf> {
        let dump = self
            .shared
            .dump
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .take()
            .ok_or(Error::DumpNotActive)?;
        if let Some(e) = dump.error {
            return Err(Error::io(dump.writer.path(), e));
        }
        dump.writer.finish()
    }

    pub fn dump_active(&self) -> bool {
        self.shared.dump.lock().unwrap_or_else(|e| e.into_inner()).is_some()
    }

    /// Stops the loop after one last tick. Idempotent. An active dump is
    /// flushed and closed.
    pub fn stop(&mut self) {
        if let Some(tx) = self.stop_tx.take() {
            let _ = tx.send(());
        }
        if let Some(thread) = self.thread.take() {
            if thread.join().is_err() {
                self.shared.fail("sampler thread panicked".into());
            }
        }
        if self.dump_active() {
            if let Err(e) = self.stop_dump() {
                log::warn!("closing dump on stop: {e}");
            }
        }
    }
}

impl Drop for Sampler {
    fn drop(&mut self) {
        self.stop();
    }
}
