use std::collections::HashMap;
use std::path::PathBuf;
use std::process::{Command, ExitStatus};

use pmt_core::{create_sensor, Config, Measurement, Sensor};

use crate::{EXIT_BACKEND, EXIT_SPAWN};

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub backends: Vec<String>,
    pub device: u32,
    pub config: Config,
    pub dump: Option<PathBuf>,
    pub command: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    /// One per requested backend, in request order.
    pub measurements: Vec<Measurement>,
    pub exit_code: i32,
    pub dump_paths: Vec<PathBuf>,
}

#[derive(Debug)]
pub enum RunError {
    /// A sensor could not be created or its dump could not be opened.
    Backend(pmt_core::Error),
    Spawn(std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Backend(_) => EXIT_BACKEND,
            RunError::Spawn(_) => EXIT_SPAWN,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Backend(e) => write!(f, "{e}"),
            RunError::Spawn(e) => write!(f, "cannot run command: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

fn exit_code(status: ExitStatus) -> i32 {
    if let Some(code) = status.code() {
        return code;
    }
    #[cfg(unix)]
    {
        use std::os::unix::process::ExitStatusExt;
        if let Some(signal) = status.signal() {
            return 128 + signal;
        }
    }
    1
}

/// Per-backend dump file names: `<dump>.<backend>`, with the request
/// position appended when a backend is requested more than once.
fn dump_paths(base: &std::path::Path, backends: &[String]) -> Vec<PathBuf> {
    let mut seen: HashMap<&str, usize> = HashMap::new();
    for b in backends {
        *seen.entry(b.as_str()).or_default() += 1;
    }
    backends
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let mut name = base.as_os_str().to_owned();
            name.push(format!(".{b}"));
            if seen[b.as_str()] > 1 {
                name.push(format!(".{i}"));
            }
            PathBuf::from(name)
        })
        .collect()
}

/// Measures `command` from spawn to exit on every requested backend.
pub fn cmd_run(opts: &RunOptions) -> Result<RunReport, RunError> {
    assert!(!opts.command.is_empty(), "child command must not be empty");
    let mut sensors: Vec<Sensor> = opts
        .backends
        .iter()
        .map(|b| create_sensor(b, opts.device, &opts.config))
        .collect::<Result<_, _>>()
        .map_err(RunError::Backend)?;

    let dumps = match &opts.dump {
        Some(base) => dump_paths(base, &opts.backends),
        None => Vec::new(),
    };
    for (sensor, path) in sensors.iter().zip(&dumps) {
        sensor.start_dump(path).map_err(RunError::Backend)?;
    }

    let starts = sensors
        .iter()
        .map(Sensor::read)
        .collect::<Result<Vec<_>, _>>()
        .map_err(RunError::Backend)?;

    let status = Command::new(&opts.command[0])
        .args(&opts.command[1..])
        .status()
        .map_err(RunError::Spawn)?;

    let mut measurements = Vec::with_capacity(sensors.len());
    for (sensor, start) in sensors.iter_mut().zip(&starts) {
        // stopping takes one last sample and closes the dump
        sensor.stop();
        let end = sensor.read().map_err(RunError::Backend)?;
        measurements.push(
            Measurement::between(sensor.backend_name(), start, &end).map_err(RunError::Backend)?,
        );
    }
    Ok(RunReport {
        measurements,
        exit_code: exit_code(status),
        dump_paths: dumps,
    })
}
