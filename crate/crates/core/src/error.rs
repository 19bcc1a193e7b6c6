use std::io;
use std::path::PathBuf;
use std::time::Duration;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown backend `{0}`")]
    UnknownBackend(String),

    #[error("device unavailable: {0}")]
    DeviceUnavailable(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("sampling interval {requested:?} is below the backend minimum of {minimum:?}")]
    IntervalTooSmall { requested: Duration, minimum: Duration },

    #[error("sensor stopped: {0}")]
    SensorStopped(String),

    #[error("backend read failed: {0}")]
    BackendReadFailed(String),

    #[error("end state precedes start state")]
    NegativeInterval,

    #[error("degenerate measurement: {0}")]
    DegenerateMeasurement(&'static str),

    #[error("a dump is already active on this sensor")]
    DumpAlreadyActive,

    #[error("no dump is active on this sensor")]
    DumpNotActive,

    #[error("no power domains found under {}", .0.display())]
    NoDomainsFound(PathBuf),

    #[error("{} mixes power and energy channels", .0.display())]
    MixedKinds(PathBuf),

    #[error("{}: cannot parse {content:?}: {reason}", path.display())]
    Parse {
        path: PathBuf,
        content: String,
        reason: String,
    },

    #[error("line {line}: {reason}")]
    TraceParse { line: usize, reason: String },

    #[error("trace contains no records")]
    EmptyTrace,

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors that mean the requested backend or device cannot be
    /// used, as opposed to runtime failures.
    pub fn is_backend_error(&self) -> bool {
        matches!(
            self,
            Error::UnknownBackend(_)
                | Error::DeviceUnavailable(_)
                | Error::InvalidConfig(_)
                | Error::IntervalTooSmall { .. }
                | Error::NoDomainsFound(_)
                | Error::MixedKinds(_)
        )
    }
}
