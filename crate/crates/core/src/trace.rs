//! Dump-mode trace files: writing, parsing and analysis.
//!
//! ```text
//! # pmt-dump backend=rapl device=0 interval_ms=100 channels=package-0,core
//! 0.100213000 31.250000000 31.250000000 12.100000000
//! ```
//!
//! Each record line holds the timestamp in seconds since sensor creation,
//! the total power and one power value per channel, all in watts.

use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::state::Measurement;

const MAGIC: &str = "# pmt-dump";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceHeader {
    pub backend: String,
    pub device: u32,
    pub interval_ms: u64,
    pub channels: Vec<String>,
}

/// Header fields must not contain separators of the line format.
fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_whitespace() || c == ',' || c == '=' { '_' } else { c })
        .collect()
}

impl fmt::Display for TraceHeader {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let channels: Vec<String> = self.channels.iter().map(|c| sanitize(c)).collect();
        write!(
            f,
            "{MAGIC} backend={} device={} interval_ms={} channels={}",
            sanitize(&self.backend),
            self.device,
            self.interval_ms,
            channels.join(",")
        )
    }
}

impl TraceHeader {
    fn parse(line: &str) -> Result<Self> {
        let err = |reason: String| Error::TraceParse { line: 1, reason };
        let rest = line
            .strip_prefix(MAGIC)
            .ok_or_else(|| err(format!("expected header starting with {MAGIC:?}")))?;
        let (mut backend, mut device, mut interval_ms, mut channels) = (None, None, None, None);
        for field in rest.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| err(format!("malformed header field {field:?}")))?;
            match key {
                "backend" => backend = Some(value.to_string()),
                "device" => {
                    device = Some(value.parse().map_err(|_| err(format!("bad device {value:?}")))?)
                }
                "interval_ms" => {
                    interval_ms =
                        Some(value.parse().map_err(|_| err(format!("bad interval_ms {value:?}")))?)
                }
                "channels" => {
                    channels = Some(
                        value
                            .split(',')
                            .filter(|c| !c.is_empty())
                            .map(str::to_string)
                            .collect(),
                    )
                }
                // unknown keys are tolerated for forward compatibility
                _ => {}
            }
        }
        let missing = |k: &str| err(format!("header lacks {k}="));
        Ok(TraceHeader {
            backend: backend.ok_or_else(|| missing("backend"))?,
            device: device.ok_or_else(|| missing("device"))?,
            interval_ms: interval_ms.ok_or_else(|| missing("interval_ms"))?,
            channels: channels.ok_or_else(|| missing("channels"))?,
        })
    }
}

/// One dump line: a timestamp and the instantaneous power at that tick.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub timestamp: f64,
    pub watts_total: f64,
    pub watts_per_channel: Vec<f64>,
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.9} {:.9}", self.timestamp, self.watts_total)?;
        for w in &self.watts_per_channel {
            write!(f, " {w:.9}")?;
        }
        Ok(())
    }
}

/// Buffered writer for one dump file. The header is written on creation.
#[derive(Debug)]
pub struct TraceWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl TraceWriter {
    pub fn create(path: impl AsRef<Path>, header: &TraceHeader) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "{header}").map_err(|e| Error::io(&path, e))?;
        Ok(TraceWriter { path, out })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn write_record(&mut self, record: &TraceRecord) -> io::Result<()> {
        writeln!(self.out, "{record}")
    }

    pub fn finish(mut self) -> Result<PathBuf> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))?;
        Ok(self.path)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub header: TraceHeader,
    pub records: Vec<TraceRecord>,
}

/// Aggregates of one trace, integrated with measured timestamps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSummary {
    pub records: usize,
    pub duration: f64,
    /// Σ wᵢ·(tᵢ₊₁ − tᵢ) over consecutive records.
    pub joules: f64,
    /// `joules / duration`, or the single reading for a one-record trace.
    pub mean_watts: f64,
    pub max_watts: f64,
    pub min_watts: f64,
}

impl Trace {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(BufReader::new(file)).map_err(|e| match e {
            Error::Io { source, .. } => Error::io(path, source),
            other => other,
        })
    }

    pub fn parse(reader: impl BufRead) -> Result<Self> {
        let mut header = None;
        let mut records: Vec<TraceRecord> = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let number = idx + 1;
            let line = line.map_err(|e| Error::io("<trace>", e))?;
            let Some(ref hdr) = header else {
                header = Some(TraceHeader::parse(line.trim_end())?);
                continue;
            };
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let record = parse_record(line, hdr.channels.len()).map_err(|reason| {
                Error::TraceParse {
                    line: number,
                    reason,
                }
            })?;
            if let Some(prev) = records.last() {
                if record.timestamp < prev.timestamp {
                    return Err(Error::TraceParse {
                        line: number,
                        reason: format!(
                            "timestamp {} precedes previous {}",
                            record.timestamp, prev.timestamp
                        ),
                    });
                }
            }
            records.push(record);
        }
        let header = header.ok_or(Error::TraceParse {
            line: 1,
            reason: "missing header".into(),
        })?;
        Ok(Trace { header, records })
    }

    pub fn summary(&self) -> Result<TraceSummary> {
        let first = self.records.first().ok_or(Error::EmptyTrace)?;
        let last = self.records.last().ok_or(Error::EmptyTrace)?;
        let joules: f64 = self
            .records
            .windows(2)
            .map(|w| w[0].watts_total * (w[1].timestamp - w[0].timestamp))
            .sum();
        let duration = last.timestamp - first.timestamp;
        let (min_watts, max_watts) = self
            .records
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                (lo.min(r.watts_total), hi.max(r.watts_total))
            });
        Ok(TraceSummary {
            records: self.records.len(),
            duration,
            joules,
            mean_watts: if duration > 0.0 { joules / duration } else { first.watts_total },
            max_watts,
            min_watts,
        })
    }

    pub fn measurement(&self) -> Result<Measurement> {
        let s = self.summary()?;
        Ok(Measurement::new(self.header.backend.clone(), s.joules, s.duration))
    }

    /// Total power of the record nearest to `t`.
    pub fn watts_near(&self, t: f64) -> Option<f64> {
        let idx = self.records.partition_point(|r| r.timestamp < t);
        let after = self.records.get(idx);
        let before = idx.checked_sub(1).and_then(|i| self.records.get(i));
        match (before, after) {
            (Some(b), Some(a)) => {
                if t - b.timestamp <= a.timestamp - t {
                    Some(b.watts_total)
                } else {
                    Some(a.watts_total)
                }
            }
            (Some(r), None) | (None, Some(r)) => Some(r.watts_total),
            (None, None) => None,
        }
    }
}

fn parse_record(line: &str, channels: usize) -> std::result::Result<TraceRecord, String> {
    let values = line
        .split_whitespace()
        .map(|f| {
            f.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("not a number: {f:?}"))
        })
        .collect::<std::result::Result<Vec<f64>, String>>()?;
    if values.len() != channels + 2 {
        return Err(format!(
            "expected {} fields, found {}",
            channels + 2,
            values.len()
        ));
    }
    Ok(TraceRecord {
        timestamp: values[0],
        watts_total: values[1],
        watts_per_channel: values[2..].to_vec(),
    })
}

/// One row of a stacked multi-trace table.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedRow {
    pub timestamp: f64,
    pub watts: Vec<f64>,
}

/// Aligns several traces on the timestamps of the first one, taking the
/// nearest record of every other trace.
pub fn stack(traces: &[Trace]) -> Vec<StackedRow> {
    let Some(reference) = traces.first() else {
        return Vec::new();
    };
    reference
        .records
        .iter()
        .map(|r| StackedRow {
            timestamp: r.timestamp,
            watts: traces
                .iter()
                .map(|t| t.watts_near(r.timestamp).unwrap_or(0.0))
                .collect(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header() -> TraceHeader {
        TraceHeader {
            backend: "synthetic".into(),
            device: 0,
            interval_ms: 100,
            channels: vec!["synthetic".into()],
        }
    }

    fn constant_trace(n: usize, watts: f64, spacing: f64) -> String {
        let mut s = format!("{}\n", header());
        for i in 0..n {
            let r = TraceRecord {
                timestamp: 0.1 + i as f64 * spacing,
                watts_total: watts,
                watts_per_channel: vec![watts],
            };
            s.push_str(&format!("{r}\n"));
        }
        s
    }

    #[test]
    fn header_round_trip() {
        let h = TraceHeader {
            backend: "rapl".into(),
            device: 0,
            interval_ms: 100,
            channels: vec!["package-0".into(), "core".into()],
        };
        let line = h.to_string();
        assert_eq!(
            line,
            "# pmt-dump backend=rapl device=0 interval_ms=100 channels=package-0,core"
        );
        assert_eq!(TraceHeader::parse(&line).unwrap(), h);
    }

    #[test]
    fn header_names_are_sanitized() {
        let h = TraceHeader {
            backend: "hwmon".into(),
            device: 1,
            interval_ms: 100,
            channels: vec!["PPT limit".into(), "a,b".into()],
        };
        let parsed = TraceHeader::parse(&h.to_string()).unwrap();
        assert_eq!(parsed.channels, ["PPT_limit", "a_b"]);
    }

    #[test]
    fn record_has_six_significant_digits() {
        let r = TraceRecord {
            timestamp: 0.001,
            watts_total: 1.0 / 3.0,
            watts_per_channel: vec![1.0 / 3.0],
        };
        assert_eq!(r.to_string(), "0.001000000 0.333333333 0.333333333");
    }

    #[test]
    fn summary_of_ten_records_at_thirty_watts() {
        let trace = Trace::parse(constant_trace(10, 30.0, 0.1).as_bytes()).unwrap();
        let s = trace.summary().unwrap();
        assert_eq!(s.records, 10);
        // 9 measured intervals × 0.1 s × 30 W
        assert!((s.joules - 27.0).abs() < 1e-6, "{}", s.joules);
        assert!((s.duration - 0.9).abs() < 1e-9);
        assert!((s.mean_watts - 30.0).abs() < 1e-6);
        assert_eq!(s.max_watts, 30.0);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let mut lines: Vec<String> = constant_trace(6, 30.0, 0.1).lines().map(String::from).collect();
        lines[4] = "0.5 thirty 30".into();
        let err = Trace::parse(lines.join("\n").as_bytes()).unwrap_err();
        match err {
            Error::TraceParse { line, .. } => assert_eq!(line, 5),
            other => panic!("unexpected {other:?}"),
        }
        assert!(err.to_string().starts_with("line 5:"));
    }

    #[test]
    fn wrong_field_count_is_rejected() {
        let text = format!("{}\n0.1 30\n", header());
        assert!(matches!(
            Trace::parse(text.as_bytes()),
            Err(Error::TraceParse { line: 2, .. })
        ));
    }

    #[test]
    fn missing_header_is_rejected() {
        assert!(matches!(
            Trace::parse("0.1 30 30\n".as_bytes()),
            Err(Error::TraceParse { line: 1, .. })
        ));
        assert!(matches!(
            Trace::parse("".as_bytes()),
            Err(Error::TraceParse { line: 1, .. })
        ));
    }

    #[test]
    fn empty_trace_has_no_summary() {
        let trace = Trace::parse(format!("{}\n", header()).as_bytes()).unwrap();
        assert!(matches!(trace.summary(), Err(Error::EmptyTrace)));
    }

    #[test]
    fn single_record_summary() {
        let trace = Trace::parse(constant_trace(1, 42.0, 0.1).as_bytes()).unwrap();
        let s = trace.summary().unwrap();
        assert_eq!((s.duration, s.joules, s.mean_watts), (0.0, 0.0, 42.0));
    }

    #[test]
    fn stacking_takes_nearest_record() {
        let trace = |points: &[(f64, f64)]| Trace {
            header: header(),
            records: points
                .iter()
                .map(|&(t, w)| TraceRecord {
                    timestamp: t,
                    watts_total: w,
                    watts_per_channel: vec![w],
                })
                .collect(),
        };
        let a = trace(&[(0.10, 10.0), (0.18, 10.0), (0.25, 10.0), (0.40, 10.0)]);
        let b = trace(&[(0.10, 1.0), (0.30, 2.0)]);
        let rows = stack(&[a, b]);
        let got: Vec<(f64, f64, f64)> =
            rows.iter().map(|r| (r.timestamp, r.watts[0], r.watts[1])).collect();
        assert_eq!(
            got,
            vec![(0.10, 10.0, 1.0), (0.18, 10.0, 1.0), (0.25, 10.0, 2.0), (0.40, 10.0, 2.0)]
        );
        assert!(stack(&[]).is_empty());
    }

    #[test]
    fn writer_output_parses() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.txt");
        let mut w = TraceWriter::create(&path, &header()).unwrap();
        for i in 0..3 {
            w.write_record(&TraceRecord {
                timestamp: i as f64 * 0.1,
                watts_total: 5.0,
                watts_per_channel: vec![5.0],
            })
            .unwrap();
        }
        w.finish().unwrap();
        let t = Trace::from_path(&path).unwrap();
        assert_eq!(t.header, header());
        assert_eq!(t.records.len(), 3);
    }
}
