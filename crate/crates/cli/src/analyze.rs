use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use pmt_core::trace::{self, Trace, TraceSummary};
use pmt_core::{energy_delay_product, flops_efficiency, Measurement};

#[derive(Debug, Clone)]
pub struct AnalyzedTrace {
    pub path: PathBuf,
    pub trace: Trace,
    pub summary: TraceSummary,
}

impl AnalyzedTrace {
    fn measurement(&self) -> Measurement {
        Measurement::new(self.trace.header.backend.clone(), self.summary.joules, self.summary.duration)
    }
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub traces: Vec<AnalyzedTrace>,
    /// Energy summed over traces, duration of the longest trace.
    pub combined: Measurement,
    pub flop_count: Option<u64>,
}

#[derive(Debug)]
pub struct AnalyzeError {
    pub path: PathBuf,
    pub source: pmt_core::Error,
}

impl std::fmt::Display for AnalyzeError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path.display(), self.source)
    }
}

impl std::error::Error for AnalyzeError {}

pub fn analyze(paths: &[PathBuf], flop_count: Option<u64>) -> Result<Analysis, AnalyzeError> {
    let traces = paths
        .iter()
        .map(|path| {
            let err = |source| AnalyzeError {
                path: path.clone(),
                source,
            };
            let trace = Trace::from_path(path).map_err(err)?;
            let summary = trace.summary().map_err(err)?;
            Ok(AnalyzedTrace {
                path: path.clone(),
                trace,
                summary,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let joules = traces.iter().map(|t| t.summary.joules).sum();
    let seconds = traces.iter().map(|t| t.summary.duration).fold(0.0, f64::max);
    Ok(Analysis {
        traces,
        combined: Measurement::new("combined", joules, seconds),
        flop_count,
    })
}

fn efficiency(m: &Measurement, flops: Option<u64>) -> Option<f64> {
    flops.and_then(|f| flops_efficiency(m, f).ok())
}

fn display_name(path: &Path) -> String {
    path.display().to_string()
}

impl Analysis {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for t in &self.traces {
            let s = &t.summary;
            let _ = writeln!(
                out,
                "{}: backend={} records={} duration={:.6} s joules={:.6} J mean={:.6} W max={:.6} W min={:.6} W",
                display_name(&t.path),
                t.trace.header.backend,
                s.records,
                s.duration,
                s.joules,
                s.mean_watts,
                s.max_watts,
                s.min_watts,
            );
        }
        let c = &self.combined;
        let _ = write!(
            out,
            "combined: joules={:.6} J seconds={:.6} s watts={:.6} W edp={:.6} J*s",
            c.joules,
            c.seconds,
            c.watts,
            energy_delay_product(c)
        );
        if let Some(flops) = self.flop_count {
            match flops_efficiency(c, flops) {
                Ok(e) => {
                    let _ = write!(out, " gflops_per_watt={e:.6}");
                }
                Err(e) => {
                    let _ = write!(out, " gflops_per_watt=n/a ({e})");
                }
            }
        }
        out.push('\n');
        out
    }

    /// A per-trace summary table, a blank line, then the stacked power
    /// table `timestamp_s,<trace1>,<trace2>,...`.
    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut summary = csv::Writer::from_writer(Vec::new());
        let mut header = vec![
            "trace", "backend", "records", "duration_s", "joules", "mean_watts", "max_watts",
            "min_watts", "edp_js",
        ];
        if self.flop_count.is_some() {
            header.push("gflops_per_watt");
        }
        summary.write_record(&header)?;
        for t in &self.traces {
            let s = &t.summary;
            let m = t.measurement();
            let mut row = vec![
                display_name(&t.path),
                t.trace.header.backend.clone(),
                s.records.to_string(),
                format!("{:.9}", s.duration),
                format!("{:.9}", s.joules),
                format!("{:.9}", s.mean_watts),
                format!("{:.9}", s.max_watts),
                format!("{:.9}", s.min_watts),
                format!("{:.9}", energy_delay_product(&m)),
            ];
            if self.flop_count.is_some() {
                row.push(
                    efficiency(&m, self.flop_count)
                        .map(|e| format!("{e:.9}"))
                        .unwrap_or_default(),
                );
            }
            summary.write_record(&row)?;
        }

        let traces: Vec<Trace> = self.traces.iter().map(|t| t.trace.clone()).collect();
        let mut stacked = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["timestamp_s".to_string()];
        header.extend(self.traces.iter().map(|t| display_name(&t.path)));
        stacked.write_record(&header)?;
        for row in trace::stack(&traces) {
            let mut fields = vec![format!("{:.9}", row.timestamp)];
            fields.extend(row.watts.iter().map(|w| format!("{w:.9}")));
            stacked.write_record(&fields)?;
        }

        let into_string = |w: csv::Writer<Vec<u8>>| -> Result<String, csv::Error> {
            let bytes = w.into_inner().map_err(|e| e.into_error())?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        };
        Ok(format!("{}\n{}", into_string(summary)?, into_string(stacked)?))
    }
}
