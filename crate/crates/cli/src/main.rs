use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pmt_cli::analyze::analyze;
use pmt_cli::list::cmd_list;
use pmt_cli::run::{cmd_run, RunOptions};
use pmt_core::Config;

const DEFAULT_BACKEND_ENV: &str = "PMT_DEFAULT_BACKEND";

#[derive(Debug, Parser)]
#[command(name = "pmt", version, about = "Measure power and energy of commands")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// List backends and whether they are usable here.
    List {
        /// Backend setting, KEY=VALUE (e.g. sysfs_root=/tmp/fake).
        #[arg(short = 'c', long = "config", value_parser = parse_kv)]
        config: Vec<(String, String)>,
    },
    /// Run a command and report its energy on each backend.
    Run {
        /// Backend to measure with; repeatable. Defaults to
        /// $PMT_DEFAULT_BACKEND, else rapl.
        #[arg(short, long = "backend")]
        backends: Vec<String>,
        #[arg(short, long, default_value_t = 0)]
        device: u32,
        /// Sampling interval; defaults to each backend's own default.
        #[arg(short, long)]
        interval_ms: Option<u64>,
        /// Record a power trace per backend to PATH.<backend>.
        #[arg(long, value_name = "PATH")]
        dump: Option<PathBuf>,
        /// Constant power of the synthetic backend.
        #[arg(long, value_name = "WATTS")]
        synthetic_watts: Option<f64>,
        /// Backend setting, KEY=VALUE; repeatable.
        #[arg(short = 'c', long = "config", value_parser = parse_kv)]
        config: Vec<(String, String)>,
        #[arg(last = true, required = true, value_name = "COMMAND")]
        command: Vec<String>,
    },
    /// Summarize trace files: energy, power, EDP and efficiency.
    Analyze {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        /// Operation count of the traced run, for GFLOP/s/W.
        #[arg(long, value_name = "N")]
        flops: Option<u64>,
        /// Emit CSV instead of text.
        #[arg(long)]
        csv: bool,
    },
}

fn parse_kv(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .ok_or_else(|| format!("expected KEY=VALUE, got {s:?}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Cmd::List { config } => {
            print!("{}", cmd_list(&config.into_iter().collect()));
            0
        }
        Cmd::Run {
            mut backends,
            device,
            interval_ms,
            dump,
            synthetic_watts,
            config,
            command,
        } => {
            if backends.is_empty() {
                backends.push(std::env::var(DEFAULT_BACKEND_ENV).unwrap_or_else(|_| "rapl".into()));
            }
            let mut config: Config = config.into_iter().collect();
            if let Some(w) = synthetic_watts {
                config.set("power_watts", w);
            }
            if let Some(ms) = interval_ms {
                config.set("interval_ms", ms);
            }
            let opts = RunOptions {
                backends,
                device,
                config,
                dump,
                command,
            };
            match cmd_run(&opts) {
                Ok(report) => {
                    for m in &report.measurements {
                        eprintln!("{m}");
                    }
                    report.exit_code
                }
                Err(e) => {
                    eprintln!("pmt: {e}");
                    e.exit_code()
                }
            }
        }
        Cmd::Analyze { traces, flops, csv } => match analyze(&traces, flops) {
            Ok(analysis) if csv => match analysis.to_csv() {
                Ok(text) => {
                    print!("{text}");
                    0
                }
                Err(e) => {
                    eprintln!("pmt: {e}");
                    1
                }
            },
            Ok(analysis) => {
                print!("{}", analysis.to_text());
                0
            }
            Err(e) => {
                eprintln!("pmt: {e}");
                1
            }
        },
    };
    ExitCode::from(code.clamp(0, 255) as u8)
}
