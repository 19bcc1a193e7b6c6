use std::fmt::Write;

use pmt_core::{list_backends, Config};

/// One line per registered backend:
/// `<name> <available|unavailable> devices=<n> min_interval_ms=<ms> kind=<kind>`.
pub fn cmd_list(config: &Config) -> String {
    let mut out = String::new();
    for info in list_backends(config) {
        let d = &info.descriptor;
        let _ = write!(
            out,
            "{} {} devices={} min_interval_ms={} kind={}",
            d.backend_name,
            if info.available { "available" } else { "unavailable" },
            info.devices,
            d.min_interval.as_millis(),
            d.counter_kind.as_str(),
        );
        if !d.channels.is_empty() {
            let names: Vec<&str> = d.channel_names().collect();
            let _ = write!(out, " channels={}", names.join(","));
        }
        if let Some(detail) = &info.detail {
            let _ = write!(out, " ({detail})");
        }
        out.push('\n');
    }
    out
}
