use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Reads a sysfs attribute holding one non-negative ASCII decimal integer.
pub(crate) fn read_u64(path: &Path) -> Result<u64> {
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_u64(path, &content)
}

pub(crate) fn parse_u64(path: &Path, content: &str) -> Result<u64> {
    let trimmed = content.trim();
    let parse_err = |reason: &str| Error::Parse {
        path: path.to_path_buf(),
        content: content.to_string(),
        reason: reason.to_string(),
    };
    if trimmed.is_empty() {
        return Err(parse_err("empty attribute"));
    }
    if trimmed.starts_with('-') {
        return Err(parse_err("negative value"));
    }
    trimmed.parse().map_err(|e: std::num::ParseIntError| parse_err(&e.to_string()))
}

/// Reads a one-line text attribute, `None` if absent or empty.
pub(crate) fn read_label(path: &Path) -> Option<String> {
    fs::read_to_string(path)
        .ok()
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
}
