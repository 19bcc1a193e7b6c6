//! Fake sysfs trees for exercising the file-backed backends without
//! hardware.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::config::Config;

/// A directory laid out like `/sys`, with `class/powercap` and `class/hwmon`.
#[derive(Debug, Clone)]
pub struct FakeSysfs {
    root: PathBuf,
}

impl FakeSysfs {
    pub fn new(root: impl Into<PathBuf>) -> io::Result<Self> {
        let root = root.into();
        fs::create_dir_all(root.join("class/powercap"))?;
        fs::create_dir_all(root.join("class/hwmon"))?;
        Ok(FakeSysfs { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn powercap_dir(&self) -> PathBuf {
        self.root.join("class/powercap")
    }

    pub fn hwmon_dir(&self) -> PathBuf {
        self.root.join("class/hwmon")
    }

    /// Configuration pointing every sysfs backend at this tree.
    pub fn config(&self) -> Config {
        Config::new().with("sysfs_root", self.root.display())
    }

    /// Adds a zone directory such as `intel-rapl:0` or `intel-rapl:0:1`.
    pub fn add_rapl_zone(&self, zone: &str, name: &str, energy_uj: u64, max_energy_range_uj: u64) -> io::Result<PathBuf> {
        let dir = self.powercap_dir().join(zone);
        fs::create_dir_all(&dir)?;
        fs::write(dir.join("name"), format!("{name}\n"))?;
        fs::write(dir.join("max_energy_range_uj"), format!("{max_energy_range_uj}\n"))?;
        write_atomic(&dir.join("energy_uj"), &format!("{energy_uj}\n"))?;
        Ok(dir)
    }

    pub fn set_energy_uj(&self, zone: &str, energy_uj: u64) -> io::Result<()> {
        write_atomic(
            &self.powercap_dir().join(zone).join("energy_uj"),
            &format!("{energy_uj}\n"),
        )
    }

    /// Writes `files` (name, content) into `hwmon<index>`.
    pub fn add_hwmon(&self, index: u32, files: &[(&str, &str)]) -> io::Result<PathBuf> {
        let dir = self.hwmon_dir().join(format!("hwmon{index}"));
        fs::create_dir_all(&dir)?;
        for (name, content) in files {
            write_atomic(&dir.join(name), content)?;
        }
        Ok(dir)
    }
}

/// Replaces `path` via rename so concurrent readers never see a partial
/// write.
pub fn write_atomic(path: &Path, content: &str) -> io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, content)?;
    fs::rename(&tmp, path)
}
