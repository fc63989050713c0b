//! Files written by a run: trajectory CSV, JSON reports and the manifest.

use std::fs;
use std::path::{Path, PathBuf};

use belief_dynamics::simulate::{Fractions, Trajectory};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const TRAJECTORY_HEADER: [&str; 6] =
    ["period", "group_id", "consensus", "frac_policymaker", "frac_stick", "frac_leader"];

/// Decimal text with 12 significant digits, trailing zeros dropped.
pub fn fmt_sig(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".into() } else { v.to_string() };
    }
    // the exponent after rounding to 12 digits, so 0.99999999999999 counts as 1
    let sci = format!("{v:.11e}");
    let exp: i32 = sci[sci.find('e').expect("exponent") + 1..].parse().expect("integer exponent");
    let decimals = (11 - exp).max(0) as usize;
    let mut s = format!("{v:.decimals$}");
    if s.contains('.') {
        s.truncate(s.trim_end_matches('0').trim_end_matches('.').len());
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Collects the files of one run and writes the manifest last.
#[derive(Debug)]
pub struct ArtifactWriter {
    dir: PathBuf,
    files: Vec<FileEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub core_version: &'static str,
    pub command: &'a str,
    pub command_line: &'a [String],
    pub seed: u64,
    pub x: f64,
    /// Hash of the config after overrides, in canonical JSON.
    pub config_sha256: String,
    pub files: Vec<FileEntry>,
    pub summary: serde_json::Value,
}

impl ArtifactWriter {
    pub fn new(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(ArtifactWriter { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        self.files.push(FileEntry { path: name.to_string(), sha256: sha256_hex(bytes), bytes: bytes.len() });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn finish(self, mut manifest: Manifest<'_>) -> CliResult<()> {
        manifest.files = self.files;
        let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        let path = self.dir.join(MANIFEST_FILE);
        fs::write(&path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
    }
}

/// One row per (period, group) of the simulated run.
pub fn trajectory_csv(trajectory: &Trajectory) -> CliResult<Vec<u8>> {
    let rows = trajectory.records.iter().flat_map(|r| {
        r.group_consensus.iter().zip(&r.fractions).enumerate().map(|(g, (c, f))| (r.period, g, *c, *f))
    });
    rows_csv(rows)
}

/// `(period, group, consensus, fractions)` rows in the trajectory schema.
pub fn rows_csv(rows: impl IntoIterator<Item = (usize, usize, f64, Fractions)>) -> CliResult<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(TRAJECTORY_HEADER).map_err(io)?;
    for (period, g, c, f) in rows {
        w.write_record([
            period.to_string(),
            g.to_string(),
            fmt_sig(c),
            fmt_sig(f.policymaker),
            fmt_sig(f.stick),
            fmt_sig(f.leader),
        ])
        .map_err(io)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_sig(541.0 / 1060.0), "0.510377358491");
        assert_eq!(fmt_sig(0.5), "0.5");
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(1.0 / 3.0 * 1e-5), "0.00000333333333333");
        assert_eq!(fmt_sig(123.456789012345), "123.456789012");
        assert_eq!(fmt_sig(0.99999999999999), "1");
        assert_eq!(fmt_sig(-0.25), "-0.25");
    }

    #[test]
    fn sha256_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }
}
