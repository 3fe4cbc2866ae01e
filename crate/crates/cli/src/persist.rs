// Copyright 2026 The jumpgrad Authors
// SPDX-License-Identifier: Apache-2.0

//! Result files: headered CSV and JSON. Every file starts with the config
//! hash and seed so a table can be traced back to its run.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use jumpgrad::model::ControlPulse;

use crate::error::CliError;

/// Provenance written at the top of every result file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Header {
    pub config_sha256: String,
    pub seed: u64,
}

impl Header {
    pub fn line(&self) -> String {
        format!("# config_sha256={} seed={}", self.config_sha256, self.seed)
    }
}

/// Writes tables into one output directory.
pub struct Writer {
    pub dir: PathBuf,
    pub header: Header,
}

impl Writer {
    pub fn new(dir: &Path, header: Header) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), header })
    }

    /// Write a CSV table. `meta` lines go after the provenance line as
    /// `# key=value`.
    pub fn csv(
        &self,
        name: &str,
        meta: &[(&str, String)],
        columns: &[String],
        rows: &[Vec<String>],
    ) -> Result<PathBuf, CliError> {
        let mut s = self.header.line();
        s.push('\n');
        for (k, v) in meta {
            let _ = writeln!(s, "# {k}={v}");
        }
        s.push_str(&columns.join(","));
        s.push('\n');
        for r in rows {
            debug_assert_eq!(r.len(), columns.len());
            s.push_str(&r.join(","));
            s.push('\n');
        }
        let path = self.dir.join(name);
        fs::write(&path, s)?;
        Ok(path)
    }

    /// Pretty JSON wrapped as `{"config_sha256", "seed", "data"}`.
    pub fn json<T: Serialize>(&self, name: &str, data: &T) -> Result<PathBuf, CliError> {
        #[derive(Serialize)]
        struct Wrapped<'a, T> {
            config_sha256: &'a str,
            seed: u64,
            data: &'a T,
        }
        let w = Wrapped { config_sha256: &self.header.config_sha256, seed: self.header.seed, data };
        let path = self.dir.join(name);
        fs::write(&path, serde_json::to_string_pretty(&w).expect("result serializes") + "\n")?;
        Ok(path)
    }
}

/// Shortest round-trip float formatting.
pub fn f(x: f64) -> String {
    format!("{x}")
}

pub fn cols(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

pub fn write_pulse(w: &Writer, name: &str, pulse: &ControlPulse) -> Result<PathBuf, CliError> {
    let mut columns = cols(&["step", "t_ns"]);
    columns.extend((0..pulse.controls()).map(|k| format!("u{k}_rad_per_ns")));
    let rows: Vec<Vec<String>> = (0..pulse.steps())
        .map(|j| {
            let mut r = vec![j.to_string(), f(j as f64 * pulse.dt())];
            r.extend((0..pulse.controls()).map(|k| f(pulse.get(k, j))));
            r
        })
        .collect();
    w.csv(name, &[("dt_ns", f(pulse.dt()))], &columns, &rows)
}

/// Read a pulse written by [`write_pulse`].
pub fn read_pulse(path: &Path) -> Result<ControlPulse, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let bad = |m: String| CliError::Config(format!("{}: {m}", path.display()));
    let mut dt = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut seen_columns = false;
    for (ln, line) in text.lines().enumerate() {
        if let Some(meta) = line.strip_prefix('#') {
            if let Some(v) = meta.trim().strip_prefix("dt_ns=") {
                dt = Some(v.parse::<f64>().map_err(|e| bad(format!("line {}: {e}", ln + 1)))?);
            }
            continue;
        }
        if !seen_columns {
            seen_columns = true;
            continue;
        }
        let vals = line
            .split(',')
            .skip(2)
            .map(|x| x.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| bad(format!("line {}: {e}", ln + 1)))?;
        if rows.is_empty() {
            rows = vec![Vec::new(); vals.len()];
        }
        if vals.len() != rows.len() {
            return Err(bad(format!("line {}: ragged row", ln + 1)));
        }
        for (r, v) in rows.iter_mut().zip(vals) {
            r.push(v);
        }
    }
    let dt = dt.ok_or_else(|| bad("missing `# dt_ns=` line".into()))?;
    ControlPulse::new(dt, rows).map_err(|e| bad(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pulse_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let w = Writer::new(dir.path(), Header { config_sha256: "ab".into(), seed: 3 }).unwrap();
        let p = ControlPulse::new(0.1, vec![vec![0.1, -2.5e-7, 3.0], vec![1.0 / 3.0, 0.0, -1.0]]).unwrap();
        let path = write_pulse(&w, "pulse.csv", &p).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# config_sha256=ab seed=3\n"));
        assert_eq!(read_pulse(&path).unwrap(), p);
    }
}
