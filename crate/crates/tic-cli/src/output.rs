//! Artifact files, the headline summary and the manifest.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::config::RunConfig;

/// One pass/fail criterion of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// Human-readable condition, e.g. `< 1e-6`.
    pub condition: String,
    pub pass: bool,
}

impl Check {
    pub fn below(name: &str, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, condition: format!("< {limit:e}"), pass: value < limit }
    }

    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, condition: format!("<= {limit:e}"), pass: value <= limit }
    }

    pub fn above(name: &str, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, condition: format!("> {limit:e}"), pass: value > limit }
    }

    pub fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, condition: format!(">= {limit:e}"), pass: value >= limit }
    }

    pub fn flag(name: &str, pass: bool) -> Self {
        Self { name: name.into(), value: if pass { 1.0 } else { 0.0 }, condition: "= 1".into(), pass }
    }
}

/// Output directory that records every file it creates.
#[derive(Debug)]
pub struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    pub fn new(dir: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    /// Creates `name` in the output directory and lists it in the manifest.
    pub fn create(&mut self, name: &str) -> std::io::Result<BufWriter<File>> {
        let f = File::create(self.dir.join(name))?;
        if !self.files.iter().any(|n| n == name) {
            self.files.push(name.to_string());
        }
        Ok(BufWriter::new(f))
    }
}

/// Rows `kind,name,value,condition,pass`: metrics first, then checks.
pub fn write_summary<W: Write>(metrics: &[(String, f64)], checks: &[Check], w: W) -> csv::Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["kind", "name", "value", "condition", "pass"])?;
    for (name, v) in metrics {
        wr.write_record(["metric", name, &format!("{v:.16e}"), "", ""])?;
    }
    for c in checks {
        wr.write_record(["check", &c.name, &format!("{:.16e}", c.value), &c.condition, if c.pass { "1" } else { "0" }])?;
    }
    wr.flush()?;
    Ok(())
}

/// Plain-text manifest: command, preset, seed, versions, the resolved configuration and the
/// emitted files.
pub fn write_manifest<W: Write>(cfg: &RunConfig, files: &[String], mut w: W) -> std::io::Result<()> {
    writeln!(w, "command: {}", cfg.command)?;
    writeln!(w, "preset: {}", cfg.preset.name())?;
    writeln!(w, "seed: {}", cfg.mc.seed)?;
    writeln!(w, "version: {} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))?;
    writeln!(w, "[config]")?;
    for (k, v) in &cfg.values {
        writeln!(w, "{k} = {v}")?;
    }
    writeln!(w, "[files]")?;
    for f in files.iter().filter(|f| *f != "manifest.txt") {
        writeln!(w, "{f}")?;
    }
    writeln!(w, "manifest.txt")?;
    w.flush()
}
