//! Atomic file emission and the run manifest.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const MANIFEST_NAME: &str = "manifest.json";

/// Writes `bytes` to `path` via a sibling temp file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(|e| CliError::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| CliError::io(&tmp, e))?;
    f.sync_all().map_err(|e| CliError::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

/// In-memory CSV with a schema comment and a header row.
#[derive(Debug, Clone)]
pub struct Csv {
    schema: String,
    columns: Vec<String>,
    body: String,
}

impl Csv {
    pub fn new(schema: &str, columns: &[&str]) -> Self {
        Csv {
            schema: schema.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            body: String::new(),
        }
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn push(&mut self, row: &[Cell]) {
        debug_assert_eq!(row.len(), self.columns.len());
        let line: Vec<String> = row.iter().map(Cell::render).collect();
        let _ = writeln!(self.body, "{}", line.join(","));
    }

    /// Appends already rendered lines.
    pub fn push_raw(&mut self, line: &str) {
        self.body.push_str(line);
        self.body.push('\n');
    }

    pub fn render(&self) -> String {
        format!("#schema: {} columns={}\n{}\n{}", self.schema, self.columns.len(), self.columns.join(","), self.body)
    }
}

/// One CSV field. Floats use the shortest representation that round-trips.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    U(u64),
    S(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(x) if x.is_nan() => "nan".into(),
            Cell::F(x) => format!("{x}"),
            Cell::U(u) => u.to_string(),
            Cell::S(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}
impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::U(x)
    }
}
impl From<u32> for Cell {
    fn from(x: u32) -> Self {
        Cell::U(u64::from(x))
    }
}
impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::U(x as u64)
    }
}
impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::S(x.to_string())
    }
}
impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::F)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputEntry {
    pub path: String,
    pub kind: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Complete,
    PartialRun,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: String,
    pub seed: u64,
    pub version: String,
    pub output_dir: String,
    pub threads: usize,
    pub status: RunStatus,
    pub wall_clock_seconds: f64,
    pub timings: Vec<Timing>,
    pub outputs: Vec<OutputEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl RunManifest {
    pub fn read(dir: &Path) -> Option<RunManifest> {
        let text = fs::read_to_string(dir.join(MANIFEST_NAME)).ok()?;
        serde_json::from_str(&text).ok()
    }
}

/// Output directory that records every file it writes.
pub struct OutputDir {
    root: PathBuf,
    entries: Vec<OutputEntry>,
    timings: Vec<Timing>,
    started: Instant,
    stage_start: Instant,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        let now = Instant::now();
        Ok(OutputDir {
            root: root.to_path_buf(),
            entries: Vec::new(),
            timings: Vec::new(),
            started: now,
            stage_start: now,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    fn record(&mut self, rel: &str, kind: &str, bytes: usize) {
        self.entries.retain(|e| e.path != rel);
        self.entries.push(OutputEntry { path: rel.to_string(), kind: kind.to_string(), bytes: bytes as u64 });
    }

    pub fn write_csv(&mut self, rel: &str, csv: &Csv) -> Result<(), CliError> {
        let text = csv.render();
        write_atomic(&self.path(rel), text.as_bytes())?;
        self.record(rel, "csv", text.len());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
        text.push('\n');
        write_atomic(&self.path(rel), text.as_bytes())?;
        self.record(rel, "json", text.len());
        Ok(())
    }

    pub fn write_text(&mut self, rel: &str, text: &str) -> Result<(), CliError> {
        write_atomic(&self.path(rel), text.as_bytes())?;
        self.record(rel, "text", text.len());
        Ok(())
    }

    /// Lists a file that an earlier, interrupted run already wrote.
    pub fn adopt(&mut self, rel: &str, kind: &str) -> Result<(), CliError> {
        let p = self.path(rel);
        let len = fs::metadata(&p).map_err(|e| CliError::io(&p, e))?.len();
        self.record(rel, kind, len as usize);
        Ok(())
    }

    /// Closes the current timing stage.
    pub fn stage(&mut self, name: &str) {
        let now = Instant::now();
        self.timings.push(Timing { stage: name.to_string(), seconds: (now - self.stage_start).as_secs_f64() });
        self.stage_start = now;
    }

    /// Writes the manifest; it must be the last file of a run.
    pub fn finish(mut self, ctx: &RunContext, status: RunStatus, notes: Vec<String>) -> Result<RunManifest, CliError> {
        self.entries.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = RunManifest {
            command: ctx.command.clone(),
            config_path: ctx.config_path.display().to_string(),
            seed: ctx.seed,
            version: crate::VERSION.to_string(),
            output_dir: self.root.display().to_string(),
            threads: ctx.threads,
            status,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            timings: self.timings,
            outputs: self.entries,
            notes,
        };
        let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Runtime(e.to_string()))?;
        text.push('\n');
        write_atomic(&self.root.join(MANIFEST_NAME), text.as_bytes())?;
        Ok(manifest)
    }
}

/// What every command needs to know about its invocation.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub command: String,
    pub config_path: PathBuf,
    pub seed: u64,
    pub threads: usize,
    pub trials: Option<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_schema_then_header() {
        let mut c = Csv::new("thzra.test/1", &["a", "b"]);
        c.push(&[Cell::F(0.1), Cell::U(3)]);
        c.push(&[Cell::Empty, Cell::S("x".into())]);
        assert_eq!(c.render(), "#schema: thzra.test/1 columns=2\na,b\n0.1,3\n,x\n");
    }

    #[test]
    fn atomic_write_leaves_no_temp_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path()).unwrap();
        out.write_text("sub/a.txt", "hello").unwrap();
        out.write_text("sub/a.txt", "again").unwrap();
        let names: Vec<_> = fs::read_dir(dir.path().join("sub")).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names.len(), 1);
        assert_eq!(fs::read_to_string(dir.path().join("sub/a.txt")).unwrap(), "again");
        assert_eq!(out.entries.len(), 1);
    }
}
