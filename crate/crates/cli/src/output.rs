//! Writers for the run artifacts and the output-directory lock.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::path::{Path, PathBuf};

use flowkernel::verify::BoundReport;
use serde::Serialize;

use crate::error::CliError;
use crate::suite::Skipped;

pub const LOCK_FILE: &str = ".flowkernel.lock";

/// Held for the duration of a run; a second run on the same directory fails
/// instead of interleaving files.
#[derive(Debug)]
pub struct DirLock {
    path: PathBuf,
}

impl DirLock {
    pub fn acquire(dir: &Path) -> Result<DirLock, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let path = dir.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(DirLock { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(CliError::Locked(dir.to_path_buf()))
            }
            Err(e) => Err(CliError::io(&path, e)),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

fn writer(path: &Path) -> Result<csv::Writer<File>, CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Output(path.display().to_string(), e.to_string())
}

pub fn write_reports(path: &Path, reports: &[BoundReport]) -> Result<(), CliError> {
    let mut w = writer(path)?;
    w.write_record(BoundReport::csv_header())
        .map_err(csv_err(path))?;
    for r in reports {
        w.write_record(r.csv_record()).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Rows of the Gaussian decay table: kernel value against the bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayRow {
    pub d_t2: f64,
    pub t: f64,
    pub kernel: f64,
    pub rhs: f64,
    pub a: f64,
    pub flow: String,
}

pub fn decay_rows(reports: &[BoundReport]) -> Vec<DecayRow> {
    let mut rows: Vec<DecayRow> = reports
        .iter()
        .filter(|r| r.name == "gaussian")
        .map(|r| DecayRow {
            d_t2: r.param("d_t2").unwrap_or(f64::NAN),
            t: r.param("t").unwrap_or(f64::NAN),
            kernel: r.lhs,
            rhs: r.rhs,
            a: r.param("a").unwrap_or(f64::NAN),
            flow: r.flow.clone(),
        })
        .collect();
    rows.sort_by(|p, q| {
        p.t.total_cmp(&q.t)
            .then(p.d_t2.total_cmp(&q.d_t2))
            .then(p.a.total_cmp(&q.a))
            .then(p.flow.cmp(&q.flow))
    });
    rows
}

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let mut w = writer(path)?;
    for r in rows {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

#[derive(Clone, Debug, Serialize)]
pub struct PathRow {
    pub flow: String,
    pub k: usize,
    pub t: f64,
    pub coords: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SuiteSummary {
    pub count: usize,
    pub passed: usize,
    pub failed: usize,
    pub worst_margin: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Failure {
    pub name: String,
    pub flow: String,
    pub points: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub suites: BTreeMap<String, SuiteSummary>,
    pub failures: Vec<Failure>,
    pub skipped: Vec<Skipped>,
}

impl Summary {
    pub fn new(reports: &[BoundReport], skipped: &[Skipped]) -> Self {
        let mut suites: BTreeMap<String, SuiteSummary> = BTreeMap::new();
        let mut failures = Vec::new();
        for r in reports {
            let s = suites.entry(r.name.clone()).or_default();
            s.count += 1;
            if r.passed() {
                s.passed += 1;
            } else {
                s.failed += 1;
                failures.push(Failure {
                    name: r.name.clone(),
                    flow: r.flow.clone(),
                    points: r.points.clone(),
                    lhs: r.lhs,
                    rhs: r.rhs,
                    margin: r.margin,
                });
            }
            if r.margin.is_finite() {
                s.worst_margin = Some(s.worst_margin.map_or(r.margin, |m| m.min(r.margin)));
            }
        }
        let failed = failures.len();
        Summary {
            total: reports.len(),
            passed: reports.len() - failed,
            failed,
            suites,
            failures,
            skipped: skipped.to_vec(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub version: String,
    pub config_sha256: String,
    pub kind: String,
    pub seed: u64,
    pub threads: usize,
    pub wall_seconds: f64,
    pub files: Vec<String>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Output(path.display().to_string(), e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}
