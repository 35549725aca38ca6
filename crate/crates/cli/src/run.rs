use std::path::PathBuf;
use std::time::Instant;

use flowkernel::process::{simulate_bm, Direction};
use flowkernel::rng::derive_seed;
use flowkernel::verify::BoundReport;
use flowkernel::RngStream;
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, Kind};
use crate::error::CliError;
use crate::output::{self, DirLock, Manifest, PathRow, Summary};
use crate::suite::{self, MomentRow, Skipped};

/// Everything a run produced, as written to the output directory.
#[derive(Debug)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub reports: Vec<BoundReport>,
    pub skipped: Vec<Skipped>,
    pub manifest: Manifest,
}

impl RunOutcome {
    pub fn failures(&self) -> impl Iterator<Item = &BoundReport> {
        self.reports.iter().filter(|r| !r.passed())
    }

    pub fn all_passed(&self) -> bool {
        self.failures().next().is_none()
    }
}

pub fn config_hash(config: &ExperimentConfig) -> String {
    let canonical = serde_json::to_vec(config).expect("configs serialize");
    Sha256::digest(&canonical)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Validates, locks the output directory, runs the configured kind and writes
/// its artifacts.
pub fn run(config: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    let findings = config.validate();
    if !findings.is_empty() {
        return Err(CliError::InvalidConfig(findings));
    }
    let started = Instant::now();
    let seed = config.seed.expect("validated");
    let out_dir = config.out_dir();
    let _lock = DirLock::acquire(&out_dir)?;

    let mut reports = Vec::new();
    let mut skipped = Vec::new();
    let mut moments: Vec<MomentRow> = Vec::new();
    let mut path_rows: Vec<PathRow> = Vec::new();
    let (mc, grid) = (&config.mc, &config.grid);

    for (i, flow) in config.flow.iter().enumerate() {
        match config.kind {
            Kind::Simulate => {
                let x = flow.model.origin();
                let stream = RngStream::new(derive_seed(seed, &format!("path/{i}")), 0);
                let path =
                    simulate_bm(flow, Direction::Forward, &x, flow.horizon, mc.step, stream)?;
                for (k, (t, p)) in path.times.iter().zip(&path.points).enumerate() {
                    let coords: Vec<String> = p.as_slice().iter().map(|v| v.to_string()).collect();
                    path_rows.push(PathRow {
                        flow: flow.label(),
                        k,
                        t: *t,
                        coords: coords.join(" "),
                    });
                }
                let (rows, reps) = suite::simulate_suite(flow, i, grid, mc, seed)?;
                moments.extend(rows);
                reports.extend(reps);
            }
            Kind::Kernel => {
                let (r, s) = suite::kernel_suite(flow, i, grid, mc, seed)?;
                reports.extend(r);
                skipped.extend(s);
            }
            Kind::Verify | Kind::FullSuite => {
                let instances = suite::verify_instances(flow, i, grid, mc, seed);
                let (r, s) = suite::evaluate(flow, &instances)?;
                reports.extend(r);
                skipped.extend(s);
                if config.kind == Kind::FullSuite {
                    let (r, s) = suite::kernel_suite(flow, i, grid, mc, seed)?;
                    reports.extend(r);
                    skipped.extend(s);
                    reports.extend(suite::martingale_suite(flow, i, grid, mc, seed)?);
                }
            }
        }
    }

    let mut files = Vec::new();
    let mut put = |name: &str| {
        files.push(name.to_string());
        out_dir.join(name)
    };
    if config.kind == Kind::Simulate {
        output::write_rows(&put("path.csv"), &path_rows)?;
        output::write_rows(&put("simulate.csv"), &moments)?;
    }
    output::write_reports(&put("reports.csv"), &reports)?;
    if matches!(config.kind, Kind::Verify | Kind::FullSuite) {
        output::write_rows(&put("decay.csv"), &output::decay_rows(&reports))?;
    }
    output::write_json(&put("summary.json"), &Summary::new(&reports, &skipped))?;
    files.push("manifest.json".into());

    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: config_hash(config),
        kind: config.kind.as_str().to_string(),
        seed,
        threads: rayon::current_num_threads(),
        wall_seconds: started.elapsed().as_secs_f64(),
        files,
    };
    output::write_json(&out_dir.join("manifest.json"), &manifest)?;
    Ok(RunOutcome {
        out_dir,
        reports,
        skipped,
        manifest,
    })
}
