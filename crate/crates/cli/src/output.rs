//! On-disk formats: trajectory CSV, summary JSON and the resolved config.
//!
//! Floats are written in the shortest form that parses back to the same
//! value, so identical runs give byte-identical files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use platoon_core::metrics::RunSummary;
use platoon_core::Trajectory;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CONFIG_FILE: &str = "resolved_config.toml";

pub const TRAJECTORY_COLUMNS: [&str; 8] = [
    "time_s",
    "platoon_id",
    "index_in_platoon",
    "global_index",
    "position_m",
    "speed_mps",
    "accel_mps2",
    "headway_m",
];

/// What produced a bundle: enough to rerun it exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub config: RunConfig,
}

impl Provenance {
    pub fn new(config: &RunConfig) -> Self {
        Self {
            tool: "platoon".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed: config.seed,
            config: config.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionInfo {
    pub behind: usize,
    pub ahead: usize,
    pub time_s: f64,
    pub headway_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryDoc {
    /// `"ok"` or `"collision"`.
    pub status: String,
    pub metrics: Option<RunSummary>,
    pub collision: Option<CollisionInfo>,
    pub provenance: Provenance,
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(CliError::io(format!("creating {}", path.display())))
}

pub(crate) fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(create(path)?))
}

pub(crate) fn csv_error(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Io {
        context: format!("writing {}", path.display()),
        source: e.into(),
    }
}

pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut out = csv_writer(path)?;
    let err = csv_error(path);
    out.write_record(TRAJECTORY_COLUMNS).map_err(&err)?;
    for r in 0..traj.n_records() {
        let time = traj.times[r].to_string();
        let headways = traj.headways_at(r);
        let (x, v, a) = (traj.positions_at(r), traj.speeds_at(r), traj.accels_at(r));
        for (i, info) in traj.vehicles.iter().enumerate() {
            out.write_record([
                time.clone(),
                info.platoon.to_string(),
                info.index_in_platoon.to_string(),
                i.to_string(),
                x[i].to_string(),
                v[i].to_string(),
                a[i].to_string(),
                headways[i].to_string(),
            ])
            .map_err(&err)?;
        }
    }
    out.flush()
        .map_err(CliError::io(format!("writing {}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| CliError::Io {
        context: format!("writing {}", path.display()),
        source: e.into(),
    })?;
    writeln!(out)
        .and_then(|_| out.flush())
        .map_err(CliError::io(format!("writing {}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(CliError::io(format!("writing {}", path.display())))
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(CliError::io(format!("creating {}", dir.display())))
}
