//! `simulate` and `sweep`: run scenarios and write one bundle per run.

use std::path::{Path, PathBuf};

use platoon_core::metrics::{summarize, RunSummary};
use platoon_core::sim::run;
use rayon::prelude::*;

use crate::config::{Layout, RunConfig};
use crate::error::{CliError, Result};
use crate::output::{
    self, CollisionInfo, Provenance, SummaryDoc, CONFIG_FILE, SUMMARY_FILE, TRAJECTORY_FILE,
};

/// Runs `config` and writes its bundle into `dir`.
///
/// A collision still produces `summary.json` (with the collision details
/// and no metrics) before the error is returned.
pub fn run_bundle(config: &RunConfig, dir: &Path, write_trajectory: bool) -> Result<RunSummary> {
    let scenario = config.scenario()?;
    output::ensure_dir(dir)?;
    output::write_text(&dir.join(CONFIG_FILE), &config.to_toml())?;
    let provenance = Provenance::new(config);
    let traj = match run(&scenario) {
        Ok(traj) => traj,
        Err(platoon_core::Error::Collision {
            behind,
            ahead,
            time,
            headway,
        }) => {
            let doc = SummaryDoc {
                status: "collision".into(),
                metrics: None,
                collision: Some(CollisionInfo {
                    behind,
                    ahead,
                    time_s: time,
                    headway_m: headway,
                }),
                provenance,
            };
            output::write_json(&dir.join(SUMMARY_FILE), &doc)?;
            return Err(platoon_core::Error::Collision {
                behind,
                ahead,
                time,
                headway,
            }
            .into());
        }
        Err(e) => return Err(e.into()),
    };
    let metrics = summarize(&traj, &config.detector);
    if write_trajectory {
        output::write_trajectory(&dir.join(TRAJECTORY_FILE), &traj)?;
    }
    let doc = SummaryDoc {
        status: "ok".into(),
        metrics: Some(metrics.clone()),
        collision: None,
        provenance,
    };
    output::write_json(&dir.join(SUMMARY_FILE), &doc)?;
    Ok(metrics)
}

pub fn simulate(
    config_path: &Path,
    out: &Path,
    seed: Option<u64>,
    write_trajectory: bool,
) -> Result<()> {
    let mut config = RunConfig::load(config_path)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let m = run_bundle(&config, out, write_trajectory)?;
    match m.stabilization_time_s {
        Some(t) => println!("stabilized at {t} s; bundle in {}", out.display()),
        None => println!(
            "not stabilized (final max headway deviation {:.3} m); bundle in {}",
            m.final_max_headway_dev_m,
            out.display()
        ),
    }
    Ok(())
}

/// Scenario parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Axis {
    #[value(name = "t-d")]
    TD,
    P,
    A,
    Seed,
    PlatoonSize,
    HdvCount,
    HdvPerPlatoon,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::TD => "t_d",
            Axis::P => "p",
            Axis::A => "a",
            Axis::Seed => "seed",
            Axis::PlatoonSize => "platoon_size",
            Axis::HdvCount => "hdv_count",
            Axis::HdvPerPlatoon => "hdv_per_platoon",
        }
    }

    /// `template` with this axis set to `value`.
    pub fn apply(self, template: &RunConfig, value: &str) -> Result<RunConfig> {
        let mut cfg = template.clone();
        let bad = |what: &str| {
            CliError::Usage(format!(
                "sweep value {value:?} for {} is not {what}",
                self.name()
            ))
        };
        let float = || value.parse::<f64>().map_err(|_| bad("a number"));
        let count = || {
            value
                .parse::<usize>()
                .map_err(|_| bad("a non-negative integer"))
        };
        match self {
            Axis::TD => cfg.control.t_d = float()?,
            Axis::P => cfg.control.p = float()?,
            Axis::A => cfg.control.a = float()?,
            Axis::Seed => cfg.seed = value.parse().map_err(|_| bad("an unsigned integer"))?,
            Axis::PlatoonSize => match &mut cfg.layout {
                Layout::Uniform { platoon_size, .. }
                | Layout::Segregated { platoon_size, .. }
                | Layout::EvenlyMixed { platoon_size, .. } => *platoon_size = count()?,
                Layout::Explicit { .. } => return Err(self.mismatch("an explicit")),
            },
            Axis::HdvCount => match &mut cfg.layout {
                Layout::Segregated { hdv_count, .. } => *hdv_count = count()?,
                _ => return Err(self.mismatch("a non-segregated")),
            },
            Axis::HdvPerPlatoon => match &mut cfg.layout {
                Layout::EvenlyMixed {
                    hdv_per_platoon, ..
                } => *hdv_per_platoon = count()?,
                _ => return Err(self.mismatch("a non-evenly-mixed")),
            },
        }
        Ok(cfg)
    }

    fn mismatch(self, layout: &str) -> CliError {
        CliError::Usage(format!(
            "axis {} does not apply to {layout} layout",
            self.name()
        ))
    }
}

pub const INDEX_FILE: &str = "index.csv";
pub const INDEX_COLUMNS: [&str; 10] = [
    "point",
    "axis",
    "value",
    "status",
    "exit_code",
    "stabilized",
    "stabilization_time_s",
    "final_max_headway_dev_m",
    "bundle",
    "error",
];

pub struct SweepArgs<'a> {
    pub config: &'a Path,
    pub out: &'a Path,
    pub axis: Axis,
    pub values: &'a [String],
    pub seed: Option<u64>,
    pub parallel: usize,
    pub write_trajectory: bool,
}

pub fn sweep(args: SweepArgs<'_>) -> Result<()> {
    let mut template = RunConfig::load(args.config)?;
    if let Some(seed) = args.seed {
        template.seed = seed;
    }
    if args.values.is_empty() {
        return Err(CliError::Usage("a sweep needs at least one value".into()));
    }
    output::ensure_dir(args.out)?;
    let pool = thread_pool(args.parallel)?;
    let outcomes: Vec<(PathBuf, Result<RunSummary>)> = pool.install(|| {
        args.values
            .par_iter()
            .enumerate()
            .map(|(i, value)| {
                let dir = PathBuf::from(format!("point_{i:03}"));
                let result = args
                    .axis
                    .apply(&template, value)
                    .and_then(|cfg| run_bundle(&cfg, &args.out.join(&dir), args.write_trajectory));
                (dir, result)
            })
            .collect()
    });

    let path = args.out.join(INDEX_FILE);
    let mut index = output::csv_writer(&path)?;
    let err = output::csv_error(&path);
    index.write_record(INDEX_COLUMNS).map_err(&err)?;
    let mut failed = 0;
    for (i, ((dir, result), value)) in outcomes.iter().zip(args.values).enumerate() {
        let common = [i.to_string(), args.axis.name().to_string(), value.clone()];
        let rest = match result {
            Ok(m) => [
                "ok".to_string(),
                "0".to_string(),
                m.stabilized.to_string(),
                m.stabilization_time_s
                    .map(|t| t.to_string())
                    .unwrap_or_default(),
                m.final_max_headway_dev_m.to_string(),
                dir.display().to_string(),
                String::new(),
            ],
            Err(e) => {
                failed += 1;
                let bundle = if args.out.join(dir).join(SUMMARY_FILE).exists() {
                    dir.display().to_string()
                } else {
                    String::new()
                };
                [
                    "error".to_string(),
                    e.exit_code().to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    bundle,
                    e.to_string(),
                ]
            }
        };
        index
            .write_record(common.iter().chain(&rest))
            .map_err(&err)?;
    }
    index
        .flush()
        .map_err(CliError::io(format!("writing {}", path.display())))?;
    println!(
        "{} of {} points ran; index in {}",
        outcomes.len() - failed,
        outcomes.len(),
        path.display()
    );
    if failed > 0 {
        return Err(CliError::PartialSweep {
            failed,
            total: outcomes.len(),
        });
    }
    Ok(())
}

pub(crate) fn thread_pool(parallel: usize) -> Result<rayon::ThreadPool> {
    if parallel == 0 {
        return Err(CliError::Usage("--parallel must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(parallel)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {parallel} worker threads: {e}")))
}
