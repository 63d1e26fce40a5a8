//! Command-line front end for `platoon-core`.
//!
//! Subcommands:
//! - `simulate` runs one TOML config and writes a bundle
//!   (`trajectory.csv`, `summary.json`, `resolved_config.toml`).
//! - `sweep` does the same for every value along one axis, plus `index.csv`.
//! - `stability` tabulates neutral stability lines.
//! - `eigcheck` compares the closed-form criteria with the eigenvalue oracle.
//! - `ov` tabulates the optimal velocity function and fundamental diagram.

pub mod analysis;
pub mod config;
pub mod error;
pub mod output;
pub mod simulate;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use platoon_core::Connectivity;

pub use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "platoon",
    version,
    about = "Multi-platoon ring-road simulations and stability analysis"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    None,
    Front,
    TwoWay,
}

impl From<Model> for Connectivity {
    fn from(m: Model) -> Self {
        match m {
            Model::None => Connectivity::None,
            Model::Front => Connectivity::Front,
            Model::TwoWay => Connectivity::TwoWay,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write its output bundle.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Skip trajectory.csv.
        #[arg(long)]
        summary_only: bool,
    },
    /// Run a scenario template once per value of one parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        axis: simulate::Axis,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        parallel: usize,
        #[arg(long)]
        summary_only: bool,
    },
    /// Tabulate neutral stability lines a*(h).
    Stability {
        #[arg(long, value_enum)]
        model: Model,
        #[arg(long = "n", value_delimiter = ',', default_value = "2,3,4,5,6")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 0.3)]
        p: f64,
        #[arg(long = "t-d", value_delimiter = ',', default_value = "0")]
        t_d: Vec<f64>,
        #[arg(long, default_value_t = 10.0)]
        h_min: f64,
        #[arg(long, default_value_t = 34.0)]
        h_max: f64,
        #[arg(long, default_value_t = 0.1)]
        h_step: f64,
        /// Take the OV parameters from this run config.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the closed-form criteria against full-ring eigenvalues.
    Eigcheck {
        #[arg(long, value_enum, default_value = "none")]
        model: Model,
        #[arg(long = "n", value_delimiter = ',', default_value = "2,3,4,5,6")]
        sizes: Vec<usize>,
        /// Number of platoons on the ring.
        #[arg(long, default_value_t = 60)]
        m: usize,
        #[arg(long, default_value_t = 0.3)]
        p: f64,
        #[arg(long = "t-d", default_value_t = 0.0)]
        t_d: f64,
        #[arg(long, default_value_t = 10.0)]
        h_min: f64,
        #[arg(long, default_value_t = 34.0)]
        h_max: f64,
        #[arg(long, default_value_t = 2.0)]
        h_step: f64,
        #[arg(long, default_value_t = 0.2)]
        a_min: f64,
        #[arg(long, default_value_t = 3.0)]
        a_max: f64,
        #[arg(long, default_value_t = 0.2)]
        a_step: f64,
        /// Relative distance from a* inside which disagreement is excused.
        #[arg(long, default_value_t = 0.05)]
        margin: f64,
        #[arg(long, default_value_t = 1)]
        parallel: usize,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tabulate V(h), V'(h) and the fundamental diagram.
    Ov {
        #[arg(long, default_value_t = 0.5)]
        h_min: f64,
        #[arg(long, default_value_t = 60.0)]
        h_max: f64,
        #[arg(long, default_value_t = 0.5)]
        h_step: f64,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

pub fn run(cli: Cli) -> Result<()> {
    use analysis::Range;
    match cli.command {
        Command::Simulate {
            config,
            out,
            seed,
            summary_only,
        } => simulate::simulate(&config, &out, seed, !summary_only),
        Command::Sweep {
            config,
            out,
            axis,
            values,
            seed,
            parallel,
            summary_only,
        } => simulate::sweep(simulate::SweepArgs {
            config: &config,
            out: &out,
            axis,
            values: &values,
            seed,
            parallel,
            write_trajectory: !summary_only,
        }),
        Command::Stability {
            model,
            sizes,
            p,
            t_d,
            h_min,
            h_max,
            h_step,
            config,
            out,
        } => analysis::stability(analysis::StabilityArgs {
            model: model.into(),
            sizes: &sizes,
            p,
            t_d: &t_d,
            h: Range {
                min: h_min,
                max: h_max,
                step: h_step,
            },
            ov: analysis::ov_params(config.as_deref())?,
            out: &out,
        }),
        Command::Eigcheck {
            model,
            sizes,
            m,
            p,
            t_d,
            h_min,
            h_max,
            h_step,
            a_min,
            a_max,
            a_step,
            margin,
            parallel,
            config,
            out,
        } => analysis::eigcheck(analysis::EigcheckArgs {
            model: model.into(),
            sizes: &sizes,
            n_platoons: m,
            p,
            t_d,
            h: Range {
                min: h_min,
                max: h_max,
                step: h_step,
            },
            a: Range {
                min: a_min,
                max: a_max,
                step: a_step,
            },
            margin,
            ov: analysis::ov_params(config.as_deref())?,
            parallel,
            out: &out,
        })
        .map(|_| ()),
        Command::Ov {
            h_min,
            h_max,
            h_step,
            config,
            out,
        } => analysis::ov_table(
            &analysis::ov_params(config.as_deref())?,
            Range {
                min: h_min,
                max: h_max,
                step: h_step,
            },
            &out,
        ),
    }
}
