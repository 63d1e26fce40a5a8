//! TOML run configuration. Every section except `seed` and `[layout]` is
//! optional and falls back to the standard ring defaults; unknown keys are
//! errors.

use std::path::Path;

use platoon_core::metrics::DetectorConfig;
use platoon_core::scenario::{evenly_mixed_layout, segregated_layout, uniform_layout};
use platoon_core::{
    Connectivity, ControlParams, OvParams, PlatoonSpec, RingRoad, SafetyParams, Scenario, SimConfig,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Must fit in a signed 64-bit integer, the TOML integer range.
    pub seed: u64,
    #[serde(default = "default_perturbation")]
    pub perturbation: f64,
    #[serde(default)]
    pub ring: RingRoad,
    #[serde(default)]
    pub ov: OvParams,
    #[serde(default)]
    pub control: ControlParams,
    #[serde(default)]
    pub safety: SafetyParams,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub detector: DetectorConfig,
    pub layout: Layout,
}

fn default_perturbation() -> f64 {
    2.5
}

/// How the ring is divided into platoons and HDVs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Layout {
    /// Identical platoons filling the ring.
    Uniform {
        platoon_size: usize,
        connectivity: Connectivity,
    },
    /// Unconnected platoons followed by a block of `hdv_count` HDVs; the
    /// platoon count is whatever fills the rest of the ring.
    Segregated {
        platoon_size: usize,
        hdv_count: usize,
    },
    /// Unconnected platoons, each trailed by `hdv_per_platoon` HDVs.
    EvenlyMixed {
        platoon_size: usize,
        hdv_per_platoon: usize,
    },
    /// Platoons in ring order, starting at the back.
    Explicit { platoons: Vec<PlatoonSpec> },
}

impl Layout {
    fn platoons(&self, n_vehicles: usize) -> platoon_core::Result<Vec<PlatoonSpec>> {
        match *self {
            Layout::Uniform {
                platoon_size,
                connectivity,
            } => uniform_layout(n_vehicles, platoon_size, connectivity),
            Layout::Segregated {
                platoon_size,
                hdv_count,
            } => {
                let rest = n_vehicles.checked_sub(hdv_count).unwrap_or(usize::MAX);
                if platoon_size == 0 || rest == usize::MAX || rest % platoon_size != 0 {
                    return Err(platoon_core::Error::InvalidParameter {
                        name: "layout.hdv_count",
                        reason: format!(
                            "{n_vehicles} vehicles minus {hdv_count} HDVs is not a whole number of platoons of {platoon_size}"
                        ),
                    });
                }
                segregated_layout(platoon_size, rest / platoon_size, hdv_count)
            }
            Layout::EvenlyMixed {
                platoon_size,
                hdv_per_platoon,
            } => evenly_mixed_layout(n_vehicles, platoon_size, hdv_per_platoon),
            Layout::Explicit { ref platoons } => Ok(platoons.clone()),
        }
    }
}

impl RunConfig {
    /// Reads and parses a config file. Validation happens in
    /// [`RunConfig::scenario`].
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => CliError::MissingFile(path.to_path_buf()),
            _ => CliError::Io {
                context: format!("reading {}", path.display()),
                source: e,
            },
        })?;
        toml::from_str(&text).map_err(|e| CliError::Schema {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// The validated scenario this config describes.
    pub fn scenario(&self) -> Result<Scenario> {
        if i64::try_from(self.seed).is_err() {
            return Err(platoon_core::Error::InvalidParameter {
                name: "seed",
                reason: format!("{} exceeds the TOML integer range", self.seed),
            }
            .into());
        }
        self.detector.validate()?;
        let scenario = Scenario {
            ring: self.ring,
            platoons: self.layout.platoons(self.ring.n_vehicles)?,
            control: self.control,
            safety: self.safety,
            ov: self.ov,
            sim: self.sim,
            seed: self.seed,
            perturbation: self.perturbation,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configs always serialize")
    }
}

/// Connectivity given on the command line.
pub fn connectivity_name(c: Connectivity) -> &'static str {
    match c {
        Connectivity::None => "none",
        Connectivity::Front => "front",
        Connectivity::TwoWay => "two_way",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str =
        "seed = 3\n[layout]\nkind = \"uniform\"\nplatoon_size = 6\nconnectivity = \"none\"\n";

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg: RunConfig = toml::from_str(MINIMAL).unwrap();
        let s = cfg.scenario().unwrap();
        assert_eq!(s.platoons.len(), 20);
        assert_eq!(s.ring.length, 2640.0);
        assert_eq!(s.control.a, 0.6);
        assert_eq!(s.perturbation, 2.5);
        assert_eq!(s.sim.horizon, 4000.0);
    }

    #[test]
    fn partial_sections_fill_in() {
        let text = format!("{MINIMAL}[control]\nt_d = 0.8\n");
        let cfg: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(cfg.control.t_d, 0.8);
        assert_eq!(cfg.control.p, 0.3);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for extra in ["colour = 1\n", "[control]\nalpha = 0.6\n", "[layout2]\n"] {
            let text = format!("{MINIMAL}{extra}");
            assert!(toml::from_str::<RunConfig>(&text).is_err(), "{extra:?}");
        }
        let text = MINIMAL.replace("platoon_size = 6", "platoon_size = 6\nsize = 2");
        assert!(toml::from_str::<RunConfig>(&text).is_err());
    }

    #[test]
    fn toml_round_trip() {
        let mut cfg: RunConfig = toml::from_str(MINIMAL).unwrap();
        cfg.layout = Layout::Explicit {
            platoons: vec![PlatoonSpec::new(4, Connectivity::TwoWay); 30],
        };
        cfg.control.t_d = 1.2;
        let back: RunConfig = toml::from_str(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn segregated_platoon_count_is_derived() {
        let cfg = RunConfig {
            layout: Layout::Segregated {
                platoon_size: 6,
                hdv_count: 30,
            },
            ..toml::from_str(MINIMAL).unwrap()
        };
        assert_eq!(cfg.scenario().unwrap().hdv_count(), 30);
        let bad = RunConfig {
            layout: Layout::Segregated {
                platoon_size: 7,
                hdv_count: 30,
            },
            ..cfg
        };
        assert_eq!(
            bad.scenario().unwrap_err().exit_code(),
            crate::error::exit::VALIDATION
        );
    }

    #[test]
    fn huge_seeds_are_rejected() {
        let mut cfg: RunConfig = toml::from_str(MINIMAL).unwrap();
        cfg.seed = u64::MAX;
        assert!(cfg.scenario().is_err());
    }
}
