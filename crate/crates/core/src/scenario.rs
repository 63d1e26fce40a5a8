//! Scenario construction: platoon layouts on the ring and seeded initial
//! conditions around the uniform equilibrium.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::models::{ControlParams, ModelKind, SafetyParams};
use crate::ovfunc::OvParams;
use crate::sim::{RingRoad, SimConfig, State};

/// Redraws allowed per vehicle before an ordering violation is reported.
const MAX_REDRAWS: usize = 64;

/// One platoon in ring order. `kind` is the law of its head; the remaining
/// members are always [`ModelKind::PlatoonFollower`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatoonSpec {
    pub size: usize,
    pub kind: ModelKind,
}

impl PlatoonSpec {
    /// A single human-driven vehicle.
    pub const HDV: PlatoonSpec = PlatoonSpec {
        size: 1,
        kind: ModelKind::HdvOvm,
    };

    /// Platoon of `size` vehicles whose head uses `connectivity`. Size-1
    /// platoons without communication collapse to an HDV.
    pub fn new(size: usize, connectivity: Connectivity) -> Self {
        let kind = connectivity.leader_kind();
        if size == 1 && kind == ModelKind::LeaderNoConnection {
            Self::HDV
        } else {
            Self { size, kind }
        }
    }

    fn validate(&self, index: usize) -> Result<()> {
        if self.size == 0 {
            return Err(invalid("platoons", format!("platoon {index} is empty")));
        }
        match self.kind {
            ModelKind::PlatoonFollower => Err(invalid(
                "platoons",
                format!("platoon {index}: a follower law cannot lead a platoon"),
            )),
            ModelKind::HdvOvm if self.size > 1 => Err(invalid(
                "platoons",
                format!("platoon {index}: an HDV group must have size 1"),
            )),
            k if k.is_connected() && self.size == 1 => Err(invalid(
                "platoons",
                format!("platoon {index}: a single vehicle cannot use a connected leader law"),
            )),
            _ => Ok(()),
        }
    }
}

/// Communication level between platoon heads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Connectivity {
    None,
    Front,
    TwoWay,
}

impl Connectivity {
    pub fn leader_kind(self) -> ModelKind {
        match self {
            Connectivity::None => ModelKind::LeaderNoConnection,
            Connectivity::Front => ModelKind::LeaderFrontConnected,
            Connectivity::TwoWay => ModelKind::LeaderTwoWayConnected,
        }
    }
}

/// A fully resolved simulation setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub ring: RingRoad,
    /// Platoons in ring order; the last one follows the first.
    pub platoons: Vec<PlatoonSpec>,
    pub control: ControlParams,
    pub safety: SafetyParams,
    pub ov: OvParams,
    pub sim: SimConfig,
    pub seed: u64,
    /// Half-width of the uniform position (m) and speed (m/s) perturbation.
    pub perturbation: f64,
}

impl Scenario {
    /// Ring of 120 vehicles on 2640 m, `a = 0.6`, `p = 0.3`, `dt = 0.1 s`,
    /// 4000 s horizon and a +-2.5 perturbation.
    pub fn with_defaults(platoons: Vec<PlatoonSpec>) -> Self {
        Self {
            ring: RingRoad::default(),
            platoons,
            control: ControlParams::default(),
            safety: SafetyParams::default(),
            ov: OvParams::default(),
            sim: SimConfig::default(),
            seed: 0,
            perturbation: 2.5,
        }
    }

    /// `m` identical platoons of size `n`.
    pub fn uniform(
        m: usize,
        n: usize,
        connectivity: Connectivity,
        t_d: f64,
        p: f64,
    ) -> Result<Self> {
        let ring = RingRoad::default();
        if m * n != ring.n_vehicles {
            return Err(Error::SizeMismatch {
                expected: ring.n_vehicles,
                actual: m * n,
            });
        }
        let mut scenario = Self::with_defaults(uniform_layout(ring.n_vehicles, n, connectivity)?);
        scenario.control.t_d = t_d;
        scenario.control.p = p;
        scenario.validate()?;
        Ok(scenario)
    }

    /// A block of unconnected platoons followed by a block of HDVs.
    pub fn segregated(platoon_size: usize, n_platoons: usize, n_hdvs: usize) -> Result<Self> {
        let scenario = Self::with_defaults(segregated_layout(platoon_size, n_platoons, n_hdvs)?);
        scenario.validate()?;
        Ok(scenario)
    }

    /// Unconnected platoons each followed by `hdv_per_platoon` HDVs.
    pub fn evenly_mixed(platoon_size: usize, hdv_per_platoon: usize) -> Result<Self> {
        let ring = RingRoad::default();
        let layout = evenly_mixed_layout(ring.n_vehicles, platoon_size, hdv_per_platoon)?;
        let scenario = Self::with_defaults(layout);
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<()> {
        self.ov.validate()?;
        self.control.validate()?;
        self.safety.validate()?;
        self.ring.validate()?;
        self.sim.validate()?;
        if self.ring.equilibrium_headway() <= self.safety.l {
            return Err(invalid(
                "ring",
                format!(
                    "equilibrium headway {} m does not exceed the vehicle length {} m",
                    self.ring.equilibrium_headway(),
                    self.safety.l
                ),
            ));
        }
        for (i, spec) in self.platoons.iter().enumerate() {
            spec.validate(i)?;
        }
        let total = self.total_vehicles();
        if total != self.ring.n_vehicles {
            return Err(Error::SizeMismatch {
                expected: self.ring.n_vehicles,
                actual: total,
            });
        }
        self.sim.delay_steps(self.control.t_d)?;
        if !(self.perturbation >= 0.0 && self.perturbation.is_finite()) {
            return Err(invalid("perturbation", "must be a non-negative number"));
        }
        Ok(())
    }

    pub fn total_vehicles(&self) -> usize {
        self.platoons.iter().map(|p| p.size).sum()
    }

    pub fn hdv_count(&self) -> usize {
        self.platoons
            .iter()
            .filter(|p| p.kind == ModelKind::HdvOvm)
            .count()
    }

    /// Equilibrium with `x_i(0) = h i + r_i`, `v_i(0) = V(h) + s_i`, where
    /// `i` counts from 1 and `r_i`, `s_i` are uniform on
    /// `[-perturbation, perturbation]`.
    pub fn initial_state(&self) -> Result<State> {
        let n = self.ring.n_vehicles;
        let h = self.ring.equilibrium_headway();
        let v_eq = self.ov.velocity(h);
        let delta = self.perturbation;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let draw = |rng: &mut ChaCha8Rng| {
            if delta > 0.0 {
                rng.random_range(-delta..=delta)
            } else {
                0.0
            }
        };

        let mut positions = Vec::with_capacity(n);
        for i in 0..n {
            let base = h * (i + 1) as f64;
            let mut attempt = 0;
            let x = loop {
                let x = base + draw(&mut rng);
                let after_prev = positions.last().is_none_or(|&prev| x > prev);
                let before_first = i + 1 < n
                    || positions
                        .first()
                        .is_none_or(|&first| x < first + self.ring.length);
                if after_prev && before_first {
                    break x;
                }
                attempt += 1;
                if attempt >= MAX_REDRAWS {
                    return Err(Error::InitialOrdering {
                        vehicle: i,
                        retries: attempt,
                    });
                }
            };
            positions.push(x);
        }
        let speeds = (0..n).map(|_| v_eq + draw(&mut rng)).collect();
        Ok(State { positions, speeds })
    }
}

/// `n_vehicles / platoon_size` identical platoons.
pub fn uniform_layout(
    n_vehicles: usize,
    platoon_size: usize,
    connectivity: Connectivity,
) -> Result<Vec<PlatoonSpec>> {
    if platoon_size == 0 || !n_vehicles.is_multiple_of(platoon_size) {
        return Err(invalid(
            "platoon_size",
            format!("{platoon_size} does not divide {n_vehicles} vehicles"),
        ));
    }
    Ok(vec![
        PlatoonSpec::new(platoon_size, connectivity);
        n_vehicles / platoon_size
    ])
}

/// `n_platoons` unconnected platoons, then `n_hdvs` HDVs.
pub fn segregated_layout(
    platoon_size: usize,
    n_platoons: usize,
    n_hdvs: usize,
) -> Result<Vec<PlatoonSpec>> {
    if platoon_size == 0 {
        return Err(invalid("platoon_size", "must be at least 1"));
    }
    let mut layout = vec![PlatoonSpec::new(platoon_size, Connectivity::None); n_platoons];
    layout.extend(std::iter::repeat_n(PlatoonSpec::HDV, n_hdvs));
    Ok(layout)
}

/// Alternating `[platoon][hdv_per_platoon HDVs]` groups.
///
/// Every group but the last carries exactly `hdv_per_platoon` HDVs; the last
/// one absorbs whatever is left. If the leftover after the full groups is at
/// least one platoon long, an extra platoon is formed and the last group
/// ends up with fewer HDVs, otherwise it gets more.
pub fn evenly_mixed_layout(
    n_vehicles: usize,
    platoon_size: usize,
    hdv_per_platoon: usize,
) -> Result<Vec<PlatoonSpec>> {
    if platoon_size == 0 {
        return Err(invalid("platoon_size", "must be at least 1"));
    }
    let group = platoon_size + hdv_per_platoon;
    let full = n_vehicles / group;
    let rest = n_vehicles - full * group;
    let n_platoons = full + usize::from(rest >= platoon_size);
    if n_platoons == 0 {
        return Err(invalid(
            "platoon_size",
            format!("no platoon of {platoon_size} fits on a ring of {n_vehicles}"),
        ));
    }
    let last_hdvs = n_vehicles - n_platoons * platoon_size - (n_platoons - 1) * hdv_per_platoon;
    let mut layout = Vec::new();
    for g in 0..n_platoons {
        layout.push(PlatoonSpec::new(platoon_size, Connectivity::None));
        let hdvs = if g + 1 == n_platoons {
            last_hdvs
        } else {
            hdv_per_platoon
        };
        layout.extend(std::iter::repeat_n(PlatoonSpec::HDV, hdvs));
    }
    Ok(layout)
}
