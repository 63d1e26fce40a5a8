//! Ring-road time stepping with delayed inter-platoon information.
//!
//! Positions live on an unwrapped axis and grow without bound; only headway
//! computation knows the ring length. All vehicles are updated synchronously
//! from the state at the current step.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::models::{self, ControlParams, ModelKind, SafetyParams};
use crate::ovfunc::OvParams;
use crate::scenario::Scenario;

/// Tolerance when checking that a delay is a whole number of steps.
const DELAY_ALIGNMENT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RingRoad {
    /// Circumference (m).
    pub length: f64,
    pub n_vehicles: usize,
}

impl Default for RingRoad {
    fn default() -> Self {
        Self {
            length: 2640.0,
            n_vehicles: 120,
        }
    }
}

impl RingRoad {
    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(invalid(
                "ring.length",
                format!("must be positive, got {}", self.length),
            ));
        }
        if self.n_vehicles < 2 {
            return Err(invalid("ring.n_vehicles", "need at least two vehicles"));
        }
        Ok(())
    }

    pub fn equilibrium_headway(&self) -> f64 {
        self.length / self.n_vehicles as f64
    }

    /// Distance from `x_behind` to `x_ahead`; `wraps` marks the pair that
    /// straddles the ring closure (last vehicle behind the first).
    pub fn gap(&self, x_behind: f64, x_ahead: f64, wraps: bool) -> f64 {
        if wraps {
            x_ahead + self.length - x_behind
        } else {
            x_ahead - x_behind
        }
    }

    /// Headway of `vehicle` to the one directly ahead of it.
    pub fn headway(&self, positions: &[f64], vehicle: usize) -> f64 {
        let ahead = (vehicle + 1) % positions.len();
        self.gap(positions[vehicle], positions[ahead], ahead == 0)
    }

    pub fn headways(&self, positions: &[f64]) -> Vec<f64> {
        (0..positions.len())
            .map(|i| self.headway(positions, i))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Time step (s).
    pub dt: f64,
    /// Simulated duration (s).
    pub horizon: f64,
    /// Keep every `record_every`-th step in the trajectory.
    pub record_every: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.1,
            horizon: 4000.0,
            record_every: 1,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid(
                "sim.dt",
                format!("must be positive, got {}", self.dt),
            ));
        }
        if !(self.horizon >= self.dt && self.horizon.is_finite()) {
            return Err(invalid("sim.horizon", "must be at least one time step"));
        }
        if self.record_every == 0 {
            return Err(invalid("sim.record_every", "must be at least 1"));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    /// `t_d / dt` as an exact step count.
    pub fn delay_steps(&self, t_d: f64) -> Result<usize> {
        let ratio = t_d / self.dt;
        let steps = ratio.round();
        if t_d < 0.0 || (ratio - steps).abs() > DELAY_ALIGNMENT_TOL {
            return Err(Error::DelayNotAligned { t_d, dt: self.dt });
        }
        Ok(steps as usize)
    }
}

/// Positions (unwrapped, m) and speeds (m/s) of every vehicle.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub positions: Vec<f64>,
    pub speeds: Vec<f64>,
}

/// Advances one step: `v' = v + a dt`, `x' = x + (v + v') dt / 2`.
pub fn step(state: &mut State, accel: &[f64], dt: f64) {
    for ((x, v), &a) in state
        .positions
        .iter_mut()
        .zip(state.speeds.iter_mut())
        .zip(accel)
    {
        let v_next = *v + a * dt;
        *x += (*v + v_next) / 2.0 * dt;
        *v = v_next;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VehicleInfo {
    pub platoon: usize,
    /// 1 for the tail, platoon size for the head.
    pub index_in_platoon: usize,
    pub kind: ModelKind,
}

/// Past platoon-head positions, oldest first. Before `t_d` has elapsed the
/// oldest entry is the initial configuration.
#[derive(Debug, Clone)]
pub struct HeadHistory {
    snapshots: VecDeque<Vec<f64>>,
}

impl HeadHistory {
    pub fn new(initial_heads: Vec<f64>, delay_steps: usize) -> Self {
        Self {
            snapshots: std::iter::repeat_n(initial_heads, delay_steps + 1).collect(),
        }
    }

    /// Head positions `delay_steps` steps ago.
    pub fn delayed(&self) -> &[f64] {
        &self.snapshots[0]
    }

    pub fn push(&mut self, heads: Vec<f64>) {
        self.snapshots.pop_front();
        self.snapshots.push_back(heads);
    }

    /// Delayed head-to-head gap from `platoon` to the platoon ahead of it.
    pub fn delayed_gap(&self, ring: &RingRoad, platoon: usize) -> f64 {
        let heads = self.delayed();
        let ahead = (platoon + 1) % heads.len();
        ring.gap(heads[platoon], heads[ahead], ahead == 0)
    }
}

#[derive(Debug, Clone, Copy)]
enum Role {
    /// OVM on the gap to the vehicle ahead (HDVs and unconnected heads).
    Ovm,
    Follower {
        head: usize,
        gap_count: usize,
    },
    Connected {
        platoon: usize,
        p: f64,
    },
}

/// Per-vehicle acceleration field for one scenario.
#[derive(Debug, Clone)]
pub struct Engine {
    ring: RingRoad,
    control: ControlParams,
    safety: SafetyParams,
    ov: OvParams,
    roles: Vec<Role>,
    vehicles: Vec<VehicleInfo>,
    heads: Vec<usize>,
    sizes: Vec<usize>,
}

impl Engine {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        let mut roles = Vec::with_capacity(scenario.ring.n_vehicles);
        let mut vehicles = Vec::with_capacity(scenario.ring.n_vehicles);
        let mut heads = Vec::with_capacity(scenario.platoons.len());
        let mut start = 0;
        for (platoon, spec) in scenario.platoons.iter().enumerate() {
            let head = start + spec.size - 1;
            for j in 1..=spec.size {
                let (role, kind) = if j < spec.size {
                    (
                        Role::Follower {
                            head,
                            gap_count: spec.size - j,
                        },
                        ModelKind::PlatoonFollower,
                    )
                } else if spec.kind.is_connected() {
                    let p = spec.kind.effective_p(scenario.control.p);
                    (Role::Connected { platoon, p }, spec.kind)
                } else {
                    (Role::Ovm, spec.kind)
                };
                roles.push(role);
                vehicles.push(VehicleInfo {
                    platoon,
                    index_in_platoon: j,
                    kind,
                });
            }
            heads.push(head);
            start += spec.size;
        }
        Ok(Self {
            ring: scenario.ring,
            control: scenario.control,
            safety: scenario.safety,
            ov: scenario.ov,
            roles,
            vehicles,
            heads,
            sizes: scenario.platoons.iter().map(|p| p.size).collect(),
        })
    }

    pub fn vehicles(&self) -> &[VehicleInfo] {
        &self.vehicles
    }

    pub fn head_positions(&self, state: &State) -> Vec<f64> {
        self.heads.iter().map(|&h| state.positions[h]).collect()
    }

    /// Model law followed by the safety overlay, for every vehicle.
    ///
    /// `step` and `time` only label errors. Fails on a non-positive headway
    /// or a non-finite result.
    pub fn accelerations(
        &self,
        state: &State,
        history: &HeadHistory,
        step: usize,
        time: f64,
        out: &mut [f64],
    ) -> Result<()> {
        let n = self.roles.len();
        let m = self.heads.len();
        for i in 0..n {
            let headway = self.ring.headway(&state.positions, i);
            if headway <= 0.0 {
                return Err(Error::Collision {
                    behind: i,
                    ahead: (i + 1) % n,
                    time,
                    headway,
                });
            }
            let v = state.speeds[i];
            let raw = match self.roles[i] {
                Role::Ovm => models::accel_ovm(&self.control, &self.ov, headway, v),
                Role::Follower { head, gap_count } => models::accel_platoon_follower(
                    &self.control,
                    &self.ov,
                    state.positions[i],
                    v,
                    state.positions[head],
                    gap_count,
                )?,
                Role::Connected { platoon, p } => {
                    let rear = (platoon + m - 1) % m;
                    let control = ControlParams { p, ..self.control };
                    models::accel_leader_twoway(
                        &control,
                        &self.ov,
                        history.delayed_gap(&self.ring, platoon),
                        self.sizes[(platoon + 1) % m],
                        history.delayed_gap(&self.ring, rear),
                        self.sizes[platoon],
                        v,
                    )?
                }
            };
            let v_front = state.speeds[(i + 1) % n];
            let applied = self.safety.apply(raw, v, v_front, headway);
            if !applied.is_finite() {
                return Err(Error::NonFinite { vehicle: i, step });
            }
            out[i] = applied;
        }
        Ok(())
    }
}

/// Recorded time series, stored record-major (`record * n + vehicle`).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub ring: RingRoad,
    pub dt: f64,
    pub horizon: f64,
    pub record_every: usize,
    pub vehicles: Vec<VehicleInfo>,
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    pub speeds: Vec<f64>,
    pub accels: Vec<f64>,
}

impl Trajectory {
    pub fn n_vehicles(&self) -> usize {
        self.vehicles.len()
    }

    pub fn n_records(&self) -> usize {
        self.times.len()
    }

    fn row(&self, data: &[f64], record: usize) -> std::ops::Range<usize> {
        let n = self.n_vehicles();
        debug_assert!(data.len() >= (record + 1) * n);
        record * n..(record + 1) * n
    }

    pub fn positions_at(&self, record: usize) -> &[f64] {
        &self.positions[self.row(&self.positions, record)]
    }

    pub fn speeds_at(&self, record: usize) -> &[f64] {
        &self.speeds[self.row(&self.speeds, record)]
    }

    pub fn accels_at(&self, record: usize) -> &[f64] {
        &self.accels[self.row(&self.accels, record)]
    }

    pub fn headways_at(&self, record: usize) -> Vec<f64> {
        self.ring.headways(self.positions_at(record))
    }

    pub fn state_at(&self, record: usize) -> State {
        State {
            positions: self.positions_at(record).to_vec(),
            speeds: self.speeds_at(record).to_vec(),
        }
    }

    fn push(&mut self, time: f64, state: &State, accel: &[f64]) {
        self.times.push(time);
        self.positions.extend_from_slice(&state.positions);
        self.speeds.extend_from_slice(&state.speeds);
        self.accels.extend_from_slice(accel);
    }
}

/// Simulates `scenario` from its seeded initial condition.
pub fn run(scenario: &Scenario) -> Result<Trajectory> {
    scenario.validate()?;
    let initial = scenario.initial_state()?;
    run_from(scenario, initial)
}

/// Simulates `scenario` from an explicit initial state.
pub fn run_from(scenario: &Scenario, initial: State) -> Result<Trajectory> {
    let engine = Engine::new(scenario)?;
    let n = scenario.ring.n_vehicles;
    if initial.positions.len() != n || initial.speeds.len() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            actual: initial.positions.len(),
        });
    }
    let cfg = scenario.sim;
    let steps = cfg.steps();
    let delay = cfg.delay_steps(scenario.control.t_d)?;

    let records = steps / cfg.record_every + 1;
    let mut traj = Trajectory {
        ring: scenario.ring,
        dt: cfg.dt,
        horizon: steps as f64 * cfg.dt,
        record_every: cfg.record_every,
        vehicles: engine.vehicles().to_vec(),
        times: Vec::with_capacity(records),
        positions: Vec::with_capacity(records * n),
        speeds: Vec::with_capacity(records * n),
        accels: Vec::with_capacity(records * n),
    };

    let mut state = initial;
    let mut history = HeadHistory::new(engine.head_positions(&state), delay);
    let mut accel = vec![0.0; n];
    for k in 0..=steps {
        let time = k as f64 * cfg.dt;
        engine.accelerations(&state, &history, k, time, &mut accel)?;
        if k % cfg.record_every == 0 {
            traj.push(time, &state, &accel);
        }
        if k == steps {
            break;
        }
        step(&mut state, &accel, cfg.dt);
        history.push(engine.head_positions(&state));
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{Connectivity, PlatoonSpec};
    use approx::assert_relative_eq;

    #[test]
    fn step_examples() {
        let mut s = State {
            positions: vec![0.0, 50.0],
            speeds: vec![10.0, 10.0],
        };
        step(&mut s, &[0.0, 1.2], 0.1);
        assert_eq!(s.speeds[0], 10.0);
        assert_relative_eq!(s.positions[0], 1.0, max_relative = 1e-15);
        assert_relative_eq!(s.speeds[1], 10.12, max_relative = 1e-14);
        assert_relative_eq!(s.positions[1] - 50.0, 1.006, max_relative = 1e-12);
    }

    #[test]
    fn headway_examples() {
        let ring = RingRoad::default();
        assert_eq!(ring.gap(0.0, 22.0, false), 22.0);
        assert_eq!(ring.gap(2618.0, 0.0, true), 22.0);
        let positions: Vec<f64> = (0..120).map(|i| 22.0 * i as f64).collect();
        let total: f64 = ring.headways(&positions).iter().sum();
        assert_eq!(total, 2640.0);
    }

    #[test]
    fn delay_alignment() {
        let cfg = SimConfig::default();
        assert_eq!(cfg.delay_steps(0.0).unwrap(), 0);
        assert_eq!(cfg.delay_steps(0.4).unwrap(), 4);
        assert_eq!(cfg.delay_steps(1.2).unwrap(), 12);
        assert_eq!(cfg.delay_steps(1.6).unwrap(), 16);
        assert!(matches!(
            cfg.delay_steps(0.45),
            Err(Error::DelayNotAligned { .. })
        ));
    }

    #[test]
    fn history_lags_by_delay_steps() {
        let ring = RingRoad {
            length: 100.0,
            n_vehicles: 4,
        };
        let mut hist = HeadHistory::new(vec![0.0, 50.0], 4);
        // constant pre-history for the first four steps
        for k in 1..=4 {
            hist.push(vec![k as f64, 50.0 + 2.0 * k as f64]);
            if k < 4 {
                assert_eq!(hist.delayed(), &[0.0, 50.0]);
            }
        }
        hist.push(vec![5.0, 60.0]);
        assert_eq!(hist.delayed(), &[1.0, 52.0]);
        assert_eq!(hist.delayed_gap(&ring, 0), 51.0);
        assert_eq!(hist.delayed_gap(&ring, 1), 49.0);

        let mut now = HeadHistory::new(vec![0.0, 50.0], 0);
        now.push(vec![3.0, 40.0]);
        assert_eq!(now.delayed(), &[3.0, 40.0]);
    }

    #[test]
    fn detects_collision() {
        let mut scenario = Scenario::with_defaults(vec![PlatoonSpec::HDV; 120]);
        scenario.sim.horizon = 1.0;
        let mut st = scenario.initial_state().unwrap();
        st.positions[5] = st.positions[6] + 0.5;
        let err = run_from(&scenario, st).unwrap_err();
        assert!(matches!(
            err,
            Error::Collision {
                behind: 5,
                ahead: 6,
                ..
            }
        ));
    }

    #[test]
    fn equilibrium_persists_for_every_model() {
        for (n, conn, t_d) in [
            (1, Connectivity::None, 0.0),
            (6, Connectivity::None, 0.0),
            (4, Connectivity::Front, 0.8),
            (4, Connectivity::TwoWay, 1.6),
            (120, Connectivity::None, 0.0),
        ] {
            let mut s = Scenario::uniform(120 / n, n, conn, t_d, 0.3).unwrap();
            s.perturbation = 0.0;
            s.sim.horizon = 100.0;
            let traj = run(&s).unwrap();
            for r in 0..traj.n_records() {
                assert!(
                    traj.accels_at(r).iter().all(|a| a.abs() < 1e-12),
                    "n={n} {conn:?}"
                );
                assert!(traj.headways_at(r).iter().all(|h| (h - 22.0).abs() < 1e-9));
            }
        }
    }

    #[test]
    fn records_are_decimated() {
        let mut s = Scenario::uniform(20, 6, Connectivity::None, 0.0, 0.3).unwrap();
        s.sim.horizon = 10.0;
        s.sim.record_every = 5;
        let traj = run(&s).unwrap();
        assert_eq!(traj.n_records(), 21);
        assert_relative_eq!(traj.times[20], 10.0, max_relative = 1e-12);
        assert_eq!(traj.vehicles[5].index_in_platoon, 6);
        assert_eq!(traj.vehicles[5].kind, ModelKind::LeaderNoConnection);
        assert_eq!(traj.vehicles[6].platoon, 1);
    }
}
