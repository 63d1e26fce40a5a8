//! Trajectory post-processing: headway tables, speed envelopes and
//! stabilization detection.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::sim::Trajectory;

/// Default stabilization tolerance on `|headway - h|` (m).
pub const DEFAULT_EPSILON: f64 = 0.5;
/// Default time the tolerance must hold (s).
pub const DEFAULT_HOLD: f64 = 50.0;
/// Default length of the closing window used for final deviations (s).
pub const DEFAULT_FINAL_WINDOW: f64 = 200.0;

/// Headways of a subset of vehicles over a time window.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadwayTable {
    pub vehicles: Vec<usize>,
    pub times: Vec<f64>,
    /// `values[v][t]` for `vehicles[v]` at `times[t]`.
    pub values: Vec<Vec<f64>>,
}

fn window_records(traj: &Trajectory, t0: f64, t1: f64) -> impl Iterator<Item = usize> + '_ {
    // half a step of slack so nominal times like 3800.0 match 38000 * 0.1
    let slack = 0.5 * traj.dt;
    (0..traj.n_records())
        .filter(move |&r| traj.times[r] >= t0 - slack && traj.times[r] <= t1 + slack)
}

/// Headways of every `stride`-th vehicle (starting at the first) inside
/// `[t0, t1]`.
pub fn headway_series(
    traj: &Trajectory,
    stride: usize,
    window: (f64, f64),
) -> Result<HeadwayTable> {
    if stride == 0 {
        return Err(invalid("stride", "must be at least 1"));
    }
    let (t0, t1) = window;
    if !(t0 <= t1) || t0 > traj.horizon + traj.dt {
        return Err(invalid(
            "window",
            format!("[{t0}, {t1}] is outside the run"),
        ));
    }
    let vehicles: Vec<usize> = (0..traj.n_vehicles()).step_by(stride).collect();
    let records: Vec<usize> = window_records(traj, t0, t1).collect();
    if records.is_empty() {
        return Err(invalid("window", "contains no recorded steps"));
    }
    let times = records.iter().map(|&r| traj.times[r]).collect();
    let values = vehicles
        .iter()
        .map(|&v| {
            records
                .iter()
                .map(|&r| traj.ring.headway(traj.positions_at(r), v))
                .collect()
        })
        .collect();
    Ok(HeadwayTable {
        vehicles,
        times,
        values,
    })
}

/// `(time, min speed, max speed)` over all vehicles at each record.
pub fn speed_envelope(traj: &Trajectory) -> Vec<(f64, f64, f64)> {
    (0..traj.n_records())
        .map(|r| {
            let (lo, hi) = traj
                .speeds_at(r)
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                });
            (traj.times[r], lo, hi)
        })
        .collect()
}

/// `max_i |headway_i - h_eq|` at each record.
pub fn max_headway_deviation(traj: &Trajectory, h_eq: f64) -> Vec<f64> {
    (0..traj.n_records())
        .map(|r| {
            traj.headways_at(r)
                .iter()
                .fold(0.0f64, |acc, h| acc.max((h - h_eq).abs()))
        })
        .collect()
}

/// Root-mean-square headway deviation at each record.
pub fn rms_headway_deviation(traj: &Trajectory, h_eq: f64) -> Vec<f64> {
    let n = traj.n_vehicles() as f64;
    (0..traj.n_records())
        .map(|r| {
            let ss: f64 = traj.headways_at(r).iter().map(|h| (h - h_eq).powi(2)).sum();
            (ss / n).sqrt()
        })
        .collect()
}

/// Earliest time `t` with every headway within `epsilon` of `h_eq` on the
/// whole interval `[t, t + hold]`. The interval must fit inside the run.
pub fn stabilization_time(traj: &Trajectory, h_eq: f64, epsilon: f64, hold: f64) -> Option<f64> {
    stabilization_from_deviation(
        &traj.times,
        &max_headway_deviation(traj, h_eq),
        epsilon,
        hold,
    )
}

fn stabilization_from_deviation(
    times: &[f64],
    deviation: &[f64],
    epsilon: f64,
    hold: f64,
) -> Option<f64> {
    let mut start: Option<usize> = None;
    let end = *times.last()?;
    let slack = 1e-9 * hold.max(1.0);
    for (r, &d) in deviation.iter().enumerate() {
        if d < epsilon {
            let s = *start.get_or_insert(r);
            if times[r] - times[s] >= hold - slack {
                return Some(times[s]);
            }
        } else {
            start = None;
        }
        if start.is_none() && times[r] + hold > end + slack {
            return None;
        }
    }
    None
}

/// Largest value of `series` over records with time in `[t0, t1]`.
pub fn window_max(traj: &Trajectory, series: &[f64], t0: f64, t1: f64) -> f64 {
    window_records(traj, t0, t1).fold(f64::NEG_INFINITY, |acc, r| acc.max(series[r]))
}

/// Least-squares slope of `ln(rms headway deviation)` over `[t0, end]`
/// (1/s). Positive means the perturbation grows.
pub fn deviation_growth_rate(traj: &Trajectory, h_eq: f64, t0: f64) -> f64 {
    let rms = rms_headway_deviation(traj, h_eq);
    let (mut sx, mut sy, mut sxx, mut sxy, mut count) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for r in window_records(traj, t0, traj.horizon) {
        if rms[r] <= 0.0 {
            continue;
        }
        let (x, y) = (traj.times[r], rms[r].ln());
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        count += 1.0;
    }
    if count < 2.0 {
        return 0.0;
    }
    (count * sxy - sx * sy) / (count * sxx - sx * sx)
}

/// Stabilization detector settings. Missing fields take the defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    pub epsilon: f64,
    pub hold: f64,
    pub final_window: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            hold: DEFAULT_HOLD,
            final_window: DEFAULT_FINAL_WINDOW,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(invalid(
                "epsilon",
                format!("must be positive, got {}", self.epsilon),
            ));
        }
        if !(self.hold >= 0.0 && self.hold.is_finite()) {
            return Err(invalid(
                "hold",
                format!("must be non-negative, got {}", self.hold),
            ));
        }
        if !(self.final_window > 0.0 && self.final_window.is_finite()) {
            return Err(invalid(
                "final_window",
                format!("must be positive, got {}", self.final_window),
            ));
        }
        Ok(())
    }
}

/// Headline numbers for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub stabilized: bool,
    pub stabilization_time_s: Option<f64>,
    /// Max headway deviation over the closing window (m).
    pub final_max_headway_dev_m: f64,
    pub min_speed_mps: f64,
    pub max_speed_mps: f64,
    /// Min/max speed over the closing window.
    pub final_min_speed_mps: f64,
    pub final_max_speed_mps: f64,
    pub negative_speed_observed: bool,
    /// Slope of the log RMS headway deviation over the last quarter of the
    /// run (1/s).
    pub late_growth_rate: f64,
}

pub fn summarize(traj: &Trajectory, detector: &DetectorConfig) -> RunSummary {
    let h_eq = traj.ring.equilibrium_headway();
    let deviation = max_headway_deviation(traj, h_eq);
    let stabilization =
        stabilization_from_deviation(&traj.times, &deviation, detector.epsilon, detector.hold);
    let final_start = (traj.horizon - detector.final_window).max(0.0);
    let envelope = speed_envelope(traj);
    let min_speed = envelope.iter().map(|e| e.1).fold(f64::INFINITY, f64::min);
    let max_speed = envelope
        .iter()
        .map(|e| e.2)
        .fold(f64::NEG_INFINITY, f64::max);
    let closing = envelope
        .iter()
        .filter(|e| e.0 >= final_start - 0.5 * traj.dt);
    let (final_min, final_max) = closing.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| {
        (lo.min(e.1), hi.max(e.2))
    });
    RunSummary {
        stabilized: stabilization.is_some(),
        stabilization_time_s: stabilization,
        final_max_headway_dev_m: window_max(traj, &deviation, final_start, traj.horizon),
        min_speed_mps: min_speed,
        max_speed_mps: max_speed,
        final_min_speed_mps: final_min,
        final_max_speed_mps: final_max,
        negative_speed_observed: min_speed < 0.0,
        late_growth_rate: deviation_growth_rate(traj, h_eq, 0.75 * traj.horizon),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{Connectivity, Scenario};
    use crate::sim::run;

    fn equilibrium_run(horizon: f64) -> Trajectory {
        let mut s = Scenario::uniform(20, 6, Connectivity::None, 0.0, 0.3).unwrap();
        s.perturbation = 0.0;
        s.sim.horizon = horizon;
        run(&s).unwrap()
    }

    #[test]
    fn detector_window_logic() {
        let times: Vec<f64> = (0..=100).map(|k| k as f64).collect();
        let mut dev = vec![1.0; 101];
        for d in dev.iter_mut().skip(40) {
            *d = 0.1;
        }
        assert_eq!(
            stabilization_from_deviation(&times, &dev, 0.5, 50.0),
            Some(40.0)
        );
        assert_eq!(
            stabilization_from_deviation(&times, &dev, 0.5, 60.0),
            Some(40.0)
        );
        // hold cannot fit before the end of the run
        assert_eq!(stabilization_from_deviation(&times, &dev, 0.5, 61.0), None);
        dev[70] = 0.7;
        assert_eq!(stabilization_from_deviation(&times, &dev, 0.5, 50.0), None);
        assert_eq!(
            stabilization_from_deviation(&times, &dev, 0.5, 29.0),
            Some(40.0)
        );
        assert_eq!(stabilization_from_deviation(&times, &dev, 0.05, 10.0), None);
    }

    #[test]
    fn equilibrium_run_metrics() {
        let traj = equilibrium_run(100.0);
        assert_eq!(stabilization_time(&traj, 22.0, 0.5, 50.0), Some(0.0));
        for (_, lo, hi) in speed_envelope(&traj) {
            assert!((lo - 10.0).abs() < 1e-12);
            assert!((hi - 10.0).abs() < 1e-12);
        }
        let summary = summarize(&traj, &DetectorConfig::default());
        assert!(summary.stabilized);
        assert!(summary.final_max_headway_dev_m < 1e-9);
    }

    #[test]
    fn headway_selection() {
        let traj = equilibrium_run(20.0);
        let table = headway_series(&traj, 6, (0.0, 20.0)).unwrap();
        assert_eq!(table.vehicles.len(), 20);
        assert_eq!(table.vehicles[1], 6);
        assert_eq!(table.times.len(), 201);
        assert_eq!(
            headway_series(&traj, 1, (5.0, 6.0)).unwrap().vehicles.len(),
            120
        );
        assert!(headway_series(&traj, 0, (0.0, 1.0)).is_err());
        assert!(headway_series(&traj, 6, (50.0, 60.0)).is_err());
    }

    #[test]
    fn selection_matches_positions() {
        let mut s = Scenario::uniform(30, 4, Connectivity::None, 0.0, 0.3).unwrap();
        s.sim.horizon = 30.0;
        s.seed = 3;
        let traj = run(&s).unwrap();
        let table = headway_series(&traj, 6, (10.0, 20.0)).unwrap();
        let r0 = traj
            .times
            .iter()
            .position(|&t| (t - 10.0).abs() < 1e-9)
            .unwrap();
        for (vi, &v) in table.vehicles.iter().enumerate() {
            for (ti, &value) in table.values[vi].iter().enumerate() {
                let x = traj.positions_at(r0 + ti);
                let ahead = (v + 1) % 120;
                let expected = if ahead == 0 {
                    x[0] + 2640.0 - x[v]
                } else {
                    x[ahead] - x[v]
                };
                assert!((value - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn tighter_epsilon_never_stabilizes_earlier() {
        let mut s = Scenario::uniform(20, 6, Connectivity::None, 0.0, 0.3).unwrap();
        s.sim.horizon = 300.0;
        s.seed = 9;
        let traj = run(&s).unwrap();
        let mut last = Some(0.0);
        for eps in [2.0, 1.0, 0.5, 0.2, 0.1, 0.01] {
            let t = stabilization_time(&traj, 22.0, eps, 50.0);
            match (last, t) {
                (Some(prev), Some(now)) => assert!(now >= prev),
                (None, Some(_)) => panic!("eps {eps} stabilized after a looser one did not"),
                _ => {}
            }
            last = t;
        }
    }
}
