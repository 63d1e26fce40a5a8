//! WebAssembly bindings for the demo page in `www/`.
//!
//! The `*_values` functions hold the logic and are plain Rust, so they are
//! tested natively; the `#[wasm_bindgen]` wrappers only convert errors.

use platoon_core::metrics::{stabilization_time, DEFAULT_EPSILON, DEFAULT_HOLD};
use platoon_core::ovfunc::fundamental_diagram;
use platoon_core::sim::run;
use platoon_core::stability::{eig_oracle, neutral_line, LinearQuery, Threshold};
use platoon_core::{Connectivity, OvParams, Scenario};
use wasm_bindgen::prelude::*;

fn connectivity(model: &str) -> Result<Connectivity, String> {
    match model {
        "none" => Ok(Connectivity::None),
        "front" => Ok(Connectivity::Front),
        "two_way" => Ok(Connectivity::TwoWay),
        other => Err(format!(
            "unknown model {other:?}, expected none, front or two_way"
        )),
    }
}

fn sample(lo: f64, hi: f64, samples: usize) -> Result<Vec<f64>, String> {
    if samples < 2 || !(hi > lo) {
        return Err(format!(
            "need at least two samples on a non-empty range, got {samples} on [{lo}, {hi}]"
        ));
    }
    Ok((0..samples)
        .map(|i| lo + (hi - lo) * i as f64 / (samples - 1) as f64)
        .collect())
}

/// Flat `[h, V(h), density, flow]` quadruples for `samples` headways in
/// `(0, h_max]`.
pub fn ov_curve_values(
    h_s: f64,
    h_f: f64,
    v_f: f64,
    h_max: f64,
    samples: usize,
) -> Result<Vec<f64>, String> {
    let ov = OvParams::new(h_s, h_f, v_f).map_err(|e| e.to_string())?;
    let hs = sample(h_max / samples as f64, h_max, samples)?;
    let densities: Vec<f64> = hs.iter().map(|h| 1.0 / h).collect();
    let fd = fundamental_diagram(&ov, &densities).map_err(|e| e.to_string())?;
    Ok(hs
        .iter()
        .zip(fd)
        .flat_map(|(&h, (k, q))| [h, ov.velocity(h), k, q])
        .collect())
}

/// Flat `[h, a*]` pairs with the default OV function; `a*` is NaN where
/// no gain stabilizes the ring.
pub fn neutral_line_values(
    model: &str,
    n: usize,
    p: f64,
    t_d: f64,
    samples: usize,
) -> Result<Vec<f64>, String> {
    let ov = OvParams::default();
    let line = neutral_line(
        connectivity(model)?,
        n,
        p,
        t_d,
        (ov.h_s, ov.h_f),
        samples,
        &ov,
    )
    .map_err(|e| e.to_string())?;
    Ok(line
        .iter()
        .flat_map(|pt| {
            let a = match pt.threshold {
                Threshold::Finite(a) => a,
                Threshold::UnstableForAllA => f64::NAN,
            };
            [pt.h, a]
        })
        .collect())
}

/// Headways of a subset of vehicles from a short run with default parameters.
#[wasm_bindgen]
#[derive(Debug, Clone, PartialEq)]
pub struct HeadwayRun {
    times: Vec<f64>,
    headways: Vec<f64>,
    vehicles: usize,
    stabilized_at: f64,
    oracle_max_real: f64,
}

#[wasm_bindgen]
impl HeadwayRun {
    #[wasm_bindgen(getter)]
    pub fn times(&self) -> Vec<f64> {
        self.times.clone()
    }

    /// Vehicle-major: the series for plotted vehicle `i` starts at
    /// `i * times.length`.
    #[wasm_bindgen(getter)]
    pub fn headways(&self) -> Vec<f64> {
        self.headways.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn vehicles(&self) -> usize {
        self.vehicles
    }

    /// NaN when the run never settles.
    #[wasm_bindgen(getter)]
    pub fn stabilized_at(&self) -> f64 {
        self.stabilized_at
    }

    /// Largest real part of the linearized ring's spectrum (1/s).
    #[wasm_bindgen(getter)]
    pub fn oracle_max_real(&self) -> f64 {
        self.oracle_max_real
    }
}

/// Simulates 120 vehicles in identical platoons for `horizon` seconds,
/// recording once per second and keeping every `stride`-th vehicle.
#[allow(clippy::too_many_arguments)]
pub fn headway_run_values(
    model: &str,
    platoon_size: usize,
    a: f64,
    p: f64,
    t_d: f64,
    seed: u64,
    horizon: f64,
    stride: usize,
) -> Result<HeadwayRun, String> {
    if stride == 0 {
        return Err("stride must be at least 1".into());
    }
    let conn = connectivity(model)?;
    let mut s = Scenario::uniform(120 / platoon_size.max(1), platoon_size, conn, t_d, p)
        .map_err(|e| e.to_string())?;
    s.control.a = a;
    s.seed = seed;
    s.sim.horizon = horizon;
    s.sim.record_every = 10;
    s.validate().map_err(|e| e.to_string())?;
    let traj = run(&s).map_err(|e| e.to_string())?;
    let h_eq = s.ring.equilibrium_headway();
    let picked: Vec<usize> = (0..traj.n_vehicles()).step_by(stride).collect();
    let rows: Vec<Vec<f64>> = (0..traj.n_records()).map(|r| traj.headways_at(r)).collect();
    let headways = picked
        .iter()
        .flat_map(|&v| rows.iter().map(move |row| row[v]))
        .collect();
    let oracle = eig_oracle(&LinearQuery::from_scenario(&s)).map_err(|e| e.to_string())?;
    Ok(HeadwayRun {
        times: traj.times.clone(),
        headways,
        vehicles: picked.len(),
        stabilized_at: stabilization_time(&traj, h_eq, DEFAULT_EPSILON, DEFAULT_HOLD)
            .unwrap_or(f64::NAN),
        oracle_max_real: oracle.max_real,
    })
}

#[wasm_bindgen]
pub fn ov_curve(
    h_s: f64,
    h_f: f64,
    v_f: f64,
    h_max: f64,
    samples: usize,
) -> Result<Vec<f64>, JsError> {
    ov_curve_values(h_s, h_f, v_f, h_max, samples).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = neutral_line)]
pub fn neutral_line_js(
    model: &str,
    n: usize,
    p: f64,
    t_d: f64,
    samples: usize,
) -> Result<Vec<f64>, JsError> {
    neutral_line_values(model, n, p, t_d, samples).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn headway_run(
    model: &str,
    platoon_size: usize,
    a: f64,
    p: f64,
    t_d: f64,
    seed: u64,
    horizon: f64,
    stride: usize,
) -> Result<HeadwayRun, JsError> {
    headway_run_values(model, platoon_size, a, p, t_d, seed, horizon, stride)
        .map_err(|e| JsError::new(&e))
}
