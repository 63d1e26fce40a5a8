//! Helpers shared by the integration tests.

#![allow(dead_code)]

use platoon_core::{Connectivity, PlatoonSpec, RingRoad, Scenario};

/// Ring of `m` platoons of size `n` at headway `h`, not limited to the
/// 120-vehicle default.
pub fn small_ring(m: usize, n: usize, connectivity: Connectivity, h: f64) -> Scenario {
    let mut s = Scenario::with_defaults(vec![PlatoonSpec::new(n, connectivity); m]);
    s.ring = RingRoad {
        length: h * (m * n) as f64,
        n_vehicles: m * n,
    };
    s
}

/// Plain optimal-velocity ring integrator with the safety overlay, written
/// from the model definitions without touching the library's engine.
pub struct PlainOvm {
    pub length: f64,
    pub a: f64,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

impl PlainOvm {
    fn target_speed(h: f64) -> f64 {
        if h < 7.0 {
            0.0
        } else if h > 37.0 {
            20.0
        } else {
            10.0 * (1.0 - (std::f64::consts::PI * (h - 7.0) / 30.0).cos())
        }
    }

    pub fn step(&mut self, dt: f64) {
        let n = self.x.len();
        let mut acc = vec![0.0; n];
        for i in 0..n {
            let j = (i + 1) % n;
            // the vehicle ahead of the last one is the first, one lap on; a
            // 1e-12 tolerance on ~3 km positions leaves no room for a
            // different rounding order here
            let ahead = if j == 0 {
                self.x[0] + self.length
            } else {
                self.x[j]
            };
            let gap = ahead - self.x[i];
            let closing = self.v[i] - self.v[j];
            let brake_at = closing * closing / 16.0 + 4.0 * closing + 5.0;
            acc[i] = if gap < brake_at {
                -8.0
            } else {
                (self.a * (Self::target_speed(gap) - self.v[i])).min(3.0)
            };
        }
        for i in 0..n {
            let v_next = self.v[i] + acc[i] * dt;
            self.x[i] += (self.v[i] + v_next) / 2.0 * dt;
            self.v[i] = v_next;
        }
    }
}
