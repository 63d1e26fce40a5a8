//! Acceleration laws for human-driven vehicles, platoon followers and the
//! three kinds of platoon leader, plus the safety overlay applied on top.
//!
//! Platoon vehicles are indexed from the tail (`j = 1`) to the head
//! (`j = N`). The head is the controlled leader.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::ovfunc::OvParams;

/// Which acceleration law a vehicle obeys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Plain optimal velocity model.
    HdvOvm,
    /// Non-head platoon member tracking the platoon head.
    PlatoonFollower,
    /// Head following the tail of the platoon ahead, no communication.
    LeaderNoConnection,
    /// Head tracking the head of the platoon ahead. Same law as
    /// [`ModelKind::LeaderTwoWayConnected`] with `p = 0`.
    LeaderFrontConnected,
    /// Head tracking the heads of the platoons ahead and behind.
    LeaderTwoWayConnected,
}

impl ModelKind {
    /// True for leader laws that read delayed inter-platoon gaps.
    pub fn is_connected(self) -> bool {
        matches!(
            self,
            ModelKind::LeaderFrontConnected | ModelKind::LeaderTwoWayConnected
        )
    }

    pub fn is_leader(self) -> bool {
        !matches!(self, ModelKind::PlatoonFollower)
    }

    /// Backward smoothing factor actually applied by this law.
    pub fn effective_p(self, p: f64) -> f64 {
        match self {
            ModelKind::LeaderTwoWayConnected => p,
            _ => 0.0,
        }
    }
}

/// Controller gains shared by every vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlParams {
    /// Forward sensitivity (1/s).
    pub a: f64,
    /// Backward smoothing factor.
    pub p: f64,
    /// Inter-platoon communication delay (s).
    pub t_d: f64,
}

impl Default for ControlParams {
    fn default() -> Self {
        Self {
            a: 0.6,
            p: 0.3,
            t_d: 0.0,
        }
    }
}

impl ControlParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(invalid("a", format!("must be positive, got {}", self.a)));
        }
        if !(self.p >= 0.0 && self.p.is_finite()) {
            return Err(invalid(
                "p",
                format!("must be non-negative, got {}", self.p),
            ));
        }
        if !(self.t_d >= 0.0 && self.t_d.is_finite()) {
            return Err(invalid(
                "t_d",
                format!("must be non-negative, got {}", self.t_d),
            ));
        }
        Ok(())
    }
}

/// Acceleration cap and emergency braking parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SafetyParams {
    /// Maximum acceleration (m/s^2).
    pub a_m: f64,
    /// Emergency braking deceleration (m/s^2, negative).
    pub a_b: f64,
    /// Safety time headway (s).
    pub tau: f64,
    /// Vehicle length (m).
    pub l: f64,
}

impl Default for SafetyParams {
    fn default() -> Self {
        Self {
            a_m: 3.0,
            a_b: -8.0,
            tau: 4.0,
            l: 5.0,
        }
    }
}

impl SafetyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.a_m > 0.0 && self.a_m.is_finite()) {
            return Err(invalid(
                "a_m",
                format!("must be positive, got {}", self.a_m),
            ));
        }
        if !(self.a_b < 0.0 && self.a_b.is_finite()) {
            return Err(invalid(
                "a_b",
                format!("must be negative, got {}", self.a_b),
            ));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(invalid(
                "tau",
                format!("must be non-negative, got {}", self.tau),
            ));
        }
        if !(self.l > 0.0 && self.l.is_finite()) {
            return Err(invalid("l", format!("must be positive, got {}", self.l)));
        }
        Ok(())
    }

    /// Minimum spacing below which emergency braking engages. Signed in the
    /// closing speed, so it can be negative when the vehicle ahead is faster.
    pub fn safety_headway(&self, v_self: f64, v_front: f64) -> f64 {
        let dv = v_self - v_front;
        dv * dv / (2.0 * self.a_b).abs() + self.tau * dv + self.l
    }

    /// Applies the acceleration cap, or returns `a_b` when the headway is
    /// below [`SafetyParams::safety_headway`].
    pub fn apply(&self, raw_accel: f64, v_self: f64, v_front: f64, headway: f64) -> f64 {
        if headway < self.safety_headway(v_self, v_front) {
            self.a_b
        } else {
            raw_accel.min(self.a_m)
        }
    }
}

/// Optimal velocity model: `a (V(headway) - v)`.
pub fn accel_ovm(control: &ControlParams, ov: &OvParams, headway: f64, speed: f64) -> f64 {
    control.a * (ov.velocity(headway) - speed)
}

/// Centralised platoon controller for follower `j` of a platoon whose head is
/// `gap_count = N - j` vehicles ahead. Uses the follower's own speed.
pub fn accel_platoon_follower(
    control: &ControlParams,
    ov: &OvParams,
    x_self: f64,
    v_self: f64,
    x_head: f64,
    gap_count: usize,
) -> Result<f64> {
    if gap_count < 1 {
        return Err(invalid(
            "gap_count",
            "a follower needs at least one gap to its head",
        ));
    }
    let mean_headway = (x_head - x_self) / gap_count as f64;
    Ok(control.a * (ov.velocity(mean_headway) - v_self))
}

/// Leader without inter-platoon communication: plain OVM on the gap to the
/// tail of the platoon ahead.
pub fn accel_leader_noconn(
    control: &ControlParams,
    ov: &OvParams,
    headway: f64,
    speed: f64,
) -> f64 {
    accel_ovm(control, ov, headway, speed)
}

/// Two-way connected leader law.
///
/// `front_gap` is the head-to-head distance to the platoon ahead, spanning
/// `front_size` vehicle gaps; `rear_gap` is the head-to-head distance from
/// the platoon behind, spanning `rear_size` gaps. Both are sampled at
/// `t - t_d` by the caller. `control.p` is used as given, so pass `p = 0`
/// for the front-connected variant.
pub fn accel_leader_twoway(
    control: &ControlParams,
    ov: &OvParams,
    front_gap: f64,
    front_size: usize,
    rear_gap: f64,
    rear_size: usize,
    speed: f64,
) -> Result<f64> {
    if front_size < 1 || rear_size < 1 {
        return Err(invalid(
            "platoon size",
            "connected leaders need non-empty neighbours",
        ));
    }
    let p = control.p;
    let front = ov.velocity(front_gap / front_size as f64);
    let rear = ov.velocity(rear_gap / rear_size as f64);
    Ok(control.a * ((1.0 + p) * front - p * rear - speed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn ctl(p: f64) -> ControlParams {
        ControlParams {
            a: 0.6,
            p,
            t_d: 0.0,
        }
    }

    fn ov() -> OvParams {
        OvParams::default()
    }

    // V(30) = 10 (1 - cos(23 pi / 30))
    fn v30() -> f64 {
        10.0 * (1.0 - (23.0 * std::f64::consts::PI / 30.0).cos())
    }

    #[test]
    fn ovm_examples() {
        assert!(accel_ovm(&ctl(0.0), &ov(), 22.0, 10.0).abs() < 1e-12);
        assert_relative_eq!(
            accel_ovm(&ctl(0.0), &ov(), 22.0, 8.0),
            1.2,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            accel_ovm(&ctl(0.0), &ov(), 7.0, 5.0),
            -3.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn follower_examples() {
        let c = ctl(0.0);
        assert!(
            accel_platoon_follower(&c, &ov(), 0.0, 10.0, 66.0, 3)
                .unwrap()
                .abs()
                < 1e-12
        );
        let a = accel_platoon_follower(&c, &ov(), 0.0, 12.0, 44.0, 2).unwrap();
        assert_relative_eq!(a, -1.2, max_relative = 1e-12);
        assert!(accel_platoon_follower(&c, &ov(), 0.0, 12.0, 44.0, 0).is_err());
    }

    #[test]
    fn noconn_leader_examples() {
        let c = ctl(0.0);
        assert!(accel_leader_noconn(&c, &ov(), 22.0, 10.0).abs() < 1e-12);
        assert_relative_eq!(v30(), 17.431_4, epsilon = 1e-4);
        let a = accel_leader_noconn(&c, &ov(), 30.0, 10.0);
        assert_relative_eq!(a, 0.6 * (v30() - 10.0), max_relative = 1e-12);
        assert_relative_eq!(a, 4.459, epsilon = 1e-3);
    }

    #[test]
    fn twoway_examples() {
        for p in [0.0, 0.3, 1.7] {
            let a = accel_leader_twoway(&ctl(p), &ov(), 88.0, 4, 88.0, 4, 10.0).unwrap();
            assert!(a.abs() < 1e-12);
        }
        let a = accel_leader_twoway(&ctl(0.0), &ov(), 88.0, 4, 200.0, 4, 8.0).unwrap();
        assert_relative_eq!(a, 1.2, max_relative = 1e-12);
        let a = accel_leader_twoway(&ctl(0.3), &ov(), 120.0, 4, 88.0, 4, 10.0).unwrap();
        assert_relative_eq!(a, 0.6 * (1.3 * v30() - 13.0), max_relative = 1e-12);
        assert_relative_eq!(a, 5.797, epsilon = 1e-3);
        assert!(accel_leader_twoway(&ctl(0.3), &ov(), 88.0, 0, 88.0, 4, 10.0).is_err());
    }

    #[test]
    fn safety_headway_examples() {
        let s = SafetyParams::default();
        assert_eq!(s.safety_headway(10.0, 10.0), 5.0);
        assert_eq!(s.safety_headway(20.0, 10.0), 51.25);
        assert_eq!(s.safety_headway(10.0, 20.0), -28.75);
    }

    #[test]
    fn safety_overlay_examples() {
        let s = SafetyParams::default();
        assert_eq!(s.apply(5.7, 10.0, 10.0, 30.0), 3.0);
        assert_eq!(s.apply(0.5, 10.0, 10.0, 4.9), -8.0);
        assert_eq!(s.apply(-2.0, 10.0, 10.0, 100.0), -2.0);
        // nothing floors decelerations beyond a_b outside the braking branch
        assert_eq!(s.apply(-9.5, 10.0, 10.0, 100.0), -9.5);
    }

    #[test]
    fn equilibrium_is_a_fixed_point_for_every_law() {
        let s = SafetyParams::default();
        let o = ov();
        for p in [0.0, 0.3] {
            let c = ctl(p);
            let laws = [
                accel_ovm(&c, &o, 22.0, 10.0),
                accel_leader_noconn(&c, &o, 22.0, 10.0),
                accel_platoon_follower(&c, &o, 100.0, 10.0, 100.0 + 5.0 * 22.0, 5).unwrap(),
                accel_leader_twoway(&c, &o, 6.0 * 22.0, 6, 6.0 * 22.0, 6, 10.0).unwrap(),
            ];
            for raw in laws {
                assert!(raw.abs() < 1e-12);
                assert!(s.apply(raw, 10.0, 10.0, 22.0).abs() < 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn reduction_chain_is_bitwise(gap in 0.5f64..60.0, rear in 0.5f64..60.0, v in -5.0f64..25.0) {
            let c = ctl(0.0);
            let o = ov();
            let base = accel_ovm(&c, &o, gap, v);
            prop_assert_eq!(base.to_bits(), accel_leader_noconn(&c, &o, gap, v).to_bits());
            let tw = accel_leader_twoway(&c, &o, gap, 1, rear, 1, v).unwrap();
            prop_assert_eq!(base.to_bits(), tw.to_bits());
            let fol = accel_platoon_follower(&c, &o, 3.0, v, 3.0 + gap, 1).unwrap();
            prop_assert_eq!(accel_ovm(&c, &o, (3.0 + gap) - 3.0, v).to_bits(), fol.to_bits());
        }

        #[test]
        fn twoway_swap_identity(g1 in 20.0f64..200.0, g2 in 20.0f64..200.0, p in 0.0f64..2.0, n in 1usize..8) {
            let c = ctl(p);
            let o = ov();
            let v = 10.0;
            let lhs = accel_leader_twoway(&c, &o, g1, n, g2, n, v).unwrap()
                - accel_leader_twoway(&c, &o, g2, n, g1, n, v).unwrap();
            let rhs = c.a * (1.0 + 2.0 * p) * (o.velocity(g1 / n as f64) - o.velocity(g2 / n as f64));
            prop_assert!((lhs - rhs).abs() < 1e-10);
        }

        #[test]
        fn overlay_never_exceeds_cap(raw in -20.0f64..20.0, vs in -5.0f64..30.0, vf in -5.0f64..30.0, h in 0.1f64..80.0) {
            let s = SafetyParams::default();
            let out = s.apply(raw, vs, vf, h);
            prop_assert!(out <= s.a_m);
            if h < s.safety_headway(vs, vf) {
                prop_assert_eq!(out, s.a_b);
            } else {
                prop_assert_eq!(out, raw.min(s.a_m));
            }
        }
    }
}
