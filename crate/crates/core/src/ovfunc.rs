//! Piecewise-cosine optimal velocity function and its fundamental diagram.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Shape of the optimal velocity function `V(h)`.
///
/// Below the standstill headway `h_s` the target speed is zero, above the
/// free-flow headway `h_f` it saturates at `v_f`, and in between it follows a
/// half cosine wave.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OvParams {
    /// Standstill headway (m).
    pub h_s: f64,
    /// Free-flow headway (m).
    pub h_f: f64,
    /// Free-flow speed (m/s).
    pub v_f: f64,
}

impl Default for OvParams {
    fn default() -> Self {
        Self {
            h_s: 7.0,
            h_f: 37.0,
            v_f: 20.0,
        }
    }
}

impl OvParams {
    pub fn new(h_s: f64, h_f: f64, v_f: f64) -> Result<Self> {
        let params = Self { h_s, h_f, v_f };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h_s > 0.0 && self.h_s.is_finite()) {
            return Err(invalid(
                "h_s",
                format!("must be positive, got {}", self.h_s),
            ));
        }
        if !(self.h_f > self.h_s && self.h_f.is_finite()) {
            return Err(invalid(
                "h_f",
                format!("must exceed h_s = {}, got {}", self.h_s, self.h_f),
            ));
        }
        if !(self.v_f > 0.0 && self.v_f.is_finite()) {
            return Err(invalid(
                "v_f",
                format!("must be positive, got {}", self.v_f),
            ));
        }
        Ok(())
    }

    fn phase(&self, h: f64) -> f64 {
        PI * (h - self.h_s) / (self.h_f - self.h_s)
    }

    /// Target speed (m/s) for headway `h` (m).
    ///
    /// The breakpoints themselves are evaluated on the cosine branch, which
    /// agrees with both saturated branches there.
    pub fn velocity(&self, h: f64) -> f64 {
        if h < self.h_s {
            0.0
        } else if h > self.h_f {
            self.v_f
        } else {
            self.v_f / 2.0 * (1.0 - self.phase(h).cos())
        }
    }

    /// Analytic derivative `V'(h)` (1/s). Zero outside the open interval
    /// `(h_s, h_f)`, including at the breakpoints.
    pub fn velocity_derivative(&self, h: f64) -> f64 {
        if h <= self.h_s || h >= self.h_f {
            0.0
        } else {
            self.v_f * PI / (2.0 * (self.h_f - self.h_s)) * self.phase(h).sin()
        }
    }

    /// Headway at which `V'` peaks.
    pub fn inflection_headway(&self) -> f64 {
        0.5 * (self.h_s + self.h_f)
    }
}

/// `(density, flow)` pairs with `flow = k * V(1/k)`.
pub fn fundamental_diagram(params: &OvParams, densities: &[f64]) -> Result<Vec<(f64, f64)>> {
    densities
        .iter()
        .map(|&k| {
            if k > 0.0 && k.is_finite() {
                Ok((k, k * params.velocity(1.0 / k)))
            } else {
                Err(invalid("density", format!("must be positive, got {k}")))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn standard() -> OvParams {
        OvParams::default()
    }

    #[test]
    fn equilibrium_speed_at_22m() {
        assert_relative_eq!(standard().velocity(22.0), 10.0, epsilon = 1e-12);
    }

    #[test]
    fn saturated_branches() {
        assert_eq!(standard().velocity(7.0), 0.0);
        assert_eq!(standard().velocity(3.0), 0.0);
        assert_eq!(standard().velocity(100.0), 20.0);
        assert_eq!(standard().velocity(37.0), 20.0);
    }

    #[test]
    fn interior_value() {
        // 10 * (1 - cos(pi/4)) = 10 - 5*sqrt(2)
        let expected = 10.0 - 5.0 * 2f64.sqrt();
        assert_relative_eq!(standard().velocity(14.5), expected, max_relative = 1e-14);
        assert_relative_eq!(
            standard().velocity(14.5),
            2.928_932_188_134_524,
            epsilon = 1e-12
        );
    }

    #[test]
    fn derivative_peaks_at_pi_over_three() {
        let p = standard();
        assert_relative_eq!(p.velocity_derivative(22.0), PI / 3.0, max_relative = 1e-15);
        let step = 1e-6;
        let fd = (p.velocity(22.0 + step) - p.velocity(22.0 - step)) / (2.0 * step);
        assert_relative_eq!(fd, PI / 3.0, max_relative = 1e-6);
        assert_eq!(p.velocity_derivative(5.0), 0.0);
        assert_eq!(p.velocity_derivative(37.0), 0.0);
        assert_eq!(p.velocity_derivative(7.0), 0.0);
    }

    #[test]
    fn continuity_at_breakpoints() {
        let p = standard();
        for h in [p.h_s, p.h_f] {
            let eps = 1e-9;
            assert!((p.velocity(h + eps) - p.velocity(h)).abs() < 1e-7);
            assert!((p.velocity(h - eps) - p.velocity(h)).abs() < 1e-7);
        }
    }

    #[test]
    fn fundamental_diagram_points() {
        let p = standard();
        let fd = fundamental_diagram(&p, &[1.0 / 22.0, 1.0 / 7.0, 1e-9]).unwrap();
        assert_relative_eq!(fd[0].1, 10.0 / 22.0, max_relative = 1e-12);
        assert_eq!(fd[1].1, 0.0);
        assert!(fd[2].1 < 1e-7);
        assert!(fundamental_diagram(&p, &[0.0]).is_err());
        assert!(fundamental_diagram(&p, &[-0.1]).is_err());
    }

    #[test]
    fn rejects_bad_shape() {
        assert!(OvParams::new(10.0, 7.0, 20.0).is_err());
        assert!(OvParams::new(7.0, 37.0, 0.0).is_err());
        assert!(OvParams::new(0.0, 37.0, 20.0).is_err());
    }

    #[test]
    fn derivative_matches_finite_differences() {
        use rand::{Rng, SeedableRng};
        let p = standard();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let step = 1e-6;
        for _ in 0..1000 {
            // stay away from the breakpoints where the stencil straddles branches
            let h = rng.random_range(p.h_s + 1e-3..p.h_f - 1e-3);
            let fd = (p.velocity(h + step) - p.velocity(h - step)) / (2.0 * step);
            let exact = p.velocity_derivative(h);
            assert!(
                (fd - exact).abs() <= 1e-6 * exact.abs().max(1e-3),
                "h = {h}: fd {fd} vs {exact}"
            );
        }
    }

    proptest! {
        #[test]
        fn monotone_and_bounded(h1 in -50.0f64..100.0, h2 in -50.0f64..100.0) {
            let p = standard();
            let (lo, hi) = if h1 <= h2 { (h1, h2) } else { (h2, h1) };
            prop_assert!(p.velocity(lo) <= p.velocity(hi));
            prop_assert!((0.0..=p.v_f).contains(&p.velocity(h1)));
            prop_assert!(p.velocity_derivative(h1) >= 0.0);
        }
    }
}
