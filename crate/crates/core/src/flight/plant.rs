//! Point-mass vehicle that takes body-frame velocity commands.
//!
//! The commanded velocity is limited to `v_max` and reached through a
//! first-order lag with time constant `tau_v`; position integrates velocity
//! with explicit Euler at a fixed `dt`.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantParams {
    #[serde(default = "defaults::tau_v")]
    pub tau_v_s: f64,
    #[serde(default = "defaults::v_max")]
    pub v_max_mps: f64,
    #[serde(default = "defaults::dt")]
    pub dt_s: f64,
    /// Longest a single waypoint maneuver may run before it counts as failed.
    #[serde(default = "defaults::timeout")]
    pub timeout_s: f64,
}

mod defaults {
    pub fn tau_v() -> f64 {
        3.0
    }
    pub fn v_max() -> f64 {
        1.5
    }
    pub fn dt() -> f64 {
        0.02
    }
    pub fn timeout() -> f64 {
        30.0
    }
}

impl Default for PlantParams {
    fn default() -> Self {
        PlantParams {
            tau_v_s: defaults::tau_v(),
            v_max_mps: defaults::v_max(),
            dt_s: defaults::dt(),
            timeout_s: defaults::timeout(),
        }
    }
}

impl PlantParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("tau_v_s", self.tau_v_s),
            ("v_max_mps", self.v_max_mps),
            ("dt_s", self.dt_s),
            ("timeout_s", self.timeout_s),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("plant {name} = {v} must be positive")));
            }
        }
        if self.dt_s >= self.tau_v_s / 2.0 {
            return Err(Error::InvalidConfig(format!(
                "plant dt_s = {} must be below tau_v_s / 2 = {}",
                self.dt_s,
                self.tau_v_s / 2.0
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantState {
    pub position: Vector2<f64>,
    pub velocity: Vector2<f64>,
    pub yaw: f64,
}

impl PlantState {
    pub fn at_rest(position: Vector2<f64>) -> Self {
        PlantState {
            position,
            velocity: Vector2::zeros(),
            yaw: 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().chain(self.velocity.iter()).all(|v| v.is_finite()) && self.yaw.is_finite()
    }
}

/// Rotates an inertial-frame vector into the body frame (rotation by `-yaw`).
pub fn inertial_to_body(u: Vector2<f64>, yaw: f64) -> Vector2<f64> {
    let (sin, cos) = yaw.sin_cos();
    Vector2::new(u.x * cos + u.y * sin, -u.x * sin + u.y * cos)
}

/// Inverse of [`inertial_to_body`].
pub fn body_to_inertial(u: Vector2<f64>, yaw: f64) -> Vector2<f64> {
    inertial_to_body(u, -yaw)
}

fn limit(u: Vector2<f64>, max: f64) -> Vector2<f64> {
    let n = u.norm();
    if n > max {
        u * (max / n)
    } else {
        u
    }
}

/// Advances the plant by one `dt` under a body-frame velocity command.
pub fn plant_step(state: &PlantState, u_body: Vector2<f64>, params: &PlantParams) -> PlantState {
    let commanded = limit(body_to_inertial(u_body, state.yaw), params.v_max_mps);
    let velocity = state.velocity + (commanded - state.velocity) * (params.dt_s / params.tau_v_s);
    PlantState {
        position: state.position + velocity * params.dt_s,
        velocity,
        yaw: state.yaw,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};

    #[test]
    fn transform_examples() {
        let u = Vector2::new(0.3, -1.7);
        assert_eq!(inertial_to_body(u, 0.0), u);
        let q = inertial_to_body(Vector2::new(1.0, 0.0), FRAC_PI_2);
        assert!((q - Vector2::new(0.0, -1.0)).norm() < 1e-15);
        let d = inertial_to_body(Vector2::new(1.0, 1.0), FRAC_PI_4);
        assert!((d - Vector2::new(SQRT_2, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn equilibrium_is_fixed() {
        let p = PlantParams::default();
        let s = PlantState::at_rest(Vector2::new(1.0, 2.0));
        assert_eq!(plant_step(&s, Vector2::zeros(), &p), s);
    }

    #[test]
    fn lag_single_step() {
        let p = PlantParams {
            tau_v_s: 0.3,
            ..PlantParams::default()
        };
        let s = plant_step(&PlantState::at_rest(Vector2::zeros()), Vector2::new(1.0, 0.0), &p);
        // 0.02 / 0.3 * 1.0
        assert!((s.velocity.x - 0.0666667).abs() < 1e-6);
        assert_eq!(s.velocity.y, 0.0);
        assert!((s.position.x - 0.02 * 0.02 / 0.3).abs() < 1e-15);
    }

    #[test]
    fn lag_settles_within_five_time_constants() {
        for tau in [0.3, 3.0] {
            let p = PlantParams {
                tau_v_s: tau,
                ..PlantParams::default()
            };
            let n = (5.0 * tau / p.dt_s).round() as usize;
            let mut s = PlantState::at_rest(Vector2::zeros());
            for _ in 0..n {
                s = plant_step(&s, Vector2::new(1.0, 0.0), &p);
            }
            // Closed form: 1 - (1 - dt/tau)^n <= 1 - e^-5.
            let expected = 1.0 - (1.0 - p.dt_s / tau).powi(n as i32);
            assert!((s.velocity.x - expected).abs() < 1e-12);
            assert!((s.velocity.x - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn validation() {
        assert!(PlantParams::default().validate().is_ok());
        let bad = PlantParams {
            dt_s: 2.0,
            ..PlantParams::default()
        };
        assert!(bad.validate().is_err());
        let bad = PlantParams {
            v_max_mps: 0.0,
            ..PlantParams::default()
        };
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn transform_preserves_norm(x in -50.0f64..50.0, y in -50.0f64..50.0, yaw in -10.0f64..10.0) {
            let u = Vector2::new(x, y);
            prop_assert!((inertial_to_body(u, yaw).norm() - u.norm()).abs() < 1e-12);
            prop_assert!((body_to_inertial(inertial_to_body(u, yaw), yaw) - u).norm() < 1e-12);
        }

        #[test]
        fn speed_never_exceeds_limit(
            cmds in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 1..200),
            yaw in -3.2f64..3.2,
        ) {
            let p = PlantParams::default();
            let mut s = PlantState { yaw, ..PlantState::at_rest(Vector2::zeros()) };
            for (x, y) in cmds {
                s = plant_step(&s, Vector2::new(x, y), &p);
                prop_assert!(s.velocity.norm() <= p.v_max_mps + 1e-12);
            }
        }
    }
}
