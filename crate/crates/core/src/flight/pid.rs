use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-axis bound on the accumulated integral, in meter-seconds.
pub const INTEGRAL_CLAMP: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

impl PidGains {
    pub const fn new(kp: f64, ki: f64, kd: f64) -> Self {
        PidGains { kp, ki, kd }
    }

    /// Tuned gains: proportional plus derivative, no integral.
    pub const fn tuned() -> Self {
        PidGains::new(0.8, 0.0, 0.9)
    }

    /// All-zero gains are accepted (they describe a vehicle that never
    /// moves); negative or non-finite gains are not.
    pub fn validate(&self) -> Result<()> {
        for (name, g) in [("kp", self.kp), ("ki", self.ki), ("kd", self.kd)] {
            if !(g.is_finite() && g >= 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "gain {name} = {g} must be finite and >= 0"
                )));
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.kp == 0.0 && self.ki == 0.0 && self.kd == 0.0
    }
}

impl Default for PidGains {
    fn default() -> Self {
        PidGains::tuned()
    }
}

/// Integrator and derivative memory of one position controller, shared by
/// both axes (each axis is an independent scalar PID with the same gains).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidState {
    integral: Vector2<f64>,
    prev_error: Vector2<f64>,
    initialized: bool,
    clamp: f64,
}

impl Default for PidState {
    fn default() -> Self {
        PidState::new()
    }
}

impl PidState {
    pub fn new() -> Self {
        PidState::with_clamp(INTEGRAL_CLAMP)
    }

    pub fn with_clamp(clamp: f64) -> Self {
        PidState {
            integral: Vector2::zeros(),
            prev_error: Vector2::zeros(),
            initialized: false,
            clamp,
        }
    }

    pub fn integral(&self) -> Vector2<f64> {
        self.integral
    }

    pub fn reset(&mut self) {
        *self = PidState::with_clamp(self.clamp);
    }

    /// Backward-difference PID on the error signal. The derivative term is
    /// zero on the first call after construction or reset.
    pub fn step(&mut self, error: Vector2<f64>, gains: &PidGains, dt: f64) -> Result<Vector2<f64>> {
        if !(error.x.is_finite() && error.y.is_finite()) {
            return Err(Error::NonFinite("tracking error"));
        }
        assert!(dt > 0.0, "PID step needs dt > 0");
        let clamp = self.clamp;
        self.integral = (self.integral + error * dt).map(|v| v.clamp(-clamp, clamp));
        let derivative = if self.initialized {
            (error - self.prev_error) / dt
        } else {
            Vector2::zeros()
        };
        self.prev_error = error;
        self.initialized = true;
        Ok(error * gains.kp + self.integral * gains.ki + derivative * gains.kd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_error_gives_zero_command() {
        let mut pid = PidState::new();
        let gains = PidGains::new(1.3, 0.7, 2.1);
        for _ in 0..10 {
            assert_eq!(pid.step(Vector2::zeros(), &gains, 0.02).unwrap(), Vector2::zeros());
        }
    }

    #[test]
    fn proportional_only() {
        let mut pid = PidState::new();
        let u = pid
            .step(Vector2::new(2.0, -1.0), &PidGains::new(1.0, 0.0, 0.0), 0.02)
            .unwrap();
        assert_eq!(u, Vector2::new(2.0, -1.0));
    }

    #[test]
    fn derivative_suppressed_on_first_call() {
        let gains = PidGains::tuned();
        let mut pid = PidState::new();
        let u1 = pid.step(Vector2::new(1.0, 0.0), &gains, 0.02).unwrap();
        assert!((u1 - Vector2::new(0.8, 0.0)).norm() < 1e-12);
        // 0.8 * 0.9 + 0.9 * (0.9 - 1.0) / 0.02 = 0.72 - 4.5
        let u2 = pid.step(Vector2::new(0.9, 0.0), &gains, 0.02).unwrap();
        assert!((u2 - Vector2::new(-3.78, 0.0)).norm() < 1e-9, "{u2}");
    }

    #[test]
    fn reset_forgets_history() {
        let gains = PidGains::new(0.0, 1.0, 1.0);
        let mut pid = PidState::new();
        pid.step(Vector2::new(1.0, 1.0), &gains, 0.1).unwrap();
        pid.reset();
        let u = pid.step(Vector2::new(1.0, 1.0), &gains, 0.1).unwrap();
        assert!((u - Vector2::new(0.1, 0.1)).norm() < 1e-12);
    }

    #[test]
    fn integral_is_clamped_per_axis() {
        let gains = PidGains::new(0.0, 1.0, 0.0);
        let mut pid = PidState::new();
        for _ in 0..1000 {
            pid.step(Vector2::new(5.0, -0.001), &gains, 0.02).unwrap();
        }
        assert_eq!(pid.integral().x, INTEGRAL_CLAMP);
        assert!((pid.integral().y - -0.02).abs() < 1e-12);
    }

    #[test]
    fn non_finite_error_is_rejected() {
        let mut pid = PidState::new();
        assert!(pid.step(Vector2::new(f64::NAN, 0.0), &PidGains::tuned(), 0.02).is_err());
        assert!(pid
            .step(Vector2::new(0.0, f64::INFINITY), &PidGains::tuned(), 0.02)
            .is_err());
    }

    #[test]
    fn gain_validation() {
        assert!(PidGains::new(0.0, 0.0, 0.0).validate().is_ok());
        assert!(PidGains::new(-0.1, 0.0, 0.0).validate().is_err());
        assert!(PidGains::new(0.1, f64::NAN, 0.0).validate().is_err());
    }

    proptest! {
        #[test]
        fn linear_in_error_history(
            errs in prop::collection::vec((-0.5f64..0.5, -0.5f64..0.5), 1..40),
            scale in -3.0f64..3.0,
            kp in 0.0f64..2.0, ki in 0.0f64..2.0, kd in 0.0f64..2.0,
        ) {
            // Integral stays under the clamp: |sum e*dt| <= 40 * 1.5 * 0.5 * 0.02 < 2.
            let gains = PidGains::new(kp, ki, kd);
            let mut a = PidState::new();
            let mut b = PidState::new();
            for (x, y) in errs {
                let e = Vector2::new(x, y);
                let ua = a.step(e, &gains, 0.02).unwrap();
                let ub = b.step(e * scale, &gains, 0.02).unwrap();
                prop_assert!((ua * scale - ub).norm() <= 1e-9 * (1.0 + ub.norm()));
            }
        }
    }
}
