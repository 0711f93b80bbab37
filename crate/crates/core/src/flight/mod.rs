//! Continuous execution of discrete moves: a PID position loop flying the
//! point-mass plant to a waypoint until it is within the error radius.

mod metrics;
mod pid;
mod plant;

use nalgebra::Vector2;

pub use metrics::{overshoot, settling_time};
pub use pid::{PidGains, PidState, INTEGRAL_CLAMP};
pub use plant::{body_to_inertial, inertial_to_body, plant_step, PlantParams, PlantState};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub state: PlantState,
    /// Inertial-frame velocity command issued at this sample.
    pub command: Vector2<f64>,
    pub waypoint: Vector2<f64>,
}

/// Uniformly spaced samples of one maneuver, `t` starting at zero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    /// Largest distance from the waypoint at or after time `from`.
    pub fn max_error_after(&self, from: f64) -> f64 {
        self.samples
            .iter()
            .filter(|s| s.t >= from)
            .map(|s| (s.state.position - s.waypoint).norm())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlightOutcome {
    pub state: PlantState,
    pub trajectory: Trajectory,
    pub reached: bool,
}

enum Stop {
    /// Stop once within this distance of the waypoint.
    Radius(f64),
    /// Run the full horizon regardless.
    Horizon,
}

fn track(
    start: &PlantState,
    waypoint: Vector2<f64>,
    gains: &PidGains,
    params: &PlantParams,
    horizon: f64,
    stop: Stop,
) -> Result<FlightOutcome> {
    let mut pid = PidState::new();
    let mut state = *start;
    let mut samples = Vec::new();
    let mut tick: u64 = 0;
    loop {
        let t = tick as f64 * params.dt_s;
        if !state.is_finite() {
            return Err(Error::NonFinite("plant state"));
        }
        let error = waypoint - state.position;
        let arrived = matches!(stop, Stop::Radius(d) if error.norm() <= d);
        if arrived || t >= horizon {
            samples.push(Sample {
                t,
                state,
                command: Vector2::zeros(),
                waypoint,
            });
            return Ok(FlightOutcome {
                state,
                trajectory: Trajectory { samples },
                reached: arrived,
            });
        }
        let command = pid.step(error, gains, params.dt_s)?;
        samples.push(Sample {
            t,
            state,
            command,
            waypoint,
        });
        state = plant_step(&state, inertial_to_body(command, state.yaw), params);
        tick += 1;
    }
}

/// Flies from `start` toward `waypoint` with a fresh controller until within
/// `radius` or until `params.timeout_s` elapses (`reached = false`).
pub fn fly_to(
    start: &PlantState,
    waypoint: Vector2<f64>,
    gains: &PidGains,
    radius: f64,
    params: &PlantParams,
) -> Result<FlightOutcome> {
    assert!(radius > 0.0, "acceptance radius must be positive");
    track(start, waypoint, gains, params, params.timeout_s, Stop::Radius(radius))
}

/// Holds `waypoint` as the setpoint for the whole `duration`, with no early
/// exit. This is the step-response experiment used for gain tuning.
pub fn step_response(
    start: &PlantState,
    waypoint: Vector2<f64>,
    gains: &PidGains,
    params: &PlantParams,
    duration: f64,
) -> Result<FlightOutcome> {
    let mut out = track(start, waypoint, gains, params, duration, Stop::Horizon)?;
    out.reached = false;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn origin() -> PlantState {
        PlantState::at_rest(Vector2::zeros())
    }

    #[test]
    fn already_there() {
        let out = fly_to(
            &origin(),
            Vector2::zeros(),
            &PidGains::tuned(),
            0.3,
            &PlantParams::default(),
        )
        .unwrap();
        assert!(out.reached);
        assert_eq!(out.trajectory.len(), 1);
        assert_eq!(out.trajectory.samples[0].command, Vector2::zeros());
    }

    #[test]
    fn tuned_gains_reach_a_one_meter_step() {
        let p = PlantParams::default();
        let out = fly_to(&origin(), Vector2::new(1.0, 0.0), &PidGains::tuned(), 0.3, &p).unwrap();
        assert!(out.reached);
        assert!((out.state.position - Vector2::new(1.0, 0.0)).norm() <= 0.3);
        let over = overshoot(&out.trajectory, Vector2::zeros(), Vector2::new(1.0, 0.0)).unwrap();
        assert!(over <= 0.3);
    }

    #[test]
    fn samples_are_uniform() {
        let p = PlantParams::default();
        let out = fly_to(&origin(), Vector2::new(0.0, 1.0), &PidGains::tuned(), 0.3, &p).unwrap();
        for (i, s) in out.trajectory.samples.iter().enumerate() {
            assert_eq!(s.t, i as f64 * p.dt_s);
        }
    }

    #[test]
    fn zero_gains_time_out() {
        let p = PlantParams::default();
        let out = fly_to(
            &origin(),
            Vector2::new(1.0, 0.0),
            &PidGains::new(0.0, 0.0, 0.0),
            0.3,
            &p,
        )
        .unwrap();
        assert!(!out.reached);
        assert_eq!(out.state, origin());
        assert!(out.trajectory.duration() >= p.timeout_s);
    }

    #[test]
    fn reaches_every_neighbor() {
        let p = PlantParams::default();
        for dx in -1i32..=1 {
            for dy in -1i32..=1 {
                if (dx, dy) == (0, 0) {
                    continue;
                }
                let w = Vector2::new(dx as f64, dy as f64);
                let out = fly_to(&origin(), w, &PidGains::tuned(), 0.3, &p).unwrap();
                assert!(out.reached, "({dx}, {dy})");
            }
        }
    }

    #[test]
    fn identical_inputs_identical_output() {
        let p = PlantParams::default();
        let s = PlantState {
            velocity: Vector2::new(0.2, -0.4),
            ..origin()
        };
        let a = fly_to(&s, Vector2::new(1.0, 1.0), &PidGains::tuned(), 0.3, &p).unwrap();
        let b = fly_to(&s, Vector2::new(1.0, 1.0), &PidGains::tuned(), 0.3, &p).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn step_response_runs_full_horizon() {
        let p = PlantParams::default();
        let out = step_response(&origin(), Vector2::new(1.0, 0.0), &PidGains::tuned(), &p, 5.0).unwrap();
        assert_eq!(out.trajectory.len(), 251);
        assert!((out.trajectory.duration() - 5.0).abs() < 1e-9);
    }
}
