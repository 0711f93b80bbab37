use nalgebra::Vector2;

use super::Trajectory;
use crate::error::{Error, Result};

/// Largest excursion past `waypoint` along the `start -> waypoint` axis,
/// floored at zero.
pub fn overshoot(traj: &Trajectory, start: Vector2<f64>, waypoint: Vector2<f64>) -> Result<f64> {
    let axis = waypoint - start;
    let len = axis.norm();
    if len == 0.0 {
        return Err(Error::UndefinedAxis);
    }
    let axis = axis / len;
    Ok(traj
        .samples
        .iter()
        .map(|s| (s.state.position - waypoint).dot(&axis))
        .fold(0.0, f64::max))
}

/// Earliest sample time after which every sample lies within `radius` of
/// `waypoint`. `f64::INFINITY` when the final sample is still outside.
pub fn settling_time(traj: &Trajectory, waypoint: Vector2<f64>, radius: f64) -> f64 {
    let inside = |i: usize| (traj.samples[i].state.position - waypoint).norm() <= radius;
    match (0..traj.samples.len()).rev().find(|&i| !inside(i)) {
        None => traj.samples.first().map_or(f64::INFINITY, |s| s.t),
        Some(i) if i + 1 == traj.samples.len() => f64::INFINITY,
        Some(i) => traj.samples[i + 1].t,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flight::{PlantState, Sample};

    fn synthetic(xs: &[f64], dt: f64, waypoint: f64) -> Trajectory {
        Trajectory {
            samples: xs
                .iter()
                .enumerate()
                .map(|(i, &x)| Sample {
                    t: i as f64 * dt,
                    state: PlantState::at_rest(Vector2::new(x, 0.0)),
                    command: Vector2::zeros(),
                    waypoint: Vector2::new(waypoint, 0.0),
                })
                .collect(),
        }
    }

    #[test]
    fn monotone_approach_has_no_overshoot() {
        let t = synthetic(&[0.0, 0.5, 0.8, 0.95, 1.0], 0.1, 1.0);
        assert_eq!(overshoot(&t, Vector2::zeros(), Vector2::new(1.0, 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn peak_past_waypoint() {
        let t = synthetic(&[0.0, 0.7, 1.2, 1.4, 1.1, 1.0], 0.1, 1.0);
        let o = overshoot(&t, Vector2::zeros(), Vector2::new(1.0, 0.0)).unwrap();
        assert!((o - 0.4).abs() < 1e-12);
    }

    #[test]
    fn symmetric_oscillation() {
        let xs: Vec<f64> = (0..200).map(|i| 1.0 + 0.2 * (i as f64 * 0.3).sin()).collect();
        let t = synthetic(&xs, 0.05, 1.0);
        // Brute force over samples.
        let brute = xs.iter().map(|x| x - 1.0).fold(0.0, f64::max);
        let o = overshoot(&t, Vector2::zeros(), Vector2::new(1.0, 0.0)).unwrap();
        assert_eq!(o, brute);
        assert!((o - 0.2).abs() < 1e-3);
    }

    #[test]
    fn overshoot_along_negative_axis() {
        let t = synthetic(&[2.0, 1.5, 0.9, 1.0], 0.1, 1.0);
        let o = overshoot(&t, Vector2::new(2.0, 0.0), Vector2::new(1.0, 0.0)).unwrap();
        assert!((o - 0.1).abs() < 1e-12);
    }

    #[test]
    fn overshoot_needs_an_axis() {
        let t = synthetic(&[1.0], 0.1, 1.0);
        assert!(matches!(
            overshoot(&t, Vector2::new(1.0, 0.0), Vector2::new(1.0, 0.0)),
            Err(Error::UndefinedAxis)
        ));
    }

    #[test]
    fn settling_cases() {
        let w = Vector2::new(1.0, 0.0);
        let inside = synthetic(&[1.0, 1.1, 0.9, 1.0], 0.1, 1.0);
        assert_eq!(settling_time(&inside, w, 0.3), 0.0);

        let never = synthetic(&[0.0, 0.1, 0.2], 0.1, 1.0);
        assert_eq!(settling_time(&never, w, 0.3), f64::INFINITY);

        // Enters at 1.2 s, leaves at 1.5 s, re-enters at 2.0 s for good.
        let xs: Vec<f64> = (0..=30)
            .map(|i| {
                let t = i as f64 * 0.1;
                if t < 1.15 {
                    0.0
                } else if t < 1.45 {
                    1.0
                } else if t < 1.95 {
                    1.5
                } else {
                    1.05
                }
            })
            .collect();
        let t = synthetic(&xs, 0.1, 1.0);
        let brute = (0..xs.len())
            .find(|&i| xs[i..].iter().all(|x| (x - 1.0).abs() <= 0.3))
            .map(|i| i as f64 * 0.1)
            .unwrap();
        let got = settling_time(&t, w, 0.3);
        assert_eq!(got, brute);
        assert!((got - 2.0).abs() < 1e-9);
    }
}
