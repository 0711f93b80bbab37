//! Grid-world Q-learning whose discrete moves are flown by a PID-controlled
//! point-mass vehicle.
//!
//! * [`qlearn`] holds the table, the update rule and the behaviour policy.
//! * [`gridworld`] defines states, moves, rewards and a value-iteration solver.
//! * [`flight`] turns one move into a continuous waypoint-tracking maneuver.
//! * [`runner`] couples the two into the training loop, with checkpoints.
//! * [`store`] reads and writes every artifact; [`plot`] renders SVG charts.

pub mod error;
pub mod flight;
pub mod gridworld;
pub mod plot;
pub mod qlearn;
pub mod runner;
pub mod store;

pub use error::{Error, Result};
pub use flight::{fly_to, step_response, FlightOutcome, PidGains, PlantParams, PlantState, Trajectory};
pub use gridworld::{GridState, GridWorld};
pub use qlearn::{greedy_rollout, q_update, select_action, Action, LearnParams, QTable};
pub use runner::{train, Checkpoint, EpisodeLog, StepRecord, TrainConfig, Trainer};
