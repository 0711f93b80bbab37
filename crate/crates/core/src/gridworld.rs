//! The discrete navigation task: a `width x height` board of cell centers,
//! deterministic moves that stay put at the border, and a goal reward.
//!
//! Coordinates are 1-based, `x` grows east and `y` grows north. Cell `(1, 1)`
//! sits at the metric origin. States are indexed row-major,
//! `(y - 1) * width + (x - 1)`.

use std::fmt;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qlearn::{Action, QTable};

pub const GOAL_REWARD: f64 = 100.0;
pub const STEP_PENALTY: f64 = -1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridState {
    pub x: u32,
    pub y: u32,
}

impl GridState {
    pub const fn new(x: u32, y: u32) -> Self {
        GridState { x, y }
    }

    pub fn manhattan(self, other: GridState) -> u32 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }
}

impl fmt::Display for GridState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Serialized form of [`GridWorld`] as it appears in config files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSpec {
    pub width: u32,
    pub height: u32,
    pub goal_x: u32,
    pub goal_y: u32,
    #[serde(default = "default_spacing")]
    pub cell_spacing_m: f64,
    #[serde(default = "default_radius")]
    pub error_radius_m: f64,
}

fn default_spacing() -> f64 {
    1.0
}

fn default_radius() -> f64 {
    0.3
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EnvSpec", into = "EnvSpec")]
pub struct GridWorld {
    width: u32,
    height: u32,
    goal: GridState,
    cell_spacing: f64,
    error_radius: f64,
}

impl TryFrom<EnvSpec> for GridWorld {
    type Error = Error;

    fn try_from(spec: EnvSpec) -> Result<Self> {
        GridWorld::new(
            spec.width,
            spec.height,
            GridState::new(spec.goal_x, spec.goal_y),
            spec.cell_spacing_m,
            spec.error_radius_m,
        )
    }
}

impl From<GridWorld> for EnvSpec {
    fn from(env: GridWorld) -> Self {
        EnvSpec {
            width: env.width,
            height: env.height,
            goal_x: env.goal.x,
            goal_y: env.goal.y,
            cell_spacing_m: env.cell_spacing,
            error_radius_m: env.error_radius,
        }
    }
}

impl Default for GridWorld {
    fn default() -> Self {
        GridWorld::new(5, 5, GridState::new(5, 5), default_spacing(), default_radius()).expect("default grid is valid")
    }
}

impl GridWorld {
    pub fn new(width: u32, height: u32, goal: GridState, cell_spacing: f64, error_radius: f64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidConfig(format!(
                "grid must be non-empty, got {width}x{height}"
            )));
        }
        let env = GridWorld {
            width,
            height,
            goal,
            cell_spacing,
            error_radius,
        };
        if !env.contains(goal) {
            return Err(Error::InvalidConfig(format!(
                "goal {goal} outside the {width}x{height} grid"
            )));
        }
        if !(cell_spacing.is_finite() && cell_spacing > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "cell_spacing_m = {cell_spacing} must be positive"
            )));
        }
        if !(error_radius > 0.0 && error_radius < cell_spacing / 2.0) {
            return Err(Error::InvalidConfig(format!(
                "error_radius_m = {error_radius} must lie in (0, cell_spacing_m / 2 = {})",
                cell_spacing / 2.0
            )));
        }
        Ok(env)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn goal(&self) -> GridState {
        self.goal
    }

    pub fn cell_spacing(&self) -> f64 {
        self.cell_spacing
    }

    pub fn error_radius(&self) -> f64 {
        self.error_radius
    }

    pub fn num_states(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn contains(&self, s: GridState) -> bool {
        (1..=self.width).contains(&s.x) && (1..=self.height).contains(&s.y)
    }

    /// Row-major state index. Panics when `s` is off the grid.
    pub fn index_of(&self, s: GridState) -> usize {
        assert!(self.contains(s), "state {s} outside grid");
        (s.y as usize - 1) * self.width as usize + (s.x as usize - 1)
    }

    pub fn state_at(&self, index: usize) -> GridState {
        assert!(index < self.num_states(), "state index {index} outside grid");
        let w = self.width as usize;
        GridState::new((index % w) as u32 + 1, (index / w) as u32 + 1)
    }

    pub fn states(&self) -> impl Iterator<Item = GridState> + '_ {
        (0..self.num_states()).map(|i| self.state_at(i))
    }

    /// Deterministic move; a move off the board leaves the state unchanged.
    pub fn step(&self, s: GridState, a: Action) -> GridState {
        let (dx, dy) = a.offset();
        let x = s.x as i64 + dx;
        let y = s.y as i64 + dy;
        if x < 1 || y < 1 || x > self.width as i64 || y > self.height as i64 {
            s
        } else {
            GridState::new(x as u32, y as u32)
        }
    }

    pub fn reward(&self, next: GridState) -> f64 {
        if self.is_goal(next) {
            GOAL_REWARD
        } else {
            STEP_PENALTY
        }
    }

    pub fn is_goal(&self, s: GridState) -> bool {
        s == self.goal
    }

    /// Metric position of a cell center.
    pub fn waypoint_of(&self, s: GridState) -> Vector2<f64> {
        Vector2::new(
            (s.x as f64 - 1.0) * self.cell_spacing,
            (s.y as f64 - 1.0) * self.cell_spacing,
        )
    }

    pub fn new_qtable(&self) -> QTable {
        QTable::new(self.num_states(), Action::COUNT)
    }

    /// Sup-norm Bellman optimality residual over non-goal states.
    pub fn bellman_residual(&self, q: &QTable, gamma: f64) -> f64 {
        let mut worst: f64 = 0.0;
        for s in self.states().filter(|&s| !self.is_goal(s)) {
            let i = self.index_of(s);
            for a in Action::ALL {
                let target = self.backup(q, s, a, gamma);
                worst = worst.max((q.get(i, a) - target).abs());
            }
        }
        worst
    }

    fn backup(&self, q: &QTable, s: GridState, a: Action, gamma: f64) -> f64 {
        let next = self.step(s, a);
        let continuation = if self.is_goal(next) {
            0.0
        } else {
            q.max_value(self.index_of(next))
        };
        self.reward(next) + gamma * continuation
    }

    /// Optimal action values by synchronous value iteration. The goal is
    /// absorbing: its row stays zero and it contributes no continuation value.
    /// Iterates until the Bellman residual drops below `tol`.
    pub fn value_iteration(&self, gamma: f64, tol: f64) -> Result<QTable> {
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::InvalidConfig(format!(
                "gamma = {gamma} outside valid range [0, 1)"
            )));
        }
        if tol.is_nan() || tol <= 0.0 {
            return Err(Error::InvalidConfig(format!("tol = {tol} must be positive")));
        }
        let mut q = self.new_qtable();
        loop {
            let mut next = q.clone();
            for s in self.states().filter(|&s| !self.is_goal(s)) {
                let i = self.index_of(s);
                for a in Action::ALL {
                    next.set(i, a, self.backup(&q, s, a, gamma))?;
                }
            }
            q = next;
            if self.bellman_residual(&q, gamma) < tol {
                return Ok(q);
            }
        }
    }
}
