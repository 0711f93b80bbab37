//! Tabular Q-learning: value storage, the one-step Bellman update and the
//! epsilon-greedy behaviour policy.
//!
//! Nothing in here knows about grids except [`greedy_rollout`], which walks a
//! learned table through a [`GridWorld`] to evaluate the policy it encodes.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridworld::{GridState, GridWorld};

/// One of the four lateral moves. The discriminant is the action index used
/// for table columns, CSV ordering and lowest-index tie-breaking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Action {
    North = 0,
    East = 1,
    South = 2,
    West = 3,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::North, Action::East, Action::South, Action::West];
    pub const COUNT: usize = 4;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Action> {
        Action::ALL.get(index).copied()
    }

    /// Single-letter token used in CSV files.
    pub fn token(self) -> &'static str {
        match self {
            Action::North => "N",
            Action::East => "E",
            Action::South => "S",
            Action::West => "W",
        }
    }

    /// Unit grid offset `(dx, dy)`; x grows east, y grows north.
    pub fn offset(self) -> (i64, i64) {
        match self {
            Action::North => (0, 1),
            Action::East => (1, 0),
            Action::South => (0, -1),
            Action::West => (-1, 0),
        }
    }

    pub fn opposite(self) -> Action {
        match self {
            Action::North => Action::South,
            Action::East => Action::West,
            Action::South => Action::North,
            Action::West => Action::East,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Action {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "N" => Ok(Action::North),
            "E" => Ok(Action::East),
            "S" => Ok(Action::South),
            "W" => Ok(Action::West),
            other => Err(format!("unknown action token `{other}` (expected N, E, S or W)")),
        }
    }
}

/// Dense `num_states x num_actions` table of action values, row-major by state.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    num_states: usize,
    num_actions: usize,
    values: Vec<f64>,
}

impl QTable {
    /// All-zero table. Panics on a zero dimension.
    pub fn new(num_states: usize, num_actions: usize) -> Self {
        assert!(num_states > 0 && num_actions > 0, "empty Q-table");
        QTable {
            num_states,
            num_actions,
            values: vec![0.0; num_states * num_actions],
        }
    }

    pub fn from_values(num_states: usize, num_actions: usize, values: Vec<f64>) -> Result<Self> {
        if num_states == 0 || num_actions == 0 {
            return Err(Error::DimensionMismatch("empty Q-table".into()));
        }
        if values.len() != num_states * num_actions {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {num_states}x{num_actions} table",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Q-table"));
        }
        Ok(QTable {
            num_states,
            num_actions,
            values,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn check(&self, state: usize, action: usize) -> Result<()> {
        if state >= self.num_states {
            return Err(Error::IndexOutOfRange {
                what: "state",
                index: state,
                limit: self.num_states,
            });
        }
        if action >= self.num_actions {
            return Err(Error::IndexOutOfRange {
                what: "action",
                index: action,
                limit: self.num_actions,
            });
        }
        Ok(())
    }

    /// Panics when out of range; use [`QTable::try_get`] for checked access.
    pub fn get(&self, state: usize, action: Action) -> f64 {
        self.row(state)[action.index()]
    }

    pub fn try_get(&self, state: usize, action: usize) -> Result<f64> {
        self.check(state, action)?;
        Ok(self.values[state * self.num_actions + action])
    }

    pub fn set(&mut self, state: usize, action: Action, value: f64) -> Result<()> {
        self.check(state, action.index())?;
        if !value.is_finite() {
            return Err(Error::NonFinite("Q-table"));
        }
        self.values[state * self.num_actions + action.index()] = value;
        Ok(())
    }

    pub fn row(&self, state: usize) -> &[f64] {
        let start = state * self.num_actions;
        &self.values[start..start + self.num_actions]
    }

    pub fn max_value(&self, state: usize) -> f64 {
        self.row(state).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Actions whose value equals the row maximum, in index order.
    pub fn maximizers(&self, state: usize) -> Vec<Action> {
        let best = self.max_value(state);
        self.row(state)
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == best)
            .filter_map(|(i, _)| Action::from_index(i))
            .collect()
    }

    /// Greedy action with lowest-index tie-breaking.
    pub fn greedy_action(&self, state: usize) -> Action {
        self.maximizers(state)[0]
    }

    /// Largest absolute entry-wise difference.
    pub fn max_abs_diff(&self, other: &QTable) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnParams {
    pub alpha: f64,
    pub gamma: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_epsilon() -> f64 {
    0.1
}

impl Default for LearnParams {
    fn default() -> Self {
        LearnParams {
            alpha: 0.1,
            gamma: 0.9,
            epsilon: default_epsilon(),
        }
    }
}

impl LearnParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha = {} outside valid range (0, 1]",
                self.alpha
            )));
        }
        if !(self.gamma >= 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "gamma = {} outside valid range [0, 1)",
                self.gamma
            )));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::InvalidConfig(format!(
                "epsilon = {} outside valid range [0, 1]",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// One-step Q-learning update of `q[state, action]` toward
/// `reward + gamma * max_a' q[next_state, a']`. Returns the new value.
///
/// `alpha` is applied as given, so `alpha = 0` is a no-op; range checks live
/// in [`LearnParams::validate`].
pub fn q_update(
    q: &mut QTable,
    state: usize,
    action: Action,
    reward: f64,
    next_state: usize,
    params: &LearnParams,
) -> Result<f64> {
    q.check(state, action.index())?;
    q.check(next_state, 0)?;
    let old = q.get(state, action);
    let target = reward + params.gamma * q.max_value(next_state);
    let new = (1.0 - params.alpha) * old + params.alpha * target;
    q.set(state, action, new)?;
    Ok(new)
}

/// Epsilon-greedy selection. Draws one uniform number to decide between
/// exploring and exploiting, then one more only if a choice is needed
/// (a random action, or a tie among several maximizers).
pub fn select_action<R: Rng + ?Sized>(q: &QTable, state: usize, epsilon: f64, rng: &mut R) -> Action {
    if rng.random::<f64>() < epsilon {
        return Action::ALL[rng.random_range(0..Action::COUNT)];
    }
    let best = q.maximizers(state);
    if best.len() == 1 {
        best[0]
    } else {
        best[rng.random_range(0..best.len())]
    }
}

/// Follows the greedy policy (lowest-index ties) from `start` until the goal
/// or `max_steps` moves. Returns each visited state with the action taken there.
pub fn greedy_rollout(q: &QTable, env: &GridWorld, start: GridState, max_steps: usize) -> Vec<(GridState, Action)> {
    let mut path = Vec::new();
    let mut state = start;
    while !env.is_goal(state) && path.len() < max_steps {
        let action = q.greedy_action(env.index_of(state));
        path.push((state, action));
        state = env.step(state, action);
    }
    path
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(alpha: f64, gamma: f64) -> LearnParams {
        LearnParams {
            alpha,
            gamma,
            epsilon: 0.1,
        }
    }

    fn table_with_row(row: [f64; 4]) -> QTable {
        let mut q = QTable::new(3, 4);
        for (a, v) in Action::ALL.into_iter().zip(row) {
            q.set(1, a, v).unwrap();
        }
        q
    }

    #[test]
    fn fresh_table_is_zero() {
        let q = QTable::new(25, 4);
        assert_eq!(q.values().len(), 100);
        assert!(q.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn update_from_zero_with_penalty() {
        let mut q = QTable::new(25, 4);
        let v = q_update(&mut q, 0, Action::East, -1.0, 1, &params(0.1, 0.9)).unwrap();
        assert!((v - (-0.1)).abs() < 1e-15);
    }

    #[test]
    fn update_with_zero_alpha_is_identity() {
        let mut q = QTable::new(4, 4);
        q.set(2, Action::South, 3.25).unwrap();
        q.set(3, Action::West, 50.0).unwrap();
        let before = q.clone();
        let v = q_update(&mut q, 2, Action::South, 100.0, 3, &params(0.0, 0.9)).unwrap();
        assert_eq!(v, 3.25);
        assert_eq!(q, before);
    }

    #[test]
    fn update_into_goal() {
        let mut q = QTable::new(25, 4);
        let v = q_update(&mut q, 23, Action::East, 100.0, 24, &params(0.1, 0.9)).unwrap();
        assert!((v - 10.0).abs() < 1e-12);
    }

    #[test]
    fn update_hand_evaluated() {
        // 0.9 * 42.0 + 0.1 * (-1 + 0.9 * 48.458) = 37.8 + 0.1 * 42.6122 = 42.06122
        let expected = 42.06122;
        let mut q = QTable::new(2, 4);
        q.set(0, Action::North, 42.0).unwrap();
        q.set(1, Action::South, 48.458).unwrap();
        q.set(1, Action::East, 12.0).unwrap();
        let v = q_update(&mut q, 0, Action::North, -1.0, 1, &params(0.1, 0.9)).unwrap();
        assert!((v - expected).abs() < 1e-12, "{v}");
    }

    #[test]
    fn update_rejects_bad_indices() {
        let mut q = QTable::new(2, 4);
        assert!(matches!(
            q_update(&mut q, 2, Action::North, -1.0, 0, &params(0.1, 0.9)),
            Err(Error::IndexOutOfRange { what: "state", .. })
        ));
        assert!(q_update(&mut q, 0, Action::North, -1.0, 7, &params(0.1, 0.9)).is_err());
        assert!(q.try_get(0, 4).is_err());
    }

    #[test]
    fn greedy_unique_argmax() {
        let q = table_with_row([-1.0, 5.0, 0.0, 2.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(select_action(&q, 1, 0.0, &mut rng), Action::East);
        }
    }

    #[test]
    fn full_exploration_is_uniform() {
        let q = table_with_row([-1.0, 5.0, 0.0, 2.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(20240101);
        let draws = 20_000;
        let mut counts = [0usize; 4];
        for _ in 0..draws {
            counts[select_action(&q, 1, 1.0, &mut rng).index()] += 1;
        }
        for c in counts {
            let freq = c as f64 / draws as f64;
            assert!((freq - 0.25).abs() <= 0.02, "{counts:?}");
        }
    }

    #[test]
    fn tie_break_among_maximizers_is_seeded() {
        let q = table_with_row([3.0, 3.0, 0.0, 1.0]);
        // Brute-force maximizer set.
        let row = q.row(1);
        let best = row.iter().copied().fold(f64::MIN, f64::max);
        let maximizers: Vec<usize> = (0..4).filter(|&i| row[i] == best).collect();
        assert_eq!(maximizers, vec![0, 1]);

        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..64).map(|_| select_action(&q, 1, 0.0, &mut rng)).collect::<Vec<_>>()
        };
        let a = run(9);
        assert_eq!(a, run(9));
        assert!(a.iter().all(|x| maximizers.contains(&x.index())));
        // Both maximizers show up over 64 draws.
        assert!(a.contains(&Action::North) && a.contains(&Action::East));
    }

    #[test]
    fn zero_table_rollout_goes_north() {
        let env = GridWorld::new(5, 5, GridState::new(5, 5), 1.0, 0.3).unwrap();
        let q = QTable::new(25, 4);
        let path = greedy_rollout(&q, &env, GridState::new(1, 1), 10);
        assert_eq!(path.len(), 10);
        assert!(path.iter().all(|(_, a)| *a == Action::North));
        // Climbs to the top row, then is clamped there.
        assert_eq!(path[4].0, GridState::new(1, 5));
        assert_eq!(path[9].0, GridState::new(1, 5));
    }

    #[test]
    fn rollout_from_goal_is_empty() {
        let env = GridWorld::new(5, 5, GridState::new(5, 5), 1.0, 0.3).unwrap();
        let q = QTable::new(25, 4);
        assert!(greedy_rollout(&q, &env, GridState::new(5, 5), 10).is_empty());
    }

    #[test]
    fn action_tokens_round_trip() {
        for a in Action::ALL {
            assert_eq!(a.token().parse::<Action>().unwrap(), a);
            assert_eq!(Action::from_index(a.index()), Some(a));
        }
        assert!("Q".parse::<Action>().is_err());
    }

    #[test]
    fn params_validation() {
        assert!(LearnParams::default().validate().is_ok());
        assert!(params(0.0, 0.9).validate().is_err());
        assert!(params(0.1, 1.0).validate().is_err());
        assert!(params(1.0, 0.0).validate().is_ok());
        let p = LearnParams {
            epsilon: 1.5,
            ..LearnParams::default()
        };
        assert!(p.validate().is_err());
    }

    fn arb_table() -> impl Strategy<Value = QTable> {
        prop::collection::vec(-100.0f64..100.0, 12).prop_map(|v| QTable::from_values(3, 4, v).unwrap())
    }

    proptest! {
        #[test]
        fn update_touches_one_cell(
            q in arb_table(),
            s in 0usize..3, a in 0usize..4, s2 in 0usize..3,
            r in -10.0f64..10.0, alpha in 0.0f64..=1.0, gamma in 0.0f64..1.0,
        ) {
            let mut after = q.clone();
            let action = Action::from_index(a).unwrap();
            q_update(&mut after, s, action, r, s2, &params(alpha, gamma)).unwrap();
            for si in 0..3 {
                for ai in 0..4 {
                    if (si, ai) != (s, a) {
                        prop_assert_eq!(q.try_get(si, ai).unwrap(), after.try_get(si, ai).unwrap());
                    }
                }
            }
        }

        #[test]
        fn update_is_convex_blend(
            q in arb_table(),
            s in 0usize..3, a in 0usize..4, s2 in 0usize..3,
            r in -10.0f64..10.0, alpha in 0.0f64..=1.0, gamma in 0.0f64..1.0,
        ) {
            let action = Action::from_index(a).unwrap();
            let old = q.get(s, action);
            let target = r + gamma * q.max_value(s2);
            let mut after = q.clone();
            let new = q_update(&mut after, s, action, r, s2, &params(alpha, gamma)).unwrap();
            let (lo, hi) = if old < target { (old, target) } else { (target, old) };
            prop_assert!(new >= lo - 1e-9 && new <= hi + 1e-9);
        }

        #[test]
        fn fixed_point_is_preserved(
            q in arb_table(),
            s in 0usize..3, a in 0usize..4, s2 in 0usize..3,
            r in -10.0f64..10.0, alpha in 0.0f64..=1.0, gamma in 0.0f64..1.0,
        ) {
            prop_assume!(s != s2);
            let action = Action::from_index(a).unwrap();
            let mut q = q;
            let fixed = r + gamma * q.max_value(s2);
            q.set(s, action, fixed).unwrap();
            let new = q_update(&mut q, s, action, r, s2, &params(alpha, gamma)).unwrap();
            prop_assert!((new - fixed).abs() <= 1e-12 * (1.0 + fixed.abs()));
        }

        #[test]
        fn greedy_selection_returns_a_maximizer(q in arb_table(), s in 0usize..3, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = select_action(&q, s, 0.0, &mut rng);
            prop_assert_eq!(q.get(s, a), q.max_value(s));
        }

        #[test]
        fn selection_is_deterministic(q in arb_table(), seed in any::<u64>(), eps in 0.0f64..=1.0) {
            let draw = || {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..32).map(|i| select_action(&q, i % 3, eps, &mut rng)).collect::<Vec<_>>()
            };
            prop_assert_eq!(draw(), draw());
        }
    }
}
