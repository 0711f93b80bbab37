//! The full learning loop: pick a move epsilon-greedily, fly it, observe the
//! reward, update the table. Training is seeded and resumable at episode
//! boundaries.

mod checkpoint;
mod config;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use checkpoint::{decode_rng, encode_rng, Checkpoint, QEntry};
pub use config::TrainConfig;

use crate::error::{Error, Result};
use crate::flight::{fly_to, PlantState, Trajectory};
use crate::gridworld::{GridState, GridWorld};
use crate::qlearn::{greedy_rollout, q_update, select_action, Action, QTable};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub episode: u32,
    pub step: u32,
    pub state: GridState,
    pub action: Action,
    pub reward: f64,
    pub next_state: GridState,
    pub q_after: f64,
    /// Simulated flight time of the maneuver; zero without dynamics.
    pub duration_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpisodeStatus {
    ReachedGoal,
    StepLimit,
    /// The maneuver toward `target` failed to reach its waypoint; the
    /// episode stopped there.
    Aborted {
        target: GridState,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeLog {
    pub episode: u32,
    pub steps: u32,
    pub total_reward: f64,
    pub reached_goal: bool,
    /// Total simulated flight time. Wall-clock time would make logs
    /// irreproducible, so it is never recorded.
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeOutcome {
    pub log: EpisodeLog,
    pub status: EpisodeStatus,
    pub steps: Vec<StepRecord>,
    /// `(step index, trajectory)` for each flown maneuver, when captured.
    pub trajectories: Vec<(u32, Trajectory)>,
}

/// Runs one episode from `cfg.start`, mutating `q`. A maneuver timeout ends
/// the episode with [`EpisodeStatus::Aborted`] and skips that step's update.
pub fn run_episode(
    q: &mut QTable,
    cfg: &TrainConfig,
    episode: u32,
    rng: &mut ChaCha8Rng,
    capture: bool,
) -> Result<EpisodeOutcome> {
    let env = &cfg.env;
    if q.num_states() != env.num_states() || q.num_actions() != Action::COUNT {
        return Err(Error::DimensionMismatch(format!(
            "Q-table is {}x{}, grid needs {}x{}",
            q.num_states(),
            q.num_actions(),
            env.num_states(),
            Action::COUNT
        )));
    }
    let mut state = cfg.start;
    let mut plant = PlantState::at_rest(env.waypoint_of(state));
    let mut steps = Vec::new();
    let mut trajectories = Vec::new();
    let mut status = EpisodeStatus::StepLimit;

    for k in 0..cfg.max_steps_per_episode {
        if env.is_goal(state) {
            break;
        }
        let s = env.index_of(state);
        let action = select_action(q, s, cfg.learn.epsilon, rng);
        let next_state = env.step(state, action);

        let mut duration_s = 0.0;
        if cfg.dynamics_enabled {
            let flight = fly_to(
                &plant,
                env.waypoint_of(next_state),
                &cfg.gains,
                env.error_radius(),
                &cfg.plant,
            )?;
            duration_s = flight.trajectory.duration();
            let reached = flight.reached;
            plant = flight.state;
            if capture {
                trajectories.push((k, flight.trajectory));
            }
            if !reached {
                status = EpisodeStatus::Aborted { target: next_state };
                break;
            }
        }

        let reward = env.reward(next_state);
        let q_after = q_update(q, s, action, reward, env.index_of(next_state), &cfg.learn)?;
        steps.push(StepRecord {
            episode,
            step: k,
            state,
            action,
            reward,
            next_state,
            q_after,
            duration_s,
        });
        state = next_state;
    }
    if status == EpisodeStatus::StepLimit && env.is_goal(state) {
        status = EpisodeStatus::ReachedGoal;
    }

    let log = EpisodeLog {
        episode,
        steps: steps.len() as u32,
        total_reward: steps.iter().map(|r| r.reward).sum(),
        reached_goal: status == EpisodeStatus::ReachedGoal,
        duration_s: steps.iter().map(|r| r.duration_s).sum(),
    };
    Ok(EpisodeOutcome {
        log,
        status,
        steps,
        trajectories,
    })
}

/// Length of the greedy (lowest-index ties) path from `start`, or `None`
/// when it fails to reach the goal within `cap` moves.
pub fn greedy_path_len(q: &QTable, env: &GridWorld, start: GridState, cap: usize) -> Option<usize> {
    let path = greedy_rollout(q, env, start, cap);
    let end = path.last().map_or(start, |&(s, a)| env.step(s, a));
    env.is_goal(end).then_some(path.len())
}

/// True when the greedy policy from `start` is a shortest path.
pub fn is_optimal_from(q: &QTable, env: &GridWorld, start: GridState) -> bool {
    let shortest = start.manhattan(env.goal()) as usize;
    greedy_path_len(q, env, start, shortest) == Some(shortest)
}

/// Stateful driver of a training run, one episode at a time.
#[derive(Debug, Clone)]
pub struct Trainer {
    cfg: TrainConfig,
    fingerprint: String,
    q: QTable,
    rng: ChaCha8Rng,
    next_episode: u32,
}

impl Trainer {
    pub fn new(cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Trainer {
            fingerprint: cfg.fingerprint(),
            q: cfg.env.new_qtable(),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            next_episode: 1,
            cfg,
        })
    }

    /// Continues a run from a checkpoint taken with the same config.
    pub fn resume(cfg: TrainConfig, cp: &Checkpoint) -> Result<Self> {
        cfg.validate()?;
        let fingerprint = cfg.fingerprint();
        if cp.config_hash != fingerprint {
            return Err(Error::FingerprintMismatch {
                expected: fingerprint,
                found: cp.config_hash.clone(),
            });
        }
        if cp.next_episode == 0 || cp.next_episode > cfg.episodes + 1 {
            return Err(Error::InvalidConfig(format!(
                "checkpoint next_episode {} outside 1..={}",
                cp.next_episode,
                cfg.episodes + 1
            )));
        }
        Ok(Trainer {
            q: cp.qtable(&cfg.env)?,
            rng: cp.rng()?,
            next_episode: cp.next_episode,
            fingerprint,
            cfg,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn qtable(&self) -> &QTable {
        &self.q
    }

    pub fn into_qtable(self) -> QTable {
        self.q
    }

    pub fn next_episode(&self) -> u32 {
        self.next_episode
    }

    pub fn is_finished(&self) -> bool {
        self.next_episode > self.cfg.episodes
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint::new(
            self.fingerprint.clone(),
            self.next_episode,
            &self.rng,
            &self.q,
            &self.cfg.env,
        )
    }

    /// Runs the next episode. Returns `Ok(None)` once all episodes are done
    /// and an error if a maneuver times out.
    pub fn run_next(&mut self, capture: bool) -> Result<Option<EpisodeOutcome>> {
        if self.is_finished() {
            return Ok(None);
        }
        let episode = self.next_episode;
        let outcome = run_episode(&mut self.q, &self.cfg, episode, &mut self.rng, capture)?;
        if let EpisodeStatus::Aborted { target } = outcome.status {
            let w = self.cfg.env.waypoint_of(target);
            return Err(Error::ManeuverTimeout {
                episode,
                step: outcome.steps.len() as u32,
                x: w.x,
                y: w.y,
                timeout_s: self.cfg.plant.timeout_s,
            });
        }
        self.next_episode += 1;
        Ok(Some(outcome))
    }

    pub fn is_optimal(&self) -> bool {
        is_optimal_from(&self.q, &self.cfg.env, self.cfg.start)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub qtable: QTable,
    pub logs: Vec<EpisodeLog>,
    pub steps: Vec<StepRecord>,
    /// First episode after which the greedy path from the start is shortest.
    pub first_optimal_episode: Option<u32>,
}

/// Runs every episode of `cfg` from scratch.
pub fn train(cfg: &TrainConfig) -> Result<TrainReport> {
    let mut trainer = Trainer::new(cfg.clone())?;
    let mut logs = Vec::with_capacity(cfg.episodes as usize);
    let mut steps = Vec::new();
    let mut first_optimal_episode = None;
    while let Some(outcome) = trainer.run_next(false)? {
        if first_optimal_episode.is_none() && trainer.is_optimal() {
            first_optimal_episode = Some(outcome.log.episode);
        }
        logs.push(outcome.log);
        steps.extend(outcome.steps);
    }
    Ok(TrainReport {
        qtable: trainer.into_qtable(),
        logs,
        steps,
        first_optimal_episode,
    })
}

#[derive(Debug)]
pub struct Equivalence {
    pub equivalent: bool,
    /// Set when the dynamics run failed (for example a maneuver timeout).
    pub dynamics_error: Option<Error>,
    pub steps_compared: usize,
}

/// Trains the same config with and without flight dynamics and compares the
/// `(s, a, r, s')` streams and final tables bit for bit.
pub fn equivalence_report(cfg: &TrainConfig) -> Result<Equivalence> {
    let mut discrete = cfg.clone();
    discrete.dynamics_enabled = false;
    let mut hybrid = cfg.clone();
    hybrid.dynamics_enabled = true;

    let base = train(&discrete)?;
    let flown = match train(&hybrid) {
        Ok(r) => r,
        Err(e) if e.is_runtime() => {
            return Ok(Equivalence {
                equivalent: false,
                dynamics_error: Some(e),
                steps_compared: 0,
            })
        }
        Err(e) => return Err(e),
    };
    let key = |r: &StepRecord| (r.episode, r.step, r.state, r.action, r.reward.to_bits(), r.next_state);
    let same_steps =
        base.steps.len() == flown.steps.len() && base.steps.iter().zip(&flown.steps).all(|(a, b)| key(a) == key(b));
    let same_q = base
        .qtable
        .values()
        .iter()
        .zip(flown.qtable.values())
        .all(|(a, b)| a.to_bits() == b.to_bits());
    Ok(Equivalence {
        equivalent: same_steps && same_q,
        dynamics_error: None,
        steps_compared: base.steps.len(),
    })
}

pub fn equivalence_check(cfg: &TrainConfig) -> bool {
    equivalence_report(cfg).is_ok_and(|r| r.equivalent)
}
