use std::fs;
use std::path::Path;

use anyhow::Context;
use rayon::prelude::*;
use waypoint_rl::runner::{greedy_path_len, Trainer};
use waypoint_rl::store::{self, RunArtifacts};
use waypoint_rl::TrainConfig;

use super::{announce, load_config, CliError, CliResult, TrainArgs, TrajectoryCapture};

pub fn run(args: TrainArgs) -> CliResult {
    let mut cfg = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if args.no_dynamics {
        cfg.dynamics_enabled = false;
    }

    if let Some((first, end)) = args.seeds {
        let results: Vec<(u64, CliResult)> = (first..end)
            .into_par_iter()
            .map(|seed| {
                let cfg = TrainConfig { seed, ..cfg.clone() };
                let dir = args.out.join(format!("seed_{seed}"));
                (seed, train_one(&cfg, &dir, None, args.stop_after, args.trajectories))
            })
            .collect();
        // Highest exit code wins; report every failure.
        let mut worst: Option<CliError> = None;
        for (seed, res) in results {
            if let Err(e) = res {
                eprintln!("seed {seed}: {e}");
                if worst.as_ref().is_none_or(|w| e.code > w.code) {
                    worst = Some(e);
                }
            }
        }
        return worst.map_or(Ok(()), Err);
    }

    train_one(
        &cfg,
        &args.out,
        args.resume.as_deref(),
        args.stop_after,
        args.trajectories,
    )
}

fn train_one(
    cfg: &TrainConfig,
    out: &Path,
    resume: Option<&Path>,
    stop_after: Option<u32>,
    capture: TrajectoryCapture,
) -> CliResult {
    announce(cfg);
    let artifacts = RunArtifacts::new(out);
    artifacts.create()?;

    let mut trainer = match resume {
        Some(path) => {
            let cp = store::load_checkpoint(path)?;
            let trainer = Trainer::resume(cfg.clone(), &cp)?;
            store::truncate_episodes(&artifacts.episodes(), (cp.next_episode - 1) as usize)?;
            eprintln!("resuming at episode {}", cp.next_episode);
            trainer
        }
        None => {
            let trainer = Trainer::new(cfg.clone())?;
            let episodes = artifacts.episodes();
            if episodes.exists() {
                fs::remove_file(&episodes)
                    .with_context(|| format!("removing stale {}", episodes.display()))
                    .map_err(CliError::usage)?;
            }
            if artifacts.trajectories().exists() {
                fs::remove_dir_all(artifacts.trajectories())
                    .context("removing stale trajectories")
                    .map_err(CliError::usage)?;
            }
            store::save_checkpoint(&trainer.checkpoint(), &artifacts.checkpoint())?;
            trainer
        }
    };
    store::save_config(cfg, &artifacts.config())?;

    let mut first_optimal = None;
    let mut last_steps = None;
    let mut ran = 0u32;
    loop {
        if stop_after.is_some_and(|n| ran >= n) {
            break;
        }
        let episode = trainer.next_episode();
        let keep = cfg.dynamics_enabled
            && match capture {
                TrajectoryCapture::None => false,
                TrajectoryCapture::Last => episode == cfg.episodes,
                TrajectoryCapture::All => true,
            };
        let Some(outcome) = trainer.run_next(keep)? else {
            break;
        };
        store::append_episode(&outcome.log, &artifacts.episodes())?;
        store::save_checkpoint(&trainer.checkpoint(), &artifacts.checkpoint())?;
        for (step, traj) in &outcome.trajectories {
            store::save_trajectory(traj, &artifacts.trajectory(episode, *step))?;
        }
        if first_optimal.is_none() && trainer.is_optimal() {
            first_optimal = Some(episode);
        }
        last_steps = Some(outcome.log.steps);
        ran += 1;
    }

    store::save_qtable(trainer.qtable(), &cfg.env, &artifacts.qtable())?;

    let greedy = greedy_path_len(
        trainer.qtable(),
        &cfg.env,
        cfg.start,
        cfg.max_steps_per_episode as usize,
    );
    match last_steps {
        _ if !trainer.is_finished() => println!(
            "stopped before episode {}; continue with --resume {}",
            trainer.next_episode(),
            artifacts.checkpoint().display()
        ),
        None => println!("run already complete ({} episodes); nothing to do", cfg.episodes),
        Some(steps) => println!(
            "trained through episode {}; final episode took {steps} steps",
            cfg.episodes
        ),
    }
    if let Some(e) = first_optimal {
        println!("first optimal greedy path after episode {e}");
    }
    match greedy {
        Some(len) => println!("greedy path from {}: {len} steps", cfg.start),
        None => println!("greedy path from {} does not reach the goal", cfg.start),
    }
    println!("artifacts written to {}", out.display());
    Ok(())
}
