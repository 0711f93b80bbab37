use std::fmt::Write as _;
use std::fs;

use anyhow::{anyhow, Context};
use nalgebra::Vector2;
use waypoint_rl::flight::{overshoot, settling_time, step_response, PlantParams, PlantState};
use waypoint_rl::greedy_rollout;
use waypoint_rl::plot::{Chart, Columns};
use waypoint_rl::runner::equivalence_report;
use waypoint_rl::store;

use super::{announce, load_config, CliError, CliResult, EquivArgs, EvalArgs, FlyArgs, OracleArgs, PlotArgs, PlotKind};

pub fn eval(args: EvalArgs) -> CliResult {
    let cfg = load_config(&args.config)?;
    announce(&cfg);
    let q = store::load_qtable(&args.qtable, &cfg.env)?;
    let start = args.start.unwrap_or(cfg.start);
    if !cfg.env.contains(start) {
        return Err(CliError::usage(anyhow!("start {start} outside the grid")));
    }
    let path = greedy_rollout(&q, &cfg.env, start, cfg.max_steps_per_episode as usize);
    let mut cells = vec![start];
    for (k, &(s, a)) in path.iter().enumerate() {
        let next = cfg.env.step(s, a);
        println!("{k}: {s} {a} -> {next}");
        cells.push(next);
    }
    let end = *cells.last().expect("start is always present");
    println!("steps: {}", path.len());
    println!("reached goal: {}", cfg.env.is_goal(end));

    if let Some(out) = args.out {
        let mut csv = String::from("step,x,y\n");
        for (k, c) in cells.iter().enumerate() {
            writeln!(csv, "{k},{},{}", c.x, c.y).expect("string write");
        }
        store::write_atomic(&out, csv.as_bytes())?;
    }
    Ok(())
}

pub fn fly(args: FlyArgs) -> CliResult {
    if !(args.step_m.is_finite() && args.step_m > 0.0) {
        return Err(CliError::usage(anyhow!(
            "--step-m must be positive, got {}",
            args.step_m
        )));
    }
    if !(args.radius.is_finite() && args.radius > 0.0) {
        return Err(CliError::usage(anyhow!(
            "--radius must be positive, got {}",
            args.radius
        )));
    }
    let plant = match &args.config {
        Some(path) => {
            let cfg = load_config(path)?;
            announce(&cfg);
            cfg.plant
        }
        None => PlantParams::default(),
    };
    let duration = args.duration.unwrap_or(plant.timeout_s);
    if !(duration.is_finite() && duration > 0.0) {
        return Err(CliError::usage(anyhow!("--duration must be positive, got {duration}")));
    }
    eprintln!(
        "gains: kp={} ki={} kd={}; plant: {}",
        args.gains.kp,
        args.gains.ki,
        args.gains.kd,
        serde_json::to_string(&plant).expect("plant serializes")
    );

    let start = Vector2::zeros();
    let waypoint = Vector2::new(args.step_m, 0.0);
    let out = step_response(&PlantState::at_rest(start), waypoint, &args.gains, &plant, duration)?;
    store::save_trajectory(&out.trajectory, &args.out)?;

    let over = overshoot(&out.trajectory, start, waypoint)?;
    let settle = settling_time(&out.trajectory, waypoint, args.radius);
    println!("overshoot_m: {over:.6}");
    if settle.is_finite() {
        println!("settling_time_s: {settle:.6}");
    } else {
        println!("settling_time_s: inf");
    }
    println!("final_error_m: {:.6}", (out.state.position - waypoint).norm());
    Ok(())
}

pub fn oracle(args: OracleArgs) -> CliResult {
    let cfg = load_config(&args.config)?;
    announce(&cfg);
    let gamma = args.gamma.unwrap_or(cfg.learn.gamma);
    let q = cfg.env.value_iteration(gamma, args.tol)?;
    store::save_qtable(&q, &cfg.env, &args.out)?;
    println!(
        "value iteration: gamma={gamma}, residual={:.3e}; V*(start {}) = {:.6}",
        cfg.env.bellman_residual(&q, gamma),
        cfg.start,
        q.max_value(cfg.env.index_of(cfg.start))
    );
    Ok(())
}

pub fn plot(args: PlotArgs) -> CliResult {
    let text = fs::read_to_string(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))
        .map_err(CliError::usage)?;
    let cols = Columns::parse(&text).map_err(CliError::usage)?;
    let col = |name: &str| cols.numeric(name).map_err(CliError::usage);

    let (title, x_label, y_label, points, markers) = match args.kind {
        PlotKind::Steps => {
            let (ep, steps) = (col("episode")?, col("steps")?);
            ("Steps per episode", "episode", "steps", zip(ep, steps), false)
        }
        PlotKind::Error => {
            let (t, x, y, wx, wy) = (col("t")?, col("x")?, col("y")?, col("wx")?, col("wy")?);
            let err = (0..t.len()).map(|i| (x[i] - wx[i]).hypot(y[i] - wy[i])).collect();
            ("Distance to waypoint", "t (s)", "error (m)", zip(t, err), false)
        }
        PlotKind::Path => {
            let (x, y) = (col("x")?, col("y")?);
            ("Path", "x", "y", zip(x, y), true)
        }
    };
    let chart = Chart {
        title: args.title.as_deref().unwrap_or(title),
        x_label,
        y_label,
        points,
        y_from_zero: args.kind != PlotKind::Path,
        markers,
    };
    let svg = chart.render().map_err(CliError::usage)?;
    store::write_atomic(&args.out, svg.as_bytes())?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn zip(a: Vec<f64>, b: Vec<f64>) -> Vec<(f64, f64)> {
    a.into_iter().zip(b).collect()
}

pub fn equiv(args: EquivArgs) -> CliResult {
    let mut cfg = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    announce(&cfg);
    let report = equivalence_report(&cfg)?;
    if let Some(e) = &report.dynamics_error {
        println!("dynamics run aborted: {e}");
    }
    println!(
        "equivalent: {} ({} steps compared)",
        report.equivalent, report.steps_compared
    );
    if report.equivalent {
        Ok(())
    } else {
        Err(CliError::runtime(anyhow!("dynamics changed the learning trajectory")))
    }
}
