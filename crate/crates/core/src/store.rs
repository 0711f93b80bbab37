//! Text persistence for tables, episode logs, trajectories and checkpoints.
//!
//! Reals in CSV files are fixed-point with six decimals, so a table read
//! back from disk re-serializes to the same bytes. Checkpoints are JSON and
//! keep full `f64` precision. All output is UTF-8 with LF line endings.

use std::fmt::Write as _;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::flight::Trajectory;
use crate::gridworld::{GridState, GridWorld};
use crate::qlearn::{Action, QTable};
use crate::runner::{Checkpoint, EpisodeLog, TrainConfig};

pub const QTABLE_HEADER: &str = "x,y,action,q";
pub const EPISODE_HEADER: &str = "episode,steps,total_reward,reached_goal,duration_s";
pub const TRAJECTORY_HEADER: &str = "t,x,y,vx,vy,ux,uy,wx,wy";

/// File layout of one training run's output directory.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub dir: PathBuf,
}

impl RunArtifacts {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        RunArtifacts { dir: dir.into() }
    }

    pub fn config(&self) -> PathBuf {
        self.dir.join("config.json")
    }

    pub fn episodes(&self) -> PathBuf {
        self.dir.join("episodes.csv")
    }

    pub fn qtable(&self) -> PathBuf {
        self.dir.join("qtable.csv")
    }

    pub fn checkpoint(&self) -> PathBuf {
        self.dir.join("checkpoint.json")
    }

    pub fn trajectories(&self) -> PathBuf {
        self.dir.join("trajectories")
    }

    pub fn trajectory(&self, episode: u32, step: u32) -> PathBuf {
        self.trajectories().join(format!("ep{episode}_step{step}.csv"))
    }

    pub fn create(&self) -> Result<()> {
        fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))
    }
}

/// Writes `contents` to a sibling temp file, syncs it, then renames over `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::io(path, std::io::Error::other("not a file path")))?;
    let mut tmp_name = file_name.to_os_string();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    {
        let mut f = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(contents).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Rounds to the six-decimal grid used in CSV files.
pub fn quantize(v: f64) -> f64 {
    format!("{v:.6}").parse().expect("formatted float parses")
}

// ---- Q-table -------------------------------------------------------------

pub fn qtable_to_csv(q: &QTable, env: &GridWorld) -> String {
    let mut out = String::with_capacity(24 * q.values().len());
    out.push_str(QTABLE_HEADER);
    out.push('\n');
    for s in env.states() {
        let i = env.index_of(s);
        for a in Action::ALL {
            writeln!(out, "{},{},{},{:.6}", s.x, s.y, a, q.get(i, a)).expect("string write");
        }
    }
    out
}

/// Parses a Q-table CSV. Rows must cover every `(x, y, action)` of `env`
/// exactly once, in `(y, x, action)` order.
pub fn qtable_from_csv(text: &str, path: &Path, env: &GridWorld) -> Result<QTable> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == QTABLE_HEADER => {}
        Some((_, h)) => {
            return Err(Error::parse(
                path,
                1,
                format!("expected header `{QTABLE_HEADER}`, found `{h}`"),
            ))
        }
        None => return Err(Error::parse(path, 1, "empty file")),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected 4 fields, found {}", fields.len()),
            ));
        }
        let x: u32 = fields[0]
            .parse()
            .map_err(|_| Error::parse(path, lineno, format!("bad x `{}`", fields[0])))?;
        let y: u32 = fields[1]
            .parse()
            .map_err(|_| Error::parse(path, lineno, format!("bad y `{}`", fields[1])))?;
        let action: Action = fields[2].parse().map_err(|msg| Error::parse(path, lineno, msg))?;
        let q: f64 = fields[3]
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| Error::parse(path, lineno, format!("bad q `{}`", fields[3])))?;
        rows.push((lineno, GridState::new(x, y), action, q));
    }

    let expected = env.num_states() * Action::COUNT;
    let mismatch = |detail: String| {
        Error::DimensionMismatch(format!(
            "{}: {detail}; grid is {}x{}",
            path.display(),
            env.width(),
            env.height()
        ))
    };
    if let Some((lineno, cell, _, _)) = rows.iter().find(|r| !env.contains(r.1)) {
        return Err(mismatch(format!("line {lineno}: cell {cell} outside the grid")));
    }
    if rows.len() != expected {
        return Err(mismatch(format!("{} rows, expected {expected}", rows.len())));
    }
    let mut values = Vec::with_capacity(expected);
    for (n, &(lineno, cell, action, q)) in rows.iter().enumerate() {
        let want_state = env.state_at(n / Action::COUNT);
        let want_action = Action::from_index(n % Action::COUNT).expect("index < 4");
        if cell != want_state || action != want_action {
            return Err(Error::parse(
                path,
                lineno,
                format!("row {cell} {action} out of order, expected {want_state} {want_action}"),
            ));
        }
        values.push(q);
    }
    QTable::from_values(env.num_states(), Action::COUNT, values)
}

pub fn save_qtable(q: &QTable, env: &GridWorld, path: &Path) -> Result<()> {
    write_atomic(path, qtable_to_csv(q, env).as_bytes())
}

pub fn load_qtable(path: &Path, env: &GridWorld) -> Result<QTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    qtable_from_csv(&text, path, env)
}

// ---- episodes ------------------------------------------------------------

pub fn episode_row(log: &EpisodeLog) -> String {
    format!(
        "{},{},{:.6},{},{:.6}",
        log.episode, log.steps, log.total_reward, log.reached_goal, log.duration_s
    )
}

/// Appends one row (writing the header first if the file is new or empty)
/// and syncs before returning.
pub fn append_episode(log: &EpisodeLog, path: &Path) -> Result<()> {
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let empty = f.metadata().map_err(|e| Error::io(path, e))?.len() == 0;
    let mut buf = String::new();
    if empty {
        buf.push_str(EPISODE_HEADER);
        buf.push('\n');
    }
    buf.push_str(&episode_row(log));
    buf.push('\n');
    f.write_all(buf.as_bytes()).map_err(|e| Error::io(path, e))?;
    f.sync_data().map_err(|e| Error::io(path, e))
}

pub fn parse_episodes(text: &str, path: &Path) -> Result<Vec<EpisodeLog>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == EPISODE_HEADER => {}
        _ => return Err(Error::parse(path, 1, format!("expected header `{EPISODE_HEADER}`"))),
    }
    lines
        .map(|(i, line)| {
            let lineno = i + 1;
            let bad = |what: &str| Error::parse(path, lineno, format!("bad {what}"));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("expected 5 fields, found {}", f.len()),
                ));
            }
            Ok(EpisodeLog {
                episode: f[0].parse().map_err(|_| bad("episode"))?,
                steps: f[1].parse().map_err(|_| bad("steps"))?,
                total_reward: f[2].parse().map_err(|_| bad("total_reward"))?,
                reached_goal: f[3].parse().map_err(|_| bad("reached_goal"))?,
                duration_s: f[4].parse().map_err(|_| bad("duration_s"))?,
            })
        })
        .collect()
}

pub fn load_episodes(path: &Path) -> Result<Vec<EpisodeLog>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_episodes(&text, path)
}

/// Cuts an episode log back to its header plus the first `rows` complete
/// rows, dropping anything a crash left behind. A missing file is treated
/// as empty. Fails if fewer than `rows` complete rows exist.
pub fn truncate_episodes(path: &Path, rows: usize) -> Result<()> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            if rows == 0 {
                return Ok(());
            }
            return Err(Error::parse(
                path,
                0,
                format!("missing; checkpoint expects {rows} episode rows"),
            ));
        }
        Err(e) => return Err(Error::io(path, e)),
    };
    let mut kept = String::new();
    let mut complete = 0usize;
    let mut reader = BufReader::new(file);
    let mut line = String::new();
    // Header plus `rows` lines, each ending in '\n'.
    while complete < rows + 1 {
        line.clear();
        let n = reader.read_line(&mut line).map_err(|e| Error::io(path, e))?;
        if n == 0 || !line.ends_with('\n') {
            break;
        }
        kept.push_str(&line);
        complete += 1;
    }
    if rows > 0 && complete < rows + 1 {
        return Err(Error::parse(
            path,
            complete + 1,
            format!(
                "holds {} complete episode rows; checkpoint expects {rows}",
                complete.saturating_sub(1)
            ),
        ));
    }
    write_atomic(path, kept.as_bytes())
}

// ---- trajectories ----------------------------------------------------------

pub fn trajectory_to_csv(traj: &Trajectory) -> String {
    let mut out = String::with_capacity(80 * (traj.len() + 1));
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for s in &traj.samples {
        let (p, v) = (s.state.position, s.state.velocity);
        writeln!(
            out,
            "{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            s.t, p.x, p.y, v.x, v.y, s.command.x, s.command.y, s.waypoint.x, s.waypoint.y
        )
        .expect("string write");
    }
    out
}

pub fn save_trajectory(traj: &Trajectory, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    write_atomic(path, trajectory_to_csv(traj).as_bytes())
}

// ---- JSON documents --------------------------------------------------------

pub fn save_checkpoint(cp: &Checkpoint, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(cp).expect("checkpoint serializes") + "\n";
    write_atomic(path, text.as_bytes())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub fn save_config(cfg: &TrainConfig, path: &Path) -> Result<()> {
    write_atomic(path, cfg.to_json().as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn env() -> GridWorld {
        GridWorld::default()
    }

    #[test]
    fn zero_table_has_one_hundred_rows() {
        let csv = qtable_to_csv(&env().new_qtable(), &env());
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 101);
        assert_eq!(lines[0], QTABLE_HEADER);
        assert_eq!(lines[1], "1,1,N,0.000000");
        assert_eq!(lines[4], "1,1,W,0.000000");
        assert_eq!(lines[5], "2,1,N,0.000000");
        assert_eq!(lines[100], "5,5,W,0.000000");
        assert!(lines[1..].iter().all(|l| l.ends_with(",0.000000")));
    }

    #[test]
    fn bad_action_token_names_the_line() {
        let csv = qtable_to_csv(&env().new_qtable(), &env()).replacen("1,1,E,", "1,1,Q,", 1);
        let err = qtable_from_csv(&csv, Path::new("t.csv"), &env()).unwrap_err();
        match err {
            Error::Parse { line, msg, .. } => {
                assert_eq!(line, 3);
                assert!(msg.contains("`Q`"), "{msg}");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn wrong_grid_is_a_dimension_error() {
        let small = GridWorld::new(3, 3, GridState::new(3, 3), 1.0, 0.3).unwrap();
        let csv = qtable_to_csv(&small.new_qtable(), &small);
        assert!(matches!(
            qtable_from_csv(&csv, Path::new("t.csv"), &env()),
            Err(Error::DimensionMismatch(_))
        ));
        let csv = qtable_to_csv(&env().new_qtable(), &env());
        assert!(matches!(
            qtable_from_csv(&csv, Path::new("t.csv"), &small),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn header_and_field_errors() {
        let p = Path::new("t.csv");
        assert!(qtable_from_csv("", p, &env()).is_err());
        assert!(qtable_from_csv("x,y,a,q\n", p, &env()).is_err());
        let csv = qtable_to_csv(&env().new_qtable(), &env()).replacen("1,1,N,0.000000", "1,1,N,nan", 1);
        assert!(matches!(
            qtable_from_csv(&csv, p, &env()),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn episode_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("episodes.csv");
        let mk = |episode, steps, reached| EpisodeLog {
            episode,
            steps,
            total_reward: if reached {
                100.0 - (steps - 1) as f64
            } else {
                -(steps as f64)
            },
            reached_goal: reached,
            duration_s: 0.0,
        };
        append_episode(&mk(1, 100, false), &path).unwrap();
        append_episode(&mk(2, 8, true), &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "episode,steps,total_reward,reached_goal,duration_s\n\
             1,100,-100.000000,false,0.000000\n\
             2,8,93.000000,true,0.000000\n"
        );
        let logs = load_episodes(&path).unwrap();
        assert_eq!(logs, vec![mk(1, 100, false), mk(2, 8, true)]);
    }

    #[test]
    fn truncation_keeps_complete_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("episodes.csv");
        fs::write(
            &path,
            format!("{EPISODE_HEADER}\n1,3,98.000000,true,0.000000\n2,4,97.0"),
        )
        .unwrap();
        truncate_episodes(&path, 1).unwrap();
        assert_eq!(
            fs::read_to_string(&path).unwrap(),
            format!("{EPISODE_HEADER}\n1,3,98.000000,true,0.000000\n")
        );
        assert!(truncate_episodes(&path, 2).is_err());
        truncate_episodes(&path, 0).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), format!("{EPISODE_HEADER}\n"));
        truncate_episodes(&dir.path().join("missing.csv"), 0).unwrap();
    }

    #[test]
    fn atomic_write_leaves_no_temp_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.json");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn corrupt_checkpoint_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("checkpoint.json");
        fs::write(&path, "{\"config_hash\": \"ab\", \"next_ep").unwrap();
        assert!(matches!(load_checkpoint(&path), Err(Error::Json { .. })));
    }

    proptest! {
        #[test]
        fn qtable_csv_round_trip(values in prop::collection::vec(-1000.0f64..1000.0, 100)) {
            let env = env();
            let q = QTable::from_values(25, 4, values.clone()).unwrap();
            let csv = qtable_to_csv(&q, &env);
            let back = qtable_from_csv(&csv, Path::new("t.csv"), &env).unwrap();
            let quantized: Vec<f64> = values.iter().map(|&v| quantize(v)).collect();
            prop_assert_eq!(back.values(), &quantized[..]);
            prop_assert_eq!(qtable_to_csv(&back, &env), csv);
        }

        #[test]
        fn episode_row_round_trip(
            episode in 1u32..10_000, steps in 0u32..1000, reward in -1000.0f64..100.0,
            reached in any::<bool>(), duration in 0.0f64..5000.0,
        ) {
            let log = EpisodeLog { episode, steps, total_reward: reward, reached_goal: reached, duration_s: duration };
            let text = format!("{EPISODE_HEADER}\n{}\n", episode_row(&log));
            let back = parse_episodes(&text, Path::new("e.csv")).unwrap();
            prop_assert_eq!(episode_row(&back[0]), episode_row(&log));
        }
    }
}
