//! The generated header is checked in shape here and, when a C compiler is
//! on PATH, compiled and linked against the static library.

use std::env;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

const EXPORTS: &[&str] = &[
    "wrl_version",
    "wrl_status_name",
    "wrl_last_error",
    "wrl_trainer_new",
    "wrl_trainer_resume",
    "wrl_trainer_free",
    "wrl_trainer_next_episode",
    "wrl_trainer_run_episode",
    "wrl_trainer_q_value",
    "wrl_trainer_greedy_path_len",
    "wrl_trainer_save_checkpoint",
    "wrl_trainer_save_qtable",
    "wrl_value_iteration",
    "wrl_step_response",
    "wrl_equivalence_check",
];

#[test]
fn header_declares_every_export() {
    let header = fs::read_to_string(crate_dir().join("include/waypoint_rl.h")).unwrap();
    assert!(header.contains("#ifndef WAYPOINT_RL_H"));
    assert!(
        header.contains("typedef struct WrlTrainer WrlTrainer;"),
        "trainer must stay opaque"
    );
    for status in ["WRL_STATUS_OK = 0", "WRL_STATUS_FINISHED = 10", "WRL_STATUS_PANIC = 12"] {
        assert!(header.contains(status), "missing {status}");
    }
    for f in EXPORTS {
        let declared = header.contains(&format!(" {f}(")) || header.contains(&format!("*{f}("));
        assert!(declared, "missing declaration of {f}");
    }
}

/// `target/<profile>` holding this test binary.
fn profile_dir() -> PathBuf {
    let exe = env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

fn find_static_lib() -> Option<PathBuf> {
    let dir = profile_dir();
    [dir.join("libwaypoint_rl_ffi.a"), dir.join("deps/libwaypoint_rl_ffi.a")]
        .into_iter()
        .find(|p| p.exists())
}

#[test]
fn c_program_links_and_runs() {
    if !cfg!(unix) || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("no C compiler available; skipping");
        return;
    }
    let lib = find_static_lib().expect("static library is built alongside the tests");
    let tmp = tempfile::tempdir().unwrap();
    let exe = tmp.path().join("smoke");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(crate_dir().join("include"))
        .arg(crate_dir().join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C smoke program failed to compile");
    let out = Command::new(&exe).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        out.status.success(),
        "smoke program failed: {stdout}{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(stdout.starts_with("greedy=8 need=100 "), "{stdout}");
}
