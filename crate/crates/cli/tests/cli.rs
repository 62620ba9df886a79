use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn solve(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_solve"))
        .args(args)
        .env_remove("NHDFEM_THREADS")
        .output()
        .expect("binary runs")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn dispersion_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("dispersion.toml");
    let out = dir.path().join("d");
    let o = solve(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "dispersion"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(out.join("dispersion.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("omega,k,re_eps,im_eps,pole"));
    assert_eq!(lines.count(), 20 * 21);
}

#[test]
fn convergence_single_level() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.toml",
        "[problem]\nkind = \"manufactured\"\n[mesh]\nn = 2\nlevels = 1\n",
    );
    let out = dir.path().join("c");
    let o = solve(&["--config", &cfg, "--out", out.to_str().unwrap(), "--serial", "convergence"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(out.join("convergence.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "level,h,ndofs_E,ndofs_J,err_E,order_E,err_J,order_J");
    assert_eq!(lines.len(), 2);
    assert_eq!(String::from_utf8_lossy(&o.stdout), text);
}

#[test]
fn serial_and_parallel_runs_match() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.toml",
        "[problem]\nkind = \"manufactured\"\norder = 2\n[mesh]\nn = 2\nlevels = 2\n",
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let oa = solve(&["--config", &cfg, "--out", a.to_str().unwrap(), "--serial", "convergence"]);
    let ob = solve(&["--config", &cfg, "--out", b.to_str().unwrap(), "convergence"]);
    assert!(oa.status.success() && ob.status.success());
    assert_eq!(
        std::fs::read(a.join("convergence.csv")).unwrap(),
        std::fs::read(b.join("convergence.csv")).unwrap()
    );
}

#[test]
fn mesh_info_prints_counts() {
    let cfg = configs().join("convergence_r1.toml");
    let o = solve(&["--config", cfg.to_str().unwrap(), "mesh-info"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("cells           48"), "{text}");
    assert!(text.contains("E DOFs"));
}

#[test]
fn missing_config_is_io_error() {
    let o = solve(&["--config", "/nonexistent/run.toml", "mesh-info"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("/nonexistent/run.toml"));
}

#[test]
fn bad_config_is_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", "[problem]\nkind = \"manufactured\"\nbogus = 1\n");
    let o = solve(&["--config", &cfg, "convergence"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bogus"));
}

#[test]
fn wrong_problem_kind_is_input_error() {
    let cfg = configs().join("dispersion.toml");
    let o = solve(&["--config", cfg.to_str().unwrap(), "convergence"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_flag_required() {
    let o = solve(&["dispersion"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_subcommand_rejected() {
    let o = solve(&["frobnicate"]);
    assert!(!o.status.success());
}

#[test]
fn solver_failure_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "g.toml",
        "[problem]\nkind = \"manufactured\"\n[mesh]\nn = 2\n[solver]\nmethod = \"gmres\"\nrestart = 2\nmax_iter = 2\ntol = 1e-14\nilu0 = false\n",
    );
    let o = solve(&["--config", &cfg, "--out", dir.path().to_str().unwrap(), "convergence"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("level 0"));
}

#[test]
fn bad_thread_count_is_input_error() {
    let cfg = configs().join("dispersion.toml");
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_solve"))
        .args(["--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "dispersion"])
        .env("NHDFEM_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
