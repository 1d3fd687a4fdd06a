use std::process::Command;

const TINY: &str = "m1 = 2\nm2 = 2\nn_states = 4\nn_c = 16\ngrid_step = 30\ndelay_span = 4\nn_paths = 3\ntest_states = 4\n";

fn pfas() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pfas"))
}

fn tiny_config(dir: &tempfile::TempDir) -> std::path::PathBuf {
    let p = dir.path().join("tiny.cfg");
    std::fs::write(&p, TINY).unwrap();
    p
}

#[test]
fn nmse_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(&dir);
    let out = dir.path().join("n.csv");
    let st = pfas()
        .args(["nmse", "--trials", "2", "--estimator", "omp", "--seed", "9"])
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "estimator,precoder,n_users,p_t_db,seed,trial,metric,value");
    assert_eq!(lines.len(), 1 + 2 * 2);
    assert!(lines[1].starts_with("omp,proposed,1,20,9,0,nmse_train_db,"));
}

#[test]
fn same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(&dir);
    let run = |name: &str| {
        let out = dir.path().join(name);
        let st = pfas().args(["rate", "--trials", "2", "--set", "opt_steps=30"]).arg("--config").arg(&cfg).arg("--out").arg(&out).status().unwrap();
        assert_eq!(st.code(), Some(0));
        std::fs::read(out).unwrap()
    };
    assert_eq!(run("a.csv"), run("b.csv"));
}

#[test]
fn stdout_when_no_out() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(&dir);
    let o = pfas().args(["rate", "--trials", "1", "--precoder", "groupopt"]).arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().nth(1).unwrap().contains(",rate,"));
}

#[test]
fn debug_trace_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(&dir);
    let out = dir.path().join("v.csv");
    let st = pfas().args(["nmse", "--trials", "1", "--debug-trace"]).arg("--config").arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert_eq!(st.code(), Some(0));
    let trace = std::fs::read_to_string(dir.path().join("v.csv.trace.csv")).unwrap();
    assert!(trace.starts_with("trial,user,iteration,"));
    assert!(trace.lines().count() > 1);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(&dir);
    for extra in [
        vec!["--estimator", "magic"],
        vec!["--profile", "huge"],
        vec!["--set", "n_users=99"],
        vec!["--set", "no_such_key=1"],
    ] {
        let st = pfas().arg("nmse").args(&extra).arg("--config").arg(&cfg).status().unwrap();
        assert_eq!(st.code(), Some(2), "{extra:?}");
    }
    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "m1 = 2\nthis line has no equals\n").unwrap();
    let o = pfas().arg("nmse").arg("--config").arg(&bad).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    let st = pfas().args(["nmse", "--config", "/nonexistent/x.cfg"]).status().unwrap();
    assert_eq!(st.code(), Some(2));
}

#[test]
fn vanishing_power_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(&dir);
    let st = pfas().args(["nmse", "--trials", "1", "--set", "p_t_db=-3100"]).arg("--config").arg(&cfg).status().unwrap();
    assert_eq!(st.code(), Some(2));
}
