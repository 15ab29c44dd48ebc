use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "run.horizon = 500\nrun.n_runs = 2\nrun.algos = known,unknown,baseline\n\
env.n_states = 6\nenv.n_actions = 4\nenv.dim = 3\nenv.n_neighbors = 1\nbank.size = 16\n";

fn mbl(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mbl"))
        .args(args)
        .current_dir(dir)
        .env_remove("MBL_SEED")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn run_writes_outputs_and_one_line_per_run() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("small.cfg"), SMALL).unwrap();
    let o = mbl(&["run", "small.cfg", "--jobs", "1"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("results/small");
    for f in ["traces.csv", "summary.json", "config.cfg"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let lines: Vec<String> = stdout(&o).lines().filter(|l| l.starts_with("run ")).map(String::from).collect();
    assert_eq!(lines.len(), 6);
    let csv = fs::read_to_string(out.join("traces.csv")).unwrap();
    assert!(csv.starts_with("run_id,algo,t,inst_regret,cum_regret,seed,traj_hash\n"));
}

#[test]
fn overrides_and_seed_reach_the_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("small.cfg"), SMALL).unwrap();
    let o = mbl(
        &["run", "small.cfg", "--out", "o", "--seed", "40", "--set", "env.beta=0.5", "--set", "run.algos=baseline"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let cfg = fs::read_to_string(dir.path().join("o/config.cfg")).unwrap();
    assert!(cfg.contains("env.beta = 0.5\n"));
    assert!(cfg.contains("run.seed = 40\n"));
    assert!(cfg.contains("run.algos = baseline\n"));
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("small.cfg"), SMALL).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_mbl"))
        .args(["run", "small.cfg", "--out", "o", "--set", "run.algos=baseline"])
        .current_dir(dir.path())
        .env("MBL_SEED", "77")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("seed 78"));
}

#[test]
fn config_errors_exit_1_and_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("small.cfg"), SMALL).unwrap();
    for (args, key) in [
        (vec!["run", "small.cfg", "--set", "env.beta=1.5"], "env.beta"),
        (vec!["run", "small.cfg", "--set", "env.bogus=1"], "env.bogus"),
        (vec!["run", "missing.cfg"], "missing.cfg"),
    ] {
        let o = mbl(&args, dir.path());
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(stderr(&o).contains(key), "{args:?}: {}", stderr(&o));
    }
    fs::write(dir.path().join("bad.cfg"), "run.horizon = 500\nrun.horizon = 600\n").unwrap();
    let o = mbl(&["run", "bad.cfg"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("run.horizon"));
}

#[test]
fn verify_lemma1_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = mbl(&["verify", "--suite", "lemma1"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("\"violations\":0"));
    let o = mbl(&["verify", "--suite", "nope"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn report_prints_and_emits_summary_table() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("small.cfg"), SMALL).unwrap();
    assert!(mbl(&["run", "small.cfg", "--out", "o"], dir.path()).status.success());
    let o = mbl(&["report", "o", "--emit-csv"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let table = stdout(&o);
    assert!(table.starts_with("t,alg1-known_mean,alg1-known_stderr,alg2-unknown_mean"));
    assert_eq!(fs::read_to_string(dir.path().join("o/summary.csv")).unwrap(), table);
    // Without summary.json the table is rebuilt from the traces.
    fs::remove_file(dir.path().join("o/summary.json")).unwrap();
    assert!(mbl(&["report", "o"], dir.path()).status.success());
    assert_eq!(mbl(&["report", "nowhere"], dir.path()).status.code(), Some(1));
}

#[test]
fn presets_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    for (name, horizon) in [("table3.cfg", "200000"), ("desk.cfg", "50000")] {
        let text = fs::read_to_string(root.join("configs").join(name)).unwrap();
        assert!(text.contains(&format!("run.horizon = {horizon}\n")), "{name}");
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join(name), text).unwrap();
        // A tiny horizon keeps the run short while exercising the full preset.
        let o = mbl(&["run", name, "--out", "o", "--set", "run.horizon=300", "--set", "run.n_runs=1"], dir.path());
        assert!(o.status.success(), "{name}: {}", stderr(&o));
    }
}
