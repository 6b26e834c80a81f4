//! End-to-end checks of the command-line surface: run, oracle, selftest.

use std::fs;
use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nsic-harness"))
}

fn scratch_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("nsic-cli-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

const SMALL_CFG: &str = "\
[system]
model = lost_sales
horizon = 200
[demand]
family = poisson
segments = 2
[run]
replications = 2
mc_horizon = 300
workers = 1
";

#[test]
fn run_writes_csv_with_exact_header() {
    let dir = scratch_dir("run");
    let cfg = dir.join("exp.cfg");
    fs::write(&cfg, SMALL_CFG).unwrap();
    let out = dir.join("out");
    let status = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(["--emit-traj", "50"])
        .status()
        .unwrap();
    assert!(status.success());
    let csv = fs::read_to_string(out.join("runs.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "run_id,algorithm,model,lead_time,S_requested,S_realized,replication,seed,T,dynamic_regret,relative_regret_pct,restarts,epochs,wall_ms"
    );
    assert_eq!(csv.lines().count(), 3);
    assert!(!csv.contains('\r'), "LF line endings only");
    // trajectory files, one per run
    let trajs: Vec<_> = fs::read_dir(&out)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().starts_with("traj_"))
        .collect();
    assert_eq!(trajs.len(), 2);
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn run_is_reproducible_for_a_fixed_seed() {
    let dir = scratch_dir("repro");
    let cfg = dir.join("exp.cfg");
    fs::write(&cfg, SMALL_CFG).unwrap();
    let strip_wall = |text: String| -> String {
        text.lines().map(|l| l.rsplit_once(',').unwrap().0.to_string()).collect::<Vec<_>>().join("\n")
    };
    let mut outputs = Vec::new();
    for tag in ["a", "b"] {
        let out = dir.join(tag);
        let status = bin()
            .args(["run", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .args(["--seed", "99"])
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(strip_wall(fs::read_to_string(out.join("runs.csv")).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn oracle_dumps_columnar_table() {
    let dir = scratch_dir("oracle");
    let cfg = dir.join("exp.cfg");
    fs::write(&cfg, SMALL_CFG).unwrap();
    let table = dir.join("table.tsv");
    let status = bin()
        .args(["oracle", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&table)
        .status()
        .unwrap();
    assert!(status.success());
    let text = fs::read_to_string(&table).unwrap();
    assert!(text.starts_with("segment\ttau\tpseudo\ttrue\tstderr\n"));
    assert!(text.lines().count() > 2);
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn bad_config_fails_with_line_number() {
    let dir = scratch_dir("bad");
    let cfg = dir.join("exp.cfg");
    fs::write(&cfg, "[system]\nlead_time = -1\n").unwrap();
    let out = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "stderr was: {err}");
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn selftest_passes() {
    let out = bin().arg("selftest").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("PASS counterfactual equivalence"));
    assert!(!text.contains("FAIL"));
}
