//! End-to-end runs of the `phi-lab` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_phi-lab"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> i32 {
    bin().args(args).output().unwrap().status.code().unwrap()
}

fn results(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("results.json")).unwrap()).unwrap()
}

#[test]
fn decay_check_exponential_is_bounded() {
    let dir = scratch("decay");
    let cfg = dir.join("c.toml");
    fs::write(&cfg, "experiment = \"decay-check\"\n[params]\nfamilies = [\"exponential\"]\n").unwrap();
    let out = dir.join("out");
    assert_eq!(run(&["decay-check", "--config", cfg.to_str().unwrap(), "--output-dir", out.to_str().unwrap()]), 0);
    let r = results(&out);
    assert_eq!(r["results"]["bounded"], true);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["params"]["omegas"], serde_json::json!([0.5, 1.0, 2.0]));
    assert_eq!(manifest["config"]["tolerances"]["vanishing"], 1e-6);
    assert!(out.join("cells.csv").exists());
}

#[test]
fn same_config_gives_identical_results() {
    let dir = scratch("determinism");
    for name in ["a", "b"] {
        let out = dir.join(name);
        assert_eq!(run(&["cover", "--seed", "5", "--output-dir", out.to_str().unwrap()]), 0);
        let out = dir.join(format!("{name}-seq"));
        assert_eq!(run(&["nwe-run", "--experiment", "rate", "--output-dir", out.to_str().unwrap()]), 0);
    }
    for f in ["results.json", "radii.csv"] {
        assert_eq!(fs::read(dir.join("a").join(f)).unwrap(), fs::read(dir.join("b").join(f)).unwrap(), "{f}");
    }
    let a = fs::read(dir.join("a-seq/results.json")).unwrap();
    assert_eq!(a, fs::read(dir.join("b-seq/results.json")).unwrap());
    let r: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert!(r["results"]["runs"][1]["certificate"]["slope"].is_number());
}

#[test]
fn schema_violations_exit_with_two() {
    let dir = scratch("schema");
    let cases = [
        ("unknown_top.toml", "colour = 1\n"),
        ("unknown_param.toml", "[params]\nbudgets = [1]\nbogus = 2\n"),
        ("unknown_tol.toml", "[tolerances]\nnope = 1.0\n"),
        ("wrong_experiment.toml", "experiment = \"sequence\"\n"),
    ];
    for (name, text) in cases {
        let cfg = dir.join(name);
        fs::write(&cfg, text).unwrap();
        let out = dir.join("out");
        assert_eq!(run(&["cover", "--config", cfg.to_str().unwrap(), "--output-dir", out.to_str().unwrap()]), 2, "{name}");
    }
    assert_eq!(run(&["cover", "--config", dir.join("missing.toml").to_str().unwrap()]), 2);
    assert_eq!(run(&["no-such-command"]), 2);
}

#[test]
fn failures_exit_with_one_and_record_the_error() {
    let dir = scratch("failure");
    let cfg = dir.join("shrunk.toml");
    fs::write(&cfg, "[params]\nball_radius = 0.25\nk_min = -3\nn_cut = 3\nbudget = 4\n").unwrap();
    let out = dir.join("build");
    assert_eq!(run(&["attractor-build", "--config", cfg.to_str().unwrap(), "--output-dir", out.to_str().unwrap()]), 1);
    let r = results(&out);
    assert_eq!(r["status"], "error");
    assert_eq!(r["error"]["kind"], "property_violated");

    let cfg = dir.join("literal.toml");
    fs::write(&cfg, "[params]\nexperiment = \"validate_f\"\n[params.model.f]\nkind = \"literal\"\n").unwrap();
    let out = dir.join("literal");
    assert_eq!(run(&["nwe-run", "--config", cfg.to_str().unwrap(), "--output-dir", out.to_str().unwrap()]), 1);
    assert_eq!(results(&out)["error"]["kind"], "rejected");
}

#[test]
fn config_values_override_flags() {
    let dir = scratch("precedence");
    let cfg = dir.join("c.toml");
    let from_file = dir.join("from-file");
    fs::write(&cfg, format!("seed = 9\noutput_dir = {:?}\n", from_file.to_str().unwrap())).unwrap();
    let flag_dir = dir.join("from-flag");
    let args = ["sequence", "--config", cfg.to_str().unwrap(), "--seed", "1", "--output-dir", flag_dir.to_str().unwrap()];
    assert_eq!(run(&args), 0);
    assert!(!flag_dir.exists());
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(from_file.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["config"]["seed"], 9);
}

#[test]
fn dump_state_and_report() {
    let dir = scratch("dump");
    let cfg = dir.join("c.toml");
    fs::write(&cfg, "[params.model]\nmodes = 4\n[params.trajectory]\nhorizon = 2.0\n").unwrap();
    let out = dir.join("traj");
    let dump = dir.join("state.csv");
    let args = ["nwe-run", "--config", cfg.to_str().unwrap(), "--output-dir", out.to_str().unwrap(), "--dump-state", dump.to_str().unwrap()];
    assert_eq!(run(&args), 0);
    let text = fs::read_to_string(&dump).unwrap();
    assert!(text.starts_with("t,a1,a2,a3,a4,b1,b2,b3,b4\n"));
    assert_eq!(text.lines().count(), 6);
    let rep = dir.join("report");
    assert_eq!(run(&["report", out.to_str().unwrap(), "--output-dir", rep.to_str().unwrap()]), 0);
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(rep.join("report.json")).unwrap()).unwrap();
    assert_eq!(r["all_passed"], true);
    assert_eq!(run(&["report", dir.join("nothing").to_str().unwrap(), "--output-dir", rep.to_str().unwrap()]), 2);
}
