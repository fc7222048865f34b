use std::process::{Command, Output};

use hplan_core::env::load_env;
use hplan_core::graph;

fn hplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hplan"))
        .args(args)
        .env_remove("HPLAN_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn zero_trials_write_header_only() {
    let out = hplan(&["run", "--trials", "0"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "method,env,trial,seed,n_train,plan_len,plan_time_ms,success\n");
}

#[test]
fn gen_is_byte_identical_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let out = hplan(&["gen", "--n", "100", "--lambda", "2", "--seed", "5", "--out", p.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let env = load_env(&a, 0).unwrap();
    assert_eq!(env.dims(), 100);
    assert!(graph::topo_order(100, &env.dependency_edges()).is_some());
}

#[test]
fn gen_single_skill_is_unconditioned() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("one.json");
    assert!(hplan(&["gen", "--n", "1", "--out", p.to_str().unwrap()]).status.success());
    let env = load_env(&p, 0).unwrap();
    assert_eq!(env.num_skills(), 1);
    assert!(env.primitives()[0].condition.is_empty());
}

#[test]
fn generated_file_runs_as_domain() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("g.json");
    assert!(hplan(&["gen", "--n", "20", "--lambda", "1.5", "--seed", "2", "--out", p.to_str().unwrap()]).status.success());
    let sel = format!("file:{}", p.display());
    let out = hplan(&["run", "--env", &sel, "--method", "goal-regression", "--no-timing"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).lines().nth(1).unwrap().ends_with(",0.0,true"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(hplan(&["run", "--method", "dqn"]).status.code(), Some(2));
    assert_eq!(hplan(&["run", "--env", "random:10,1,0,0", "--method", "hierarchical"]).status.code(), Some(2));
    assert_eq!(hplan(&["run", "--goal", "99", "--method", "goal-regression"]).status.code(), Some(2));
    assert_eq!(hplan(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn bad_domain_file_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(&p, "{\"name\": \"x\", \"n\": 2}").unwrap();
    let sel = format!("file:{}", p.display());
    assert_eq!(hplan(&["run", "--env", &sel, "--method", "goal-regression"]).status.code(), Some(3));
    let missing = format!("file:{}", dir.path().join("missing.json").display());
    assert_eq!(hplan(&["run", "--env", &missing, "--method", "goal-regression"]).status.code(), Some(3));
}

#[test]
fn seed_comes_from_environment_variable() {
    let out = Command::new(env!("CARGO_BIN_EXE_hplan"))
        .args(["run", "--env", "drawer", "--method", "goal-regression", "--no-timing"])
        .env("HPLAN_SEED", "17")
        .output()
        .unwrap();
    assert_eq!(stdout(&out).lines().nth(1).unwrap(), "goal-regression,drawer,0,17,0,6,0.0,true");
}

#[test]
fn rerun_reproduces_csv() {
    let args = ["run", "--env", "crafting", "--method", "hierarchical+learn-skills+learn-conditions", "--trials", "3", "--seed", "4", "--no-timing"];
    let a = hplan(&args);
    assert!(a.status.success());
    assert_eq!(stdout(&a), stdout(&hplan(&args)));
}

#[test]
fn conditions_table_and_skill_export() {
    let out = hplan(&["conditions", "--env", "crafting", "--method", "hierarchical+learn-skills+learn-conditions", "--format", "md"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 2 + 22);
    assert!(text.contains("| 0 | s0=1 | None | None |"), "{text}");

    let out = hplan(&["export-skills", "--env", "drawer", "--method", "hierarchical+learn-skills"]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["skills"].as_array().unwrap().len(), 6 + 3);
}
