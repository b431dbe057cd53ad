use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bms(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bms")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_net(dir: &TempDir, name: &str, json: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, json).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const GHOST: &str = r#"{"n":1,"gamma":0.5,"theta":1.0,"weights":[[0.0]],"i_ext":[0.5]}"#;
const DEAD: &str = r#"{"n":3,"gamma":0.5,"theta":1.0,"weights":[[0.1,-0.2,0.3],[0.2,0.1,-0.1],[-0.3,0.2,0.2]],"i_ext":[0.0,0.0,0.0]}"#;
const FULL: &str = r#"{"n":2,"gamma":0.5,"theta":1.0,"weights":[[0.5,0.5],[0.5,0.5]],"i_ext":[1.0,1.0]}"#;

fn data_rows(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).skip(1).collect()
}

#[test]
fn simulate_writes_trajectory_and_raster() {
    let dir = TempDir::new().unwrap();
    let net = write_net(&dir, "ghost.json", GHOST);
    let out = dir.path().join("traj.csv");
    let o = bms(&["simulate", "--net", s(&net), "--t-max", "10", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(&out).unwrap();
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 11);
    assert_eq!(rows[10], "10,0.9990234375");
    assert!(text.starts_with("# command=simulate\n"));
    let raster = fs::read_to_string(dir.path().join("traj.raster.txt")).unwrap();
    assert_eq!(raster.lines().count(), 11);
    assert!(raster.lines().all(|l| l == "0"));

    let o = bms(&["simulate", "--net", s(&net), "--t-max", "0", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(data_rows(&fs::read_to_string(&out).unwrap()).len(), 1);
}

#[test]
fn simulate_noise_is_seeded() {
    let dir = TempDir::new().unwrap();
    let net = write_net(&dir, "dead.json", DEAD);
    let run = |seed: &str| {
        let o = bms(&["simulate", "--net", s(&net), "--t-max", "50", "--noise", "0.1", "--seed", seed, "--v0", "random"]);
        assert_eq!(o.status.code(), Some(0));
        stdout(&o)
    };
    assert_eq!(run("4"), run("4"));
    assert_ne!(run("4"), run("5"));
}

#[test]
fn input_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let bad = write_net(
        &dir,
        "bad.json",
        r#"{"n":2,"gamma":0.5,"theta":1.0,"weights":[[0,0],[0,0]],"i_ext":[0,0,0]}"#,
    );
    assert_eq!(bms(&["simulate", "--net", s(&bad)]).status.code(), Some(2));
    let broken = write_net(&dir, "broken.json", "{\"n\": 2,");
    assert_eq!(bms(&["simulate", "--net", s(&broken)]).status.code(), Some(2));
    let missing = dir.path().join("nope.json");
    assert_eq!(bms(&["orbit", "--net", s(&missing)]).status.code(), Some(2));
    let net = write_net(&dir, "dead.json", DEAD);
    assert_eq!(bms(&["simulate", "--net", s(&net), "--v0", "1,2"]).status.code(), Some(2));
    assert_eq!(bms(&["sweep", "--gammas", "0:1:x"]).status.code(), Some(2));
    assert_eq!(bms(&["sweep", "--gammas", "1.5"]).status.code(), Some(2));
    assert_eq!(bms(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn graph_counts_and_capability_limit() {
    let dir = TempDir::new().unwrap();
    let zero_leak = write_net(
        &dir,
        "g0.json",
        r#"{"n":3,"gamma":0.0,"theta":1.0,"weights":[[0.5,1.2,-0.3],[0.9,0.0,0.4],[0.2,0.8,0.7]],"i_ext":[0.3,0.1,0.2]}"#,
    );
    let o = bms(&["graph", "--net", s(&zero_leak)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("conditional=0"), "{}", stdout(&o));

    let silent = write_net(
        &dir,
        "silent.json",
        r#"{"n":2,"gamma":0.5,"theta":1.0,"weights":[[0,0],[0,0]],"i_ext":[0,0]}"#,
    );
    let out = dir.path().join("g.json");
    let o = bms(&["graph", "--net", s(&silent), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let g: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(g["n"], 2);
    let edges = g["edges"].as_array().unwrap();
    assert_eq!(edges.len(), 4);
    assert!(edges.iter().all(|e| e["to"] == "00" && e["kind"] == "unconditional"));

    let n = 17;
    let big = format!(
        r#"{{"n":{n},"gamma":0.5,"theta":1.0,"weights":{},"i_ext":{}}}"#,
        serde_json::to_string(&vec![vec![0.0; n]; n]).unwrap(),
        serde_json::to_string(&vec![0.0; n]).unwrap()
    );
    let big = write_net(&dir, "big.json", &big);
    assert_eq!(bms(&["graph", "--net", s(&big)]).status.code(), Some(3));
}

#[test]
fn orbit_summaries() {
    let dir = TempDir::new().unwrap();
    let dead = write_net(&dir, "dead.json", DEAD);
    let out = dir.path().join("o.json");
    let o = bms(&["orbit", "--net", s(&dead), "--inits", "20", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "regime=NeuralDeath orbits=1 dAS=1 undetermined=0");
    let file: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(file["regime"], "NeuralDeath");
    assert_eq!(file["config"]["inits"], "20");

    let ghost = write_net(&dir, "ghost.json", GHOST);
    let o = bms(&["orbit", "--net", s(&ghost), "--inits", "8", "--max-transient", "5000", "--max-period", "100"]);
    assert_eq!(o.status.code(), Some(0));
    let line = stdout(&o);
    assert!(line.contains("undetermined=8"), "{line}");
    assert!(line.starts_with("regime=Undetermined(5200)"), "{line}");

    let full = write_net(&dir, "full.json", FULL);
    let o = bms(&["orbit", "--net", s(&full), "--inits", "10"]);
    assert!(stdout(&o).starts_with("regime=FullActivity orbits=1 "), "{}", stdout(&o));
}

#[test]
fn sweep_is_reproducible_and_seed_sensitive() {
    let dir = TempDir::new().unwrap();
    let run = |seed: &str, name: &str, threads: &str| {
        let out = dir.path().join(name);
        let o = bms(&[
            "sweep", "--n", "20", "--gammas", "0:0.9:10", "--cs", "0.3:3:10", "--networks", "3", "--inits", "2",
            "--max-transient", "20000", "--max-period", "2000", "--seed", seed, "--threads", threads, "--out",
            s(&out),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        (
            fs::read(&out).unwrap(),
            fs::read(dir.path().join(name.replace(".csv", ".heatmap.csv"))).unwrap(),
        )
    };
    let (a, ha) = run("3", "a.csv", "1");
    let (b, hb) = run("3", "b.csv", "2");
    assert_eq!(a, b);
    assert_eq!(ha, hb);
    let text = String::from_utf8(a.clone()).unwrap();
    assert_eq!(data_rows(&text).len(), 100);
    let heat = String::from_utf8(ha).unwrap();
    assert_eq!(data_rows(&heat).len(), 10);
    let (c, _) = run("4", "c.csv", "1");
    assert_ne!(a, c);

    let out = dir.path().join("one.csv");
    let o = bms(&["sweep", "--gammas", "0.5", "--cs", "0", "--n", "10", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(&out).unwrap();
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 1);
    let fields: Vec<&str> = rows[0].split(',').collect();
    assert_eq!(fields[5], "1.0");
}

#[test]
fn lyap_on_quiescent_and_stable_networks() {
    let dir = TempDir::new().unwrap();
    let dead = write_net(&dir, "dead.json", DEAD);
    let o = bms(&["lyap", "--net", s(&dead), "--inits", "3", "--horizon", "500"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for row in data_rows(&text) {
        let lambda: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
        assert!((lambda - (-0.6931471805599453)).abs() < 1e-9, "{lambda}");
    }

    let o = bms(&[
        "lyap", "--gammas", "0.5", "--cs", "0,1", "--n", "8", "--networks", "2", "--inits", "2", "--horizon", "300",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l == "gamma,c,samples,mean_lambda,superstable_fraction"), "{text}");
    assert_eq!(data_rows(&text).len(), 2);
}
