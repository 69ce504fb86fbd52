use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bethe-gibbs"))
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin().args(args).current_dir(dir).output().unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn write_spec(dir: &Path, text: &str) -> String {
    let path = dir.join("spec.json");
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn empty_task_list_gives_empty_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(
        dir.path(),
        r#"{"name":"nothing","tree":{"k":4,"depth":2},"tasks":[],"output_dir":"out"}"#,
    );
    let out = run(&["run", &spec], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = read_json(&dir.path().join("out/manifest.json"));
    assert_eq!(manifest["name"], "nothing");
    assert_eq!(manifest["tasks"].as_array().unwrap().len(), 0);
    assert_eq!(manifest["spec_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn unknown_kind_in_spec_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(
        dir.path(),
        r#"{"name":"bad","tree":{"k":4,"depth":2},"tasks":[{"op":"gen","dsets":[{"kind":"hexagon"}]}],"output_dir":"out"}"#,
    );
    let out = run(&["run", &spec], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("tasks[0].dsets[0].kind"), "{err}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn unknown_kind_on_command_line_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["gen", "--kind", "hexagon", "--k", "4", "--depth", "2"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kind"));
}

#[test]
fn unknown_spec_field_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(
        dir.path(),
        r#"{"name":"bad","tree":{"k":4,"depth":2},"tasks":[{"op":"gen","temperature":3}],"output_dir":"out"}"#,
    );
    let out = run(&["run", &spec], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("temperature"));
}

#[test]
fn reruns_are_byte_identical() {
    let spec_text = r#"{
        "name": "rerun",
        "tree": {"k": 3, "depth": 3},
        "dsets": [{"kind": "dimer", "seed": 2}, {"kind": "random", "seed": 5, "d_cap": 1, "density": 0.4}],
        "betas": [0.7, 2.0],
        "output_dir": "out",
        "tasks": [
            {"op": "gen"},
            {"op": "marginals"},
            {"op": "freeenergy"},
            {"op": "mc", "sweeps": 3000, "seed": 9, "fraction": 0.0},
            {"op": "peierls", "m_max": 3, "count": 20, "seed": 1},
            {"op": "render"}
        ]
    }"#;
    let snapshot = |dir: &Path| {
        let spec = write_spec(dir, spec_text);
        let out = run(&["run", &spec], dir);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let mut files: Vec<_> = fs::read_dir(dir.join("out"))
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name(), fs::read(e.path()).unwrap())
            })
            .collect();
        files.sort();
        files
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = snapshot(a.path());
    assert!(first.len() > 6);
    assert_eq!(first, snapshot(b.path()));
}

#[test]
fn manifest_keeps_task_order_and_hashes() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(
        dir.path(),
        r#"{"name":"order","tree":{"k":4,"depth":3},"dsets":[{"kind":"dimer"}],"betas":[1.0],"output_dir":"out",
            "tasks":[{"op":"freeenergy","label":"a"},{"op":"ground","label":"b"},{"op":"gen","label":"c"}]}"#,
    );
    assert_eq!(run(&["run", &spec], dir.path()).status.code(), Some(0));
    let manifest = read_json(&dir.path().join("out/manifest.json"));
    let tasks = manifest["tasks"].as_array().unwrap();
    let labels: Vec<_> = tasks.iter().map(|t| t["label"].as_str().unwrap()).collect();
    assert_eq!(labels, ["a", "b", "c"]);
    for task in tasks {
        for file in task["outputs"].as_array().unwrap() {
            let bytes = fs::read(dir.path().join("out").join(file["path"].as_str().unwrap())).unwrap();
            assert_eq!(file["sha256"].as_str().unwrap(), bethe_gibbs_cli::sha256_hex(&bytes));
        }
    }
}

#[test]
fn failing_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(
        dir.path(),
        r#"{"name":"order","tree":{"k":4,"depth":3},"betas":[2.0],"output_dir":"out",
            "tasks":[{"op":"free-energy-order","dsets":[{"kind":"empty"},{"kind":"dimer"}],"count":0}]}"#,
    );
    let out = run(&["run", &spec], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let manifest = read_json(&dir.path().join("out/manifest.json"));
    assert_eq!(manifest["tasks"][0]["status"], "failed");
}

#[test]
fn gen_output_loads_back_and_round_trips_through_ground() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = run(
        &[
            "gen",
            "--kind",
            "monomer-dimer",
            "--k",
            "4",
            "--depth",
            "4",
            "--seed",
            "3",
            "-o",
            "d.json",
        ],
        d,
    );
    assert_eq!(out.status.code(), Some(0));
    let file = read_json(&d.join("d.json"));
    assert_eq!(file["kind"], "monomer-dimer");
    assert_eq!(file["k"], 4);
    assert!(file["provenance"]["spec_hash"].is_string());
    assert_eq!(file["provenance"]["operation"], "dsets::generate");

    assert_eq!(run(&["ground", "--dset", "d.json", "-o", "g.json"], d).status.code(), Some(0));
    let out = run(&["contours", "--config", "g.json", "--dset", "d.json"], d);
    assert_eq!(out.status.code(), Some(0));
    let contours: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(contours["contours"].as_array().unwrap().len(), 0);

    let tree = bethe_gibbs::tree::build_ball(bethe_gibbs::tree::TreeSpec::new(4, 4)).unwrap();
    let loaded: bethe_gibbs::io::EdgeSetFile = serde_json::from_value(file).unwrap();
    let set = loaded.to_set(&tree).unwrap();
    let regenerated = bethe_gibbs::dsets::DRecipe::new(bethe_gibbs::CoverKind::MonomerDimer, 3)
        .build(&tree)
        .unwrap();
    assert!(set.edges().eq(regenerated.edges()));
}

#[test]
fn loading_into_a_deeper_ball_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(
        run(&["gen", "--kind", "dimer", "--k", "4", "--depth", "3", "-o", "d.json"], d)
            .status
            .code(),
        Some(0)
    );
    let out = run(&["marginals", "--dset", "d.json", "--beta", "1", "--depth", "5"], d);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["marginals", "--dset", "d.json", "--beta", "1", "--depth", "2"], d);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn render_of_empty_set_is_all_red() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(
        run(&["gen", "--kind", "empty", "--k", "3", "--depth", "3", "-o", "e.json"], d)
            .status
            .code(),
        Some(0)
    );
    let out = run(&["render", "--dset", "e.json"], d);
    assert_eq!(out.status.code(), Some(0));
    let dot = String::from_utf8(out.stdout).unwrap();
    assert!(dot.starts_with("// bethe-gibbs"));
    assert!(dot.contains("graph cayley_k3_r3"));
    assert!(!dot.contains("black"));
    assert!(!dot.contains("blue"));
    assert!(!dot.contains("green"));
    assert_eq!(dot.matches("fillcolor=red").count(), 1 + 4 + 12 + 36);
}

#[test]
fn render_with_highlight_has_both_edge_classes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(
        run(&["gen", "--kind", "dimer", "--k", "4", "--depth", "4", "-o", "d.json"], d)
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        run(&["gen", "--kind", "secondary", "--k", "4", "--depth", "4", "-o", "s.json"], d)
            .status
            .code(),
        Some(0)
    );
    let out = run(&["render", "--dset", "d.json", "--highlight", "s.json"], d);
    let dot = String::from_utf8(out.stdout).unwrap();
    assert!(dot.contains("blue"));
    assert!(dot.contains("green"));
    assert!(dot.contains("black"));
}

#[test]
fn vertex_guard_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["gen", "--kind", "dimer", "--k", "4", "--depth", "5"])
        .env("BETHE_GIBBS_MAX_VERTICES", "100")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_ne!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("100"));
    let out = bin()
        .args(["gen", "--kind", "dimer", "--k", "4", "--depth", "2"])
        .env("BETHE_GIBBS_MAX_VERTICES", "100")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn sweep_config_covers_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("sweep.json"),
        r#"{"k":3,"depths":[2,3],"betas":[0.5,2.0],"dsets":["dimer","empty"],"seeds":[0,1]}"#,
    )
    .unwrap();
    let out = run(&["scan", "--config", "sweep.json", "-o", "s.json"], d);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let records = read_json(&d.join("s.json"))["records"].as_array().unwrap().clone();
    assert_eq!(records.len(), 2 * 2 * 2 * 2);
    for r in &records {
        let a = r["min_interior_agreement"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&a));
    }
}

#[test]
fn bundled_acceptance_spec_validates() {
    let text = fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../experiments/acceptance.json")).unwrap();
    let (spec, warnings) = bethe_gibbs_cli::experiment::load_spec(&text).unwrap();
    assert_eq!(spec.name, "acceptance");
    assert!(spec.tasks.len() >= 15);
    assert!(warnings.iter().all(|w| !w.contains("census")));
}
