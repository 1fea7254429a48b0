use std::fs;
use std::process::Command;

fn bipmap(args: &[&str]) -> std::process::Output {
    let out = Command::new(env!("CARGO_BIN_EXE_bipmap")).args(args).output().unwrap();
    assert!(out.status.success() || args[0] == "weights", "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

#[test]
fn weights_check_quadrangulation() {
    let dir = tempfile::tempdir().unwrap();
    let law = dir.path().join("quadrangulation.json");
    fs::write(&law, r#"{"kind": "finite", "weights": {"2": 0.08333333333333333}}"#).unwrap();
    let out = bipmap(&["weights", "check", law.to_str().unwrap()]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["report"]["classification"], "critical");
    assert!((v["report"]["z"].as_f64().unwrap() - 2.0).abs() < 1e-10);
    assert!((v["offspring"]["mean"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn weights_check_rejects_subcritical() {
    let dir = tempfile::tempdir().unwrap();
    let law = dir.path().join("sub.json");
    fs::write(&law, r#"{"kind": "finite", "weights": {"2": 0.05}}"#).unwrap();
    let out = bipmap(&["weights", "check", law.to_str().unwrap()]);
    assert!(!out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["report"]["classification"], "subcritical-admissible");
}

#[test]
fn sample_map_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    for p in [&a, &b] {
        bipmap(&["sample-map", "--cond", "vertices", "--n", "100", "--reps", "3", "--seed", "7", "--out", p.to_str().unwrap()]);
    }
    let (x, y) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(x, y);
    let text = String::from_utf8(x).unwrap();
    assert!(text.lines().next().unwrap().contains("bipmap.map"));
    assert_eq!(text.lines().count(), 4);
    let c = dir.path().join("c.jsonl");
    bipmap(&["sample-map", "--cond", "vertices", "--n", "100", "--reps", "3", "--seed", "8", "--out", c.to_str().unwrap()]);
    assert_ne!(fs::read(&c).unwrap(), fs::read(&a).unwrap());
}

#[test]
fn stats_and_export_on_sampled_maps() {
    let dir = tempfile::tempdir().unwrap();
    let maps = dir.path().join("m.jsonl");
    bipmap(&["sample-map", "--cond", "faces", "--n", "40", "--reps", "2", "--seed", "1", "--out", maps.to_str().unwrap()]);
    let csv = dir.path().join("s.csv");
    bipmap(&["stats", "--in", maps.to_str().unwrap(), "--out", csv.to_str().unwrap()]);
    let text = fs::read_to_string(&csv).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 3);
    for row in &rows[1..] {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols[2], "faces");
        assert_eq!(cols[6], "40");
    }
    let edges = dir.path().join("e.txt");
    bipmap(&["export", "--in", maps.to_str().unwrap(), "--to", "edges", "--out", edges.to_str().unwrap()]);
    assert!(fs::read_to_string(&edges).unwrap().starts_with("# vertices"));
}

#[test]
fn tree_formats_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("t.json");
    let bin = dir.path().join("t.bin");
    let back = dir.path().join("back.json");
    bipmap(&["sample-tree", "--cond", "edges", "--n", "51", "--seed", "3", "--out", json.to_str().unwrap()]);
    bipmap(&["export", "--in", json.to_str().unwrap(), "--to", "tree-bin", "--out", bin.to_str().unwrap()]);
    bipmap(&["export", "--in", bin.to_str().unwrap(), "--to", "tree-json", "--out", back.to_str().unwrap()]);
    assert_eq!(fs::read(&json).unwrap(), fs::read(&back).unwrap());
}

#[test]
fn scaling_sweep_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    bipmap(&["scaling-sweep", "--cond", "vertices", "--ns", "50,100", "--reps", "5", "--seed", "2", "--out", csv.to_str().unwrap()]);
    let text = fs::read_to_string(&csv).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    assert!(header.contains(&"slope"));
    assert_eq!(text.lines().count(), 11);
}

#[test]
fn continuum_reference_csv() {
    let dir = tempfile::tempdir().unwrap();
    for alpha in ["2", "1.5"] {
        let csv = dir.path().join(format!("c{alpha}.csv"));
        bipmap(&["continuum-ref", "--alpha", alpha, "--grid", "256", "--jumps", "10", "--seed", "4", "--out", csv.to_str().unwrap()]);
        let text = fs::read_to_string(&csv).unwrap();
        assert_eq!(text.lines().next().unwrap(), "t,X,H,L");
        assert_eq!(text.lines().count(), 258);
        assert!(text.lines().nth(1).unwrap().starts_with("0,0,0,0"));
    }
}
