use std::path::Path;
use std::process::{Command, Output};

fn spikesolve(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spikesolve"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = spikesolve(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn generate_is_deterministic() {
    let a = ok(&["generate", "--J", "5", "--M", "128", "--seed", "42"]).stdout;
    let b = ok(&["generate", "--J", "5", "--M", "128", "--seed", "42"]).stdout;
    assert_eq!(a, b);
    let c = ok(&["generate", "--J", "5", "--M", "128", "--seed", "43"]).stdout;
    assert_ne!(a, c);
}

#[test]
fn noiseless_pipeline_recovers_measure() {
    let dir = tempfile::tempdir().unwrap();
    let mu = dir.path().join("mu.json");
    let obs = dir.path().join("obs.json");
    let sol = dir.path().join("sol.json");
    ok(&["generate", "--J", "4", "--M", "128", "--seed", "7", "--out", p(&mu)]);
    ok(&["observe", "--measure", p(&mu), "--M", "128", "--noise", "none", "--out", p(&obs)]);
    assert_eq!(json(&obs)["epsilon"], 0.0);
    ok(&["solve", "--obs", p(&obs), "--out", p(&sol)]);

    let truth = json(&mu)["spikes"].as_array().unwrap().clone();
    let found = json(&sol)["measure"]["spikes"].as_array().unwrap().clone();
    assert_eq!(found.len(), truth.len());
    for t in &truth {
        let x = t["pos"].as_f64().unwrap();
        let best = found
            .iter()
            .min_by(|a, b| {
                let da = (a["pos"].as_f64().unwrap() - x).abs();
                let db = (b["pos"].as_f64().unwrap() - x).abs();
                da.total_cmp(&db)
            })
            .unwrap();
        let d = (best["pos"].as_f64().unwrap() - x).abs();
        assert!(d.min(1.0 - d) < 1e-4);
        let dre = best["re"].as_f64().unwrap() - t["re"].as_f64().unwrap();
        let dim = best["im"].as_f64().unwrap() - t["im"].as_f64().unwrap();
        assert!(dre.hypot(dim) < 1e-3);
    }

    let report = dir.path().join("err.csv");
    ok(&[
        "analyze", "--recovered", p(&sol), "--truth", p(&mu), "--M", "128", "--epsilon", "1e-8", "--kernel", "bump",
        "--N", "128,256", "--out", p(&report),
    ]);
    let text = std::fs::read_to_string(&report).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.starts_with("M,N,trial,epsilon"));
}

#[test]
fn certify_single_spike_is_g() {
    let dir = tempfile::tempdir().unwrap();
    let mu = dir.path().join("mu.json");
    ok(&["generate", "--J", "1", "--M", "128", "--seed", "1", "--out", p(&mu)]);
    let out = ok(&["certify", "--measure", p(&mu), "--M", "128", "--grid", "16384"]).stdout;
    let v: serde_json::Value = serde_json::from_slice(&out).unwrap();
    assert!((v["sup_norm"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!(v["interpolation"]["pass"].as_bool().unwrap());
    assert!(v["beta"][0][0].as_f64().unwrap().abs() < 1e-12);
}

#[test]
fn sweep_writes_replayable_csv() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    ok(&["sweep", "--suite", "noise-tail", "--trials", "2000", "--seed", "9", "--out", p(a.path())]);
    ok(&["sweep", "--suite", "noise-tail", "--trials", "2000", "--seed", "9", "--out", p(b.path())]);
    for name in ["noise-tail.csv", "noise-tail.checks.csv"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
    let text = std::fs::read_to_string(a.path().join("noise-tail.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("seed,config_hash,M,gamma"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3);
    let hash = rows[0].split(',').nth(1).unwrap();
    assert_eq!(hash.len(), 16);
    assert!(rows.iter().all(|r| r.starts_with(&format!("9,{hash},"))));
}

#[test]
fn exit_codes_separate_input_and_numerical_failures() {
    let missing = spikesolve(&["solve", "--obs", "/nonexistent/obs.json"]);
    assert_eq!(missing.status.code(), Some(2));
    let bad_flag = spikesolve(&["generate", "--J", "x", "--M", "8"]);
    assert_eq!(bad_flag.status.code(), Some(2));
    let packing = spikesolve(&["generate", "--J", "10", "--M", "8"]);
    assert_eq!(packing.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let mu = dir.path().join("mu.json");
    let obs = dir.path().join("obs.json");
    ok(&["generate", "--J", "3", "--M", "32", "--seed", "2", "--out", p(&mu)]);
    ok(&["observe", "--measure", p(&mu), "--M", "32", "--sigma", "0.05", "--out", p(&obs)]);
    let capped = spikesolve(&["solve", "--obs", p(&obs), "--tau", "0.01", "--max-iterations", "1"]);
    assert_eq!(capped.status.code(), Some(3));
}
