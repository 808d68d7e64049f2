use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_snoidal"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn snoidal")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn wave_writes_profile_and_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["wave", "--L", "3.14159", "--c", "0.95", "--N", "256", "--out", "w"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("w.profile.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,h,dh,d2h"));
    assert_eq!(lines.count(), 256);
    let report = json(&dir.path().join("w.wave.json"));
    assert!(report["ode_residual"].as_f64().unwrap() <= 1e-10);
    assert_eq!(report["config"]["N"], 256);
}

#[test]
fn inadmissible_parameters_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["wave", "--L", "3.14159", "--c", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("L²/4π²"));
    let out = run(dir.path(), &["wave", "--L", "7.0", "--c", "0.1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(dir.path(), &["wave", "--L", "3.14159", "--c", "0.95", "--N", "17"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn spectrum_report_is_consistent_and_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    for prefix in ["a", "b"] {
        let out = run(dir.path(), &["spectrum", "--L", "3.14159", "--c", "0.95", "--out", prefix]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = fs::read(dir.path().join("a.spectrum.json")).unwrap();
    let b = fs::read(dir.path().join("b.spectrum.json")).unwrap();
    let strip = |bytes: &[u8]| String::from_utf8_lossy(bytes).replace("\"out\": \"b\"", "\"out\": \"a\"");
    assert_eq!(strip(&a), strip(&b));
    assert_eq!(
        fs::read(dir.path().join("a.eigenvalues.csv")).unwrap(),
        fs::read(dir.path().join("b.eigenvalues.csv")).unwrap()
    );

    let r = &json(&dir.path().join("a.spectrum.json"))["analysis"];
    assert_eq!(r["lblock"]["n"], 1);
    assert_eq!(r["lblock_constrained"]["n"], 0);
    let closed = r["d1_closed"].as_f64().unwrap();
    let numeric = r["d1_numeric"]["value"].as_f64().unwrap();
    assert!((closed - numeric).abs() <= 1e-6 * closed.abs());
    assert!(r["d2"].as_f64().unwrap() < 0.0);
}

#[test]
fn evolve_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str, seed: &'static str| {
        ["evolve", "--L", "3.14159", "--c", "0.95", "--T", "2", "--eps", "1e-3", "--seed", seed, "--out", out]
    };
    for (out, seed) in [("x", "9"), ("y", "9"), ("z", "10")] {
        assert!(run(dir.path(), &args(out, seed)).status.success());
    }
    let read = |p: &str| fs::read(dir.path().join(p)).unwrap();
    assert_eq!(read("x.trace.csv"), read("y.trace.csv"));
    assert_ne!(read("x.trace.csv"), read("z.trace.csv"));
    let meta = json(&dir.path().join("x.meta.json"));
    assert_eq!(meta["config"]["seed"], 9);
    assert_eq!(meta["rng"], "ChaCha8");
}

#[test]
fn unperturbed_evolution_stays_on_the_orbit() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["evolve", "--L", "3.14159", "--c", "0.95", "--T", "10", "--eps", "0", "--out", "e"]);
    assert!(out.status.success());
    let meta = json(&dir.path().join("e.meta.json"));
    assert!(meta["final_orbit_distance"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn stability_reports_both_ratios() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["stability", "--L", "3.14159", "--c", "0.95", "--T", "10", "--eps", "1e-3", "--out", "s"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&dir.path().join("s.stability.json"));
    assert_eq!(r["runs"].as_array().unwrap().len(), 2);
    assert!(r["ratio_change"].as_f64().unwrap() < 2.0);
    assert!(dir.path().join("s.eps1.trace.csv").exists());
    assert!(dir.path().join("s.eps2.trace.csv").exists());
}

#[test]
fn blow_up_exits_with_four() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["evolve", "--L", "3.14159", "--c", "0.95", "--T", "1", "--eps", "1e4"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("blow-up time: 0.001"));
}

#[test]
fn sweep_over_twenty_speeds() {
    let dir = tempfile::tempdir().unwrap();
    let speeds: Vec<String> = (0..20)
        .map(|i| {
            let l = std::f64::consts::PI;
            let f = 0.2 + 0.6 * i as f64 / 19.0;
            (1.0 - f * (l / (2.0 * std::f64::consts::PI)).powi(2)).sqrt().to_string()
        })
        .collect();
    let config = format!(
        "command = \"spectrum\"\nL = 3.141592653589793\nc = [{}]\nN = 128\n",
        speeds.join(", ")
    );
    fs::write(dir.path().join("sweep.toml"), config).unwrap();
    let out = run(dir.path(), &["sweep", "--config", "sweep.toml", "--out", "sw", "--workers", "4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = json(&dir.path().join("sw.summary.json"));
    assert_eq!(summary.as_array().unwrap().len(), 20);
    let signatures: Vec<Vec<Value>> = (0..20)
        .map(|i| {
            let r = json(&dir.path().join(format!("sw_{i:03}.spectrum.json")));
            let a = &r["analysis"];
            ["l1", "lblock", "l1_constrained", "lblock_constrained"]
                .iter()
                .flat_map(|k| [a[k]["n"].clone(), a[k]["z"].clone()])
                .collect()
        })
        .collect();
    assert!(signatures.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn malformed_sweep_config_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "command = \"spectrum\"\nspeed = 0.9\n").unwrap();
    let out = run(dir.path(), &["sweep", "--config", "bad.toml"]);
    assert_eq!(out.status.code(), Some(2));
}
