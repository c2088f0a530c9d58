use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_mechent");

/// The canonical configuration on coarser prediction grids.
fn base_config() -> String {
    let src = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/tableS1.toml");
    fs::read_to_string(src)
        .unwrap()
        .lines()
        .map(|l| match l {
            "freq_points = 2001" => "freq_points = 201",
            "theta_points = 721" => "theta_points = 91",
            "surface_freq_points = 201" => "surface_freq_points = 21",
            "surface_theta_points = 91" => "surface_theta_points = 11",
            other => other,
        })
        .collect::<Vec<_>>()
        .join("\n")
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new(config: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("run.toml"), config).unwrap();
        Self { dir }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    fn out(&self) -> PathBuf {
        self.path("out")
    }

    fn run(&self, cmd: &str, extra: &[&str]) -> Output {
        Command::new(BIN)
            .arg(cmd)
            .arg("--config")
            .arg(self.path("run.toml"))
            .arg("--out-dir")
            .arg(self.out())
            .args(["--duration", "2"])
            .args(if extra.contains(&"--rate") {
                &[][..]
            } else {
                &["--rate", "16384"][..]
            })
            .args(extra)
            .output()
            .unwrap()
    }

    fn ok(&self, cmd: &str, extra: &[&str]) {
        let o = self.run(cmd, extra);
        assert!(
            o.status.success(),
            "{cmd}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }

    fn json(&self, name: &str) -> Value {
        serde_json::from_str(&fs::read_to_string(self.out().join(name)).unwrap()).unwrap()
    }
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn full_workflow_is_reproducible() {
    let ws = Workspace::new(&base_config());
    let steps = ["predict", "simulate", "analyze", "fit", "calibrate"];
    for s in steps {
        ws.ok(s, &[]);
    }
    let first = snapshot(&ws.out());
    for name in [
        "metrics.json",
        "manifest.json",
        "spectra.csv",
        "tomography.json",
        "fit_spectra.json",
        "calibration.json",
    ] {
        assert!(first.contains_key(name), "{name} missing");
    }
    for s in steps {
        ws.ok(s, &[]);
    }
    let second = snapshot(&ws.out());
    assert_eq!(
        first.keys().collect::<Vec<_>>(),
        second.keys().collect::<Vec<_>>()
    );
    for (name, bytes) in &first {
        assert!(bytes == &second[name], "{name} differs between runs");
    }

    let m = ws.json("metrics.json");
    assert_eq!(m["checks_pass"], Value::Bool(true));
    let fit = ws.json("fit_spectra.json");
    assert_eq!(fit["report"]["converged"], Value::Bool(true));
}

#[test]
fn seed_changes_records_and_hashes() {
    let ws = Workspace::new(&base_config());
    ws.ok("simulate", &["--seed", "5"]);
    let a = ws.json("manifest.json");
    ws.ok("simulate", &["--seed", "6"]);
    let b = ws.json("manifest.json");
    let hashes = |m: &Value| -> Vec<String> {
        m["entries"]
            .as_array()
            .unwrap()
            .iter()
            .map(|e| e["sha256"].as_str().unwrap().to_string())
            .collect()
    };
    let (ha, hb) = (hashes(&a), hashes(&b));
    assert_eq!(ha.len(), 6);
    assert!(ha.iter().zip(&hb).all(|(x, y)| x != y));
    // Every run has its own seed.
    let seeds: std::collections::BTreeSet<u64> = a["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["seed"].as_u64().unwrap())
        .collect();
    assert_eq!(seeds.len(), 6);
}

#[test]
fn vacuum_records_are_separable() {
    let cfg = base_config().replace("seed = 1", "seed = 1\nvacuum = true");
    let ws = Workspace::new(&cfg);
    ws.ok("simulate", &[]);
    ws.ok("analyze", &[]);
    let s = ws.json("summary.json");
    assert_eq!(s["vacuum"], Value::Bool(true));
    let d = &s["dgcz"]["inseparability"];
    let (v, e) = (
        d["value"].as_f64().unwrap(),
        d["std_error"].as_f64().unwrap(),
    );
    assert!((v - 1.0).abs() < 4.0 * e, "I = {v} ± {e}");
    let t = ws.json("tomography.json");
    assert_eq!(t["comparison"]["reference"], "vacuum");
    assert!(t["comparison"]["max_abs_z"].as_f64().unwrap() < 4.5);
}

#[test]
fn missing_run_is_a_data_error() {
    let ws = Workspace::new(&base_config());
    ws.ok("simulate", &[]);
    fs::remove_file(ws.out().join("run_quarter_quarter.rec")).unwrap();
    let o = ws.run("analyze", &[]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("missing run"), "{}", stderr(&o));
}

#[test]
fn corrupted_record_fails_checksum() {
    let ws = Workspace::new(&base_config());
    ws.ok("simulate", &[]);
    let f = ws.out().join("run_zero_half.rec");
    let mut bytes = fs::read(&f).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 0x01;
    fs::write(&f, bytes).unwrap();
    let o = ws.run("analyze", &[]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("checksum"), "{}", stderr(&o));
}

#[test]
fn mixed_sample_rates_are_rejected() {
    let ws = Workspace::new(&base_config());
    ws.ok("simulate", &[]);
    let other = Workspace::new(&base_config());
    other.ok("simulate", &["--rate", "8192"]);
    let src = other.out().join("shot.rec");
    fs::copy(&src, ws.out().join("shot.rec")).unwrap();
    // Keep the manifest consistent so that only the rates disagree.
    let mut m = ws.json("manifest.json");
    let hash = other.json("manifest.json")["entries"]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["file"] == "shot.rec")
        .unwrap()["sha256"]
        .clone();
    for e in m["entries"].as_array_mut().unwrap() {
        if e["file"] == "shot.rec" {
            e["sha256"] = hash.clone();
        }
    }
    fs::write(
        ws.out().join("manifest.json"),
        serde_json::to_string_pretty(&m).unwrap(),
    )
    .unwrap();
    let o = ws.run("analyze", &[]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("sample rates differ"), "{}", stderr(&o));
}

#[test]
fn configuration_errors_exit_with_2() {
    let unknown = Workspace::new(&base_config().replace("[output]", "[output]\ncolour = true"));
    let o = unknown.run("predict", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line"), "{}", stderr(&o));

    let bad = Workspace::new(&base_config().replace("eta = 0.60", "eta = 1.60"));
    assert_eq!(bad.run("predict", &[]).status.code(), Some(2));

    let o = Command::new(BIN)
        .args(["predict", "--config", "/nonexistent/run.toml"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn degenerate_calibration_exits_with_4() {
    let cfg = base_config().replace("[calibrate]", "[calibrate]\ndata = \"flat.csv\"");
    let ws = Workspace::new(&cfg);
    let rows: String = (0..6)
        .map(|i| format!("0.5,{},0.0003\n", 1e-3 + 1e-5 * i as f64))
        .collect();
    fs::write(
        ws.path("flat.csv"),
        format!("v_dc,deviation,deviation_err\n{rows}"),
    )
    .unwrap();
    let o = ws.run("calibrate", &[]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn uncoupled_system_is_separable() {
    let cfg: String = base_config()
        .lines()
        .map(|l| {
            if l.starts_with("g_hz") {
                "g_hz = 0.0"
            } else {
                l
            }
        })
        .collect::<Vec<_>>()
        .join("\n");
    let ws = Workspace::new(&cfg);
    ws.ok("predict", &[]);
    let m = ws.json("metrics.json");
    for engine in ["full", "toy"] {
        let i = m[engine]["min_inseparability"].as_f64().unwrap();
        assert!((i - 1.0).abs() < 1e-12, "{engine} I = {i}");
        assert_eq!(m[engine]["log_negativity"].as_f64().unwrap(), 0.0);
    }
}

#[test]
fn json_tables_feed_the_fit() {
    let ws = Workspace::new(&base_config());
    ws.ok("simulate", &["--format", "json"]);
    ws.ok("analyze", &["--format", "json"]);
    assert!(ws.out().join("spectra.json").exists());
    assert!(!ws.out().join("spectra.csv").exists());
    ws.ok("fit", &["--format", "json"]);
    let fit = ws.json("fit_spectra.json");
    assert!(fit["source"].as_str().unwrap().ends_with("spectra.json"));
}
