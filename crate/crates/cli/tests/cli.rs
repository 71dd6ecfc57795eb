// Copyright 2026 Spinorbit Contributors
// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_spinorbit");

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("SPINORBIT_OUT")
        .output()
        .expect("spawn spinorbit")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ok(o: &Output) -> String {
    assert!(
        o.status.success(),
        "exit {:?}: {}",
        o.status.code(),
        stderr(o)
    );
    stdout(o)
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Metric `key=value` from a printed summary line.
fn metric(line: &str, key: &str) -> f64 {
    let tag = format!("{key}=");
    line.split_whitespace()
        .find_map(|w| w.strip_prefix(&tag))
        .unwrap_or_else(|| panic!("`{key}` missing from `{line}`"))
        .parse()
        .unwrap()
}

fn schema_registry() -> Vec<Value> {
    fs::read_dir(repo().join("docs/schemas"))
        .unwrap()
        .map(|e| json(&e.unwrap().path()))
        .collect()
}

fn assert_valid(schema_file: &str, doc: &Value) {
    let schemas = schema_registry();
    let pairs = schemas
        .iter()
        .map(|s| (s["$id"].as_str().unwrap().to_owned(), s.clone()));
    let registry = jsonschema::Registry::new()
        .extend(pairs)
        .unwrap()
        .prepare()
        .unwrap();
    let schema = json(&repo().join("docs/schemas").join(schema_file));
    let validator = jsonschema::options()
        .with_registry(&registry)
        .build(&schema)
        .unwrap();
    let errors: Vec<String> = validator.iter_errors(doc).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{schema_file}: {errors:?}");
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn unknown_scenario_lists_catalog() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &["scenario", "teleport"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    for name in ["entanglement", "hom-scan", "double-transfer", "erasure"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn unwritable_output_is_io_error() {
    let dir = TempDir::new().unwrap();
    let blocker = write(dir.path(), "file", "");
    let o = run(&blocker.join("sub"), &["scenario", "entanglement"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn bad_noise_key_is_config_error() {
    let dir = TempDir::new().unwrap();
    let o = run(
        dir.path(),
        &["scenario", "entanglement", "--noise", "gain=2"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("gain"));
}

#[test]
fn entanglement_ideal_summary() {
    let dir = TempDir::new().unwrap();
    let line = ok(&run(
        dir.path(),
        &["scenario", "entanglement", "--input", "H", "--ideal"],
    ));
    assert!(line.contains("C=1.000000"), "{line}");
    let doc = json(&dir.path().join("entanglement.result.json"));
    assert_valid("scenario_result.schema.json", &doc);
    assert_eq!(doc["probabilities"].as_array().unwrap().len(), 36);
}

#[test]
fn hom_scan_csv_has_dip_at_zero() {
    let dir = TempDir::new().unwrap();
    ok(&run(
        dir.path(),
        &[
            "scenario", "hom-scan", "--tmin", "-1.5", "--tmax", "1.5", "--steps", "61",
        ],
    ));
    let text = fs::read_to_string(dir.path().join("hom-scan.scan.csv")).unwrap();
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<(f64, f64)> = rows
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].parse().unwrap(), r[1].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 61);
    let (t, c) = rows[30];
    assert_eq!(t, 0.0);
    assert!(c.abs() < 1e-12);
    assert!(rows.iter().all(|&(_, p)| p >= c));
    assert!(dir.path().join("hom-scan.gp").exists());
    assert_valid(
        "scenario_result.schema.json",
        &json(&dir.path().join("hom-scan.result.json")),
    );
}

#[test]
fn double_transfer_preset_hits_calibration() {
    let dir = TempDir::new().unwrap();
    let line = ok(&run(
        dir.path(),
        &["scenario", "double-transfer", "--preset", "paper-2009"],
    ));
    let chi = metric(&line, "chi_II");
    assert!((0.935..=0.965).contains(&chi), "{line}");
}

#[test]
fn every_scenario_output_validates() {
    let dir = TempDir::new().unwrap();
    for name in [
        "entanglement",
        "transferrer-pi-l",
        "transferrer-l-pi",
        "double-transfer",
        "hom-scan",
        "coalescence",
        "erasure",
    ] {
        ok(&run(
            dir.path(),
            &[
                "scenario",
                name,
                "--preset",
                "paper-2009",
                "--shots",
                "200000",
            ],
        ));
        assert_valid(
            "scenario_result.schema.json",
            &json(&dir.path().join(format!("{name}.result.json"))),
        );
    }
}

#[test]
fn csv_format_writes_tables() {
    let dir = TempDir::new().unwrap();
    ok(&run(
        dir.path(),
        &["scenario", "coalescence", "--format", "csv"],
    ));
    let metrics = fs::read_to_string(dir.path().join("coalescence.metrics.csv")).unwrap();
    assert!(metrics.starts_with("metric,value\n"));
    let gamma: f64 = metrics
        .lines()
        .find_map(|l| l.strip_prefix("gamma,"))
        .unwrap()
        .parse()
        .unwrap();
    assert!((gamma - 2.0).abs() < 1e-9);
    assert!(dir.path().join("coalescence.probabilities.csv").exists());
}

#[test]
fn empty_circuit_echoes_state() {
    let dir = TempDir::new().unwrap();
    let circuit = write(dir.path(), "empty.json", "[]");
    let state = repo().join("circuits/photon_H.json");
    let line = ok(&run(
        dir.path(),
        &[
            "circuit",
            circuit.to_str().unwrap(),
            state.to_str().unwrap(),
        ],
    ));
    assert!(line.contains("success_probability=1.000000000000"));
    let out = json(&dir.path().join("empty.state.json"));
    assert_eq!(out, json(&state));
    assert_valid("state.schema.json", &out);
}

#[test]
fn fig1_on_biphoton_has_no_coincidences() {
    let dir = TempDir::new().unwrap();
    let circuit = repo().join("circuits/fig1.json");
    let state = repo().join("circuits/biphoton.json");
    let line = ok(&run(
        dir.path(),
        &[
            "circuit",
            circuit.to_str().unwrap(),
            state.to_str().unwrap(),
            "--measure",
            "D_A=kA,D_B=kB",
        ],
    ));
    let p: f64 = line
        .lines()
        .find_map(|l| l.strip_prefix("P[D_A,D_B]="))
        .and_then(|l| l.split_whitespace().next())
        .unwrap()
        .parse()
        .unwrap();
    assert!(p.abs() < 1e-12, "{line}");
    assert_valid(
        "state.schema.json",
        &json(&dir.path().join("fig1.state.json")),
    );
}

#[test]
fn shipped_circuits_validate() {
    for entry in fs::read_dir(repo().join("circuits")).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_str().unwrap().to_owned();
        let schema = if name.starts_with("biphoton") || name.starts_with("photon") {
            "state.schema.json"
        } else {
            "circuit.schema.json"
        };
        assert_valid(schema, &json(&path));
    }
}

#[test]
fn circuits_command_reproduces_shipped_files() {
    let dir = TempDir::new().unwrap();
    ok(&run(dir.path(), &["circuits"]));
    for entry in fs::read_dir(repo().join("circuits")).unwrap() {
        let path = entry.unwrap().path();
        let fresh = dir.path().join(path.file_name().unwrap());
        assert_eq!(json(&fresh), json(&path), "{}", path.display());
    }
}

#[test]
fn malformed_element_names_index() {
    let dir = TempDir::new().unwrap();
    let circuit = write(
        dir.path(),
        "bad.json",
        r#"[{"element":"block","paths":["a"]},{"element":"mirror","paths":["a"]}]"#,
    );
    let state = repo().join("circuits/photon_H.json");
    let o = run(
        dir.path(),
        &[
            "circuit",
            circuit.to_str().unwrap(),
            state.to_str().unwrap(),
        ],
    );
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("step 1") && err.contains("mirror"), "{err}");
}

#[test]
fn truncated_circuit_reports_line() {
    let dir = TempDir::new().unwrap();
    let circuit = write(dir.path(), "cut.json", "[\n{\"element\": ");
    let state = repo().join("circuits/photon_H.json");
    let o = run(
        dir.path(),
        &[
            "circuit",
            circuit.to_str().unwrap(),
            state.to_str().unwrap(),
        ],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn missing_state_is_io_error() {
    let dir = TempDir::new().unwrap();
    let circuit = write(dir.path(), "empty.json", "[]");
    let o = run(
        dir.path(),
        &[
            "circuit",
            circuit.to_str().unwrap(),
            "/nonexistent/state.json",
        ],
    );
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("/nonexistent/state.json"));
}

#[test]
fn tomo_round_trip_recovers_bell_state() {
    let dir = TempDir::new().unwrap();
    ok(&run(
        dir.path(),
        &["scenario", "entanglement", "--ideal", "--shots", "100000"],
    ));
    let counts = dir.path().join("entanglement.counts.csv");
    let text = ok(&run(
        dir.path(),
        &["tomo", counts.to_str().unwrap(), "--mode", "state2"],
    ));
    assert!(text.contains("converged: true"), "{text}");
    assert!(metric(&text, "fidelity") >= 0.999, "{text}");
    let rho = json(&dir.path().join("entanglement.counts.rho.json"));
    assert_valid("matrix.schema.json", &rho);
    assert_eq!(rho.as_array().unwrap().len(), 4);
    let metrics = json(&dir.path().join("entanglement.counts.metrics.json"));
    assert_valid("metrics.schema.json", &metrics);
    assert_eq!(metrics["converged"], Value::Bool(true));
}

#[test]
fn tomo_identity_process() {
    // Exact counts of an identity channel for inputs H, V, D, L.
    let expect = |input: &str, basis: &str, outcome: &str| -> u64 {
        let same = |a: &str, b: &str| a == b;
        let axis = |s: &str| match s {
            "H" | "V" => "HV",
            "D" | "A" => "DA",
            _ => "LR",
        };
        if axis(input) != basis {
            5000
        } else if same(input, outcome) {
            10000
        } else {
            0
        }
    };
    let mut csv = String::from("setting,pattern,counts,shots,seed\n");
    for input in ["H", "V", "D", "L"] {
        for (basis, outs) in [("HV", ["H", "V"]), ("DA", ["D", "A"]), ("LR", ["L", "R"])] {
            for o in outs {
                csv.push_str(&format!(
                    "in={input}:{basis},{o},{},10000,0\n",
                    expect(input, basis, o)
                ));
            }
        }
    }
    let dir = TempDir::new().unwrap();
    let counts = write(dir.path(), "identity.csv", &csv);
    let text = ok(&run(
        dir.path(),
        &["tomo", counts.to_str().unwrap(), "--mode", "process"],
    ));
    assert!((metric(&text, "chi_II") - 1.0).abs() < 1e-6, "{text}");
    let chi = json(&dir.path().join("identity.chi.json"));
    assert_valid("matrix.schema.json", &chi);
    let chi_ii = chi[0][0][0].as_f64().unwrap();
    assert!((chi_ii - 1.0).abs() < 1e-6);
    assert_valid(
        "metrics.schema.json",
        &json(&dir.path().join("identity.metrics.json")),
    );
}

#[test]
fn tomo_rejects_empty_and_incomplete() {
    let dir = TempDir::new().unwrap();
    let empty = write(dir.path(), "empty.csv", "");
    let o = run(
        dir.path(),
        &["tomo", empty.to_str().unwrap(), "--mode", "state1"],
    );
    assert_eq!(o.status.code(), Some(2));

    let partial = write(
        dir.path(),
        "partial.csv",
        "setting,pattern,counts,shots,seed\nHV,H,10,20,0\nHV,V,10,20,0\n",
    );
    let o = run(
        dir.path(),
        &["tomo", partial.to_str().unwrap(), "--mode", "state1"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing projectors"), "{}", stderr(&o));

    let o = run(
        dir.path(),
        &["tomo", "/nonexistent/counts.csv", "--mode", "state1"],
    );
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn same_seed_gives_identical_files() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for dir in [&a, &b] {
        for name in ["entanglement", "hom-scan", "double-transfer"] {
            ok(&run(
                dir.path(),
                &[
                    "scenario",
                    name,
                    "--preset",
                    "paper-2009",
                    "--shots",
                    "5000",
                    "--seed",
                    "7",
                ],
            ));
        }
        let counts = dir.path().join("entanglement.counts.csv");
        ok(&run(
            dir.path(),
            &["tomo", counts.to_str().unwrap(), "--mode", "state2"],
        ));
    }
    let mut names: Vec<_> = fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names.len() >= 10);
    for n in names {
        let x = fs::read(a.path().join(&n)).unwrap();
        let y = fs::read(b.path().join(&n)).unwrap();
        assert!(x == y, "{n:?} differs");
    }
}

#[test]
fn different_seed_changes_counts() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    ok(&run(
        a.path(),
        &["scenario", "hom-scan", "--shots", "1000", "--seed", "1"],
    ));
    ok(&run(
        b.path(),
        &["scenario", "hom-scan", "--shots", "1000", "--seed", "2"],
    ));
    let x = fs::read(a.path().join("hom-scan.scan.csv")).unwrap();
    let y = fs::read(b.path().join("hom-scan.scan.csv")).unwrap();
    assert_ne!(x, y);
}

#[test]
fn env_var_sets_output_dir() {
    let dir = TempDir::new().unwrap();
    let o = Command::new(BIN)
        .args(["scenario", "coalescence"])
        .env("SPINORBIT_OUT", dir.path())
        .output()
        .unwrap();
    ok(&o);
    assert!(dir.path().join("coalescence.result.json").exists());
}

#[test]
fn constants_file_changes_coherence_time() {
    let dir = TempDir::new().unwrap();
    let consts = write(dir.path(), "c.toml", "bandwidth_nm = 3.0\n");
    let args = [
        "scenario",
        "coalescence",
        "--tmin",
        "0.5",
        "--tmax",
        "0.5",
        "--steps",
        "1",
    ];
    let gamma = |extra: &[&str]| {
        let mut a = args.to_vec();
        a.extend_from_slice(extra);
        metric(&ok(&run(dir.path(), &a)), "gamma")
    };
    let wide = gamma(&[]);
    // A narrower filter lengthens the wavepacket and raises the overlap.
    let narrow = gamma(&["--constants", consts.to_str().unwrap()]);
    assert!(narrow > wide, "{narrow} vs {wide}");
    assert!((gamma(&["--bandwidth-nm", "3"]) - narrow).abs() < 1e-12);

    let bad = write(dir.path(), "bad.toml", "speed_of_light = 1\n");
    let mut with = args.to_vec();
    with.extend(["--constants", bad.to_str().unwrap()]);
    assert_eq!(run(dir.path(), &with).status.code(), Some(2));
}

#[test]
fn scan_sweeps_noise_knob() {
    let dir = TempDir::new().unwrap();
    ok(&run(
        dir.path(),
        &[
            "scan",
            "entanglement",
            "--param",
            "p",
            "--from",
            "0",
            "--to",
            "0.2",
            "--points",
            "5",
        ],
    ));
    let text = fs::read_to_string(dir.path().join("entanglement.p.sweep.csv")).unwrap();
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let col = r
        .headers()
        .unwrap()
        .iter()
        .position(|h| h == "concurrence")
        .unwrap();
    let c: Vec<f64> = r
        .records()
        .map(|x| x.unwrap()[col].parse().unwrap())
        .collect();
    assert_eq!(c.len(), 5);
    for (i, v) in c.iter().enumerate() {
        let p = 0.05 * i as f64;
        assert!((v - (1.0 - 1.5 * p).max(0.0)).abs() < 1e-9, "{c:?}");
    }
}
