use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use scatterlab::cli::ScenarioConfig;

fn scatterlab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scatterlab")).args(args).current_dir(dir).env_remove("SCATTERLAB_THREADS").output().unwrap()
}

fn run(config: &str, extra: &[&str]) -> (i32, String, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), config).unwrap();
    let mut args = vec!["run", "c.json", "--out", "out"];
    args.extend_from_slice(extra);
    let o = scatterlab(&args, dir.path());
    (o.status.code().unwrap(), String::from_utf8_lossy(&o.stderr).into_owned(), dir)
}

fn read(dir: &tempfile::TempDir, name: &str) -> String {
    fs::read_to_string(dir.path().join("out").join(name)).unwrap()
}

const ZERO: &str = r#"{
  "experiment": "phaseshift",
  "id": "zero",
  "potential": { "kind": "zero" },
  "k": [0.5, 2.0]
}"#;

#[test]
fn zero_potential_gives_zero_phase_shifts() {
    let (code, err, dir) = run(ZERO, &[]);
    assert_eq!(code, 0, "{err}");
    let csv = read(&dir, "zero.csv");
    let mut lines = csv.lines();
    let head = lines.next().unwrap();
    assert!(head.starts_with("# scatterlab") && head.contains("config_sha256="), "{head}");
    assert_eq!(lines.next().unwrap(), "k,l,delta,re_S,im_S");
    let rows: Vec<&str> = lines.collect();
    assert!(rows.len() >= 18);
    for r in rows {
        let f: Vec<&str> = r.split(',').collect();
        assert_eq!((f[2], f[3], f[4]), ("0", "1", "0"), "{r}");
    }
    let json: serde_json::Value = serde_json::from_str(&read(&dir, "zero.json")).unwrap();
    let s = &json["tables"][0]["rows"][0][3];
    assert_eq!(s, &serde_json::json!([1.0, 0.0]));
    assert_eq!(json["provenance"]["flags"], serde_json::json!([]));
}

#[test]
fn output_is_reproducible_and_hash_ignores_formatting() {
    let (_, _, a) = run(ZERO, &[]);
    let (_, _, b) = run(ZERO, &[]);
    assert_eq!(read(&a, "zero.csv"), read(&b, "zero.csv"));
    let compact: String = ZERO.split_whitespace().collect();
    let h = |t: &str| ScenarioConfig::parse(t).unwrap().hash();
    assert_eq!(h(ZERO), h(&compact));
    assert_ne!(h(ZERO), h(&ZERO.replace("2.0", "2.5")));
    let head = read(&a, "zero.csv").lines().next().unwrap().to_string();
    assert!(head.ends_with(&h(ZERO)));
}

#[test]
fn unknown_key_is_a_validation_error() {
    let cfg = "{\n  \"experiment\": \"phaseshift\",\n  \"potentail\": {\"kind\": \"zero\"},\n  \"k\": [1.0]\n}";
    let (code, err, dir) = run(cfg, &[]);
    assert_eq!(code, 2);
    assert!(err.contains("line 3") && err.contains("potentail"), "{err}");
    assert!(!dir.path().join("out").exists());
    let nested = r#"{"experiment":"phaseshift","potential":{"kind":"zero","depht":1},"k":[1]}"#;
    assert!(matches!(ScenarioConfig::parse(nested), Err(e) if e.to_string().contains("depht")));
}

#[test]
fn bad_parameters_are_validation_errors() {
    let cfg = r#"{"experiment":"phaseshift","potential":{"kind":"gaussian_well","v0":1,"width":-1},"k":[1]}"#;
    assert_eq!(run(cfg, &[]).0, 2);
    let stray = r#"{"experiment":"phaseshift","potential":{"kind":"zero","v0":1},"k":[1]}"#;
    let (code, err, _) = run(stray, &[]);
    assert_eq!(code, 2);
    assert!(err.contains("v0"), "{err}");
    assert_eq!(run(r#"{"experiment":"born","potential":{"kind":"zero"}}"#, &[]).0, 2);
    assert_eq!(run("{not json", &[]).0, 2);
}

#[test]
fn strict_mode_turns_flags_into_failures() {
    let cfg = r#"{"experiment":"diagnose","id":"lap","potential":{"kind":"zero"},
        "lap":{"lambda":1.0,"r":0.25,"eps":[1e-2,3e-3,1e-3],"n":512}}"#;
    let (code, _, dir) = run(cfg, &[]);
    assert_eq!(code, 0);
    let json: serde_json::Value = serde_json::from_str(&read(&dir, "lap.json")).unwrap();
    let flags = json["provenance"]["flags"].as_array().unwrap();
    assert!(flags.iter().any(|f| f.as_str().unwrap().contains("below the limiting-absorption threshold")));
    let (code, _, dir) = run(cfg, &["--strict"]);
    assert_eq!(code, 3);
    assert!(dir.path().join("out/lap.json").exists());
}

#[test]
fn numerical_failure_exits_three() {
    // A fast packet on a short line reaches the edge.
    let cfg = r#"{"experiment":"propagate","potential":{"kind":"zero"},
        "evolve":{"packet":{"profile":"gaussian","k":3.0,"sigma":1.0},"times":[40.0],
                  "grid":{"points":512,"half_extent":40.0}}}"#;
    let (code, err, _) = run(cfg, &[]);
    assert_eq!(code, 3, "{err}");
    assert!(err.contains("edge"), "{err}");
}

#[test]
fn moller_plateau_is_serialized() {
    let cfg = r#"{"experiment":"moller","id":"m","potential":{"kind":"power_tail","v0":0.5,"rho":1.0},
        "times":[10.0,20.0,40.0,80.0],"grid":{"points":4096,"half_extent":533.3333333333334}}"#;
    let (code, err, dir) = run(cfg, &[]);
    assert_eq!(code, 0, "{err}");
    let json: serde_json::Value = serde_json::from_str(&read(&dir, "m.json")).unwrap();
    assert_eq!(json["summary"]["plain"]["verdict"], "plateau");
    assert!(read(&dir, "m.csv").contains("t_start,t_end,increment"));
}

#[test]
fn propagate_writes_evolution_and_smatrix_tables() {
    let cfg = r#"{"experiment":"propagate","id":"p","potential":{"kind":"gaussian_well","v0":-0.3,"width":1.0},
        "evolve":{"packet":{"profile":"gaussian","k":1.0,"sigma":2.0},"times":[1.0,2.0],
                  "grid":{"points":1024,"half_extent":64.0},"write_wave":true},
        "smatrix":{"k":[1.0],"packet_width":5.0}}"#;
    let (code, err, dir) = run(cfg, &[]);
    assert_eq!(code, 0, "{err}");
    let ev = read(&dir, "p_evolution.csv");
    assert!(ev.lines().nth(1).unwrap() == "t,norm,edge_mass,distance_to_free");
    for row in ev.lines().skip(2) {
        let norm: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
        assert!((norm - 1.0).abs() < 1e-10);
    }
    assert_eq!(read(&dir, "p_wave.csv").lines().count(), 2 + 1024);
    let s = read(&dir, "p_smatrix.csv");
    assert!(s.lines().nth(1).unwrap().starts_with("k,re_S,im_S,re_S_stationary,im_S_stationary,difference"));
    let diff: f64 = s.lines().nth(2).unwrap().rsplit(',').next().unwrap().parse().unwrap();
    assert!(diff < 1e-2);
}

#[test]
fn born_and_amplitude_tables() {
    let cfg = r#"{"experiment":"born","id":"b","potential":{"kind":"yukawa","g":0.1,"mu":1.0},
        "k":[2.0],"theta_deg":[90.0]}"#;
    let (code, err, dir) = run(cfg, &[]);
    assert_eq!(code, 0, "{err}");
    let csv = read(&dir, "b.csv");
    let row: Vec<f64> = csv.lines().nth(2).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    // f_Born = -g / (q^2 + mu^2), q^2 = 8
    assert!((row[2] + 0.1 / 9.0).abs() < 1e-9);
    let cfg = r#"{"experiment":"amplitude","id":"a","potential":{"kind":"gaussian_well","v0":-1.0,"width":1.0},
        "k":[1.0],"theta_deg":[0.0,90.0]}"#;
    let (code, err, dir) = run(cfg, &[]);
    assert_eq!(code, 0, "{err}");
    let json: serde_json::Value = serde_json::from_str(&read(&dir, "a.json")).unwrap();
    assert!(json["provenance"]["flags"][0].as_str().unwrap().contains("forward"));
}

#[test]
fn acceptance_config_and_fault_injection() {
    let ok = r#"{"experiment":"acceptance","id":"acc","criteria":[1,2,11]}"#;
    let (code, err, dir) = run(ok, &[]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(err.lines().filter(|l| l.starts_with("[PASS]")).count(), 3);
    let json: serde_json::Value = serde_json::from_str(&read(&dir, "acc.json")).unwrap();
    assert!(json["summary"]["results"].as_array().unwrap().iter().all(|r| r["runtime_s"].as_f64().is_some()));
    let tampered = r#"{"experiment":"acceptance","id":"acc","criteria":[2],"phase_perturbation":1e-2}"#;
    let (code, err, dir) = run(tampered, &[]);
    assert_eq!(code, 1);
    assert!(err.contains("[FAIL] 02"), "{err}");
    assert!(read(&dir, "acc.csv").contains(",fail,"));
    assert_eq!(run(r#"{"experiment":"acceptance","criteria":[16]}"#, &[]).0, 2);
}

#[test]
fn schema_lists_every_experiment_and_closes_objects() {
    let dir = tempfile::tempdir().unwrap();
    let o = scatterlab(&["schema"], dir.path());
    assert!(o.status.success());
    let schema: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let variants = schema["oneOf"].as_array().unwrap();
    assert_eq!(variants.len(), 10);
    for v in variants {
        assert_eq!(v["additionalProperties"], false, "{v}");
    }
    assert_eq!(schema["definitions"]["PotentialSpec"]["additionalProperties"], false);
}

#[test]
fn thread_cap_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), ZERO).unwrap();
    let go = |v: &str| {
        Command::new(env!("CARGO_BIN_EXE_scatterlab"))
            .args(["run", "c.json", "--out", "out"])
            .current_dir(dir.path())
            .env("SCATTERLAB_THREADS", v)
            .status()
            .unwrap()
            .code()
            .unwrap()
    };
    assert_eq!(go("2"), 0);
    assert_eq!(go("0"), 0);
    assert_eq!(go("many"), 2);
}

#[test]
fn missing_config_file_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(scatterlab(&["run", "nope.json"], dir.path()).status.code(), Some(2));
    assert_eq!(scatterlab(&["frobnicate"], dir.path()).status.code(), Some(2));
}

mod invariants {
    use proptest::prelude::*;
    use scatterlab::cli::output::number;
    use scatterlab::cli::ScenarioConfig;

    proptest! {
        #[test]
        fn csv_numbers_round_trip(v in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            prop_assert_eq!(number(v).parse::<f64>().unwrap(), v);
        }

        #[test]
        fn hash_depends_only_on_content(k in 0.1..5.0f64, pad in "[ \t\n]{0,4}") {
            let a = format!(r#"{{"experiment":"phaseshift","potential":{{"kind":"gaussian_well","v0":-1,"width":1}},"k":[{k}]}}"#);
            let b = format!(
                "{pad}{{{pad}\"k\" : [ {k} ],{pad}\"potential\": {{\"width\": 1.0, \"v0\": -1.0, \"kind\": \"gaussian_well\"}},\n\"experiment\": \"phaseshift\"{pad}}}{pad}"
            );
            let ha = ScenarioConfig::parse(&a).unwrap().hash();
            prop_assert_eq!(&ha, &ScenarioConfig::parse(&b).unwrap().hash());
            let c = format!(r#"{{"experiment":"phaseshift","potential":{{"kind":"gaussian_well","v0":-1,"width":1}},"k":[{}]}}"#, k + 0.5);
            prop_assert_ne!(ha, ScenarioConfig::parse(&c).unwrap().hash());
        }
    }
}
