use serde_json::Value;
use std::io::Write;
use std::process::Command;

fn timesym(args: &[&str]) -> (String, String, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_timesym")).args(args).output().expect("binary runs");
    (
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
        out.status.code().unwrap(),
    )
}

fn json(args: &[&str]) -> Value {
    let (stdout, stderr, code) = timesym(args);
    assert_eq!(code, 0, "{stderr}");
    serde_json::from_str(&stdout).expect("valid JSON")
}

fn keys_sorted(v: &Value) -> bool {
    match v {
        Value::Object(map) => {
            let keys: Vec<&String> = map.keys().collect();
            keys.windows(2).all(|w| w[0] < w[1]) && map.values().all(keys_sorted)
        }
        Value::Array(items) => items.iter().all(keys_sorted),
        _ => true,
    }
}

fn temp_file(contents: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(contents.as_bytes()).unwrap();
    f
}

#[test]
fn evolve_reaches_the_detectors() {
    let v = json(&["evolve", "--preset", "--format", "json", "--cut", "6"]);
    assert_eq!(v["final"].to_string(), r#"{"g":[-0.707106781187,0],"h":[0,0.707106781187]}"#);
}

#[test]
fn abl_reports_certain_paths_and_diagram() {
    let (out, _, code) = timesym(&["abl", "--preset", "--pre", "a:1,0", "--post", "g:1,0", "--cut", "1", "--basis", "path"]);
    assert_eq!(code, 0);
    assert!(out.contains("0.707106781187 ⟨d| (-i|c⟩ + |d⟩)"), "{out}");
    assert!(out.contains('#'));
    let v = json(&["abl", "--post", "g:1,0", "--format", "json"]);
    let certain: Vec<(u64, &str)> = v["certainty"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| (e["cut"].as_u64().unwrap(), e["mode"].as_str().unwrap()))
        .collect();
    assert_eq!(certain, [(1, "d"), (2, "d"), (3, "e"), (4, "e")]);
}

#[test]
fn bohm_reversed_from_g_alone_warns() {
    let v = json(&["bohm", "--direction", "reversed", "--post", "g:1,0", "--format", "json"]);
    assert_eq!(v["path"], serde_json::json!(["g", "f", "d"]));
    assert!(v["diagnostics"][0].as_str().unwrap().contains("empty-wave component absent"));
    let (stdout, _, code) = timesym(&["bohm", "--direction", "reversed", "--post", "g:1,0"]);
    assert_eq!(code, 0);
    assert!(stdout.contains("warning: empty-wave component absent"), "{stdout}");
}

#[test]
fn bohm_ensemble_reports_seed_and_counts() {
    let v = json(&["bohm", "--samples", "2000", "--seed", "11", "--format", "json"]);
    assert_eq!(v["seed"], 11);
    assert_eq!(v["samples"], 2000);
    let g = v["detector_counts"]["G"].as_u64().unwrap();
    let h = v["detector_counts"]["H"].as_u64().unwrap();
    assert_eq!(g + h, 2000);
    assert_eq!(v["conditional_paths"]["G"], serde_json::json!({"a,c,e": g}));
}

#[test]
fn measurement_readings_decode_both_ways() {
    for dir in ["forward", "reversed"] {
        let flag = if dir == "forward" { "--pre" } else { "--post" };
        let v = json(&[
            "measure", "--direction", dir, flag, "up:0.6,0;down:0.8,0", "--eigen", "up:0.5;down:-0.5", "--q", "2",
            "--seed", "5", "--format", "json",
        ]);
        let (qi, qf, a) = (v["q_initial"].as_f64().unwrap(), v["q_final"].as_f64().unwrap(), v["deduced"].as_f64().unwrap());
        let shift = if dir == "forward" { qf - qi } else { qi - qf };
        assert!((shift - a).abs() < 1e-9, "{v}");
    }
}

#[test]
fn json_output_has_sorted_keys() {
    for args in [
        &["evolve", "--format", "json"][..],
        &["abl", "--post", "g:1,0", "--format", "json"][..],
        &["bohm", "--samples", "100", "--format", "json"][..],
        &["bohm", "--format", "json"][..],
        &["demo", "--samples", "2000", "--format", "json"][..],
    ] {
        let v = json(args);
        assert!(keys_sorted(&v), "{args:?}");
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = ["bohm", "--samples", "3000", "--seed", "9"];
    assert_eq!(timesym(&args), timesym(&args));
}

#[test]
fn demo_passes_on_the_preset() {
    let (out, _, code) = timesym(&["demo", "--samples", "20000"]);
    assert_eq!(code, 0, "{out}");
    assert!(!out.contains("FAIL"));
    assert!(out.contains("prob(D=1)=1") && out.contains("P(path=c | G)=1"), "{out}");
}

#[test]
fn network_file_matches_preset() {
    let f = temp_file(timesym::network::PRESET_DOUBLE_MZ);
    let path = f.path().to_str().unwrap();
    let from_file = timesym(&["evolve", "--network", path, "--format", "json"]);
    let preset = timesym(&["evolve", "--preset", "--format", "json"]);
    assert_eq!(from_file, preset);
}

#[test]
fn invalid_network_file_is_a_config_error() {
    let f = temp_file(r#"{"modes": ["a"], "stages": [{"elements": [{"type": "mirror", "in": "a", "out": "z"}]}]}"#);
    let (_, stderr, code) = timesym(&["evolve", "--network", f.path().to_str().unwrap()]);
    assert_eq!(code, 5, "{stderr}");
}

#[test]
fn custom_basis_file() {
    let f = temp_file(
        r#"{"outcomes": [
            {"label": "plus", "vectors": ["c:0.7071067811865476,0;d:0.7071067811865476,0"]},
            {"label": "minus", "vectors": ["c:0.7071067811865476,0;d:-0.7071067811865476,0"]}
        ]}"#,
    );
    let v = json(&["abl", "--post", "g:1,0", "--cut", "1", "--basis", f.path().to_str().unwrap(), "--format", "json"]);
    let abl = &v["cuts"][0]["abl"];
    let (p, m) = (abl["plus"].as_f64().unwrap(), abl["minus"].as_f64().unwrap());
    assert!((p - 0.5).abs() < 1e-12 && (m - 0.5).abs() < 1e-12, "{abl}");

    let bad = temp_file(r#"{"outcomes": [{"label": "c", "vectors": ["c:1,0"]}]}"#);
    let (_, _, code) = timesym(&["abl", "--post", "g:1,0", "--cut", "1", "--basis", bad.path().to_str().unwrap()]);
    assert_ne!(code, 0);
}

#[test]
fn exit_codes() {
    let cases: [(&[&str], i32); 8] = [
        (&["--help"], 0),
        (&["frobnicate"], 2),
        (&["evolve", "--bogus"], 2),
        (&["abl", "--post", "g:1"], 3),
        (&["abl", "--post", "g:1,1"], 3),
        (&["bohm", "--quantile", "1.5"], 4),
        (&["evolve", "--network", "missing.json"], 5),
        (&["abl", "--post", "g:0.7071067811865476,0;h:0,0.7071067811865476", "--cut", "3"], 6),
    ];
    for (args, want) in cases {
        let (_, stderr, code) = timesym(args);
        assert_eq!(code, want, "{args:?}: {stderr}");
        if want > 0 {
            assert!(stderr.starts_with("error"), "{args:?}: {stderr}");
        }
    }
    let (_, _, code) = timesym(&["evolve", "--cut", "7"]);
    assert_eq!(code, 4);
}
