use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fovsynth")).args(args).output().expect("binary runs")
}

fn run_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fovsynth"))
        .args(args)
        .env(key, value)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key))
        .map(str::trim)
        .unwrap_or_else(|| panic!("no {key} in\n{text}"))
}

#[test]
fn classify_reports_case_and_reductions() {
    let o = run(&["classify", "--gamma", "0", "--delta", "0.8"]);
    assert!(o.status.success());
    let t = stdout(&o);
    assert_eq!(field(&t, "case"), "frontal");
    assert_eq!(field(&t, "mirror"), "false");

    let t = stdout(&run(&["classify", "--gamma", "-0.3", "--delta", "0.4"]));
    assert_eq!(field(&t, "case"), "side");
    assert_eq!(field(&t, "mirror"), "true");
    assert_eq!(field(&t, "reverse time"), "false");

    let t = stdout(&run(&["classify", "--gamma", "2.5", "--delta", "0.4"]));
    assert_eq!(field(&t, "reverse time"), "true");
    assert_eq!(field(&t, "mirror"), "true");
}

#[test]
fn degrees_flag_converts_inputs() {
    let a = stdout(&run(&["classify", "--gamma", "45", "--delta", "30", "--degrees"]));
    let b = stdout(&run(&["classify", "--gamma", "0.7853981633974483", "--delta", "0.5235987755982988"]));
    assert_eq!(field(&a, "case"), "side");
    assert_eq!(field(&a, "phi1"), field(&b, "phi1"));
}

#[test]
fn out_of_range_sensor_is_a_domain_error() {
    let o = run(&["classify", "--gamma", "0.3", "--delta", "2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
    let o = run(&["plan", "--gamma", "0.3", "--delta", "0.5", "--q-rho", "0", "--q-psi", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn plan_json_carries_the_schema() {
    let o = run(&["plan", "--gamma", "0.7853981633974483", "--delta", "0.5235987755982988", "--q-rho", "1", "--q-psi", "2", "--json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["case"], "side");
    assert_eq!(v["word"], "E1+*E1-");
    assert_eq!(v["feasible"], true);
    let arcs = v["arcs"].as_array().unwrap();
    let sum: f64 = arcs.iter().map(|a| a["length"].as_f64().unwrap()).sum();
    assert!((sum - v["total_length"].as_f64().unwrap()).abs() < 1e-12);
    for a in arcs {
        for k in ["kind", "dir", "start", "end", "length"] {
            assert!(a.get(k).is_some(), "arc lacks {k}");
        }
    }
    assert_eq!(arcs[1]["dir"], Value::Null);
}

#[test]
fn plan_at_the_goal_is_empty() {
    let o = run(&["plan", "--gamma", "0.2", "--delta", "0.6", "--rho-p", "2", "--q-rho", "2", "--q-psi", "0", "--json"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["word"], "");
    assert_eq!(v["total_length"], 0.0);
    assert!(v["arcs"].as_array().unwrap().is_empty());
}

#[test]
fn tolerance_comes_from_the_environment() {
    let args = ["plan", "--gamma", "0.2", "--delta", "0.6", "--q-rho", "0.5", "--q-psi", "1"];
    assert!(run_env(&args, "FOV_SYNTH_TOL", "1e-7").status.success());
    assert_eq!(run_env(&args, "FOV_SYNTH_TOL", "-1").status.code(), Some(2));
    assert_eq!(run_env(&args, "FOV_SYNTH_TOL", "loose").status.code(), Some(2));
}

#[test]
fn csv_has_one_row_per_sample() {
    let o = run(&["partition", "--gamma", "0.5", "--delta", "0.6", "--out", "csv", "--resolution", "7x11"]);
    assert!(o.status.success());
    let t = stdout(&o);
    let mut lines = t.lines();
    assert_eq!(lines.next(), Some("schema_version,rho,psi,label,word,length"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 77);
    assert!(rows.iter().all(|r| r.split(',').count() == 6));
}

#[test]
fn svg_atlas_has_borders_and_a_legend() {
    let dir = std::env::temp_dir().join(format!("fovsynth-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("atlas.svg");
    let o = run(&[
        "partition", "--gamma", "0.7853981633974483", "--delta", "0.5235987755982988", "--resolution", "12x36", "-o",
        file.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let svg = std::fs::read_to_string(&file).unwrap();
    std::fs::remove_dir_all(&dir).ok();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("data-schema-version=\"1\""));
    assert!(svg.contains("data-border="));
    assert!(svg.trim_end().ends_with("</svg>"));
}

#[test]
fn bad_window_is_rejected() {
    let o = run(&["partition", "--gamma", "0.5", "--delta", "0.6", "--window", "2,1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_is_seeded() {
    let args = ["validate", "--samples", "3", "--seed", "5", "--cases", "side,frontal"];
    let (a, b) = (run(&args), run(&args));
    assert!(a.status.success(), "{}", stdout(&a));
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["ok"], true);
    assert_eq!(v["cases"].as_array().unwrap().len(), 2);

    let o = run(&["validate", "--samples", "0"]);
    assert!(o.status.success());
}

#[test]
fn unknown_case_name_is_a_domain_error() {
    assert_eq!(run(&["validate", "--cases", "sideways"]).status.code(), Some(2));
}
