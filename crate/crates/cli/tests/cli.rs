use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_chaoslink"));
    c.env_remove("CHAOSLINK_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn scenario(name: &str) -> String {
    fixtures().join("scenarios").join(format!("{name}.json")).display().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_scenario(dir: &Path, body: &str) -> String {
    let p = dir.join("s.json");
    std::fs::write(&p, body).unwrap();
    p.display().to_string()
}

#[test]
fn fit_writes_params_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let p1 = dir.path().join("p1.json");
    let p2 = dir.path().join("p2.json");
    for p in [&p1, &p2] {
        let o = run(&["fit", "--a", "2", "--M", "32", "--terms", "4", "--out", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stderr).contains("max_rel_error"));
    }
    let a = std::fs::read(&p1).unwrap();
    assert_eq!(a, std::fs::read(&p2).unwrap());
    let v: Value = serde_json::from_slice(&a).unwrap();
    assert!(v["max_rel_error"].as_f64().unwrap() <= 0.05);
    assert_eq!(v["terms"].as_array().unwrap().len(), 4);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["fit", "--a", "2", "--M", "32", "--terms", "0"]).status.code(), Some(1));
    assert_eq!(run(&["fit", "--a", "2"]).status.code(), Some(1));
    assert_eq!(run(&["fit", "--a", "2", "--M", "32", "--grid-db", "0:25"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["curve", "--scenario", "/nonexistent.json"]).status.code(), Some(1));
    assert_eq!(run(&["validate", "--only", "42"]).status.code(), Some(1));
    assert_eq!(run(&["--threads", "0", "validate", "--only", "1"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn schema_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_scenario(
        dir.path(),
        r#"{"dest_antennas": 3, "users_n": 2, "paths_L": 2, "fading_m": 1, "noise_a": 2,
            "snr_grid_db": [0, 10], "colour": "blue"}"#,
    );
    let o = run(&["curve", "--scenario", &s]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));

    let s = write_scenario(
        dir.path(),
        r#"{"dest_antennas": 3, "users_n": 2, "paths_L": 2, "fading_m": 1, "noise_a": 2, "snr_grid_db": []}"#,
    );
    let o = run(&["curve", "--scenario", &s]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("snr_grid_db"));
}

#[test]
fn analytic_curve_csv_format() {
    let table: Vec<Value> = serde_json::from_str(&std::fs::read_to_string(fixtures().join("table.json")).unwrap()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("a2.json");
    let row = table.iter().find(|r| r["a"] == 2.0).unwrap();
    std::fs::write(&p, serde_json::to_string(row).unwrap()).unwrap();
    // Analytic mode never reads the seed, so a malformed one is harmless.
    let o = bin()
        .env("CHAOSLINK_SEED", "not-a-number")
        .args(["curve", "--scenario", &scenario("scenario1_m1"), "--params", p.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("snr_db,ber,protocol,provenance"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 11);
    let mut prev = 1.0;
    for r in rows {
        let f: Vec<&str> = r.split(',').collect();
        assert_eq!(f[2], "EF");
        assert_eq!(f[3], "analytic-equal-scale");
        for num in &f[..2] {
            let (mant, _) = num.split_once('e').unwrap();
            assert_eq!(mant.trim_start_matches('-').replace('.', "").len(), 17, "{num}");
        }
        let ber: f64 = f[1].parse().unwrap();
        assert!(ber <= prev && ber > 0.0);
        prev = ber;
    }
}

#[test]
fn both_mode_agrees_and_is_thread_independent() {
    let s = scenario("scenario1_m1");
    let args = ["curve", "--scenario", &s, "--mode", "both", "--trials", "200000", "--seed", "17"];
    let one = run(&[&args[..], &["--threads", "1"]].concat());
    let four = run(&[&args[..], &["--threads", "4"]].concat());
    assert_eq!(one.status.code(), Some(0), "{}", String::from_utf8_lossy(&one.stderr));
    assert_eq!(one.stdout, four.stdout);
    let text = stdout(&one);
    assert!(text.starts_with("snr_db,ber,protocol,provenance,std_err,agreement\n"));
    let mc: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).filter(|f: &Vec<&str>| f[3] == "monte-carlo").collect();
    assert_eq!(mc.len(), 11);
    for f in mc {
        let ber: f64 = f[1].parse().unwrap();
        if ber >= 1e-5 {
            assert!(f[5].parse::<f64>().unwrap() <= 3.0, "{f:?}");
        }
    }
}

#[test]
fn seed_falls_back_to_environment() {
    let s = scenario("scenario2_m1");
    let base = ["curve", "--scenario", &s, "--mode", "mc", "--kernel", "exact", "--trials", "5000"];
    let flag = run(&[&base[..], &["--seed", "99"]].concat());
    let env = bin().env("CHAOSLINK_SEED", "99").args(base).output().unwrap();
    let other = bin().env("CHAOSLINK_SEED", "100").args(base).output().unwrap();
    assert_eq!(flag.status.code(), Some(0));
    assert_eq!(flag.stdout, env.stdout);
    assert_ne!(flag.stdout, other.stdout);
    let bad = bin().env("CHAOSLINK_SEED", "x").args(base).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn series_truncation_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_scenario(
        dir.path(),
        r#"{"dest_antennas": 4, "users_n": 3, "paths_L": 3, "fading_m": 4, "noise_a": 2,
            "d_rd": 0.05, "snr_grid_db": [10]}"#,
    );
    let o = run(&["curve", "--scenario", &s]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

fn validate(dir: &Path, only: &str) -> (Option<i32>, Value) {
    let out = dir.join(format!("report_{}.json", only.replace(',', "_")));
    let o = run(&[
        "validate",
        "--fixtures",
        dir.to_str().unwrap(),
        "--only",
        only,
        "--trials",
        "200000",
        "--out",
        out.to_str().unwrap(),
    ]);
    (o.status.code(), serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap())
}

fn copy_fixtures(to: &Path) {
    std::fs::create_dir_all(to.join("scenarios")).unwrap();
    std::fs::copy(fixtures().join("table.json"), to.join("table.json")).unwrap();
    for e in std::fs::read_dir(fixtures().join("scenarios")).unwrap() {
        let e = e.unwrap();
        std::fs::copy(e.path(), to.join("scenarios").join(e.file_name())).unwrap();
    }
}

#[test]
fn corrupted_table_constant_is_caught() {
    let dir = tempfile::tempdir().unwrap();
    copy_fixtures(dir.path());
    let (code, clean) = validate(dir.path(), "6");
    assert_eq!(code, Some(0), "{clean:#}");

    let path = dir.path().join("table.json");
    let mut table: Vec<Value> = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let row = table.iter_mut().find(|r| r["a"] == 2.0).unwrap();
    let d = row["terms"][1]["delta"].as_f64().unwrap();
    row["terms"][1]["delta"] = (d * 1.05).into();
    std::fs::write(&path, serde_json::to_string_pretty(&table).unwrap()).unwrap();

    let (code, report) = validate(dir.path(), "4,6");
    assert_eq!(code, Some(3));
    for c in report["criteria"].as_array().unwrap() {
        assert_eq!(c["pass"], false, "criterion {} still passes", c["id"]);
    }
    assert!(report["criteria"][0]["measured"]["fixture_param_drift"][2].as_f64().unwrap() > 0.04);
}

#[test]
fn report_schema_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    copy_fixtures(dir.path());
    let (_, a) = validate(dir.path(), "1,2,8");
    let (_, b) = validate(dir.path(), "1,2,8");
    fn shape(v: &Value) -> Value {
        match v {
            Value::Object(m) => Value::Object(m.iter().map(|(k, v)| (k.clone(), shape(v))).collect()),
            Value::Array(xs) => Value::Array(xs.iter().map(shape).collect()),
            Value::Number(_) => Value::from(0),
            other => other.clone(),
        }
    }
    assert_eq!(shape(&a), shape(&b));
    assert_eq!(a["schema_version"], 1);
    assert_eq!(a["criteria"].as_array().unwrap().len(), 3);
}
