use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const LANDAU: &str = r#"
[hamiltonian]
preset = "landau"
E_x = 0.3
E_y = -0.2

[run]
t_end = 2.8
samples = 200

[green]
times = [1.0, 2.0]
points = [[0.1, 0.2, 0.0, 0.0], [0.5, -0.5, 0.25, 0.1]]
"#;

fn quadflow(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quadflow")).args(args).current_dir(dir).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn stderr_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().next().unwrap_or_default();
    serde_json::from_str(line).unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {text}"))
}

#[test]
fn run_writes_all_three_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "landau.toml", LANDAU);
    let out = quadflow(&["run", "landau.toml"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["samples"], 201);
    assert!(summary["breakdown"].is_null());

    let run_dir = dir.path().join("landau.out");
    let alphas = fs::read_to_string(run_dir.join("alphas.csv")).unwrap();
    let lines: Vec<&str> = alphas.lines().collect();
    assert_eq!(lines.len(), 202);
    let header: Vec<String> = std::iter::once("t".to_string()).chain((1..=15).map(|k| format!("alpha{k}"))).collect();
    assert_eq!(lines[0], header.join(","));
    for line in &lines[1..] {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 16);
        // 17 significant digits: d.dddddddddddddddde±x
        let mantissa = fields[5].trim_start_matches('-').split('e').next().unwrap();
        assert_eq!(mantissa.replace('.', "").len(), 17, "{}", fields[5]);
    }

    let maps: serde_json::Value = serde_json::from_str(&fs::read_to_string(run_dir.join("heisenberg.json")).unwrap()).unwrap();
    let maps = maps.as_array().unwrap();
    assert_eq!(maps.len(), 201);
    for key in ["t", "S", "d", "phase"] {
        assert!(maps[100].get(key).is_some(), "missing {key}");
    }
    assert_eq!(maps[100]["S"].as_array().unwrap().len(), 4);

    let green = fs::read_to_string(run_dir.join("green.csv")).unwrap();
    let mut g = green.lines();
    assert_eq!(g.next(), Some("x,y,t,x_prime,y_prime,re,im,branch"));
    assert_eq!(g.count(), 4);
}

#[test]
fn identical_configs_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.toml", LANDAU);
    write(dir.path(), "b.toml", LANDAU);
    let out = quadflow(&["run", "a.toml", "b.toml"], dir.path());
    assert!(out.status.success());
    for file in ["alphas.csv", "heisenberg.json", "green.csv"] {
        let a = fs::read(dir.path().join("a.out").join(file)).unwrap();
        let b = fs::read(dir.path().join("b.out").join(file)).unwrap();
        assert!(a == b, "{file} differs");
    }
}

#[test]
fn tan_pole_is_reported_with_coefficient_and_time() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "pole.toml", "[hamiltonian]\na6 = \"tan(t)\"\na9 = \"0.5\"\n[run]\nt_end = 2.0\n");
    let out = quadflow(&["run", "pole.toml"], dir.path());
    assert!(!out.status.success());
    let err = stderr_json(&out);
    assert_eq!(err["error"], "InvalidSchedule");
    let at = err["at"].as_str().unwrap();
    assert!(at.starts_with("a6 at t=1.57079"), "{at}");
    assert!(err["detail"].as_str().unwrap().contains("tan"));
}

#[test]
fn parse_errors_carry_byte_offsets() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.toml", "[hamiltonian]\na6 = \"sin t\"\n[run]\nt_end = 1.0\n");
    let out = quadflow(&["run", "bad.toml"], dir.path());
    assert!(!out.status.success());
    let err = stderr_json(&out);
    assert_eq!(err["error"], "ParseError");
    assert_eq!(err["at"], "a6 byte 4");
}

#[test]
fn missing_config_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = quadflow(&["run", "nope.toml"], dir.path());
    assert!(!out.status.success());
    assert_eq!(stderr_json(&out)["error"], "Io");
}

#[test]
fn verify_landau_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = quadflow(&["verify", "--preset", "landau", "--t-end", "2.5"], dir.path());
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{table}");
    let row = table.lines().find(|l| l.starts_with("closed-form alphas")).expect("closed-form row");
    assert!(row.contains("PASS"));
    let err: f64 = row.split_whitespace().nth(2).unwrap().parse().unwrap();
    assert!(err < 1e-6);
    assert!(table.contains("overall: PASS"));
}

#[test]
fn verify_json_and_config_mode() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "driven.toml", "[hamiltonian]\na2 = \"0.2*cos(t)\"\na6 = \"0.3\"\na9 = \"0.5\"\na10 = \"0.5\"\na11 = \"0.1\"\n[run]\nt_end = 1.0\n");
    let out = quadflow(&["verify", "--config", "driven.toml", "--json"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let suites = report["suites"].as_array().unwrap();
    assert!(suites.iter().all(|s| s["passed"] == true));
    assert!(suites.iter().any(|s| s["name"] == "classical oracle (S, d)"));
}

#[test]
fn verify_reports_landau_breakdown() {
    let dir = tempfile::tempdir().unwrap();
    let out = quadflow(&["verify", "--preset", "landau", "--param", "E_x=0", "--param", "E_y=0", "--t-end", "4"], dir.path());
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{table}");
    assert!(table.lines().any(|l| l.starts_with("breakdown at w_c t = pi") && l.contains("PASS")));
}

#[test]
fn thread_cap_is_validated_and_honored() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "one.toml", LANDAU);
    write(dir.path(), "two.toml", &LANDAU.replace("E_x = 0.3", "E_x = 0.1"));
    let out = Command::new(env!("CARGO_BIN_EXE_quadflow"))
        .args(["run", "one.toml", "two.toml"])
        .env("QUADFLOW_THREADS", "1")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 2);
    assert!(dir.path().join("two.out/alphas.csv").exists());

    let bad = Command::new(env!("CARGO_BIN_EXE_quadflow"))
        .args(["run", "one.toml"])
        .env("QUADFLOW_THREADS", "0")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(!bad.status.success());
    assert_eq!(stderr_json(&bad)["error"], "InvalidEnvironment");
}

#[test]
fn green_subcommand_writes_only_green() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "landau.toml", LANDAU);
    let out = quadflow(&["green", "landau.toml"], dir.path());
    assert!(out.status.success());
    let run_dir = dir.path().join("landau.out");
    assert!(run_dir.join("green.csv").exists());
    assert!(!run_dir.join("alphas.csv").exists());
}

#[test]
fn print_odes_dumps_mu() {
    let dir = tempfile::tempdir().unwrap();
    let out = quadflow(&["print-odes", "--preset", "landau", "--t", "0.5", "--alpha", "0,0,0,0,0,0,0,0,0,0,0,0,0,0,-0.25"], dir.path());
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["mu"].as_array().unwrap().len(), 15);
    assert!(v["max_difference"].as_f64().unwrap() < 1e-12);

    let short = quadflow(&["print-odes", "--a", "1,2,3"], dir.path());
    assert!(!short.status.success());
    assert_eq!(stderr_json(&short)["error"], "Usage");
}

#[test]
fn usage_errors_are_json_too() {
    let dir = tempfile::tempdir().unwrap();
    let out = quadflow(&["frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "Usage");
}
