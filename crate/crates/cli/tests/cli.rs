use std::path::PathBuf;
use std::process::{Command, Output};

fn coloedr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coloedr")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("coloedr-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

const QUAD: &str = r#"{"delta_kwh":1,"alpha_per_kwh":1,"tenants":[{"kind":"quadratic","coef":2},{"kind":"quadratic","coef":2}]}"#;

#[test]
fn solve_quadratic_instance() {
    let cfg = scratch("quad.json", QUAD);
    let out = coloedr(&["solve", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((v["price_per_kwh"].as_f64().unwrap() - 0.8).abs() < 1e-8);
    assert!((v["diesel_kwh"].as_f64().unwrap() - 0.6).abs() < 1e-8);
    let social = coloedr(&["solve", cfg.to_str().unwrap(), "--mode", "social", "--format", "csv"]);
    let text = stdout(&social);
    assert!(text.starts_with("mode,price_per_kwh,diesel_kwh,tenant,"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn solve_voluntary_instance() {
    let cfg = scratch(
        "vdr.json",
        r#"{"u_per_kwh":1,"tenants":[{"cost":{"kind":"quadratic","coef":2},"capacity_kwh":1},{"cost":{"kind":"quadratic","coef":2},"capacity_kwh":1}]}"#,
    );
    let out = coloedr(&["solve", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((v["total_reduction_kwh"].as_f64().unwrap() - 0.4).abs() < 1e-8);
}

#[test]
fn invalid_config_exits_2_with_path() {
    let cfg = scratch(
        "bad.json",
        r#"{"delta_kwh":1,"alpha_per_kwh":1,"tenants":[{"kind":"quadratic","coef":2},{"kind":"quadratic","coef":"two"}]}"#,
    );
    let out = coloedr(&["solve", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("tenants[1]"), "{err}");
    let invalid = scratch("neg.json", r#"{"delta_kwh":-1,"alpha_per_kwh":1,"tenants":[{"kind":"quadratic","coef":2},{"kind":"quadratic","coef":2}]}"#);
    assert_eq!(coloedr(&["solve", invalid.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn unknown_flag_is_rejected() {
    assert_eq!(coloedr(&["bounds", "--bogus"]).status.code(), Some(2));
}

#[test]
fn worst_case_prints_gap() {
    let out = coloedr(&["worst-case", "--epsilon", "0.2", "--delta", "1", "--alpha", "1", "--n", "2"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((v["diesel_gap_kwh"].as_f64().unwrap() - 0.8).abs() < 1e-6);
    assert!(String::from_utf8_lossy(&out.stderr).contains("0.800000"));
}

#[test]
fn bounds_sweep_passes() {
    let out = coloedr(&["bounds", "--count", "1000", "--seed", "1"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["failures"].as_array().unwrap().len(), 0);
    assert_eq!(v["count"], 1000);
}

#[test]
fn verify_passes_on_equilibrium() {
    let cfg = scratch("quad_verify.json", QUAD);
    let out = coloedr(&["verify", cfg.to_str().unwrap(), "--grid", "500"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn simulate_is_byte_stable() {
    let a = coloedr(&["simulate", "--format", "csv"]);
    let b = coloedr(&["simulate", "--format", "csv"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout(&a).lines().count(), 1 + 24 * 4);
    let json = coloedr(&["simulate", "--seed", "11"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&json)).unwrap();
    assert_eq!(v["records"].as_array().unwrap().len(), 24);
}

#[test]
fn simulate_reads_schedule_file() {
    let sched = scratch(
        "schedule.csv",
        "start,duration_h,target_kwh,u_per_kwh\n2014-01-07T09:00:00Z,1,500,\n2014-01-07T18:00:00Z,1,300,0.25\n",
    );
    let out = coloedr(&["simulate", "--schedule", sched.to_str().unwrap(), "--format", "csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout(&out).lines().count(), 1 + 4 + 3);
}

#[test]
fn gen_trace_writes_csv() {
    let path = std::env::temp_dir().join(format!("coloedr-trace-{}.csv", std::process::id()));
    let out = coloedr(&["gen-trace", "--steps", "10", "--seed", "3", "-o", path.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("timestamp,tenant_1,tenant_2,tenant_3\n"));
    assert_eq!(text.lines().count(), 11);
    std::fs::remove_file(path).unwrap();
}

#[test]
fn sample_configs_are_valid() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["quadratic.json", "voluntary.json", "colo.json"] {
        let out = coloedr(&["solve", root.join(name).to_str().unwrap(), "--mode", "anticipating"]);
        assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let sim = root.join("simulation.json");
    let sched = root.join("schedule.csv");
    let out = coloedr(&["simulate", "--config", sim.to_str().unwrap(), "--schedule", sched.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
