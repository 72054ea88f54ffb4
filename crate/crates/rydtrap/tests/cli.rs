use std::process::{Command, Output};

fn rydtrap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rydtrap")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr_json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stderr).unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {}", String::from_utf8_lossy(&o.stderr)))
}

#[test]
fn simulate_is_deterministic_for_a_seed() {
    let args = ["simulate", "--seed", "7", "--n", "3", "--index", "1", "--t", "0.005"];
    let a = rydtrap(&args);
    let b = rydtrap(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert_eq!(text.lines().next(), Some("t,x,y,z,vx,vy,vz,E,theta"));
    assert!(text.lines().count() > 10);
    let c = rydtrap(&["simulate", "--seed", "8", "--n", "3", "--index", "1", "--t", "0.005"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn out_flag_writes_a_file() {
    let dir = std::env::temp_dir().join(format!("rydtrap-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("inhibition.json");
    let o = rydtrap(&["--out", path.to_str().unwrap(), "inhibition"]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!(v["gamma_par"].as_f64().unwrap() < 0.01);
    assert!(v["gamma_perp"].as_f64().unwrap() > 1.0);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn inhibition_reports_both_rates() {
    let o = rydtrap(&["inhibition", "--theta-sq", "1e-4"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    for key in ["gamma_par", "gamma_perp"] {
        assert!(v[key].is_f64(), "missing {key}");
    }
}

#[test]
fn two_level_dressing_reproduces_the_zero_field_detuning() {
    let o = rydtrap(&["dress", "--mode", "two_level"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let d0 = v["solution"]["delta0_zero_field_g_hz"].as_f64().unwrap();
    assert!((d0 / 1e6 - 746.0).abs() < 0.1, "delta0 = {d0}");
}

#[test]
fn unknown_geometry_is_a_validation_error() {
    let o = rydtrap(&["simulate", "--geometry", "trapZ", "--t", "0.001"]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr_json(&o);
    assert_eq!(e["error"], "validation");
    assert_eq!(e["exit_code"], 2);
    assert!(e["message"].as_str().unwrap().contains("trapZ"));
}

#[test]
fn config_values_need_units() {
    let dir = std::env::temp_dir().join(format!("rydtrap-cfg-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("run.toml");
    std::fs::write(&path, "geometry = \"trapA\"\n[drive]\nu1 = \"0.2\"\n").unwrap();
    let o = rydtrap(&["simulate", "--config", path.to_str().unwrap(), "--t", "0.001"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr_json(&o)["message"].as_str().unwrap().contains("unit"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn unbracketed_depth_is_a_convergence_error() {
    let o = rydtrap(&["depth", "--lo", "1e-4", "--hi", "1e-3", "--n", "4", "--t", "0.05"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stderr_json(&o)["error"], "convergence");
    assert!(o.stdout.is_empty());
}

#[test]
fn stark_writes_polynomial_rows() {
    let o = rydtrap(&["stark", "--points", "9"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,n1,m,c0,c1,c2,c3,c4,Emin,Emax"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].starts_with("50,0,49,"));
}

#[test]
fn scan_omega_has_threshold_behaviour() {
    let o = rydtrap(&["scan-omega", "--from", "300", "--to", "500", "--step", "200", "--n", "6", "--t", "0.1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows: Vec<Vec<f64>> = text.lines().skip(1).map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][1], 0.0, "below threshold");
    assert!(rows[1][1] > 0.5, "above threshold");
}

#[test]
fn estimates_are_json() {
    let o = rydtrap(&["estimate", "blockade"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v.to_string().contains("shift_hz"));
    let bad = rydtrap(&["estimate", "patch", "--a", "1e-6", "--d", "1e-7"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn verify_reports_a_passing_criterion() {
    let o = rydtrap(&["verify", "9"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["pass"], true);
}

#[test]
fn negative_numbers_are_accepted_as_values() {
    let o = rydtrap(&["fieldmap", "--axis", "x", "--phase", "-1.5", "--points", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().count(), 4);
}
