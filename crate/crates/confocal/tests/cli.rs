use std::path::PathBuf;
use std::process::Command;

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run(args: &[&str], out: &std::path::Path) -> (i32, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_confocal")).args(args).arg("--out").arg(out).output().unwrap();
    (o.status.code().unwrap_or(-1), String::from_utf8_lossy(&o.stderr).into_owned())
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("confocal-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

#[test]
fn passing_commands_exit_zero() {
    for (cmd, cfg) in [
        ("simulate", "simulate_period2.json"),
        ("cayley-search", "cayley_search_n3.json"),
        ("cayley-check", "cayley_check_n3.json"),
        ("cayley-weak", "cayley_weak_s0.json"),
        ("drc", "drc.json"),
        ("algebra", "algebra.json"),
        ("star", "star.json"),
        ("grid", "grid_elliptic.json"),
        ("render", "render_empty.json"),
    ] {
        let out = scratch(cmd);
        let (code, err) = run(&[cmd, "--config", config(cfg).to_str().unwrap()], &out);
        assert_eq!(code, 0, "{cmd}: {err}");
        let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
        assert_eq!(report["command"], cmd);
        assert_eq!(report["all_pass"], true);
        let _ = std::fs::remove_dir_all(&out);
    }
}

#[test]
fn hyperbolic_grid_reports_failed_checks() {
    let out = scratch("hyperbolic");
    let (code, err) = run(&["grid", "--config", config("grid_hyperbolic.json").to_str().unwrap(), "--csv"], &out);
    assert_eq!(code, 1);
    assert!(err.contains("FAIL"));
    let csv = std::fs::read_to_string(out.join("grid.csv")).unwrap();
    assert!(csv.starts_with("k,mode,x_1,x_2,fitted_lambda"));
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn error_exit_codes() {
    let out = scratch("errors");
    std::fs::create_dir_all(&out).unwrap();
    let bad = out.join("bad.json");
    std::fs::write(&bad, "{\"boundary\": 0.0, \"family\": [1, 2], \"oops\": 1}").unwrap();
    assert_eq!(run(&["simulate", "--config", bad.to_str().unwrap()], &out).0, 2);
    std::fs::write(&bad, "{\"family\": [2, 1]}").unwrap();
    assert_eq!(run(&["simulate", "--config", bad.to_str().unwrap()], &out).0, 3);
    assert_eq!(run(&["simulate", "--config", out.join("missing.json").to_str().unwrap()], &out).0, 4);
    let _ = std::fs::remove_dir_all(&out);
}
