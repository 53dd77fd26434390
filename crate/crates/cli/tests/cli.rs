use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ricciform(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ricciform")).args(args).env_remove("RICCIFORM_OUT").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const NECK: &str = "\
name = small-neck
geometry.family = warped-cylinder
grid.nx = 96
grid.ny = 8
metric.preset = neck
form.phi = dtheta
probe.alpha.form = phi
time.t_end = 0.2
output.snapshots = 20
";

fn write_scenario(dir: &Path, text: &str) -> String {
    let p = dir.join("scenario.txt");
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn run_then_report_then_rescale() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_scenario(dir.path(), NECK);
    let out = dir.path().join("out");
    let o = ricciform(&["run", &file, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("status   completed"), "{}", stdout(&o));
    for f in ["monitors.csv", "summary.json", "scenario.cfg", "snap_00000000.json", "snap_00000000.bin"] {
        assert!(out.join(f).exists(), "{f}");
    }

    let o = ricciform(&["report", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("PASS length-bound-uniform[alpha]"), "{text}");
    assert!(text.contains("overall  PASS"), "{text}");

    let o = ricciform(&["rescale", out.to_str().unwrap(), "--schedule", "geometric:2:0,0.1,0.2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("rescaled lengths diverge: true"), "{}", stdout(&o));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("rescale.json")).unwrap()).unwrap();
    assert_eq!(json["members"].as_array().unwrap().len(), 3);
    assert_eq!(json["lengths"]["sqrt_law_holds"], true);
    let decay = fs::read_to_string(out.join("decay.csv")).unwrap();
    assert!(decay.starts_with("k,lambda,r,value\n") && decay.lines().count() > 3, "{decay}");
}

#[test]
fn output_directory_can_come_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_scenario(dir.path(), "grid.nx = 16\ngrid.ny = 16\ntime.t_end = 0.01\n");
    let out = dir.path().join("env-out");
    let o = Command::new(env!("CARGO_BIN_EXE_ricciform"))
        .args(["run", &file])
        .env("RICCIFORM_OUT", &out)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(out.join("summary.json").exists());
    assert_eq!(code(&ricciform(&["run", &file])), 2);
}

#[test]
fn missing_scenario_file_is_a_usage_error() {
    let o = ricciform(&["run", "/nonexistent/scenario.txt", "--out", "/tmp/unused"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("cannot read"), "{}", stderr(&o));
}

#[test]
fn invalid_scenario_lists_every_error() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_scenario(dir.path(), "ricci_mode = general\ngrid.nx = 2\n");
    let o = ricciform(&["run", &file, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let err = stderr(&o);
    assert!(err.contains("2 error(s)") && err.contains("metric.ricci_path"), "{err}");
}

#[test]
fn report_without_summary_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = ricciform(&["report", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("summary.json"), "{}", stderr(&o));
}

#[test]
fn rescale_rejects_a_bad_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_scenario(dir.path(), NECK);
    let out = dir.path().join("out");
    assert_eq!(code(&ricciform(&["run", &file, "--out", out.to_str().unwrap()])), 0);
    let o = ricciform(&["rescale", out.to_str().unwrap(), "--schedule", "sometimes:1"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("unknown policy"), "{}", stderr(&o));
}

#[test]
fn verify_runs_a_single_suite() {
    let o = ricciform(&["verify", "bochner"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let lines: Vec<String> = stdout(&o).lines().map(str::to_string).collect();
    assert_eq!(lines.len(), 1);
    assert!(lines[0].starts_with("PASS  7 bochner"), "{lines:?}");
}

#[test]
fn unknown_suite_is_a_usage_error() {
    let o = ricciform(&["verify", "everything"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("everything"));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(code(&ricciform(&["launch"])), 2);
}

/// The full acceptance run: exit 0 iff every criterion passes.
#[test]
fn verify_all_reports_every_criterion() {
    let o = ricciform(&["verify", "all"]);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 10, "{text}");
    let all_pass = lines.iter().all(|l| l.starts_with("PASS"));
    assert_eq!(code(&o), if all_pass { 0 } else { 1 }, "{text}");
    assert!(all_pass, "{text}");
}
