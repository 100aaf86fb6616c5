use std::path::Path;
use std::process::{Command, Output};

use gcrlab::{DataSource, Preset};

fn gcrlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gcrlab")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn version_and_help() {
    let v = gcrlab(&["--version"]);
    assert_eq!(code(&v), 0);
    assert!(stdout(&v).starts_with("gcrlab "));
    let h = gcrlab(&["--help"]);
    assert_eq!(code(&h), 0);
    for sub in ["christoffel", "gcr-check", "realize", "hodge", "divcurl", "fakir", "rigidity", "demo"] {
        assert!(stdout(&h).contains(sub), "{sub}");
    }
}

#[test]
fn unknown_subcommand_is_a_validation_error() {
    let out = gcrlab(&["torus"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn fakir_writes_the_closed_form_pairings() {
    let dir = tempfile::tempdir().unwrap();
    let out = gcrlab(&["fakir", "--m", "10,100,1000", "--out", path(dir.path())]);
    assert_eq!(code(&out), 0);
    let csv = std::fs::read_to_string(dir.path().join("fakir.csv")).unwrap();
    let pairings: Vec<&str> = csv.lines().filter(|l| l.contains(",pairing,")).collect();
    assert_eq!(pairings.len(), 3);
    assert!(pairings[0].ends_with(",9.00000000000000e-1"));
    assert!(pairings[1].ends_with(",9.90000000000000e-1"));
    assert!(pairings[2].ends_with(",9.99000000000000e-1"));
    assert_eq!(stdout(&out).lines().count(), 1);
}

#[test]
fn gcr_check_reports_second_order() {
    let out = gcrlab(&["gcr-check", "--preset", "sphere", "--n", "32,64,128"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.starts_with("equation,norm_inf,norm_l2,grid\n"));
    let summary = text.lines().last().unwrap();
    assert!(summary.contains("converges"), "{summary}");
}

#[test]
fn realize_writes_mesh_and_defects() {
    let dir = tempfile::tempdir().unwrap();
    let out = gcrlab(&["realize", "--preset", "cylinder", "--n", "65", "--out", path(dir.path())]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let obj = std::fs::read_to_string(dir.path().join("cylinder.obj")).unwrap();
    assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), 65 * 65);
    let defects = std::fs::read_to_string(dir.path().join("cylinder_defects.csv")).unwrap();
    let rmse: f64 = defects
        .lines()
        .find_map(|l| l.strip_prefix("rmse,"))
        .unwrap()
        .parse()
        .unwrap();
    assert!(rmse <= 1e-3);
}

#[test]
fn gate_violation_is_a_numerical_failure() {
    let out = gcrlab(&["realize", "--preset", "sphere", "--n", "33", "--gate", "1e-12"]);
    assert_eq!(code(&out), 2);
    let out = gcrlab(&["realize", "--preset", "sphere", "--n", "33", "--gate", "1e-12", "--override-gate"]);
    assert_eq!(code(&out), 0);
}

#[test]
fn invalid_parameters_exit_with_one() {
    assert_eq!(code(&gcrlab(&["realize", "--n", "4"])), 1);
    assert_eq!(code(&gcrlab(&["divcurl", "--eps", "1/8,1/16", "--grid", "16"])), 1);
    assert_eq!(code(&gcrlab(&["rigidity", "--eps", "1/16,1/8"])), 1);
    assert_eq!(code(&gcrlab(&["realize", "--project", "0,1"])), 1);
}

#[test]
fn config_supplies_defaults_and_rejects_typos() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.ini");
    std::fs::write(&cfg, "[fakir]\nm = 10,100\n").unwrap();
    let out = gcrlab(&["fakir", "--config", path(&cfg)]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("m = 100"));
    let out = gcrlab(&["fakir", "--config", path(&cfg), "--m", "10,1000"]);
    assert!(stdout(&out).contains("m = 1000"));

    std::fs::write(&cfg, "[fakir]\nmm = 10\n").unwrap();
    let out = gcrlab(&["fakir", "--config", path(&cfg)]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key 'mm'"));
}

#[test]
fn field_files_feed_gcr_check_and_christoffel() {
    let dir = tempfile::tempdir().unwrap();
    let chart = Preset::Cylinder.chart(17).unwrap();
    let data = Preset::Cylinder.data(&chart, DataSource::Analytic).unwrap();
    let g = dir.path().join("g.txt");
    let h = dir.path().join("h.txt");
    std::fs::write(&g, data.g.field().to_text()).unwrap();
    std::fs::write(&h, data.h.field().to_text()).unwrap();
    let out = gcrlab(&["gcr-check", "--metric", path(&g), "--second-form", path(&h)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).lines().last().unwrap().contains("exact"));

    let out = gcrlab(&["christoffel", "--metric", path(&g), "--out", path(dir.path())]);
    assert_eq!(code(&out), 0);
    let gamma = std::fs::read_to_string(dir.path().join("custom_christoffel.txt")).unwrap();
    assert!(gamma.starts_with("chart n=2 shape=17,17"));

    std::fs::write(&g, "chart n=2 shape=2,2 spacing=1,1 comps=2,2\n1 0 0\n").unwrap();
    let out = gcrlab(&["gcr-check", "--metric", path(&g), "--second-form", path(&h)]);
    assert_eq!(code(&out), 1);
}

#[test]
fn hodge_round_trips_cochain_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = gcrlab(&["hodge", "--n", "16", "--out", path(dir.path())]);
    assert_eq!(code(&out), 0);
    let exact = dir.path().join("hodge_exact.txt");
    let again = dir.path().join("again");
    let out = gcrlab(&["hodge", "--input", path(&exact), "--out", path(&again)]);
    assert_eq!(code(&out), 0);
    let csv = std::fs::read_to_string(again.join("hodge.csv")).unwrap();
    let coexact: f64 = csv
        .lines()
        .find_map(|l| l.strip_prefix("norm_coexact,"))
        .unwrap()
        .parse()
        .unwrap();
    assert!(coexact < 1e-9, "{coexact}");
}
