use std::path::Path;
use std::process::{Command, Output};

use bogolab_core::harness::{ComparisonReport, MultiReport, Thm2Check};
use bogolab_core::io::{comparison_rows_from_csv, model_from_json, model_to_json, state_from_json, SpectrumFile};
use bogolab_core::model::build_dimer;

fn bogolab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bogolab")).args(args).output().expect("binary runs")
}

fn bogolab_threads(threads: &str, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bogolab"))
        .env("BOGOLAB_THREADS", threads)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn bog_dimer_mode() {
    let o = bogolab(&["bog", "--model", "dimer:t=1,U=1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let spec = SpectrumFile::from_json(&stdout(&o)).unwrap();
    assert_eq!(format!("{:.6}", spec.e[0]), "2.449490");
    assert!(spec.e0_defined);
    assert!(stderr(&o).contains("\"model\":\"dimer:t=1,U=1\""));
    assert!(stderr(&o).contains("\"seed\":0"));
}

#[test]
fn validate_reports_symmetry_violation() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.json");
    std::fs::write(&good, model_to_json(&build_dimer(1.0, 1.0))).unwrap();
    let o = bogolab(&["validate", path_str(&good)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("\"valid\": true"));

    let mut doc: serde_json::Value = serde_json::from_str(&model_to_json(&build_dimer(1.0, 1.0))).unwrap();
    doc["W"][3] = serde_json::json!([1.0, 0.0]);
    let broken = dir.path().join("broken_model.json");
    std::fs::write(&broken, doc.to_string()).unwrap();
    let o = bogolab(&["validate", path_str(&broken)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("SymmetryViolation"));
}

#[test]
fn malformed_files_are_domain_errors() {
    let dir = tempfile::tempdir().unwrap();
    for (name, body) in [("a.json", "{\"d\": 2"), ("b.json", "[]"), ("c.json", "{\"d\": 2, \"T\": [[0,0]], \"W\": []}"), ("d.json", "")] {
        let p = dir.path().join(name);
        std::fs::write(&p, body).unwrap();
        let o = bogolab(&["validate", path_str(&p)]);
        assert_eq!(o.status.code(), Some(1), "{name}: {}", stderr(&o));
        assert!(!stderr(&o).contains("panicked"));
    }
    let o = bogolab(&["validate", "/nonexistent/m.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("error[Io]"));
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        vec!["frobnicate"],
        vec!["compare", "--model", "dimer"],
        vec!["compare", "--model", "dimer", "--N", "16,8"],
        vec!["bog", "--model", "dimer:t=abc"],
        vec!["thm1", "--model", "dimer", "--N", "8,16", "--probe", "nonsense"],
        vec!["bog", "--model", "dimer", "--format", "csv"],
    ] {
        let o = bogolab(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
    assert_eq!(bogolab_threads("zero", &["bog", "--model", "dimer"]).status.code(), Some(2));
    assert_eq!(bogolab(&["--help"]).status.code(), Some(0));
}

#[test]
fn compare_writes_sixteen_monotone_rows() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("report.csv");
    let prefix = dir.path().join("gaps");
    let o = bogolab(&[
        "compare", "--model", "dimer:t=1,U=1", "--N", "8,16,32,64", "--lmax", "4", "--out", path_str(&csv), "--gnuplot", path_str(&prefix),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = comparison_rows_from_csv(&std::fs::read_to_string(&csv).unwrap()).unwrap();
    assert_eq!(rows.len(), 16);
    for l in 1..=4 {
        let g: Vec<f64> = rows.iter().filter(|r| r.l == l).map(|r| r.gap.abs()).collect();
        assert!(g.windows(2).all(|w| w[1] < w[0]), "level {l}: {g:?}");
    }
    let dat = std::fs::read_to_string(dir.path().join("gaps_l1.dat")).unwrap();
    assert_eq!(dat.lines().filter(|l| !l.starts_with('#')).count(), 4);

    let json = dir.path().join("report.json");
    let o = bogolab(&["compare", "--model", "dimer:t=1,U=1", "--N", "8,16,32,64", "--lmax", "4", "--out", path_str(&json)]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let rep: ComparisonReport = serde_json::from_value(v["report"].clone()).unwrap();
    assert_eq!(rep.rows, rows);
    assert!(v["fits"][0]["slope"].as_f64().unwrap() < 0.0);
}

#[test]
fn outputs_are_byte_identical() {
    let args = ["compare", "--model", "random:seed=3,d=3,strength=0.3", "--N", "6,10,14", "--lmax", "3"];
    let a = bogolab_threads("1", &args);
    let b = bogolab_threads("4", &args);
    let c = bogolab(&args);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn hartree_state_feeds_back() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("state.json");
    let o = bogolab(&["hartree", "--model", "ring:L=3,t=1,vhat=0.3;0.3;0.3", "--init-mode", "1", "--out", path_str(&state)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let st = state_from_json(&std::fs::read_to_string(&state).unwrap()).unwrap();
    assert!(st.residual < 1e-9);
    let o = bogolab(&["bog", "--model", "ring:L=3,t=1,vhat=0.3;0.3;0.3", "--state", path_str(&state)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(SpectrumFile::from_json(&stdout(&o)).unwrap().stability.as_str(), "landau");

    let o = bogolab(&["hartree", "--model", "dimer:t=1,U=-3", "--all"]);
    let all: Vec<serde_json::Value> = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(all.len(), 2);
}

#[test]
fn model_files_roundtrip_through_validate() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("ring.json");
    let ring = bogolab_core::model::build_ring(3, 1.0, &[0.3, 0.3, 0.3]).unwrap();
    std::fs::write(&p, model_to_json(&ring)).unwrap();
    assert_eq!(model_from_json(&std::fs::read_to_string(&p).unwrap()).unwrap(), ring);
    let o = bogolab(&["bog", "--model", path_str(&p)]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn harness_commands() {
    let o = bogolab(&["thm2", "--model", "dimer:t=1,U=1", "--level", "2", "--m", "1", "--N", "100", "--ccal", "10"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let check: Thm2Check = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(check.pass);

    let o = bogolab(&["thm2", "--model", "dimer:t=1,U=1", "--N", "4"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("InsufficientN"));

    let o = bogolab(&["thm1", "--model", "dimer:t=1,U=1", "--N", "16,32", "--probe", "vacuum", "--probe", "fock:1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 5);

    let o = bogolab(&["thm3", "--model", "dimer:t=1,U=1", "--N", "16,64", "--level", "2", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("growth_exponent"));

    let o = bogolab(&["multi", "--model", "dimer:t=1,U=-3", "--N", "8,16", "--lmax", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rep: MultiReport = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(rep.j, 2);

    let o = bogolab(&["exact", "--model", "dimer:t=1,U=1", "--N", "8", "--k", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["values"].as_array().unwrap().len(), 3);

    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("s.json");
    assert_eq!(bogolab(&["hartree", "--model", "random:seed=1,d=3", "--out", path_str(&state)]).status.code(), Some(0));
    let o = bogolab(&["compare", "--model", "dimer", "--N", "8,16", "--state", path_str(&state)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("DimensionMismatch"));
}
