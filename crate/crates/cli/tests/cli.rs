use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dynamo-lab")).args(args).output().expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .skip(1)
        .take_while(|l| !l.is_empty())
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

fn summary_value(csv: &str, key: &str) -> Option<String> {
    csv.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")).map(String::from))
}

#[test]
fn spectrum_of_unit_profile() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("spectrum.csv");
    let svg = dir.path().join("spectrum.svg");
    let o = lab(&["spectrum", "--alpha", "const:1.0", "--l", "1", "--n", "500", "--out", path_str(&out), "--svg", path_str(&svg)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("re_lambda,im_lambda,class,pair_index\n"));
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 1000);
    let lead: f64 = rows[0][0].parse().unwrap();
    assert!((lead + 15.6973).abs() < 1e-3, "{lead}");
    assert_eq!(&rows[0][1..], ["0", "Real", "-1"]);
    assert!(fs::read_to_string(&svg).unwrap().starts_with("<svg"));
}

#[test]
fn nogo_single_pair_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nogo.csv");
    let o = lab(&[
        "nogo", "--alpha0", "poly:1,0,0.5", "--alpha1", "const:1", "--l1", "2", "--window", "0.1,1", "--out", path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("r,q,b1,b2,rho\n"));
    assert_eq!(data_rows(&csv).len(), 1000);
    let min: f64 = summary_value(&csv, "min_abs_rho_inf").unwrap().parse().unwrap();
    assert!(min > 1e-6);
    let shift: f64 = summary_value(&csv, "l_shift_max_defect").unwrap().parse().unwrap();
    assert!(shift <= 1e-10);
}

#[test]
fn sweep_of_unit_profile_has_no_transitions() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = lab(&["sweep", "--alpha", "const:1", "--l", "1", "--scale", "0,6,61", "--n", "60", "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("C,branch_id,re_lambda,im_lambda\n"));
    assert_eq!(data_rows(&csv).len(), 61 * 4);
    let events = csv.split("\n\n").nth(1).unwrap();
    assert_eq!(events, "C_lo,C_hi,kind\n");
    let stdout = String::from_utf8(o.stdout).unwrap();
    let thr: f64 = summary_value(&stdout, "growth_threshold").unwrap().parse().unwrap();
    assert!((thr - 4.4934).abs() < 0.02, "{thr}");
}

#[test]
fn darboux_box_levels() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.csv");
    let o = lab(&["darboux", "--potential", "zero", "--n", "1000", "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("level,E0,E1,abs_rel_err\n"));
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 5);
    for r in rows {
        assert!(r[3].parse::<f64>().unwrap() <= 1e-3);
    }
}

#[test]
fn mre_check_and_pencil_check_pass() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.csv");
    let o = lab(&[
        "mre-check", "--alpha0", "poly:1,0,0.5", "--alpha1", "poly:1,0,0.2", "--E", "-1", "--system", "b", "--out", path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("r,riccati_residual,cond_log\n"));
    assert!(!data_rows(&csv).is_empty());

    let out = dir.path().join("p.csv");
    let o = lab(&["pencil-check", "--alpha", "poly:1,0,1", "--l", "2", "--n", "60", "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let out = path_str(&out);
    assert_eq!(lab(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(lab(&["spectrum", "--alpha", "const:1", "--bogus", "--out", out]).status.code(), Some(2));
    assert_eq!(lab(&["spectrum", "--alpha", "const:1", "--n", "4", "--out", out]).status.code(), Some(2));
    assert_eq!(lab(&["spectrum", "--alpha", "wobble:1", "--out", out]).status.code(), Some(2));
    assert_eq!(lab(&["--help"]).status.code(), Some(0));
    // Pencil elimination divides by alpha.
    assert_eq!(lab(&["pencil-check", "--alpha", "const:0", "--n", "20", "--out", out]).status.code(), Some(2));
    // A check that runs but misses its tolerance is a numerical failure.
    let o = lab(&[
        "mre-check", "--alpha0", "const:1", "--alpha1", "const:1", "--step", "0.01", "--tol", "1e-14", "--out", out,
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = lab(&["spectrum", "--alpha", "poly:6.5,0,-26", "--n", "80", "--out", path_str(p)]);
        assert_eq!(o.status.code(), Some(0));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}
