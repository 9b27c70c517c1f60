//! The `mixrec` binary: commands, file formats, config handling.

use std::path::Path;
use std::process::{Command, Output};

fn mixrec(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mixrec"));
    cmd.args(args).env_remove("MIXREC_THREADS").env_remove("MIXREC_SELFTEST_FAULT");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn selftest_lists_every_identity() {
    let out = mixrec(&["selftest"], &[]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    for name in ["refinement identity", "partition of unity", "lagrange duality", "polynomial reproduction", "telescoping nullity", "prolongation identity", "m-type conditions", "mask coefficient sums"] {
        assert!(stdout.contains(name), "missing {name}: {stdout}");
    }
    assert_eq!(stdout.matches("max residual").count(), 8);
}

#[test]
fn selftest_fault_hook_names_the_refinement_identity() {
    let out = mixrec(&["selftest"], &[("MIXREC_SELFTEST_FAULT", "refinement")]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("refinement identity"));
    assert!(text(&out.stdout).starts_with("FAIL"));
}

#[test]
fn plan_writes_points_with_fixed_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("plan.csv");
    let args = ["plan", "--r", "4", "--alpha", "2,2", "--m", "3,3", "--out", path.to_str().unwrap()];
    let out = mixrec(&args, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let body = read(&path);
    let mut lines = body.lines();
    assert_eq!(lines.next(), Some("x1,x2"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 1161);
    assert!(rows.iter().all(|r| r.len() == 2 && r.iter().all(|&v| v > 0.0 && v < 1.0)));
    let err = text(&out.stderr);
    assert!(err.contains("mrate=2") && err.contains("crate=2") && err.contains("beta=(1,1)") && err.contains("E=3"), "{err}");
    let again = mixrec(&["plan", "--r", "4", "--alpha", "2,2", "--m", "3,3"], &[]);
    assert_eq!(text(&again.stdout), body);
}

#[test]
fn sweep_over_r_three_to_eight_gives_six_rows() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    let gp = dir.path().join("sweep.gp");
    let args = [
        "sweep", "--d", "2", "--alpha", "2,2", "--p", "2", "--q", "2", "--theta", "inf", "--lambda", "0,0", "--m", "3,3",
        "--domain", "cube", "--rmin", "3", "--rmax", "8", "--function", "prod_sin", "--out", csv.to_str().unwrap(),
        "--gnuplot", gp.to_str().unwrap(),
    ];
    let out = mixrec(&args, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let body = read(&csv);
    let lines: Vec<&str> = body.lines().collect();
    assert_eq!(lines[0], "r,n,error,stderr,quad_mode,seed");
    assert_eq!(lines.len(), 7);
    assert!(lines[1].starts_with("3,441,"));
    assert!(read(&gp).contains("logscale"));
    assert!(text(&out.stderr).contains("slope"));
}

#[test]
fn config_file_is_overridden_by_flags_and_threads_do_not_matter() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# small sweep\nalpha = 2,2\nm = 3,3\nrmin = 2\nrmax = 5\ndomain = lshape\nfunction = gauss_bump:0.5,0.5;0.3\n").unwrap();
    let a = mixrec(&["sweep", "--config", cfg.to_str().unwrap(), "--rmax", "4", "--threads", "1"], &[]);
    assert_eq!(a.status.code(), Some(0), "{}", text(&a.stderr));
    let body = text(&a.stdout);
    assert_eq!(body.lines().count(), 4, "{body}");
    let b = mixrec(&["sweep", "--config", cfg.to_str().unwrap(), "--rmax", "4"], &[("MIXREC_THREADS", "3")]);
    assert_eq!(text(&b.stdout), body);
}

#[test]
fn recover_reports_one_row() {
    let out = mixrec(&["recover", "--r", "3", "--alpha", "2,2", "--function", "poly:1@2,2"], &[]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let body = text(&out.stdout);
    let row: Vec<&str> = body.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "3");
    assert!(row[2].parse::<f64>().unwrap() < 1e-10, "{body}");
}

#[test]
fn adversarial_reads_a_point_file() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("pts.csv");
    std::fs::write(&pts, "x1,x2\n0.1,0.1\n0.5,0.5\n0.9,0.2\n0.3,0.7\n").unwrap();
    let out_csv = dir.path().join("lb.csv");
    let args = ["adversarial", "--alpha", "2,2", "--points", pts.to_str().unwrap(), "--out", out_csv.to_str().unwrap(), "--n-mc", "2000"];
    let out = mixrec(&args, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let body = read(&out_csv);
    let lines: Vec<&str> = body.lines().collect();
    assert_eq!(lines[0], "r,n,empty_cells,gauge,lower_bound,seed");
    let row: Vec<&str> = lines[1].split(',').collect();
    assert_eq!((row[0], row[1]), ("3", "4"));
    assert!(row[4].parse::<f64>().unwrap() > 0.0);
}

#[test]
fn invalid_configs_leave_no_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("never.csv");
    let p = path.to_str().unwrap();
    for args in [
        vec!["sweep", "--alpha", "0.4", "--out", p],
        vec!["sweep", "--quad", "simpson", "--out", p],
        vec!["plan", "--out", p],
        vec!["sweep", "--function", "tensor_bspline:1,1;0,0;1", "--lambda", "2,0", "--out", p],
        vec!["adversarial", "--points", "/nonexistent/points.csv", "--out", p],
    ] {
        let out = mixrec(&args, &[]);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", text(&out.stderr));
        assert!(!path.exists(), "{args:?} left a file");
    }
    let out = mixrec(&["sweep", "--bogus", "1"], &[]);
    assert_eq!(out.status.code(), Some(2));
}
