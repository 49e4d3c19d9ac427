use std::path::Path;
use std::process::{Command, Output};

fn thinwall(args: &[&str], threads: Option<usize>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_thinwall"));
    cmd.args(args);
    if let Some(n) = threads {
        cmd.env("RAYON_NUM_THREADS", n.to_string());
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn rows(out: &Output) -> Vec<Vec<String>> {
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn material_table_reports_youngs_modulus() {
    let out = thinwall(&["material-table"], None);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.starts_with(b"lambda,mu,E,nu,q2_aa,q2_ab,q2_bb\n"));
    assert_eq!(rows(&out)[0][2], "2.5000000000000000e0");
}

#[test]
fn class_check_flags_the_square_of_arclength() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.cfg", "step = 1\ntriple.g = 1:0:s^2\n");
    let out = thinwall(&["class-check", "--config", &cfg], None);
    assert_eq!(out.status.code(), Some(1));
    let r = rows(&out);
    assert_eq!(r[0][0], "A_inf_inf");
    assert!(num(&r[0][2]) > 1e-2);
    assert_eq!(r[0][3], "no");
}

#[test]
fn korn_scan_default_sweep() {
    let out = thinwall(&["korn-scan"], None);
    assert_eq!(out.status.code(), Some(0));
    let r = rows(&out);
    assert_eq!(r.len(), 4);
    let ek: Vec<f64> = r.iter().map(|row| num(&row[3])).collect();
    let (lo, hi) = ek.iter().fold((f64::INFINITY, 0.0f64), |(l, h), x| (l.min(*x), h.max(*x)));
    assert!(hi <= 2.0 * lo, "{ek:?}");
}

#[test]
fn gamma_sweep_of_the_zero_triple() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "z.cfg", "step = 1\ntriple.w_coeffs = 0\n");
    let out = thinwall(&["gamma-sweep", "--config", &cfg], None);
    assert_eq!(out.status.code(), Some(0));
    let r = rows(&out);
    assert_eq!(r.len(), 4);
    for row in r {
        assert_eq!(num(&row[3]), 0.0);
        assert_eq!(num(&row[4]), 0.0);
        assert_eq!(num(&row[5]), 0.0);
    }
}

#[test]
fn gamma_sweep_with_uniform_axial_strain() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "g.cfg", "step = 1\ntriple.alpha4_coeffs = 0, 0, 0.5\n");
    let out = thinwall(&["gamma-sweep", "--config", &cfg, "--quad", "16,32,8"], None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = rows(&out);
    assert!((num(&r[0][4]) - 1.25).abs() < 1e-12);
    assert!(num(&r[3][5]) <= 0.02);

    let single = thinwall(&["gamma-sweep", "--config", &cfg, "--h-list", "0.1"], None);
    assert_eq!(single.status.code(), Some(0));
    assert_eq!(rows(&single).len(), 1);
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad.cfg", "material.nu = 0.3\n");
    let out = thinwall(&["material-table", "--config", &bad], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("material.nu"));
    assert_eq!(thinwall(&["gamma-sweep", "--step", "9"], None).status.code(), Some(2));
    assert_eq!(thinwall(&["korn-scan", "--mesh", "64x4"], None).status.code(), Some(2));
    assert_eq!(thinwall(&["korn-scan", "--eps-list", "3.0"], None).status.code(), Some(2));
    // a triple outside the class of the regime
    let wrong = write_config(dir.path(), "w.cfg", "step = 3\ntriple.w_coeffs = 0, 0, 1\n");
    assert_eq!(thinwall(&["gamma-sweep", "--config", &wrong], None).status.code(), Some(2));
}

#[test]
fn output_file_and_thread_count_do_not_change_the_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("probe.csv");
    let p = path.to_str().unwrap();
    let a = thinwall(&["recovery-probe", "--step", "4", "--h", "0.05", "--out", p], Some(1));
    assert_eq!(a.status.code(), Some(0));
    assert!(a.stdout.is_empty());
    let file = std::fs::read(&path).unwrap();
    let b = thinwall(&["recovery-probe", "--step", "4", "--h", "0.05"], Some(4));
    assert_eq!(file, b.stdout);
}
