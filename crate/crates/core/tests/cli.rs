use std::path::Path;
use std::process::{Command, Output};

use snse::cli::read_snapshot;

fn snse(args: &[&str], cfg: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_snse"))
        .args(args)
        .arg("--config")
        .arg(cfg)
        .arg("--output")
        .arg(out)
        .output()
        .unwrap()
}

fn write(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("cfg.toml");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn zero_data_gives_zero_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "[grid]\nlmax = 6\n[solver]\ndt = 0.1\nt_end = 1.0\nomega = 2.0\n[output]\nsnapshot_every = 5\n");
    let out = dir.path().join("out");
    let r = snse(&["simulate"], &cfg, &out);
    assert_eq!(
        r.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&r.stderr)
    );
    let csv = std::fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,norm_H,norm_V,norm_DA,norm_L4_u,int_V2,int_bvvz,int_Fv"
    );
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 11);
    for (k, r) in rows.iter().enumerate() {
        assert!((r[0] - 0.1 * k as f64).abs() < 1e-12);
        assert!(r[1..].iter().all(|&x| x == 0.0), "{r:?}");
    }
    let snap =
        read_snapshot(std::fs::File::open(out.join("snapshot_00000010.sns")).unwrap()).unwrap();
    assert!((snap.t - 1.0).abs() < 1e-12);
    assert_eq!(snap.v.max_abs(), 0.0);
    assert!(out.join("snapshot_00000000.sns").exists());
    assert!(std::fs::read_to_string(out.join("report.txt"))
        .unwrap()
        .contains("status: PASS"));
}

#[test]
fn config_errors_exit_with_two_and_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "[grid]\nlmax = 16\nn_lat = 32\nn_lon = 32\n[solver]\ndt = 0.1\nt_end = 1.0\n",
    );
    let r = snse(&["simulate"], &cfg, &dir.path().join("o"));
    assert_eq!(r.status.code(), Some(2));
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(err.contains("line 4") && err.contains("49"), "{err}");

    let cfg = write(dir.path(), "[grid]\nlmax = 4\n[solver]\ndt = 0.1\nt_end = 1.0\n[noise]\nbeta = 1.5\n[verify]\np = 1.8\n");
    let r = snse(&["verify-noise"], &cfg, &dir.path().join("o"));
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("p < β required"));

    let r = snse(&["no-such-mode"], &cfg, &dir.path().join("o"));
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn blow_up_keeps_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "[grid]\nlmax = 6\n[solver]\ndt = 0.5\nt_end = 5.0\nnu = 0.01\nscheme = \"imex_euler\"\n[initial]\nkind = \"random\"\namplitude = 1e60\n",
    );
    let out = dir.path().join("out");
    let r = snse(&["simulate"], &cfg, &out);
    assert_eq!(
        r.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&r.stdout)
    );
    assert!(String::from_utf8_lossy(&r.stderr).contains("blow-up"));
    let csv = std::fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert!(csv.lines().count() >= 2);
    let snap =
        read_snapshot(std::fs::File::open(out.join("snapshot_last_good.sns")).unwrap()).unwrap();
    assert!(snap.v.is_finite());
    assert!(std::fs::read_to_string(out.join("report.txt"))
        .unwrap()
        .contains("status: ERROR"));
}

#[test]
fn verify_operators_reports_residuals() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "[grid]\nlmax = 8\n[solver]\ndt = 0.1\nt_end = 0.1\nomega = 1.0\n[verify]\nn_paths = 6\n",
    );
    let out = dir.path().join("out");
    let r = snse(&["verify-operators"], &cfg, &out);
    assert_eq!(r.status.code(), Some(0));
    let report = std::fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(
        report.contains("transform round trip") && report.contains("status: PASS"),
        "{report}"
    );
    let csv = std::fs::read_to_string(out.join("inequalities.csv")).unwrap();
    assert!(csv.starts_with("check,lhs,rhs,ratio,input_id\n"));
}

#[test]
fn seed_flag_changes_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "seed = 1\n[grid]\nlmax = 6\n[solver]\ndt = 0.05\nt_end = 0.5\n[noise]\nbeta = 1.5\nsigma = \"power:gamma=2\"\n",
    );
    let read = |o: &str| std::fs::read(dir.path().join(o).join("diagnostics.csv")).unwrap();
    snse(&["simulate"], &cfg, &dir.path().join("a"));
    snse(&["simulate", "--seed", "1"], &cfg, &dir.path().join("b"));
    snse(&["simulate", "--seed", "2"], &cfg, &dir.path().join("c"));
    assert_eq!(read("a"), read("b"));
    assert_ne!(read("a"), read("c"));
}
