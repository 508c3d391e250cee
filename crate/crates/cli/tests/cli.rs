use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn fracsep(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracsep"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn check_default_reports_densities() {
    let tmp = TempDir::new().unwrap();
    let o = fracsep(tmp.path(), &["check", "--out", "out"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("alpha_surf = 0.333333333333"), "{s}");
    assert!(s.contains("alpha_frac = 2.000000000000"), "{s}");
    assert!(tmp.path().join("out/manifest.toml").exists());
}

#[test]
fn sharp_coincident_total_is_two() {
    let tmp = TempDir::new().unwrap();
    fs::write(
        tmp.path().join("c.toml"),
        "[geometry]\ndim = 1\nphase_points = [0.5]\ncrack_points = [0.5]\n",
    )
    .unwrap();
    let o = fracsep(tmp.path(), &["sharp", "--config", "c.toml", "--out", "out"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("total     = 2.000000000000"), "{}", stdout(&o));
}

#[test]
fn sweep_empty_geometry_writes_zero_rows() {
    let tmp = TempDir::new().unwrap();
    let o = fracsep(tmp.path(), &["sweep", "--out", "out", "--quiet"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
    let csv = fs::read_to_string(tmp.path().join("out/sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "eps,delta,e_phase,e_elastic,e_crack,e_total,e_sharp,rel_err,status");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 5);
    for row in rows {
        let f: Vec<&str> = row.split(',').collect();
        for v in &f[2..7] {
            assert_eq!(v.parse::<f64>().unwrap(), 0.0, "{row}");
        }
        assert_eq!(f[8], "ok");
    }
}

#[test]
fn config_errors_exit_two() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("bad.toml"), "[sweep]\ndelta_rule = \"eps^2\"\n[elastic]\ntheta = 1.5\n").unwrap();
    let o = fracsep(tmp.path(), &["sharp", "--config", "bad.toml"]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("theta") && e.contains("delta_rule"), "{e}");
    assert!(!tmp.path().join("fracsep-out").exists());

    let o = fracsep(tmp.path(), &["sharp", "--config", "missing.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failed_invariant_keeps_partial_outputs() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("v.toml"), "[potentials]\nv_scale = 0.01\n").unwrap();
    let o = fracsep(tmp.path(), &["check", "--config", "v.toml", "--out", "out"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("overall: FAIL"));
    assert!(tmp.path().join("out/manifest.toml.partial").exists());
    assert!(!tmp.path().join("out/manifest.toml").exists());
}

#[test]
fn minimize_manifest_reproduces_run() {
    let tmp = TempDir::new().unwrap();
    fs::write(
        tmp.path().join("m.toml"),
        "seed = 9\n[solver]\ncells = 128\neps = 0.0625\nmax_outer = 20\nmass_constraint = 0.4\n",
    )
    .unwrap();
    let o = fracsep(tmp.path(), &["minimize", "--config", "m.toml", "--out", "a", "--seed", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let manifest = fs::read_to_string(tmp.path().join("a/manifest.toml")).unwrap();
    assert!(manifest.contains("\nseed = 5\n"), "{manifest}");
    assert!(manifest.contains("# command: minimize"));
    for f in ["trajectory.csv", "c.dump", "z.dump", "u.dump"] {
        assert!(tmp.path().join("a").join(f).exists(), "{f}");
    }

    let o = fracsep(tmp.path(), &["minimize", "--config", "a/manifest.toml", "--out", "b"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["trajectory.csv", "c.dump", "z.dump", "u.dump"] {
        let a = fs::read(tmp.path().join("a").join(f)).unwrap();
        let b = fs::read(tmp.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs");
    }

    // a different seed gives a different start
    let o = fracsep(tmp.path(), &["minimize", "--config", "m.toml", "--out", "c", "--quiet"]);
    assert_eq!(o.status.code(), Some(0));
    let a = fs::read(tmp.path().join("a/c.dump")).unwrap();
    let c = fs::read(tmp.path().join("c/c.dump")).unwrap();
    assert_ne!(a, c);
}

#[test]
fn recover_dumps_fields_and_energy() {
    let tmp = TempDir::new().unwrap();
    fs::write(
        tmp.path().join("r.toml"),
        "[geometry]\ndim = 1\ncrack_points = [0.5]\n[recover]\ncells = 4096\neps = 0.01\n",
    )
    .unwrap();
    let o = fracsep(tmp.path(), &["recover", "--config", "r.toml", "--out", "out"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let dump = fs::read_to_string(tmp.path().join("out/z.dump")).unwrap();
    let z = fracsep::fields::read_dump(dump.as_bytes()).unwrap();
    assert_eq!(z.values().len(), 4096);
    let min = z.values().iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(min < 0.01, "z is not damaged at the crack: {min}");

    let energy = fs::read_to_string(tmp.path().join("out/energy.csv")).unwrap();
    let row: Vec<&str> = energy.lines().nth(1).unwrap().split(',').collect();
    let total: f64 = row[3].parse().unwrap();
    let sharp: f64 = row[4].parse().unwrap();
    assert_eq!(sharp, 2.0);
    assert!((total - 2.0).abs() < 0.1, "{total}");
}
