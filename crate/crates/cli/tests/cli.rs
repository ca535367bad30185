use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn gradheat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gradheat"))
        .args(args)
        .env_remove("GRADHEAT_OUT")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read_tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn classify_critical_pair() {
    let o = gradheat(&["classify", "3", "3/2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "Critical");
    assert_eq!(stdout(&gradheat(&["classify", "3", "6/5"])).trim(), "Subcritical");
}

#[test]
fn classify_rejects_bad_input() {
    assert_eq!(gradheat(&["classify", "3", "x"]).status.code(), Some(2));
    assert_eq!(gradheat(&["classify", "1", "2"]).status.code(), Some(2));
}

#[test]
fn exponents_in_three_dimensions() {
    let o = gradheat(&["exponents", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("p_S=5\n"), "{s}");
    assert!(s.contains("p_B=15/4\n"), "{s}");
    let m0 = stdout(&gradheat(&["exponents", "1", "--p", "3"]));
    assert!(m0.contains("M0=1.5334"), "{m0}");
}

#[test]
fn classify_only_config_reports_regime() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = gradheat(&["run", "--config", fixture("classify.toml").to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("p3_q3over2_m1_r2/classify.txt")).unwrap();
    assert!(text.contains("regime=Critical"));
}

#[test]
fn empty_check_list_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("reports");
    let o = gradheat(&["run", "--config", fixture("empty.toml").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(!out.exists());
}

#[test]
fn configuration_errors_exit_two() {
    for name in ["unknown_check.toml", "malformed.toml", "does_not_exist.toml"] {
        let o = gradheat(&["run", "--config", fixture(name).to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{name}");
    }
    assert_eq!(gradheat(&["sweep"]).status.code(), Some(2));
    assert_eq!(gradheat(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn runtime_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = gradheat(&["solve", "--config", fixture("bad_grid.toml").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn doubling_fixture_is_certified() {
    let dir = tempfile::tempdir().unwrap();
    let o = gradheat(&[
        "doubling-check",
        "--fixture",
        fixture("doubling_two_point.toml").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let table = fs::read_to_string(dir.path().join("doubling_fixture_starts.csv")).unwrap();
    // start 0 hops once to point 1; start 1 stays
    assert!(table.contains("\n0,1,1,"), "{table}");
    assert!(table.contains("\n1,1,0,"), "{table}");
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_gradheat"))
        .args(["run", "--config", fixture("classify.toml").to_str().unwrap()])
        .env("GRADHEAT_OUT", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("index.csv").exists());
}

#[test]
fn solve_exports_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let o = gradheat(&["solve", "--config", fixture("sweep.toml").to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let manifest = fs::read_to_string(dir.path().join("snapshots/manifest.toml")).unwrap();
    assert!(manifest.contains("completed_t"));
    assert!(dir.path().join("snapshots/snap_00000.csv").exists());
}

#[test]
fn full_pipeline_reports_and_determinism() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = fixture("pipeline.toml");
    let o1 = gradheat(&["run", "--config", cfg.to_str().unwrap(), "--out", a.path().to_str().unwrap(), "--jobs", "1"]);
    let o2 = gradheat(&["run", "--config", cfg.to_str().unwrap(), "--out", b.path().to_str().unwrap(), "--jobs", "3"]);
    assert_eq!(o1.status.code(), Some(0), "{}", stdout(&o1));
    assert_eq!(o2.status.code(), Some(0));
    let point = a.path().join("p3_q6over5_m1_r2");
    let bern = fs::read_to_string(point.join("bernstein.txt")).unwrap();
    assert!(bern.contains("hypotheses_pass=true") && bern.contains("lemma_holds=true"), "{bern}");
    let est = fs::read_to_string(point.join("estimates.txt")).unwrap();
    assert!(est.contains("fitted_c=") && est.contains("bound_pass=true"), "{est}");
    assert!(point.join("bernstein_residuals.csv").exists());
    assert!(point.join("estimates_gradient.csv").exists());
    assert_eq!(read_tree(a.path()), read_tree(b.path()), "reports differ between runs");
}

#[test]
fn sweep_covers_every_point_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let o = gradheat(&["sweep", "--config", fixture("sweep.toml").to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--jobs", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let index = fs::read_to_string(dir.path().join("index.csv")).unwrap();
    let points: Vec<&str> = index.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(points.len(), 8);
    assert_eq!(points[0], "p3_q6over5_m1_r1");
    assert_eq!(points[7], "p3_q5over4_m1_r2");
}

#[test]
fn seed_flag_changes_random_suites() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = fixture("pipeline.toml");
    let run = |dir: &Path, seed: &str| {
        let o = gradheat(&["verify-integral", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap(), "--seed", seed]);
        assert_eq!(o.status.code(), Some(0));
        fs::read_to_string(dir.join("p3_q6over5_m1_r2/integral_spatial.csv")).unwrap()
    };
    assert_ne!(run(a.path(), "1"), run(b.path(), "2"));
}
