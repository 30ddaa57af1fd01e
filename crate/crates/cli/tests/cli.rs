use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn blowups(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blowups"))
        .args(args)
        .current_dir(dir)
        .env_remove("BLOWUPS_OUT")
        .output()
        .expect("binary runs")
}

fn ifs_file(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../ifs")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn verify_leaf_tile_structure() {
    let dir = tempfile::tempdir().unwrap();
    let leaf = ifs_file("leaf.json");
    let o = blowups(
        &["verify", "--suite", "theorem5", "--ifs", &leaf, "--depth", "6"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("0 failed"));
}

#[test]
fn failed_suites_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = blowups(
        &["verify", "--suite", "reversibility", "--ifs", &ifs_file("example3.json"), "--address", "(12)", "--depth", "6"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
}

#[test]
fn golden_strip_projection() {
    let dir = tempfile::tempdir().unwrap();
    let o = blowups(&["rifs", "--example", "fib", "--window", "40", "--project", "--csv", "orbit.csv"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("orbit.csv")).unwrap();
    assert!(csv.lines().count() > 60);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(blowups(&["verify", "--bogus"], dir.path()).status.code(), Some(2));
    assert_eq!(blowups(&["top", "--ifs", "nowhere.json", "--depth", "2"], dir.path()).status.code(), Some(2));
    assert_eq!(blowups(&["tiling", "--address", "(13)", "--level", "1"], dir.path()).status.code(), Some(2));
}

#[test]
fn config_order_applies() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), "resolution = 256\norder = \"2>1\"\n").unwrap();
    let o = blowups(&["--config", "run.toml", "top", "--ifs", "example3", "--depth", "3", "--out", "t.png"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("t.png").exists());
    let sidecar = std::fs::read_to_string(dir.path().join("t.txt")).unwrap();
    assert!(sidecar.contains("2>1"), "{sidecar}");
}

#[test]
fn tiling_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = blowups(
        &["tiling", "--resolution", "256", "--level", "3", "--labels", "--png", "--out", "leaf.svg"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["leaf.svg", "leaf.png", "leaf.txt"] {
        assert!(std::fs::metadata(dir.path().join(f)).unwrap().len() > 0, "{f}");
    }
}

#[test]
fn figures_go_to_the_environment_directory() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.toml"), "figure_resolution = 96\ndepth = 2\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_blowups"))
        .args(["--config", "small.toml", "figures"])
        .current_dir(dir.path())
        .env("BLOWUPS_OUT", "out")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let cfg = blowups_cli::config::Config::parse("figure_resolution = 96\ndepth = 2\n").unwrap();
    for f in blowups_cli::figures::expected_files(&cfg) {
        assert!(dir.path().join("out").join(&f).exists(), "{f}");
    }
}
