use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SUBCOMMANDS: &[&str] =
    &["validate-gates", "mc-dm", "simulate-cycle", "snr-sweep", "scan-rate", "exclusion", "reach"];

fn tests_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests")
}

fn fockscan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fockscan"))
        .args(args)
        .env_remove("FOCKSCAN_CONFIG")
        .env_remove("FOCKSCAN_SEED")
        .env_remove("FOCKSCAN_JOBS")
        .env_remove("FOCKSCAN_OUT")
        .env_remove("FOCKSCAN_BACKEND")
        .output()
        .expect("fockscan should launch")
}

fn run_into(command: &str, out: &Path) -> Vec<(String, Vec<u8>)> {
    let config = tests_dir().join("configs").join(format!("{command}.toml"));
    let output = fockscan(&[command, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(
        output.status.success(),
        "{command} exited with {:?}: {}",
        output.status.code(),
        String::from_utf8_lossy(&output.stderr)
    );
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(out)
        .unwrap()
        .map(|entry| {
            let path = entry.unwrap().path();
            (path.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&path).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn check_golden(command: &str) {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let a = run_into(command, first.path());
    let b = run_into(command, second.path());
    assert!(!a.is_empty(), "{command} wrote nothing");
    assert_eq!(a, b, "{command} is not byte-reproducible");

    let golden = tests_dir().join("golden");
    for (name, bytes) in &a {
        let path = golden.join(name);
        if std::env::var_os("UPDATE_GOLDEN").is_some() {
            fs::create_dir_all(&golden).unwrap();
            fs::write(&path, bytes).unwrap();
            continue;
        }
        let expected = fs::read(&path).unwrap_or_else(|_| panic!("missing golden file {}", path.display()));
        assert!(expected == *bytes, "{name} differs from its golden file; rerun with UPDATE_GOLDEN=1 if intended");
    }
}

#[test]
fn every_subcommand_matches_its_golden_output() {
    for command in SUBCOMMANDS {
        check_golden(command);
    }
}

#[test]
fn stdout_mode_prints_the_table() {
    let config = tests_dir().join("configs/exclusion.toml");
    let output = fockscan(&["exclusion", "--config", config.to_str().unwrap()]);
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    let golden = fs::read_to_string(tests_dir().join("golden/exclusion.csv")).unwrap();
    assert_eq!(text, golden);
}

#[test]
fn seed_override_changes_monte_carlo_only_through_the_seed() {
    let config = tests_dir().join("configs/mc-dm.toml");
    let path = config.to_str().unwrap();
    let a = fockscan(&["mc-dm", "--config", path, "--seed", "11"]);
    let b = fockscan(&["mc-dm", "--config", path, "--seed", "11"]);
    let c = fockscan(&["mc-dm", "--config", path, "--seed", "12"]);
    assert!(a.status.success() && c.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("bad.toml");
    fs::write(&path, body).unwrap();
    path
}

#[test]
fn invalid_inputs_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();

    let empty_grid = write_config(
        dir.path(),
        "[dm]\ncoupling_rad_per_s = 73.6\n[sweep]\nn_cavities = [1]\nfock = [0]\ntau_int_over_tau_dm = []\n",
    );
    let output = fockscan(&["snr-sweep", "--config", empty_grid.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));

    let output = fockscan(&["validate-gates", "--cavities", "3", "--scheme", "binary"]);
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("power-of-two"));

    let unknown = write_config(dir.path(), "[cavity]\nfreq_hz = 7e9\nwobble = 1\n");
    let output = fockscan(&["exclusion", "--config", unknown.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));

    let output = fockscan(&["snr-sweep"]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn forcing_the_full_backend_past_its_limit_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "[dm]\ncoupling_rad_per_s = 73.6\n[sweep]\nn_cavities = [8]\nfock = [5]\ntau_int_over_tau_dm = [1.0, 2.0]\n",
    );
    let output = fockscan(&["snr-sweep", "--config", config.to_str().unwrap(), "--backend", "full"]);
    assert_eq!(output.status.code(), Some(2));
}
