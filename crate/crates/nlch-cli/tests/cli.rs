//! End-to-end checks of the binary: exit codes, error categories, and
//! bit-identical reruns.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nlch"))
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("nlch-bin-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

const FAST: &str = "\
[domain]
cells = 12
num_steps = 20
final_time = 0.2

[solver]
eps_schedule = 1e-1 1e-2
picard_max_iter = 500
";

#[test]
fn validate_kernel_newtonian_passes() {
    let dir = tmp_dir("vk");
    let cfg = write_config(&dir, "run.ini", "");
    let out = bin().arg("validate-kernel").arg(&cfg).output().unwrap();
    assert!(out.status.success(), "{out:?}");
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("alpha_k=1 pass"), "{stdout}");
    assert!(stdout.contains("beta_k=2 pass"), "{stdout}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn inadmissible_kernel_config_exits_2() {
    let dir = tmp_dir("gate");
    let cfg = write_config(&dir, "run.ini", "[kernel]\nkind = power_law\nalpha = 2.0\n");
    let out = bin().arg("solve").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("alpha_k < 3/2"), "{stderr}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn solve_decoupled_converges_by_second_iterate() {
    let dir = tmp_dir("decoupled");
    let body = format!("{FAST}[g]\nkind = constant\ng0 = 0.2\n");
    let cfg = write_config(&dir, "run.ini", &body);
    let out_dir = dir.join("out");
    let out = bin()
        .arg("solve")
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{out:?}");
    let ledger = std::fs::read_to_string(out_dir.join("ledger.csv")).unwrap();
    let rows: Vec<&str> = ledger.lines().skip(1).collect();
    assert_eq!(rows.len(), 2, "{ledger}");
    let final_residual: f64 = rows[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!(final_residual <= 1e-6, "{ledger}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn zero_outer_budget_exits_3_with_category() {
    let dir = tmp_dir("budget");
    let body = format!("{FAST}[solver]\nouter_max_iter = 0\n");
    let cfg = write_config(&dir, "run.ini", &body);
    let out = bin().arg("solve").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("error[outer-non-convergence]"), "{stderr}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn config_syntax_error_reports_line() {
    let dir = tmp_dir("syntax");
    let cfg = write_config(&dir, "run.ini", "[domain]\ncells\n");
    let out = bin().arg("solve").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("line 2"), "{stderr}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn reruns_are_bit_identical() {
    let dir = tmp_dir("repro");
    let cfg = write_config(&dir, "run.ini", FAST);
    let (d1, d2) = (dir.join("a"), dir.join("b"));
    for d in [&d1, &d2] {
        let out = bin()
            .arg("solve")
            .arg(&cfg)
            .arg("--out")
            .arg(d)
            .output()
            .unwrap();
        assert!(out.status.success(), "{out:?}");
    }
    for name in ["ledger.csv", "summary.txt", "mu_t0.2.bin", "rho_t0.2.csv"] {
        let a = std::fs::read(d1.join(name)).unwrap();
        let b = std::fs::read(d2.join(name)).unwrap();
        assert_eq!(a, b, "artifact {name} differs between reruns");
    }
    std::fs::remove_dir_all(&dir).ok();
}
