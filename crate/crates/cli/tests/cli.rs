use std::path::Path;
use std::process::{Command, Output};

use gauge_peps::report::Report;
use sha2::{Digest, Sha256};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gauge-peps")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

const U1_FERMIONIC: &str = r#"
seed = 3

[group]
kind = "U1"
physical = ["0", "1"]
physical_odd = ["0", "-1"]
links = ["-1", "0", "1"]
degeneracy = { "-1" = 1, "0" = 1, "1" = 1 }

[lattice]
matter = "fermionic"
"#;

#[test]
fn build_then_check_archives_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["build", "--seed", "11", "--out", path(dir.path())]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["vertex", "link", "unified"] {
        let file = dir.path().join(format!("{name}.txt"));
        let out = run(&["check", "--seed", "11", "--archive", path(&file)]);
        assert_eq!(code(&out), 0, "{name}: {}", String::from_utf8_lossy(&out.stdout));
        assert!(String::from_utf8_lossy(&out.stdout).starts_with("PASS archive/"));
    }
}

#[test]
fn corrupted_archive_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["build", "--seed", "12", "--out", path(dir.path())])), 0);
    let file = dir.path().join("vertex.txt");
    let mut text = std::fs::read_to_string(&file).unwrap();
    text.push_str("0 1 0 0 0 1.0000000000000000e-1 0.0000000000000000e0\n");
    std::fs::write(&file, text).unwrap();
    let out = run(&["check", "--seed", "12", "--archive", path(&file), "--out", path(dir.path())]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL archive/vertex-gauss"));
    assert_eq!(code(&run(&["report", "--out", path(dir.path())])), 1);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&run(&[])), 2);
    assert_eq!(code(&run(&["check", "--suite", "links"])), 2, "a seed is required");
    assert_eq!(code(&run(&["check", "--seed", "1", "--suite", ""])), 2);
    assert_eq!(code(&run(&["check", "--seed", "1", "--suite", "links,nonsense"])), 2);
    assert_eq!(code(&run(&["check", "--seed", "1", "--suite", "links", "--tolerance", "-1"])), 2);
    assert_eq!(code(&run(&["check", "--seed", "nine"])), 2);
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["report", "--out", path(dir.path())])), 2, "no reports");
    assert_eq!(code(&run(&["check", "--seed", "1", "--archive", path(&dir.path().join("missing.txt"))])), 2);
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("unknown.toml", "seed = 1\ncolour = \"red\"\n"),
        ("section.toml", "[lattice]\nshape = 2\n"),
        ("label.toml", "[group]\nkind = \"U1\"\nphysical = [\"1/2\"]\n"),
        ("syntax.toml", "seed = \n"),
    ];
    for (name, text) in cases {
        let file = dir.path().join(name);
        std::fs::write(&file, text).unwrap();
        let out = run(&["check", "--config", path(&file), "--seed", "1"]);
        assert_eq!(code(&out), 2, "{name}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn oversized_lattices_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    for (name, matter) in [("bosonic.toml", "bosonic"), ("fermionic.toml", "fermionic")] {
        let file = dir.path().join(name);
        std::fs::write(&file, format!("seed = 1\n\n[lattice]\nwidth = 4\nheight = 4\nmatter = \"{matter}\"\n")).unwrap();
        let out = run(&["contract", "--config", path(&file), "--out", path(dir.path())]);
        assert_eq!(code(&out), 3, "{matter}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stderr).contains("exceeds"));
    }
}

#[test]
fn report_carries_seed_and_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("run.toml");
    let text = "seed = 21\nsuites = [\"links\", \"controls\"]\n";
    std::fs::write(&file, text).unwrap();
    let out = run(&["check", "--config", path(&file), "--out", path(dir.path())]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let reports = Report::collect(dir.path()).unwrap();
    assert_eq!(reports.len(), 2);
    let expected = format!("{:x}", Sha256::digest(text.as_bytes()));
    for r in &reports {
        assert_eq!(r.seed, Some(21));
        assert_eq!(r.config_hash, expected);
        assert!(r.passed && !r.checks.is_empty());
    }
    let summary = run(&["report", "--out", path(dir.path())]);
    assert_eq!(code(&summary), 0);
    assert_eq!(String::from_utf8_lossy(&summary.stdout).lines().count(), 2);
}

#[test]
fn command_line_seed_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("run.toml");
    std::fs::write(&file, "seed = 21\n").unwrap();
    assert_eq!(code(&run(&["check", "--config", path(&file), "--seed", "5", "--suite", "links", "--out", path(dir.path())])), 0);
    let reports = Report::collect(dir.path()).unwrap();
    assert_eq!(reports[0].seed, Some(5));
}

#[test]
fn tiny_tolerance_turns_checks_into_failures() {
    let out = run(&["check", "--seed", "2", "--suite", "links", "--tolerance", "1e-300"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn fermionic_pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("u1.toml");
    std::fs::write(&file, U1_FERMIONIC).unwrap();
    let cfg = path(&file);
    let out_dir = path(dir.path());
    assert_eq!(code(&run(&["build", "--config", cfg, "--out", out_dir])), 0);
    let operator = dir.path().join("operator-0.txt");
    assert!(operator.exists());
    assert_eq!(code(&run(&["check", "--config", cfg, "--archive", path(&operator)])), 0);
    let out = run(&["contract", "--config", cfg, "--out", out_dir]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("dimension 1296"));
    let state = dir.path().join("state.txt");
    let out = run(&["check", "--config", cfg, "--archive", path(&state)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("archive/state-local-invariance"));
}
