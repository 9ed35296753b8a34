use std::path::Path;
use std::process::{Command, Output};

fn blocksub(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blocksub"))
        .args(args)
        .env_remove("BLOCKSUB_MEMORY_BUDGET")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn file(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap()
}

#[test]
fn generate_small_pgm() {
    let o = blocksub(&["generate", "--iterations", "2", "--format", "pgm"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "P2");
    assert_eq!(lines[2], "18 18");
    assert_eq!(lines.len(), 4 + 18);
    assert!(lines[4..].iter().all(|l| l.split(' ').count() == 18));
}

#[test]
fn csv_outputs_start_with_config_header() {
    let dir = tempfile::tempdir().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["generate", "--iterations", "1"],
        vec!["autocorr", "--radius", "2"],
        vec!["wiener", "--levels", "3"],
        vec!["riesz", "--mode", "series", "--level", "1"],
    ];
    for (i, args) in cases.iter().enumerate() {
        let path = dir.path().join(format!("{i}.csv"));
        let mut full = args.clone();
        let p = path.to_str().unwrap();
        full.extend(["--out", p]);
        let o = blocksub(&full);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        let text = String::from_utf8(file(&path)).unwrap();
        assert!(text.starts_with(&format!("# command={}\n", args[0])), "{text}");
    }
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let runs: Vec<Vec<&str>> = vec![
        vec!["riesz", "--mode", "density", "--level", "3", "--grid", "81"],
        vec!["riesz", "--mode", "via-eta", "--grid", "27"],
        vec!["generate", "--iterations", "3"],
        vec!["wiener", "--levels", "4"],
        vec!["autocorr", "--radius", "3", "--bruteforce", "--window", "81", "--iterations", "5"],
    ];
    for (i, args) in runs.iter().enumerate() {
        let mut outputs = Vec::new();
        for threads in ["1", "4"] {
            let path = dir.path().join(format!("{i}-{threads}.csv"));
            let mut full = vec!["--threads", threads];
            full.extend(args.iter().copied());
            full.extend(["--out", path.to_str().unwrap()]);
            let o = blocksub(&full);
            assert!(o.status.success(), "{args:?}");
            outputs.push(file(&path));
        }
        assert_eq!(outputs[0], outputs[1], "{args:?}");
    }
}

#[test]
fn heatmap_writes_scale_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f3.pgm");
    let o = blocksub(&[
        "riesz", "--mode", "density", "--level", "3", "--grid", "81", "--format", "pgm", "--out",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(String::from_utf8(file(&path)).unwrap().starts_with("P2\n81 81\n255\n"));
    let side = std::fs::read_to_string(dir.path().join("f3.pgm.scale.txt")).unwrap();
    assert!(side.starts_with("min="));
    // a heatmap needs a file for its sidecar
    let o = blocksub(&["riesz", "--format", "pgm"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn classify_reports_key_values() {
    let o = blocksub(&["classify", "--levels", "4"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("conclusion=singular_continuous"));
    assert!(text.contains("purity=pure"));
    let o = blocksub(&["classify", "--map", "builtin:thue-morse", "--levels", "10"]);
    assert!(stdout(&o).contains("conclusion=singular_continuous"));
}

#[test]
fn map_files_are_read() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tm.txt");
    std::fs::write(&path, "# Thue-Morse\ndim 1\nsize 2\nblock\n+ -\n").unwrap();
    let o = blocksub(&["autocorr", "--map", path.to_str().unwrap(), "--radius", "1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("\n1,-1,3,"), "{text}");

    std::fs::write(&path, "dim 1\nsize 2\nblock\n+ x\n").unwrap();
    let o = blocksub(&["classify", "--map", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn exit_codes() {
    assert_eq!(blocksub(&["--bogus"]).status.code(), Some(2));
    assert_eq!(blocksub(&["classify", "--map", "builtin:nope"]).status.code(), Some(2));
    assert_eq!(blocksub(&["wiener", "--section", "5"]).status.code(), Some(2));
    assert_eq!(
        blocksub(&["classify", "--map", "/definitely/not/here"]).status.code(),
        Some(3)
    );
    assert_eq!(
        blocksub(&["--memory-budget", "1000", "generate", "--iterations", "6"]).status.code(),
        Some(4)
    );
    assert_eq!(blocksub(&["--memory-budget", "0", "classify"]).status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_blocksub"))
        .args(["riesz", "--grid", "729"])
        .env("BLOCKSUB_MEMORY_BUDGET", "4096")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn factor_checks() {
    let o = blocksub(&[
        "factor", "--iterations", "5", "--check-consistency", "--check-model-set",
        "--fiber-samples", "300",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("legal_patches=14"));
    assert!(text.contains("consistency=pass orientation=Identity"));
    assert!(text.contains("branch=A_plus_nonempty points=26569 mismatches=0 partition_failures=0"));
    assert!(text.contains("not_globally_two_to_one="));
    // a window larger than the patch cannot be checked
    let o = blocksub(&["factor", "--iterations", "2", "--check-model-set"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn help_lists_flags() {
    let text = stdout(&blocksub(&["riesz", "--help"]));
    for flag in ["--mode", "--level", "--grid", "--truncation", "--section", "--out", "--format", "--memory-budget", "--threads"] {
        assert!(text.contains(flag), "{flag}");
    }
    let text = stdout(&blocksub(&["factor", "--help"]));
    for flag in ["--check-consistency", "--check-model-set", "--fiber-samples"] {
        assert!(text.contains(flag), "{flag}");
    }
}
