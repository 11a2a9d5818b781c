use std::path::PathBuf;
use std::process::{Command, Output};

use graphwreath_cli::{EXIT_INPUT, EXIT_OK, EXIT_UNDECIDED};

fn instance(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../instances").join(name)
}

fn gwrf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gwrf")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn path(name: &str) -> String {
    instance(name).to_string_lossy().into_owned()
}

#[test]
fn check_reports_verdicts() {
    let o = gwrf(&["check", &path("ex11.instance")]);
    assert_eq!(code(&o), EXIT_OK);
    assert!(stdout(&o).starts_with("RESIDUALLY FINITE"), "{}", stdout(&o));
    assert!(stdout(&o).contains("|t|+2"));

    let o = gwrf(&["check", &path("ex12.instance")]);
    assert_eq!(code(&o), EXIT_OK);
    assert!(stdout(&o).starts_with("NOT RESIDUALLY FINITE (vertex commutator witness)"), "{}", stdout(&o));

    let o = gwrf(&["check", &path("ex13.instance")]);
    assert!(stdout(&o).starts_with("NOT RESIDUALLY FINITE (pair commutator witness)"), "{}", stdout(&o));

    for (name, rf) in [("complete-c2.instance", true), ("complete-s3.instance", false), ("k5.instance", true), ("free-product.instance", true)] {
        let o = gwrf(&["check", &path(name)]);
        assert_eq!(stdout(&o).starts_with("RESIDUALLY FINITE"), rf, "{name}: {}", stdout(&o));
    }
}

#[test]
fn element_arithmetic() {
    let ex11 = path("ex11.instance");
    let o = gwrf(&["normalize", &ex11, "--element", "w1"]);
    assert_eq!(stdout(&o).lines().next(), Some("(1@a:0 1@a:2; 0)"));
    let o = gwrf(&["mul", &ex11, "--element", "x", "--element", "y"]);
    assert_eq!(stdout(&o).lines().next(), Some("(1@a:0 1@a:1; 0)"));
    let o = gwrf(&["invert", &ex11, "--element", "{ word = [{ v = \"a:3\", g = 1 }], gamma = 2 }"]);
    assert_eq!(code(&o), EXIT_OK);
    assert_eq!(stdout(&o).lines().next(), Some("(1@a:1; -2)"));
    let o = gwrf(&["mul", &ex11, "--element", "x"]);
    assert_eq!(code(&o), EXIT_INPUT);
}

#[test]
fn separation_and_undecided_exit() {
    let ex11 = path("ex11.instance");
    let o = gwrf(&["separate", &ex11, "--element", "w1"]);
    assert_eq!(code(&o), EXIT_OK);
    assert!(stdout(&o).contains("4Z"), "{}", stdout(&o));
    let o = gwrf(&["--bound", "3", "separate", &ex11, "--element", "w1"]);
    assert_eq!(code(&o), EXIT_UNDECIDED);
    let o = gwrf(&["separate", &ex11, "--element", "{ gamma = 0 }"]);
    assert_eq!(code(&o), EXIT_INPUT);
}

#[test]
fn witness_kinds() {
    let o = gwrf(&["witness", &path("ex12.instance"), "--kind", "vertex-commutator", "--v", "a:0"]);
    assert_eq!(code(&o), EXIT_OK, "{}", stderr(&o));
    let o = gwrf(&["witness", &path("ex13.instance"), "--kind", "pair-commutator", "--v", "a:0", "--w", "a:1"]);
    assert_eq!(code(&o), EXIT_OK, "{}", stderr(&o));
    let o = gwrf(&["witness", &path("ex13.instance"), "--kind", "orbit-ratio", "--v", "a:0", "--w", "a:1"]);
    assert_eq!(code(&o), EXIT_UNDECIDED);
    let o = gwrf(&["witness", &path("ex11.instance"), "--kind", "vertex-commutator", "--v", "a:0"]);
    assert_ne!(code(&o), EXIT_OK);
}

#[test]
fn finite_presentation_and_quotients() {
    let o = gwrf(&["check-fp", &path("ex11.instance")]);
    assert!(stdout(&o).starts_with("FINITELY PRESENTED"), "{}", stdout(&o));
    let o = gwrf(&["check-fp", &path("ex12.instance")]);
    assert!(stdout(&o).starts_with("NOT FINITELY PRESENTED"), "{}", stdout(&o));
    let o = gwrf(&["quotient", &path("ex11.instance"), "--modulus", "3"]);
    assert_eq!(code(&o), EXIT_OK);
    let o = gwrf(&["quotient", &path("ex11.instance"), "--modulus", "0"]);
    assert_eq!(code(&o), EXIT_INPUT);
}

#[test]
fn structured_output_is_deterministic() {
    let runs = [
        vec!["check", "ex11.instance"],
        vec!["check", "ex12.instance"],
        vec!["separate", "ex11.instance", "--element", "w1"],
        vec!["separate", "k5.instance", "--element", "x"],
        vec!["lef", "ex12.instance", "--act", "0;1", "--vertices", "a:0;a:1;a:2"],
    ];
    for args in runs {
        let full: Vec<String> = std::iter::once("--format".to_string())
            .chain(std::iter::once("structured".to_string()))
            .chain(args.iter().map(|a| if a.ends_with(".instance") { path(a) } else { a.to_string() }))
            .collect();
        let refs: Vec<&str> = full.iter().map(String::as_str).collect();
        let first = gwrf(&refs);
        let second = gwrf(&refs);
        assert_eq!(code(&first), EXIT_OK, "{args:?}: {}", stderr(&first));
        assert_eq!(first.stdout, second.stdout, "{args:?}");
        let text = stdout(&first);
        assert!(text.starts_with("{\"schema\":\"gwrf\",\"version\":1,"), "{text}");
        assert_eq!(text.lines().count(), 2);
    }
}

#[test]
fn certificates_verify_after_writing() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("ex11.instance", vec!["separate", "--element", "w1"]),
        ("k5.instance", vec!["separate", "--element", "x"]),
        ("ex12.instance", vec!["witness", "--kind", "vertex-commutator", "--v", "a:0"]),
        ("ex12.instance", vec!["lef", "--act", "0;1", "--vertices", "a:0;a:1;a:2"]),
        ("ex11.instance", vec!["check"]),
        ("ex13.instance", vec!["check"]),
    ];
    for (i, (name, args)) in cases.iter().enumerate() {
        let file = dir.path().join(format!("cert{i}.jsonl"));
        let file = file.to_string_lossy().into_owned();
        let mut full = vec!["--format", "structured", "--output", &file, args[0]];
        let inst = path(name);
        full.push(&inst);
        full.extend(&args[1..]);
        let o = gwrf(&full);
        assert_eq!(code(&o), EXIT_OK, "{full:?}: {}", stderr(&o));
        assert!(o.stdout.is_empty());
        let o = gwrf(&["verify", &inst, &file]);
        assert_eq!(code(&o), EXIT_OK, "{name} {args:?}: {}{}", stdout(&o), stderr(&o));

        // The same certificate against a different instance is rejected.
        let other = if *name == "ex11.instance" { path("ex11-s3.instance") } else { path("free-product.instance") };
        let o = gwrf(&["verify", &other, &file]);
        assert_ne!(code(&o), EXIT_OK, "{name} {args:?} verified against {other}");
    }
}

#[test]
fn tampered_certificate_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("sep.jsonl");
    let inst = path("ex11.instance");
    let o = gwrf(&["--format", "structured", "--output", file.to_str().unwrap(), "separate", &inst, "--element", "w1"]);
    assert_eq!(code(&o), EXIT_OK);
    let text = std::fs::read_to_string(&file).unwrap();
    std::fs::write(&file, text.replace("\"modulus\":4", "\"modulus\":3")).unwrap();
    let o = gwrf(&["verify", &inst, file.to_str().unwrap()]);
    assert_eq!(code(&o), EXIT_INPUT, "{}", stdout(&o));
}

#[test]
fn input_errors_name_line_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.instance");
    let text = std::fs::read_to_string(instance("ex11.instance")).unwrap().replace("offsets = [1]", "offsets = [0]");
    std::fs::write(&file, text).unwrap();
    let o = gwrf(&["check", file.to_str().unwrap()]);
    assert_eq!(code(&o), EXIT_INPUT);
    let err = stderr(&o);
    assert!(err.contains("line 13") && err.contains("families"), "{err}");

    let o = gwrf(&["check", "/nonexistent/file.instance"]);
    assert_eq!(code(&o), EXIT_INPUT);
    let o = gwrf(&["frobnicate"]);
    assert_eq!(code(&o), EXIT_INPUT);
    let o = gwrf(&["--help"]);
    assert_eq!(code(&o), EXIT_OK);
}

#[test]
fn library_entry_point_matches_binary() {
    let inst = path("ex11.instance");
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code_lib = graphwreath_cli::run(["gwrf", "check", &inst], &mut out, &mut err);
    let o = gwrf(&["check", &inst]);
    assert_eq!(code_lib, code(&o));
    assert_eq!(out, o.stdout);
}
