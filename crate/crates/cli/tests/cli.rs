use std::path::PathBuf;
use std::process::{Command, Output};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn micropol(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_micropol"))
        .args(args)
        .current_dir(root())
        .env_remove("MICROPOL_FUEL")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_source_level_prints_named_result() {
    let o = micropol(&["run", "--level", "src", "corpus/bnat_driver"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "Terminated two");
}

#[test]
fn every_level_gives_the_expected_result() {
    for level in ["src", "ic", "tgt"] {
        for dir in ["bool_not", "two_components", "exit_nested"] {
            let expected = std::fs::read_to_string(root().join("corpus").join(dir).join("expected")).unwrap();
            let o = micropol(&["run", "--level", level, &format!("corpus/{dir}")]);
            assert_eq!(stdout(&o).trim(), expected.trim(), "{dir} at {level}");
        }
    }
}

#[test]
fn attack_failstops_with_policy_reason() {
    let o = micropol(&["run", "--level", "tgt", "attacks/a2"]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(stdout(&o).trim(), "Failstop policy(jal-non-entry)");
}

#[test]
fn fuel_exhaustion_has_its_own_exit_code() {
    let o = micropol(&["run", "--fuel", "10", "corpus/bnat_driver"]);
    assert_eq!(o.status.code(), Some(5));
    assert_eq!(stdout(&o).trim(), "OutOfFuel");
    let o = Command::new(env!("CARGO_BIN_EXE_micropol"))
        .args(["run", "--level", "src", "corpus/bnat_driver"])
        .current_dir(root())
        .env("MICROPOL_FUEL", "3")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn parse_errors_carry_a_position() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.src");
    std::fs::write(&bad, "class A { A main(A x) { y } }\nobj a : A { }\n").unwrap();
    let o = micropol(&["check", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.src:1:25"), "{err}");
}

#[test]
fn compiled_target_runs_like_the_source() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("prog.tgt");
    let o = micropol(&["compile", "--to", "tgt", "corpus/bnat_add", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = micropol(&["run", out.to_str().unwrap()]);
    assert_eq!(stdout(&o).trim(), "Terminated three");
}

#[test]
fn compiled_interm_runs_like_the_source() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("prog.ic");
    let o = micropol(&[
        "compile",
        "--to",
        "ic",
        "corpus/counter_field",
        "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = micropol(&["run", "--level", "ic", out.to_str().unwrap()]);
    assert_eq!(stdout(&o).trim(), "Terminated two");
    let o = micropol(&["run", "--level", "src", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn diff_each_agrees_on_the_corpus() {
    let o = micropol(&["diff", "--each", "corpus"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 12, "{out}");
    assert!(out.lines().all(|l| l.contains(": agree;")), "{out}");
}

#[test]
fn attacks_all_pass() {
    let o = micropol(&["attacks"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(out.lines().filter(|l| l.contains(" PASS ")).count(), 8, "{out}");
}

#[test]
fn trace_ends_with_the_outcome() {
    let o = micropol(&["trace", "corpus/bool_not"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert!(lines[0].starts_with("0 boot+0 Const"), "{}", lines[0]);
    assert_eq!(*lines.last().unwrap(), "Terminated f");
    assert!(lines[lines.len() - 2].ends_with("Halt halt"));
}

#[test]
fn link_image_lists_tagged_cells() {
    let o = micropol(&["link", "--image", "corpus/bool_not"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(
        out.lines().all(|l| l.starts_with("region ") && l.contains(" @ (")),
        "{out}"
    );
}

#[test]
fn explicit_entry_selects_the_method() {
    let o = micropol(&["run", "--level", "src", "--entry", "Main.main", "m", "corpus/bool_not"]);
    assert_eq!(stdout(&o).trim(), "Terminated f");
    let o = micropol(&["run", "--entry", "Nope.main", "x", "corpus/bool_not"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unresolved_import_is_a_link_error() {
    let o = micropol(&["run", "corpus/bnat_driver/main.src"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}
