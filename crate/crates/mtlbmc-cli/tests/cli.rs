//! Black-box tests of the command-line interface: exit codes, stdout
//! verdict lines, and the JSON artifacts written by `--stats`, `--witness`
//! and `--dump-cnf`.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn mtlbmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mtlbmc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const SAFE_PROGRAM: &str = "shared int x;\nmain { x = 2 + 2; assert(x == 4); }\n";
const UNSAFE_PROGRAM: &str = "shared int x;\nmain { x = 2 + 2; assert(x == 5); }\n";

#[test]
fn safe_program_prints_safe_and_exits_zero() {
    let dir = TempDir::new().unwrap();
    let file = write(&dir, "p.mtl", SAFE_PROGRAM);
    for engine in ["cegar", "monolithic", "explicit"] {
        let out = mtlbmc(&["verify", &file, "--engine", engine]);
        assert_eq!(out.status.code(), Some(0), "{engine}: {}", stderr(&out));
        assert_eq!(stdout(&out).trim(), "SAFE", "{engine}");
    }
}

#[test]
fn unsafe_program_prints_unsafe_and_exits_one() {
    let dir = TempDir::new().unwrap();
    let file = write(&dir, "p.mtl", UNSAFE_PROGRAM);
    let out = mtlbmc(&["verify", &file]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    assert_eq!(stdout(&out).trim(), "UNSAFE");
}

#[test]
fn iteration_budget_exhaustion_reports_unknown() {
    let dir = TempDir::new().unwrap();
    // Safe, but the proof needs a few refinement rounds; a budget of one
    // solver call cannot finish.
    let file = write(
        &dir,
        "p.mtl",
        "shared int x = 1; shared int y = 1; shared int m; shared int n;\n\
         thread a { x = y + 1; m = y; x = 0; }\n\
         thread b { y = x + 1; n = x; y = 0; }\n\
         main { local int ta; local int tb; ta = spawn a; tb = spawn b;\n\
         join ta; join tb; assert(!(m == 1 && n == 1)); }\n",
    );
    let out = mtlbmc(&["verify", &file, "--max-iter", "1"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert_eq!(stdout(&out).trim(), "UNKNOWN");
}

#[test]
fn missing_file_and_parse_error_exit_three() {
    let out = mtlbmc(&["verify", "/nonexistent/p.mtl"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).starts_with("error:"), "{}", stderr(&out));

    let dir = TempDir::new().unwrap();
    let file = write(&dir, "p.mtl", "main { x = 1; }\n");
    let out = mtlbmc(&["verify", &file]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("not declared"), "{}", stderr(&out));
}

#[test]
fn stats_file_records_the_run() {
    let dir = TempDir::new().unwrap();
    let file = write(&dir, "p.mtl", SAFE_PROGRAM);
    let stats = dir.path().join("stats.json");
    let out = mtlbmc(&[
        "verify",
        &file,
        "--seed",
        "7",
        "--stats",
        stats.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&stats).unwrap()).unwrap();
    assert_eq!(json["engine"], "cegar");
    assert_eq!(json["verdict"], "SAFE");
    assert_eq!(json["seed"], 7);
    assert!(json["clauses_full"].as_u64().unwrap() > 0);
}

#[test]
fn witness_file_holds_a_schedule_ending_in_the_violation() {
    let dir = TempDir::new().unwrap();
    let file = write(&dir, "p.mtl", UNSAFE_PROGRAM);
    let witness = dir.path().join("witness.json");
    let out = mtlbmc(&["verify", &file, "--witness", witness.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&witness).unwrap()).unwrap();
    assert!(json["message"].as_str().unwrap().contains("assert"));
    let steps = json["steps"].as_array().unwrap();
    assert!(!steps.is_empty());
    assert!(steps
        .iter()
        .any(|s| s["writes"].get("x").map(|v| v.as_i64()) == Some(Some(4))));
}

#[test]
fn witness_file_is_not_written_for_safe_programs() {
    let dir = TempDir::new().unwrap();
    let file = write(&dir, "p.mtl", SAFE_PROGRAM);
    let witness = dir.path().join("witness.json");
    let out = mtlbmc(&["verify", &file, "--witness", witness.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(!witness.exists());
}

#[test]
fn dump_cnf_writes_dimacs_with_symbol_sidecar() {
    let dir = TempDir::new().unwrap();
    let file = write(&dir, "p.mtl", SAFE_PROGRAM);
    let cnf = dir.path().join("out.cnf");
    let out = mtlbmc(&[
        "verify",
        &file,
        "--dump-cnf",
        cnf.to_str().unwrap(),
        "--dump-component",
        "flow",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = fs::read_to_string(&cnf).unwrap();
    assert!(text.starts_with("p cnf "), "missing DIMACS header: {text}");
    let sidecar = dir.path().join("out.symbols.json");
    let symbols: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(sidecar).unwrap()).unwrap();
    assert!(symbols.as_object().is_some_and(|m| !m.is_empty()));

    let out = mtlbmc(&[
        "verify",
        &file,
        "--dump-cnf",
        cnf.to_str().unwrap(),
        "--dump-component",
        "bogus",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("unknown CNF component"));
}

#[test]
fn corpus_passes_on_matching_expectations() {
    let dir = TempDir::new().unwrap();
    write(&dir, "good.mtl", SAFE_PROGRAM);
    write(&dir, "good.expect", "SAFE\n");
    write(&dir, "bad.mtl", UNSAFE_PROGRAM);
    write(&dir, "bad.expect", "UNSAFE\n");
    let out = mtlbmc(&["corpus", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(
        text.contains("2 file(s), all verdicts as expected"),
        "{text}"
    );
}

#[test]
fn corpus_mismatch_exits_one_and_names_the_file() {
    let dir = TempDir::new().unwrap();
    write(&dir, "wrong.mtl", UNSAFE_PROGRAM);
    write(&dir, "wrong.expect", "SAFE\n");
    let out = mtlbmc(&["corpus", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(
        err.contains("mismatch: wrong.mtl expected SAFE got UNSAFE"),
        "{err}"
    );
}

#[test]
fn corpus_without_sidecar_still_reports_verdicts() {
    let dir = TempDir::new().unwrap();
    write(&dir, "lone.mtl", SAFE_PROGRAM);
    let out = mtlbmc(&["corpus", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("lone.mtl"), "{}", stdout(&out));
}

#[test]
fn corpus_directory_from_environment() {
    let dir = TempDir::new().unwrap();
    write(&dir, "good.mtl", SAFE_PROGRAM);
    write(&dir, "good.expect", "SAFE\n");
    let out = Command::new(env!("CARGO_BIN_EXE_mtlbmc"))
        .args(["corpus", "--jobs", "1"])
        .env("MTL_CORPUS", dir.path())
        .current_dir(dir.path())
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));

    let out = mtlbmc(&["corpus", "/nonexistent-corpus-dir"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn corpus_stats_json_summarizes_every_file() {
    let dir = TempDir::new().unwrap();
    write(&dir, "good.mtl", SAFE_PROGRAM);
    write(&dir, "good.expect", "SAFE\n");
    write(&dir, "bad.mtl", UNSAFE_PROGRAM);
    let stats = dir.path().join("summary.json");
    let out = mtlbmc(&[
        "corpus",
        dir.path().to_str().unwrap(),
        "--stats",
        stats.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&stats).unwrap()).unwrap();
    assert_eq!(json["engine"], "cegar");
    let files = json["files"].as_array().unwrap();
    assert_eq!(files.len(), 2);
    assert!(files.iter().all(|f| f["mismatch"] == false));
    assert!(files
        .iter()
        .any(|f| f["file"] == "bad.mtl" && f["verdict"] == "UNSAFE"));
}

/// The bundled corpus at the repository root stays green end to end.
#[test]
fn bundled_corpus_is_green() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    let out = mtlbmc(&["corpus", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(
        stdout(&out).contains("all verdicts as expected"),
        "{}",
        stdout(&out)
    );
}
