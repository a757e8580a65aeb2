//! End-to-end tests of the command line: exit codes, report shapes, error
//! wording and the color switch. Verdict correctness and byte-determinism
//! are covered by the acceptance suite; this file cares about the plumbing
//! around them.

use std::io::Write;
use std::process::{Command, Output};

use serde_json::Value;

const DEMO: &str = "examples/demo.st";

fn fairck_with(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fairck"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("the fairck binary runs")
}

fn fairck(args: &[&str]) -> Output {
    fairck_with(args, &[("FAIRCK_COLOR", "never")])
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("terminated by a signal")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is utf-8")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr is utf-8")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

#[test]
fn verdicts_set_the_exit_code() {
    let holds = fairck(&["term", DEMO, "-t", "T1"]);
    assert_eq!(code(&holds), 0);
    assert!(stdout(&holds).contains("fair termination of T1"));
    assert!(stdout(&holds).contains("holds"));

    let fails = fairck(&["term", DEMO, "-t", "R"]);
    assert_eq!(code(&fails), 1);
    assert!(stdout(&fails).contains("fails"));

    assert_eq!(code(&fairck(&["comp", DEMO, "-c", "R2", "-s", "S2", "--mode", "safety"])), 0);
    assert_eq!(code(&fairck(&["comp", DEMO, "-c", "R2", "-s", "S2", "--mode", "fair"])), 1);
    assert_eq!(code(&fairck(&["sub", DEMO, "-t", "T1", "-s", "S1", "--mode", "fair"])), 0);
    assert_eq!(code(&fairck(&["sub", DEMO, "-t", "Z", "-s", "N", "--mode", "safety"])), 1);
}

#[test]
fn json_reports_follow_the_schema() {
    let out = fairck(&["term", DEMO, "-t", "T1", "--json"]);
    assert_eq!(code(&out), 0);
    let report = json(&out);
    let keys: Vec<&str> = report
        .as_object()
        .expect("the report is an object")
        .keys()
        .map(String::as_str)
        .collect();
    let mut expected = vec![
        "command", "elapsed_ms", "holds", "judgment", "mode", "version", "witness",
    ];
    let mut sorted = keys.clone();
    sorted.sort_unstable();
    expected.sort_unstable();
    assert_eq!(sorted, expected);

    assert_eq!(report["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(report["command"], "term");
    assert_eq!(report["judgment"], "fair termination of T1");
    assert_eq!(report["mode"], "fair");
    assert_eq!(report["holds"], true);
    assert!(report["witness"].is_null(), "no witness without --explain");
    assert_eq!(report["elapsed_ms"], 0, "machine output pins the timing field");

    let comp = json(&fairck(&["comp", DEMO, "-c", "R2", "-s", "T2", "--mode", "safety", "--json"]));
    assert_eq!(comp["command"], "comp");
    assert_eq!(comp["judgment"], "compliance of ⟨R2, T2⟩");
    assert_eq!(comp["mode"], "safety");
}

#[test]
fn explain_attaches_the_witness_kind() {
    let trace = json(&fairck(&["term", DEMO, "-t", "R", "--explain", "--json"]));
    assert_eq!(trace["witness"]["kind"], "trace");

    let derivation =
        json(&fairck(&["comp", DEMO, "-c", "R2", "-s", "T2", "--mode", "fair", "--explain",
                       "--json"]));
    assert_eq!(derivation["witness"]["kind"], "derivation");

    let divergence =
        json(&fairck(&["sub", DEMO, "-t", "T2", "-s", "S2", "--mode", "fair", "--explain",
                       "--json"]));
    assert_eq!(divergence["witness"]["kind"], "divergence");

    let mismatch =
        json(&fairck(&["sub", DEMO, "-t", "Z", "-s", "N", "--mode", "safety", "--explain",
                       "--json"]));
    assert_eq!(mismatch["witness"]["kind"], "trace");

    let client = json(&fairck(&["sub", DEMO, "-t", "T2", "-s", "S2", "--mode", "fair",
                                "--synth-client", "--json"]));
    assert_eq!(client["witness"]["kind"], "client");
    let source = client["witness"]["source"].as_str().expect("the client carries its source");
    assert!(source.starts_with("alphabet {"), "the source is a self-contained file");

    let exhausted = json(&fairck(&["sub", DEMO, "-t", "T2", "-s", "S2", "--mode", "fair",
                                   "--synth-client", "--budget", "1", "--json"]));
    assert_eq!(exhausted["witness"]["kind"], "search_exhausted");
    assert_eq!(exhausted["witness"]["budget"], 1);
    assert_eq!(exhausted["holds"], false, "a missing witness does not change the verdict");
}

#[test]
fn synthesis_on_an_inapplicable_pair_is_a_note_not_an_error() {
    let out = fairck(&["sub", DEMO, "-t", "Z", "-s", "N", "--mode", "fair", "--synth-client",
                       "--explain", "--json"]);
    assert_eq!(code(&out), 1, "the fair verdict still fails");
    assert!(stderr(&out).contains("inapplicable"));
    assert_eq!(json(&out)["witness"]["kind"], "trace", "the explanation stays");
}

#[test]
fn errors_exit_two_and_explain_themselves() {
    let missing = fairck(&["term", "no-such-file.st", "-t", "T1"]);
    assert_eq!(code(&missing), 2);
    assert!(stderr(&missing).contains("no-such-file.st"));

    let unknown = fairck(&["term", DEMO, "-t", "Nope"]);
    assert_eq!(code(&unknown), 2);
    assert!(stderr(&unknown).contains("unknown type name `Nope`"));
    assert!(stderr(&unknown).contains("T1"), "the message lists what the file defines");

    let synth_safety =
        fairck(&["sub", DEMO, "-t", "T2", "-s", "S2", "--mode", "safety", "--synth-client"]);
    assert_eq!(code(&synth_safety), 2);
    assert!(stderr(&synth_safety).contains("--synth-client needs --mode fair"));

    let no_mode = fairck(&["comp", DEMO, "-c", "R2", "-s", "T2"]);
    assert_eq!(code(&no_mode), 2, "clap reports the missing --mode");

    let dir = tempfile::tempdir().expect("temp dir");
    let unguarded = dir.path().join("unguarded.st");
    std::fs::File::create(&unguarded)
        .and_then(|mut f| f.write_all(b"alphabet { a }\ntype X = X\n"))
        .expect("write the bad file");
    let out = fairck(&["parse", unguarded.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("unguarded recursion through `X`"));

    let garbled = dir.path().join("garbled.st");
    std::fs::write(&garbled, "what is this\n").expect("write the bad file");
    assert_eq!(code(&fairck(&["parse", garbled.to_str().unwrap()])), 2);
}

#[test]
fn parse_prints_the_normalized_system() {
    let out = fairck(&["parse", DEMO]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.starts_with("alphabet { true, false, z, p }"));
    assert!(text.contains("type T1 = "));
    assert!(text.contains("type Unusable = nil"));

    // Printing is a fixpoint: feeding the output back in reproduces it.
    let dir = tempfile::tempdir().expect("temp dir");
    let echo = dir.path().join("echo.st");
    std::fs::write(&echo, &text).expect("write the reprinted file");
    let again = fairck(&["parse", echo.to_str().unwrap()]);
    assert_eq!(code(&again), 0);
    assert_eq!(stdout(&again), text);
}

#[test]
fn selftest_reports_its_counts_and_catches_injected_faults() {
    let clean = fairck(&["selftest", "--max-states", "2", "--random", "10"]);
    assert_eq!(code(&clean), 0);
    let text = stdout(&clean);
    assert!(text.contains("exhaustive: "));
    assert!(text.contains("random: "));
    assert!(text.contains("holds"));

    let faulty =
        fairck(&["selftest", "--max-states", "2", "--random", "10", "--inject-fault"]);
    assert_eq!(code(&faulty), 1);
    assert!(stdout(&faulty).contains("the oracle says"));

    let faulty_json = json(&fairck(&["selftest", "--max-states", "2", "--random", "10",
                                     "--inject-fault", "--json"]));
    assert_eq!(faulty_json["holds"], false);
    assert_eq!(faulty_json["witness"]["kind"], "discrepancy");
    assert!(faulty_json["mode"].is_null(), "the sweep spans both modes");
}

#[test]
fn color_is_controlled_by_the_environment() {
    let plain = fairck_with(&["term", DEMO, "-t", "T1"], &[("FAIRCK_COLOR", "never")]);
    assert!(!stdout(&plain).contains('\u{1b}'));

    let painted = fairck_with(&["term", DEMO, "-t", "T1"], &[("FAIRCK_COLOR", "always")]);
    assert!(stdout(&painted).contains("\u{1b}["));
}
