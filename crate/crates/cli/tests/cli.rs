use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value as Json;

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

fn vdmrec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vdmrec")).args(args).env_remove("VDMREC_TOOLKIT").output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn analyze_json(file: &Path) -> Json {
    let o = vdmrec(&["analyze", "--format", "json", path(file)]);
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{}: {e}\n{}", file.display(), stdout(&o)))
}

/// Writes a mutated copy of a corpus file under `dir`, keeping its stem.
fn mutated(dir: &Path, name: &str, f: impl Fn(&str) -> String) -> PathBuf {
    let text = std::fs::read_to_string(corpus(name)).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, f(&text)).unwrap();
    p
}

#[test]
fn translate_writes_theories() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("thy");
    let o = vdmrec(&["translate", path(&corpus("fact.vdmsl")), path(&corpus("evenodd.vdmsl")), "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for thy in ["Fact", "Evenodd"] {
        let got = std::fs::read_to_string(out.join(format!("{thy}.thy"))).unwrap();
        let want = std::fs::read_to_string(corpus(&format!("golden/{thy}.thy"))).unwrap();
        assert_eq!(got, want, "{thy}");
    }
    assert!(stderr(&o).contains("warning[missing-witness]"));
}

#[test]
fn translate_to_stdout_with_toolkit_override() {
    let o = Command::new(env!("CARGO_BIN_EXE_vdmrec"))
        .args(["translate", path(&corpus("fact.vdmsl"))])
        .env("VDMREC_TOOLKIT", "MyToolkit")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("theory Fact\n  imports MyToolkit\nbegin\n"));
    let o = vdmrec(&["translate", "--toolkit", "Other", path(&corpus("fact.vdmsl"))]);
    assert!(stdout(&o).contains("imports Other\n"));
}

#[test]
fn unsupported_construct_exits_one() {
    let o = vdmrec(&["translate", path(&corpus("unsupported.vdmsl"))]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("unsupported.vdmsl:4:16: error[unsupported-construct]"), "{err}");
}

#[test]
fn nested_call_without_annotation_fails_only_when_strict() {
    let dir = tempfile::tempdir().unwrap();
    let ack = mutated(dir.path(), "ack.vdmsl", |t| t.lines().filter(|l| !l.contains("@IsaMeasure")).collect::<Vec<_>>().join("\n"));
    let lax = vdmrec(&["translate", path(&ack)]);
    assert_eq!(lax.status.code(), Some(0));
    assert!(stderr(&lax).contains("warning[synthesis-failure]"));
    let strict = vdmrec(&["translate", "--strict", path(&ack)]);
    assert_eq!(strict.status.code(), Some(1));
    let err = stderr(&strict);
    assert!(err.contains("error[synthesis-failure]") && err.contains("NestedCall"), "{err}");
}

#[test]
fn missing_input_and_unwritable_output_exit_two() {
    let o = vdmrec(&["translate", "/nonexistent/x.vdmsl"]);
    assert_eq!(o.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("plain");
    std::fs::write(&file, "").unwrap();
    let o = vdmrec(&["translate", path(&corpus("fact.vdmsl")), "--out", path(&file.join("sub"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn exit_codes_are_deterministic() {
    for args in [&["translate", "unsupported.vdmsl"][..], &["check", "--bounded", "perm.vdmsl"], &["analyze", "tak.vdmsl"]] {
        let mut a: Vec<String> = args.iter().map(|s| s.to_string()).collect();
        let last = a.pop().unwrap();
        a.push(path(&corpus(&last)).to_string());
        let a: Vec<&str> = a.iter().map(String::as_str).collect();
        let first = vdmrec(&a);
        let second = vdmrec(&a);
        assert_eq!(first.status.code(), second.status.code());
        assert_eq!(first.stdout, second.stdout);
        assert_eq!(first.stderr, second.stderr);
    }
}

#[test]
fn check_prints_fact_obligations() {
    let o = vdmrec(&["check", path(&corpus("fact.vdmsl"))]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("Proof Obligation 1: (Unproved) fact; measure_fact: total function obligation\n"));
    assert!(out.contains("Proof Obligation 2: (Unproved) fact: subtype obligation\n"));
    assert!(out.contains("Proof Obligation 3: (Unproved) fact: recursive function obligation\n"));
    assert_eq!(out.matches("Proof Obligation").count(), 3);
}

#[test]
fn bounded_check_refutes_constant_measure() {
    let dir = tempfile::tempdir().unwrap();
    let fact = mutated(dir.path(), "fact.vdmsl", |t| t.replace("measure n;", "measure 7;"));
    let o = vdmrec(&["check", "--bounded", path(&fact)]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("Proof Obligation 3 (fact): FAILS for n=1 "), "{out}");
    assert!(out.contains("NoDecrease at fact(1) -> fact(0)"), "{out}");

    let o = vdmrec(&["check", "--bounded", path(&corpus("fact.vdmsl"))]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn bounded_check_accepts_perm_and_collections() {
    let o = vdmrec(&["check", "--bounded", "--int-range", "-3..3", path(&corpus("perm.vdmsl"))]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("measure_perm: 255 samples"));
    for f in ["sumset.vdmsl", "sum_elems.vdmsl", "evenodd.vdmsl"] {
        let o = vdmrec(&["check", "--bounded", "--int-range=0..4", path(&corpus(f))]);
        assert_eq!(o.status.code(), Some(0), "{f}: {}", stdout(&o));
    }
}

#[test]
fn bad_flags_are_rejected() {
    for range in ["3..1", "x..2", "5"] {
        let o = vdmrec(&["check", "--int-range", range, path(&corpus("fact.vdmsl"))]);
        assert_eq!(o.status.code(), Some(2), "{range}");
    }
    let o = vdmrec(&["check", "--base-set-size", "0", path(&corpus("fact.vdmsl"))]);
    assert_eq!(o.status.code(), Some(2));
    let o = vdmrec(&["oracle", path(&corpus("fact.vdmsl")), "--fn", "fact", "--args", "1", "--choice", "any"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn analyze_reports_groups_and_wrappers() {
    let j = analyze_json(&corpus("evenodd.vdmsl"));
    assert_eq!(j["groups"], serde_json::json!([["even", "odd"]]));
    let j = analyze_json(&corpus("evenodd_noann.vdmsl"));
    assert_eq!(j["groups"], serde_json::json!([["even", "odd"]]));

    let j = analyze_json(&corpus("fact.vdmsl"));
    assert_eq!(j["groups"], serde_json::json!([["fact"]]));
    let f = &j["functions"][0];
    assert_eq!(f["kind"], "Simple");
    assert_eq!(f["call_sites"].as_array().unwrap().len(), 1);
    assert_eq!(f["call_sites"][0]["guards"], serde_json::json!([{ "cond": "n = 0", "positive": false }]));
    assert_eq!(f["measure"]["wrapper"], "GenVDMNatTerm");
    assert_eq!(f["measure"]["source"], "Synthesized");

    let j = analyze_json(&corpus("nonrec.vdmsl"));
    assert_eq!(j["groups"], serde_json::json!([]));

    let j = analyze_json(&corpus("ack.vdmsl"));
    let nested: Vec<bool> = j["functions"][0]["call_sites"].as_array().unwrap().iter().map(|s| s["nested"].as_bool().unwrap()).collect();
    assert_eq!(nested.iter().filter(|n| **n).count(), 1);
    assert_eq!(nested.len(), 3);
}

#[test]
fn analyze_json_matches_schema() {
    let schema: Json =
        serde_json::from_str(&std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/analyze.schema.json")).unwrap())
            .unwrap();
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");
    let mut seen = 0;
    for entry in std::fs::read_dir(corpus("")).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "vdmsl") {
            let report = analyze_json(&p);
            let errors: Vec<String> = validator.iter_errors(&report).map(|e| format!("{} at {}", e, e.instance_path)).collect();
            assert!(errors.is_empty(), "{}: {errors:?}", p.display());
            seen += 1;
        }
    }
    assert!(seen >= 10);
    assert!(!validator.is_valid(&serde_json::json!({ "file": "x", "module": "X", "groups": [[]], "functions": [], "diagnostics": [] })));
}

#[test]
fn analyze_text_lists_sites() {
    let o = vdmrec(&["analyze", path(&corpus("sum_elems.vdmsl"))]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("group {sum_elems}"), "{out}");
    assert!(out.contains("with let"), "{out}");
}

#[test]
fn oracle_evaluates_and_traces() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.json");
    let o = vdmrec(&["oracle", path(&corpus("ack.vdmsl")), "--fn", "ack", "--args", "2, 1", "--trace", path(&trace)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("ack(2, 1) = 5"));
    let t: Json = serde_json::from_str(&std::fs::read_to_string(&trace).unwrap()).unwrap();
    assert_eq!(t["result"]["value"], "5");
    assert_eq!(t["events"][0]["caller_args"], "mk_(2, 1)");
    assert!(t["events"].as_array().unwrap().len() > 1);

    let o = vdmrec(&["oracle", path(&corpus("sumset.vdmsl")), "--fn", "sumset", "--args", "{1, 2, 3}", "--choice", "max"]);
    assert!(stdout(&o).starts_with("sumset({1, 2, 3}) = 6"));
    assert!(stdout(&o).contains("0 violations"));
}

#[test]
fn oracle_reports_fuel_and_bad_arguments() {
    let o = vdmrec(&["oracle", path(&corpus("ack.vdmsl")), "--fn", "ack", "--args", "3, 3", "--fuel", "50"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("fuel exhausted"));
    let o = vdmrec(&["oracle", path(&corpus("fact.vdmsl")), "--fn", "fact", "--args", "1 +"]);
    assert_eq!(o.status.code(), Some(1));
    let o = vdmrec(&["oracle", path(&corpus("fact.vdmsl")), "--fn", "nope", "--args", "1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn oracle_sweeps_the_universe() {
    let o = vdmrec(&["oracle", path(&corpus("fact.vdmsl")), "--fn", "fact", "--int-range", "0..5"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("fact(5) = 120"));
    assert!(out.contains("measure_fact: 15 calls checked, 0 violations"), "{out}");
}
