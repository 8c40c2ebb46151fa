mod common;

use common::*;
use flint_core::script::{parse_script, run_script, ScriptError};
use flint_core::vm::Chain;

const SCRIPTS: [(&str, &str); 4] = [
    ("bank.flint", "bank.jsonl"),
    ("simple_dao.flint", "simple_dao.jsonl"),
    ("counter.flint", "counter.jsonl"),
    ("atom.flint", "atom.jsonl"),
];

#[test]
fn corpus_scripts_pass_and_are_deterministic() {
    for (src, s) in SCRIPTS {
        let p = program(src);
        let text = script(s);
        let first = run_script(&p, Chain::default(), &text).unwrap();
        assert!(first.passed(), "{s}: {:?}", first.failure);
        let second = run_script(&p, Chain::default(), &text).unwrap();
        assert_eq!(first.to_json(), second.to_json(), "{s}");
    }
}

#[test]
fn failed_expectation_stops_the_script() {
    let p = program("bank.flint");
    let text = format!(
        "{}\n{}\n{}",
        r#"{"action":"deploy","contract":"Bank","as":"bank","caller":"0x00000000000000000000000000000000000000aa","args":["0x00000000000000000000000000000000000000aa"]}"#,
        r#"{"action":"call","to":"bank","function":"getManager","caller":"0x0000000000000000000000000000000000000001","expect":{"returns":"0x0000000000000000000000000000000000000001"}}"#,
        r#"{"action":"call","to":"bank","function":"register","caller":"0x0000000000000000000000000000000000000001"}"#,
    );
    let r = run_script(&p, Chain::default(), &text).unwrap();
    assert_eq!(r.failure.as_ref().map(|f| f.0), Some(2));
    assert_eq!(r.steps.len(), 2);
}

#[test]
fn comments_and_blank_lines_are_skipped() {
    let steps = parse_script("// setup\n\n{\"action\":\"fund\",\"address\":\"0x01\",\"amount\":\"5\"}\n").unwrap();
    assert_eq!(steps.len(), 1);
    assert_eq!(steps[0].line, 3);
}

#[test]
fn malformed_lines_are_errors() {
    assert!(matches!(parse_script("{\"action\":\"dance\"}"), Err(ScriptError::Parse { line: 1, .. })));
    let p = program("bank.flint");
    let text = r#"{"action":"call","to":"nowhere","function":"f","caller":"0x01"}"#;
    assert!(run_script(&p, Chain::default(), text).is_err());
}
