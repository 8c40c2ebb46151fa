#![allow(dead_code)]

use std::path::{Path, PathBuf};

use flint_core::diagnostics::Diagnostic;
use flint_core::lowering::ir::IRProgram;
use flint_core::pipeline::{analyze, compile};
use flint_core::stdlib::StdlibMode;
use flint_core::vm::abi::AbiValue;
use flint_core::vm::{CallResult, Chain, Transaction};
use primitive_types::{H160, U256};

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

pub fn corpus(name: &str) -> String {
    std::fs::read_to_string(corpus_dir().join(name)).unwrap()
}

pub fn script(name: &str) -> String {
    std::fs::read_to_string(corpus_dir().join("scripts").join(name)).unwrap()
}

pub fn program(file: &str) -> IRProgram {
    let src = corpus(file);
    match compile(&[(file, &src)], StdlibMode::Full) {
        Ok((p, _)) => p,
        Err(a) => panic!("{file}: {:#?}", a.diagnostics),
    }
}

pub struct GoldenCase {
    pub name: String,
    pub code: String,
    pub line: u32,
    pub source: String,
    pub fixed: String,
}

/// Cases under tests/golden: `name.flint` starts with `// expect: CODE @ LINE`
/// and `name.fixed.flint` must compile without diagnostics.
pub fn golden_cases() -> Vec<GoldenCase> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let mut names: Vec<String> = std::fs::read_dir(&dir)
        .unwrap()
        .filter_map(|e| e.ok()?.file_name().into_string().ok())
        .filter(|n| n.ends_with(".flint") && !n.ends_with(".fixed.flint"))
        .map(|n| n.trim_end_matches(".flint").to_string())
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|name| {
            let source = std::fs::read_to_string(dir.join(format!("{name}.flint"))).unwrap();
            let fixed = std::fs::read_to_string(dir.join(format!("{name}.fixed.flint"))).unwrap();
            let header = source.lines().next().unwrap().trim_start_matches("// expect:").trim();
            let (code, line) = header.split_once(" @ ").unwrap();
            GoldenCase { name, code: code.to_string(), line: line.parse().unwrap(), source, fixed }
        })
        .collect()
}

pub fn diagnostics(name: &str, src: &str) -> Vec<Diagnostic> {
    analyze(&[(name, src)], StdlibMode::Full).diagnostics
}

/// Checks one case: exactly the expected diagnostic, and a clean fixed variant.
pub fn check_golden(case: &GoldenCase) -> Result<(), String> {
    let found = diagnostics(&format!("{}.flint", case.name), &case.source);
    let summary: Vec<String> = found.iter().map(|d| format!("{} @ {}: {}", d.code, d.line, d.message)).collect();
    if found.len() != 1 || found[0].code != case.code || found[0].line != case.line {
        return Err(format!("{}: expected {} @ {}, found {summary:?}", case.name, case.code, case.line));
    }
    let fixed = diagnostics(&format!("{}.fixed.flint", case.name), &case.fixed);
    if !fixed.is_empty() {
        let s: Vec<String> = fixed.iter().map(|d| d.render_located()).collect();
        return Err(format!("{} fixed variant: {s:?}", case.name));
    }
    Ok(())
}

pub fn compile_source(name: &str, src: &str, mode: StdlibMode) -> IRProgram {
    match compile(&[(name, src)], mode) {
        Ok((p, _)) => p,
        Err(a) => panic!("{name}: {:#?}", a.diagnostics),
    }
}

pub fn addr(n: u64) -> H160 {
    H160::from_low_u64_be(n)
}

pub fn deploy(chain: &mut Chain, program: &IRProgram, contract: &str, caller: H160, args: &[AbiValue]) -> H160 {
    let (a, r) = chain.deploy(program, contract, caller, args, U256::zero(), None).unwrap();
    assert!(r.is_ok(), "deploy {contract}: {:?}", r.status);
    a.unwrap()
}

pub fn call(chain: &mut Chain, to: H160, caller: H160, function: &str, args: &[&str], value: u64) -> CallResult {
    let data = chain.encode_call(to, function, args).unwrap();
    chain.call(&Transaction { caller, to, data, value: U256::from(value), gas_limit: None }).unwrap()
}

pub fn reason(r: &CallResult) -> &'static str {
    r.status.reason().map(|x| x.name()).unwrap_or("none")
}

pub fn returned(r: &CallResult) -> String {
    r.return_value.as_ref().map(|v| v.to_string()).unwrap_or_default()
}

/// Deterministic xorshift generator for randomized sequences.
pub struct Rng(pub u64);

impl Rng {
    pub fn next(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next() % n
    }
}
