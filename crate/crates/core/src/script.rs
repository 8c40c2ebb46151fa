//! JSON-lines transaction scripts run against a fresh chain.

use std::collections::BTreeMap;

use primitive_types::{H160, U256};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::lowering::ir::{IRProgram, RevertReason};
use crate::vm::abi::{self, AbiValue};
use crate::vm::{CallResult, Chain, EmittedEvent, Transaction, VmError};

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case", deny_unknown_fields)]
pub enum Action {
    Deploy {
        contract: String,
        #[serde(rename = "as")]
        alias: Option<String>,
        caller: String,
        #[serde(default)]
        args: Vec<String>,
        #[serde(default)]
        value: Option<String>,
        #[serde(default)]
        gas_limit: Option<u64>,
        #[serde(default)]
        expect: Option<Expect>,
    },
    Call {
        to: String,
        #[serde(default)]
        function: Option<String>,
        caller: String,
        #[serde(default)]
        args: Vec<String>,
        /// Raw calldata as hex, used instead of `function` and `args`.
        #[serde(default)]
        calldata: Option<String>,
        #[serde(default)]
        value: Option<String>,
        #[serde(default)]
        gas_limit: Option<u64>,
        #[serde(default)]
        expect: Option<Expect>,
    },
    AssertBalance {
        address: String,
        equals: String,
    },
    Fund {
        address: String,
        amount: String,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expect {
    pub status: Option<String>,
    pub reason: Option<String>,
    #[serde(rename = "returns")]
    pub returns: Option<String>,
    pub events: Option<Vec<ExpectEvent>>,
    #[serde(rename = "protectionChecks")]
    pub protection_checks: Option<u64>,
    #[serde(rename = "typestateChecks")]
    pub typestate_checks: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectEvent {
    pub name: String,
    #[serde(default)]
    pub args: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum ScriptError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {source}")]
    Vm { line: usize, source: VmError },
}

/// One line of a script with its source line number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub line: usize,
    pub action: Action,
}

pub fn parse_script(text: &str) -> Result<Vec<Step>, ScriptError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with("//"))
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map(|action| Step { line: i + 1, action })
                .map_err(|e| ScriptError::Parse { line: i + 1, message: e.to_string() })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    /// One entry per executed line.
    pub steps: Vec<Value>,
    /// The first failed expectation, as `(line, message)`.
    pub failure: Option<(usize, String)>,
    pub state: Value,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "steps": self.steps,
            "passed": self.passed(),
            "failure": self.failure.as_ref().map(|(line, m)| json!({"line": line, "message": m})),
            "state": self.state,
        })
    }

    /// Human-readable summary, one line per step.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            let line = s["line"].as_u64().unwrap_or(0);
            let what = s["summary"].as_str().unwrap_or("");
            out.push_str(&format!("line {line}: {what}\n"));
        }
        match &self.failure {
            None => out.push_str("all expectations passed\n"),
            Some((line, m)) => out.push_str(&format!("line {line}: expectation failed: {m}\n")),
        }
        out
    }
}

pub struct Runner<'p> {
    pub chain: Chain,
    program: &'p IRProgram,
    aliases: BTreeMap<String, H160>,
}

fn parse_amount(line: usize, text: Option<&str>) -> Result<U256, ScriptError> {
    let text = text.unwrap_or("0");
    U256::from_dec_str(text).map_err(|_| ScriptError::Parse { line, message: format!("invalid amount '{text}'") })
}

fn result_json(line: usize, summary: String, r: &CallResult) -> Value {
    json!({
        "line": line,
        "summary": summary,
        "status": r.status.name(),
        "reason": r.status.reason().map(RevertReason::name),
        "returns": r.return_value.as_ref().map(|v| v.to_string()),
        "gas": r.gas_used,
        "protectionChecks": r.protection_checks,
        "typestateChecks": r.typestate_checks,
        "events": r.events.iter().map(EmittedEvent::to_json).collect::<Vec<_>>(),
        "warnings": r.warnings,
    })
}

fn event_args(fields: &[(String, AbiValue)]) -> Vec<String> {
    fields.iter().map(|(_, v)| v.to_string()).collect()
}

/// Compares `r` against `e`; returns a description of the first mismatch.
fn check(e: &Expect, r: &CallResult) -> Option<String> {
    let mismatch = |what: &str, expected: &dyn std::fmt::Display, actual: &dyn std::fmt::Display| {
        Some(format!("{what}: expected {expected}, actual {actual}"))
    };
    let reason = r.status.reason().map(RevertReason::name).unwrap_or("none");
    if let Some(s) = &e.status {
        if s != r.status.name() {
            return mismatch("status", s, &format!("{} ({reason})", r.status.name()));
        }
    }
    if let Some(x) = &e.reason {
        if x != reason {
            return mismatch("reason", x, &reason);
        }
    }
    if let Some(x) = &e.returns {
        let actual = r.return_value.as_ref().map(|v| v.to_string()).unwrap_or_else(|| "nothing".into());
        if &actual != x {
            return mismatch("return value", x, &actual);
        }
    }
    if let Some(x) = e.protection_checks {
        if x != r.protection_checks {
            return mismatch("protectionChecks", &x, &r.protection_checks);
        }
    }
    if let Some(x) = e.typestate_checks {
        if x != r.typestate_checks {
            return mismatch("typestateChecks", &x, &r.typestate_checks);
        }
    }
    if let Some(events) = &e.events {
        let render = |n: &str, a: &[String]| format!("{n}({})", a.join(", "));
        let expected: Vec<String> = events.iter().map(|ev| render(&ev.name, &ev.args)).collect();
        let actual: Vec<String> = r.events.iter().map(|ev| render(&ev.name, &event_args(&ev.fields))).collect();
        if expected != actual {
            return mismatch("events", &format!("[{}]", expected.join("; ")), &format!("[{}]", actual.join("; ")));
        }
    }
    None
}

impl<'p> Runner<'p> {
    pub fn new(program: &'p IRProgram, chain: Chain) -> Runner<'p> {
        Runner { chain, program, aliases: BTreeMap::new() }
    }

    fn address(&self, line: usize, text: &str) -> Result<H160, ScriptError> {
        if let Some(a) = self.aliases.get(text) {
            return Ok(*a);
        }
        abi::parse_address(text)
            .ok_or_else(|| ScriptError::Parse { line, message: format!("'{text}' is neither an alias nor an address") })
    }

    /// Runs `steps` in order, stopping at the first failed expectation.
    pub fn run(&mut self, steps: &[Step]) -> Result<Report, ScriptError> {
        let mut out = Vec::new();
        let mut failure = None;
        for step in steps {
            let (value, failed) = self.step(step)?;
            out.push(value);
            if let Some(m) = failed {
                failure = Some((step.line, m));
                break;
            }
        }
        Ok(Report { steps: out, failure, state: self.chain.dump() })
    }

    fn step(&mut self, step: &Step) -> Result<(Value, Option<String>), ScriptError> {
        let line = step.line;
        let vm = |source| ScriptError::Vm { line, source };
        match &step.action {
            Action::Deploy { contract, alias, caller, args, value, gas_limit, expect } => {
                let caller = self.address(line, caller)?;
                let types = Chain::init_params(self.program, contract).map_err(vm)?;
                if types.len() != args.len() {
                    return Err(vm(VmError::ArgumentCount { expected: types.len(), found: args.len() }));
                }
                let values = types
                    .iter()
                    .zip(args)
                    .map(|(t, a)| AbiValue::parse(*t, a))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| vm(e.into()))?;
                let value = parse_amount(line, value.as_deref())?;
                let (address, r) =
                    self.chain.deploy(self.program, contract, caller, &values, value, *gas_limit).map_err(vm)?;
                if let (Some(a), Some(alias)) = (address, alias) {
                    self.aliases.insert(alias.clone(), a);
                }
                let mut v = result_json(line, format!("deploy {contract} -> {}", r.status.name()), &r);
                v["address"] = json!(address.map(|a| format!("{a:#x}")));
                let failed = expect.as_ref().and_then(|e| check(e, &r));
                Ok((v, failed))
            }
            Action::Call { to, function, caller, args, calldata, value, gas_limit, expect } => {
                let target = self.address(line, to)?;
                let caller = self.address(line, caller)?;
                let data = match (calldata, function) {
                    (Some(hex), _) => decode_hex(hex)
                        .ok_or_else(|| ScriptError::Parse { line, message: format!("invalid calldata '{hex}'") })?,
                    (None, Some(f)) => {
                        let args: Vec<&str> = args.iter().map(String::as_str).collect();
                        self.chain.encode_call(target, f, &args).map_err(vm)?
                    }
                    (None, None) => Vec::new(),
                };
                let value = parse_amount(line, value.as_deref())?;
                let tx = Transaction { caller, to: target, data, value, gas_limit: *gas_limit };
                let r = self.chain.call(&tx).map_err(vm)?;
                let name = function.as_deref().unwrap_or("<calldata>");
                let summary = format!(
                    "call {to}.{name} -> {}{} gas={} protectionChecks={} typestateChecks={}",
                    r.status.name(),
                    r.status.reason().map(|x| format!("({})", x.name())).unwrap_or_default(),
                    r.gas_used,
                    r.protection_checks,
                    r.typestate_checks
                );
                let failed = expect.as_ref().and_then(|e| check(e, &r));
                Ok((result_json(line, summary, &r), failed))
            }
            Action::AssertBalance { address, equals } => {
                let a = self.address(line, address)?;
                let expected = parse_amount(line, Some(equals))?;
                let actual = self.chain.balance(a);
                let failed = (actual != expected).then(|| format!("balance of {address}: expected {expected}, actual {actual}"));
                let summary = format!("assert_balance {address} == {expected}: {}", if failed.is_none() { "pass" } else { "fail" });
                Ok((json!({"line": line, "summary": summary, "balance": actual.to_string()}), failed))
            }
            Action::Fund { address, amount } => {
                let a = self.address(line, address)?;
                let amount = parse_amount(line, Some(amount))?;
                self.chain.fund(a, amount);
                Ok((json!({"line": line, "summary": format!("fund {address} with {amount}")}), None))
            }
        }
    }
}

fn decode_hex(text: &str) -> Option<Vec<u8>> {
    let hex = text.strip_prefix("0x").unwrap_or(text);
    if hex.len() % 2 != 0 {
        return None;
    }
    (0..hex.len()).step_by(2).map(|i| u8::from_str_radix(hex.get(i..i + 2)?, 16).ok()).collect()
}

/// Parses and runs `script` against a fresh chain.
pub fn run_script(program: &IRProgram, chain: Chain, script: &str) -> Result<Report, ScriptError> {
    let steps = parse_script(script)?;
    Runner::new(program, chain).run(&steps)
}
