mod common;

use std::collections::BTreeSet;

use common::*;
use flint_core::environment::Type;
use flint_core::lowering::ir::{IRProgram, Instr, ProtectionCheck};
use flint_core::lowering::lower::called_functions;
use flint_core::lowering::mangle::mangle;
use flint_core::lowering::printer::print_program;
use flint_core::pipeline::compile;
use flint_core::stdlib::StdlibMode;

fn corpus_programs() -> Vec<(&'static str, IRProgram)> {
    ["bank.flint", "simple_dao.flint", "counter.flint", "atom.flint"]
        .into_iter()
        .map(|f| (f, program(f)))
        .chain(std::iter::once(("asset.flint", {
            let src = corpus("asset.flint");
            compile(&[("asset.flint", &src)], StdlibMode::GlobalsOnly).map(|(p, _)| p).unwrap()
        })))
        .collect()
}

#[test]
fn bank_layout_follows_declaration_order() {
    let p = program("bank.flint");
    let c = p.contract("Bank").unwrap();
    let slots: Vec<(&str, u64)> = c.layout.iter().map(|l| (l.name.as_str(), l.slot)).collect();
    assert_eq!(
        slots,
        [("manager", 0), ("balances", 1), ("accounts", 2), ("lastIndex", 3), ("totalDonations", 4)]
    );
}

#[test]
fn dao_typestates_are_numbered_from_one() {
    let p = program("simple_dao.flint");
    let c = p.contract("SimpleDAO").unwrap();
    assert_eq!(c.typestate_ordinal("Join"), Some(1));
    assert_eq!(c.typestate_ordinal("Propose"), Some(2));
    assert_eq!(c.typestate_ordinal("Vote"), Some(3));
    assert_eq!(c.completed_marker(), 4);
}

#[test]
fn entry_checks_match_protection_blocks() {
    let p = program("bank.flint");
    let c = p.contract("Bank").unwrap();
    let entry = |f: &str| c.function(f).unwrap().entry.clone().map(|e| e.protections).unwrap_or_default();
    assert_eq!(entry("Bank$freeDeposit$Address_Int"), [ProtectionCheck::AddressProperty { slot: 0 }]);
    assert_eq!(entry("Bank$getBalance$"), [ProtectionCheck::AddressList { slot: 2 }]);
    assert!(entry("Bank$register$").is_empty());

    let p = program("simple_dao.flint");
    let c = p.contract("SimpleDAO").unwrap();
    let f = c.functions.iter().find(|f| f.name.starts_with("SimpleDAO$newProposal$")).unwrap();
    let e = f.entry.as_ref().unwrap();
    assert_eq!(e.typestates, [2]);
    assert!(matches!(&e.protections[..], [ProtectionCheck::Predicate { function }] if function.starts_with("SimpleDAO$tokenHolder$")));
}

#[test]
fn ir_json_reloads_and_lowering_is_deterministic() {
    for (name, p) in corpus_programs() {
        let json = p.to_json();
        assert_eq!(IRProgram::from_json(&json).unwrap(), p, "{name}");
        let again = if name == "asset.flint" {
            let src = corpus(name);
            compile(&[(name, &src)], StdlibMode::GlobalsOnly).unwrap().0
        } else {
            program(name)
        };
        assert_eq!(again.to_json(), json, "{name}");
        assert_eq!(print_program(&again), print_program(&p), "{name}");
    }
}

#[test]
fn every_function_is_reachable() {
    for (name, p) in corpus_programs() {
        for c in &p.contracts {
            let mut roots: BTreeSet<String> = called_functions(c);
            roots.insert(c.init.clone());
            roots.extend(c.fallback.clone());
            roots.extend(c.dispatch.iter().map(|d| d.function.clone()));
            for f in &c.functions {
                if let Some(e) = &f.entry {
                    for pc in &e.protections {
                        if let ProtectionCheck::Predicate { function } = pc {
                            roots.insert(function.clone());
                        }
                    }
                }
            }
            for f in &c.functions {
                assert!(roots.contains(&f.name), "{name}: orphan {}", f.name);
            }
            for callee in called_functions(c) {
                assert!(c.function(&callee).is_some(), "{name}: missing {callee}");
            }
        }
    }
}

#[test]
fn runtime_helpers_are_called_only_from_library_code() {
    for (name, p) in corpus_programs() {
        for c in &p.contracts {
            for f in c.functions.iter().filter(|f| f.name.starts_with(&format!("{}$", c.name))) {
                for i in &f.body {
                    if let Instr::Call { func, .. } = i {
                        assert!(!func.starts_with("flint$"), "{name}: {} calls {func}", f.name);
                    }
                }
            }
        }
    }
}

#[test]
fn function_names_are_unique() {
    for (name, p) in corpus_programs() {
        for c in &p.contracts {
            let names: BTreeSet<&str> = c.functions.iter().map(|f| f.name.as_str()).collect();
            assert_eq!(names.len(), c.functions.len(), "{name}");
        }
    }
}

#[test]
fn mangling_separates_confusable_names() {
    let int = || (Type::Int, false);
    let cases = [
        mangle("A_1", "b", &[]),
        mangle("A$", "b", &[]),
        mangle("A", "1b", &[]),
        mangle("A", "b", &[int()]),
        mangle("A", "b", &[(Type::Int, true)]),
        mangle("A", "b", &[int(), int()]),
        mangle("A", "b", &[(Type::Named("Int_Int".into()), false)]),
        mangle("A", "b", &[(Type::Array(Box::new(Type::Int)), false)]),
        mangle("A", "b", &[(Type::FixedArray(Box::new(Type::Int), 2), false)]),
        mangle("A", "b", &[(Type::Dictionary(Box::new(Type::Int), Box::new(Type::Int)), false)]),
    ];
    let unique: BTreeSet<&String> = cases.iter().collect();
    assert_eq!(unique.len(), cases.len(), "{cases:#?}");
}

#[test]
fn try_calls_are_checked() {
    let p = program("counter.flint");
    let c = p.contract("Counter").unwrap();
    let checked = |f: &str| {
        c.function(f)
            .unwrap()
            .body
            .iter()
            .filter_map(|i| match i {
                Instr::Call { checked, .. } => Some(*checked),
                _ => None,
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(checked("Counter$bumpMany$Int"), [false]);
    assert_eq!(checked("Counter$bumpManyChecked$Int"), [true]);
}

#[test]
fn build_header_lists_every_slot() {
    let text = print_program(&program("bank.flint"));
    assert_eq!(text.lines().filter(|l| l.starts_with("#pragma slot")).count(), 5);
}
