mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use flint_core::lowering::ir::IRProgram;
use flint_core::lowering::selector::{compute_selector, keccak256};
use flint_core::pipeline::compile;
use flint_core::script::{parse_script, run_script, Runner};
use flint_core::stdlib::StdlibMode;
use flint_core::vm::abi::{self, AbiValue};
use flint_core::vm::Chain;
use flint_core::lowering::ir::AbiType;
use num_bigint::BigUint;
use primitive_types::{H160, U256};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn corpus_compiles() -> Outcome {
    let files = [
        ("simple_dao.flint", StdlibMode::Full),
        ("bank.flint", StdlibMode::Full),
        ("asset.flint", StdlibMode::GlobalsOnly),
        ("counter.flint", StdlibMode::Full),
        ("atom.flint", StdlibMode::Full),
    ];
    let mut slowest = Duration::ZERO;
    for (f, mode) in files {
        let src = corpus(f);
        let start = Instant::now();
        let result = compile(&[(f, &src)], mode);
        let elapsed = start.elapsed();
        slowest = slowest.max(elapsed);
        match result {
            Ok((_, a)) => ensure(!a.has_errors(), || format!("{f} has errors"))?,
            Err(a) => return Err(format!("{f}: {} diagnostics", a.diagnostics.len())),
        }
        ensure(elapsed < Duration::from_secs(1), || format!("{f} took {elapsed:?}"))?;
    }
    Ok(format!("{} files, slowest {slowest:?}", files.len()))
}

fn golden_suite() -> Outcome {
    let cases = golden_cases();
    ensure(cases.len() >= 18, || format!("only {} cases", cases.len()))?;
    for p in ["E-PROT", "E-MUT", "W-MUT", "E-INIT", "E-DECL", "E-TYPE"] {
        ensure(cases.iter().any(|c| c.code.starts_with(p)), || format!("no case for {p}"))?;
    }
    for c in &cases {
        check_golden(c)?;
    }
    Ok(format!("{} cases with fixed variants", cases.len()))
}

fn wei_conservation() -> Outcome {
    let p = program("bank.flint");
    let users: Vec<H160> = (1..=5).map(addr).collect();
    let mut rng = Rng(0x5eed_0001);
    let mut txs = 0;
    let mut ok = 0;
    for seq in 0..200 {
        let mut chain = Chain::default();
        for u in &users {
            chain.fund(*u, U256::from(1000));
        }
        let bank = deploy(&mut chain, &p, "Bank", addr(0xaa), &[AbiValue::Address(addr(0xaa))]);
        let initial = chain.total_balance();
        for _ in 0..25 {
            let u = users[rng.below(5) as usize];
            let amount = rng.below(120).to_string();
            let r = match rng.below(5) {
                0 => call(&mut chain, bank, u, "register", &[], 0),
                1 => call(&mut chain, bank, u, "deposit", &[], rng.below(120)),
                2 => {
                    let to = format!("{:#x}", users[rng.below(5) as usize]);
                    call(&mut chain, bank, u, "transfer", &[&amount, &to], 0)
                }
                3 => call(&mut chain, bank, u, "withdraw", &[&amount], 0),
                _ => call(&mut chain, bank, u, "donate", &[], rng.below(120)),
            };
            txs += 1;
            ok += r.is_ok() as usize;
            ensure(r.status.reason().map_or(true, |x| x.name() != "out-of-gas"), || "out of gas".into())?;
            let total = chain.total_balance();
            ensure(total - chain.state.minted_total == initial, || format!("sequence {seq}: total {total} != {initial}"))?;
            ensure(chain.stored_wei(bank) == chain.balance(bank), || format!("sequence {seq}: stored Wei differs"))?;
        }
    }
    ensure(ok * 3 > txs, || format!("only {ok} of {txs} succeeded"))?;
    Ok(format!("200 sequences, {ok} of {txs} transactions succeeded"))
}

fn arithmetic_traps() -> Outcome {
    let p = program("atom.flint");
    let mut chain = Chain::default();
    let atom = deploy(&mut chain, &p, "Atom", addr(1), &[AbiValue::Address(addr(1))]);
    let max = U256::MAX.to_string();
    let two128 = (U256::one() << 128).to_string();
    let mut run = |op: u8, a: &str, b: &str| call(&mut chain, atom, addr(1), "arith", &[&op.to_string(), a, b], 0);
    for (op, a, b, why) in [(0, max.as_str(), "1", "overflow"), (1, "0", "1", "overflow"), (2, &two128, &two128, "overflow"), (3, "7", "0", "division-by-zero")] {
        let r = run(op, a, b);
        ensure(reason(&r) == why, || format!("op {op}({a}, {b}) gave {}", reason(&r)))?;
    }
    let r = run(4, &max, "1");
    ensure(returned(&r) == "0", || format!("max &+ 1 = {}", returned(&r)))?;
    let r = run(5, "0", "1");
    ensure(returned(&r) == max, || format!("0 &- 1 = {}", returned(&r)))?;

    let mut rng = Rng(0x5eed_0004);
    for i in 0..1000 {
        let a = (rng.next() as u128) << 64 | rng.next() as u128;
        let b = (rng.next() as u128) << 64 | rng.next() as u128;
        let (checked, wrapping) = [(0, 4), (1, 5), (2, 6)][i % 3];
        let (a, b) = if checked == 1 { (a.max(b), a.min(b)) } else { (a, b) };
        let (x, y) = (BigUint::from(a), BigUint::from(b));
        let expected = match checked {
            0 => x + y,
            1 => x - y,
            _ => x * y,
        };
        let (sa, sb) = (a.to_string(), b.to_string());
        let c = returned(&run(checked, &sa, &sb));
        let w = returned(&run(wrapping, &sa, &sb));
        ensure(c == w && c == expected.to_string(), || format!("op {checked}({a}, {b}): {c} / {w} / {expected}"))?;
    }
    Ok("4 traps, 2 wrapping identities, 1000 agreement cases".into())
}

fn dao_lifecycle() -> Outcome {
    let p = program("simple_dao.flint");
    let report = run_script(&p, Chain::default(), &script("simple_dao.jsonl")).map_err(|e| e.to_string())?;
    match &report.failure {
        None => Ok(format!("{} script lines matched", report.steps.len())),
        Some((line, m)) => Err(format!("line {line}: {m}")),
    }
}

fn caller_soundness() -> Outcome {
    let p = program("bank.flint");
    let mut chain = Chain::default();
    let manager = addr(0xaa);
    let bank = deploy(&mut chain, &p, "Bank", manager, &[AbiValue::Address(manager)]);
    let a = format!("{:#x}", addr(1));
    let r = call(&mut chain, bank, addr(1), "freeDeposit", &[&a, "5"], 0);
    ensure(reason(&r) == "protection", || format!("non-manager freeDeposit: {}", reason(&r)))?;
    let r = call(&mut chain, bank, manager, "freeDeposit", &[&a, "5"], 0);
    ensure(r.is_ok(), || format!("manager freeDeposit: {}", reason(&r)))?;
    let r = call(&mut chain, bank, addr(1), "getBalance", &[], 0);
    ensure(reason(&r) == "protection", || format!("unregistered getBalance: {}", reason(&r)))?;
    ensure(call(&mut chain, bank, addr(1), "register", &[], 0).is_ok(), || "register failed".into())?;
    let r = call(&mut chain, bank, addr(1), "getBalance", &[], 0);
    ensure(returned(&r) == "5", || format!("registered getBalance: {:?}", r.status))?;

    let p = program("simple_dao.flint");
    let mut chain = Chain::default();
    let curator = addr(0xcc);
    let dao = deploy(&mut chain, &p, "SimpleDAO", curator, &[AbiValue::Address(curator)]);
    let stakes = [30u64, 0, 7, 0, 1];
    for (i, s) in stakes.iter().enumerate() {
        let u = addr(i as u64 + 1);
        chain.fund(u, U256::from(100));
        if i != 3 {
            ensure(call(&mut chain, dao, u, "join", &[], *s).is_ok(), || format!("join {i}"))?;
        }
    }
    ensure(call(&mut chain, dao, curator, "joinTimeElapsed", &[], 0).is_ok(), || "joinTimeElapsed".into())?;
    let recipient = format!("{:#x}", addr(9));
    let mut admitted = Vec::new();
    for i in 0..stakes.len() {
        let r = call(&mut chain, dao, addr(i as u64 + 1), "newProposal", &["1", &recipient], 0);
        ensure(r.is_ok() || reason(&r) == "protection", || format!("account {i}: {}", reason(&r)))?;
        if r.is_ok() {
            admitted.push(i);
        }
    }
    let holders: Vec<usize> = (0..stakes.len()).filter(|i| stakes[*i] > 0).collect();
    ensure(admitted == holders, || format!("admitted {admitted:?}, holders {holders:?}"))?;
    Ok("manager, list and predicate protections".into())
}

fn check_counts() -> Outcome {
    let p = program("counter.flint");
    let mut chain = Chain::default();
    let owner = addr(1);
    let counter = deploy(&mut chain, &p, "Counter", owner, &[AbiValue::Address(owner)]);
    let r = call(&mut chain, counter, owner, "bumpMany", &["50"], 0);
    ensure(r.is_ok(), || format!("bumpMany: {:?}", r.status))?;
    ensure(r.protection_checks == 1 && r.typestate_checks <= 1, || {
        format!("bumpMany: {} / {}", r.protection_checks, r.typestate_checks)
    })?;
    let t = call(&mut chain, counter, owner, "bumpManyChecked", &["50"], 0);
    ensure(t.is_ok() && t.protection_checks == 51, || format!("bumpManyChecked: {}", t.protection_checks))?;
    let n = call(&mut chain, counter, owner, "getCount", &[], 0);
    ensure(returned(&n) == "100", || format!("count {}", returned(&n)))?;
    Ok(format!(
        "plain {}/{}, try {}/{}",
        r.protection_checks, r.typestate_checks, t.protection_checks, t.typestate_checks
    ))
}

fn abi_encoding() -> Outcome {
    let data = abi::encode_args(&[AbiValue::Uint(U256::from(100)), AbiValue::Bool(true)]);
    let words = [
        "0000000000000000000000000000000000000000000000000000000000000064",
        "0000000000000000000000000000000000000000000000000000000000000001",
    ];
    let hex: String = data.iter().map(|b| format!("{b:02x}")).collect();
    ensure(hex == words.concat(), || format!("encoding {hex}"))?;
    let oracle = keccak256(b"transfer(address,uint256)");
    let sel = compute_selector("transfer(address,uint256)");
    ensure(sel == [0xa9, 0x05, 0x9c, 0xbb] && sel[..] == oracle[..4], || format!("selector {sel:02x?}"))?;

    let mut rng = Rng(0x5eed_0008);
    let types = [AbiType::Uint256, AbiType::Address, AbiType::Bool, AbiType::String];
    for _ in 0..500 {
        let n = 1 + rng.below(6) as usize;
        let mut tys = Vec::new();
        let mut values = Vec::new();
        for _ in 0..n {
            let t = types[rng.below(4) as usize];
            let v = match t {
                AbiType::Uint256 => AbiValue::Uint(U256([rng.next(), rng.next(), rng.next(), rng.next()])),
                AbiType::Address => AbiValue::Address(H160::from_low_u64_be(rng.next()) ^ H160::repeat_byte((rng.next() & 0xff) as u8)),
                AbiType::Bool => AbiValue::Bool(rng.below(2) == 1),
                _ => AbiValue::String((0..rng.below(32)).map(|_| (b'a' + rng.below(26) as u8) as char).collect()),
            };
            tys.push(t);
            values.push(v);
        }
        let decoded = abi::decode_args(&abi::encode_args(&values), &tys).map_err(|e| e.to_string())?;
        ensure(decoded == values, || format!("round trip of {values:?}"))?;
    }
    Ok("(100, true), 0xa9059cbb, 500 round trips".into())
}

fn line(action: &str, rest: &str) -> String {
    format!(r#"{{"action":"{action}",{rest}}}"#)
}

fn atomicity() -> Outcome {
    let p = program("atom.flint");
    let mut rng = Rng(0x5eed_0009);
    let owner = "0x0000000000000000000000000000000000000001";
    for case in 0..100 {
        let mut text = vec![
            line("fund", &format!(r#""address":"{owner}","amount":"1000""#)),
            line("deploy", &format!(r#""contract":"Atom","as":"atom","caller":"{owner}","args":["{owner}"]"#)),
            line("call", &format!(r#""to":"atom","function":"fill","caller":"{owner}","value":"500""#)),
        ];
        for _ in 0..rng.below(6) {
            let amount = rng.below(40);
            let who = format!("{:#x}", addr(2 + rng.below(3)));
            text.push(line("call", &format!(r#""to":"atom","function":"poke","caller":"{who}","args":["{amount}","false"],"expect":{{"status":"ok"}}"#)));
        }
        let steps = parse_script(&text.join("\n")).map_err(|e| e.to_string())?;
        let mut runner = Runner::new(&p, Chain::default());
        let report = runner.run(&steps).map_err(|e| e.to_string())?;
        ensure(report.passed(), || format!("case {case}: setup failed {:?}", report.failure))?;

        let before = runner.chain.state.clone();
        let amount = 1 + rng.below(40);
        let failing = line("call", &format!(
            r#""to":"atom","function":"poke","caller":"{owner}","args":["{amount}","true"],"expect":{{"status":"reverted","reason":"assertion"}}"#
        ));
        let report = runner.run(&parse_script(&failing).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        ensure(report.passed(), || format!("case {case}: {:?}", report.failure))?;
        ensure(report.steps[0]["events"].as_array().is_some_and(|e| e.is_empty()), || format!("case {case}: events"))?;
        ensure(runner.chain.state == before, || format!("case {case}: state changed"))?;
        ensure(runner.chain.state.events.len() == before.events.len(), || format!("case {case}: log changed"))?;
    }
    Ok("100 injected assertion failures restored the snapshot".into())
}

fn determinism() -> Outcome {
    let scripts = [
        ("bank.flint", "bank.jsonl"),
        ("simple_dao.flint", "simple_dao.jsonl"),
        ("counter.flint", "counter.jsonl"),
        ("atom.flint", "atom.jsonl"),
    ];
    for (src, s) in scripts {
        let run = || -> Result<String, String> {
            let p: IRProgram = program(src);
            let r = run_script(&p, Chain::default(), &script(s)).map_err(|e| e.to_string())?;
            Ok(serde_json::to_string(&r.to_json()).expect("report serializes"))
        };
        let (a, b) = (run()?, run()?);
        ensure(a == b, || format!("{s} differs between runs"))?;
    }
    Ok(format!("{} scripts byte-identical", scripts.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("corpus compilation", corpus_compiles),
        ("diagnostic golden suite", golden_suite),
        ("Wei conservation", wei_conservation),
        ("arithmetic traps", arithmetic_traps),
        ("typestate soundness", dao_lifecycle),
        ("caller soundness", caller_soundness),
        ("check counts", check_counts),
        ("ABI", abi_encoding),
        ("atomicity", atomicity),
        ("determinism", determinism),
    ];
    let hook = std::panic::take_hook();
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panic".into()))
        });
        let ms = start.elapsed().as_millis();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} ({ms} ms)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} ({ms} ms)", i + 1);
            }
        }
    }
    std::panic::set_hook(hook);
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
