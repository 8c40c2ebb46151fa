mod common;

use common::*;
use flint_core::lowering::ir::{AbiType, ArithOp, RevertReason};
use flint_core::stdlib::StdlibMode;
use flint_core::vm::abi::{self, AbiValue};
use flint_core::vm::arith;
use flint_core::vm::Chain;
use num_bigint::BigUint;
use primitive_types::{H160, U256};
use proptest::prelude::*;
use sha3::{Digest, Keccak256};

fn big(x: U256) -> BigUint {
    BigUint::from_bytes_be(&x.to_big_endian())
}

fn modulus() -> BigUint {
    BigUint::from(1u8) << 256
}

fn from_big(x: &BigUint) -> U256 {
    U256::from_big_endian(&(x % modulus()).to_bytes_be())
}

/// Exact result of `op` or the trap it must raise.
fn oracle(op: ArithOp, a: U256, b: U256) -> Result<U256, RevertReason> {
    let (x, y) = (big(a), big(b));
    let exact = match op {
        ArithOp::Add | ArithOp::WAdd => x + y,
        ArithOp::Mul | ArithOp::WMul => x * y,
        ArithOp::Sub | ArithOp::WSub => {
            if x >= y {
                x - y
            } else if op == ArithOp::WSub {
                modulus() + x - y
            } else {
                return Err(RevertReason::Overflow);
            }
        }
        ArithOp::Div if y == BigUint::from(0u8) => return Err(RevertReason::DivisionByZero),
        ArithOp::Div => x / y,
        ArithOp::Exp => x.modpow(&y, &modulus()),
    };
    let wraps = matches!(op, ArithOp::WAdd | ArithOp::WSub | ArithOp::WMul);
    if exact >= modulus() && !wraps {
        return Err(RevertReason::Overflow);
    }
    Ok(from_big(&exact))
}

fn exp_overflows(a: U256, b: U256) -> bool {
    if b > U256::from(512u32) {
        return a > U256::one();
    }
    big(a).pow(b.as_u32()) >= modulus()
}

fn word() -> impl Strategy<Value = U256> {
    prop_oneof![
        any::<u64>().prop_map(U256::from),
        any::<[u8; 32]>().prop_map(|b| U256::from_big_endian(&b)),
        any::<u128>().prop_map(U256::from),
        Just(U256::MAX),
        Just(U256::zero()),
    ]
}

proptest! {
    #[test]
    fn arithmetic_matches_bigint(a in word(), b in word()) {
        for op in [ArithOp::Add, ArithOp::Sub, ArithOp::Mul, ArithOp::Div, ArithOp::WAdd, ArithOp::WSub, ArithOp::WMul] {
            prop_assert_eq!(arith::checked(op, a, b), oracle(op, a, b), "{:?}", op);
            if let Ok(v) = oracle(op, a, b) {
                prop_assert_eq!(arith::wrapping(op, a, b), v);
            }
        }
    }

    #[test]
    fn checked_and_wrapping_agree_without_overflow(a in word(), b in word()) {
        for (c, w) in [(ArithOp::Add, ArithOp::WAdd), (ArithOp::Sub, ArithOp::WSub), (ArithOp::Mul, ArithOp::WMul)] {
            match arith::checked(c, a, b) {
                Ok(v) => prop_assert_eq!(v, arith::checked(w, a, b).unwrap()),
                Err(r) => prop_assert_eq!(r, RevertReason::Overflow),
            }
        }
    }

    #[test]
    fn exponentiation_matches_bigint(a in 0u64..1000, b in 0u64..600) {
        let (a, b) = (U256::from(a), U256::from(b));
        let expected = if exp_overflows(a, b) { Err(RevertReason::Overflow) } else { oracle(ArithOp::Exp, a, b) };
        prop_assert_eq!(arith::checked(ArithOp::Exp, a, b), expected);
    }

    #[test]
    fn abi_round_trips(
        n in word(),
        a in any::<[u8; 20]>(),
        flag in any::<bool>(),
        s in "[a-zA-Z0-9 ]{0,32}",
    ) {
        let values = vec![AbiValue::Uint(n), AbiValue::Address(H160(a)), AbiValue::Bool(flag), AbiValue::String(s)];
        let types = [AbiType::Uint256, AbiType::Address, AbiType::Bool, AbiType::String];
        let data = abi::encode_args(&values);
        prop_assert_eq!(data.len(), 128);
        prop_assert_eq!(abi::decode_args(&data, &types).unwrap(), values);
    }
}

#[test]
fn abi_encoding_of_100_true() {
    let data = abi::encode_args(&[AbiValue::Uint(U256::from(100)), AbiValue::Bool(true)]);
    let mut expected = vec![0u8; 64];
    expected[31] = 0x64;
    expected[63] = 1;
    assert_eq!(data, expected);
    let bad = [vec![0u8; 32], vec![2u8; 32]].concat();
    assert!(abi::decode_args(&bad, &[AbiType::Uint256, AbiType::Bool]).is_err());
    assert!(abi::decode_args(&data[..63], &[AbiType::Uint256, AbiType::Bool]).is_err());
}

fn keccak_word(parts: &[U256]) -> U256 {
    let mut h = Keccak256::new();
    for p in parts {
        h.update(p.to_big_endian());
    }
    U256::from_big_endian(&h.finalize())
}

const MANAGER: u64 = 0xaa;

fn bank() -> (Chain, flint_core::lowering::ir::IRProgram, H160) {
    let p = program("bank.flint");
    let mut chain = Chain::default();
    let bank = deploy(&mut chain, &p, "Bank", addr(MANAGER), &[AbiValue::Address(addr(MANAGER))]);
    (chain, p, bank)
}

#[test]
fn array_element_lives_at_keccak_of_head() {
    let (mut chain, _, bank) = bank();
    let r = call(&mut chain, bank, addr(1), "register", &[], 0);
    assert!(r.is_ok(), "{:?}", r.status);
    let c = &chain.state.contracts[&bank];
    assert_eq!(c.sload(U256::from(2)), U256::one());
    assert_eq!(c.sload(keccak_word(&[U256::from(2)])), abi::address_word(addr(1)));
    assert_eq!(c.sload(U256::from(3)), U256::one());
}

#[test]
fn dictionary_value_lives_at_keccak_of_key_and_head() {
    let (mut chain, _, bank) = bank();
    let a = format!("{:#x}", addr(1));
    assert!(call(&mut chain, bank, addr(1), "register", &[], 0).is_ok());
    let r = call(&mut chain, bank, addr(1), "getBalance", &[], 0);
    assert_eq!(returned(&r), "0");
    assert!(call(&mut chain, bank, addr(MANAGER), "freeDeposit", &[&a, "7"], 0).is_ok());
    let c = &chain.state.contracts[&bank];
    assert_eq!(c.sload(keccak_word(&[abi::address_word(addr(1)), U256::one()])), U256::from(7));
    assert_eq!(returned(&call(&mut chain, bank, addr(1), "getBalance", &[], 0)), "7");
}

#[test]
fn minting_through_free_deposit_is_backed_by_the_contract() {
    let (mut chain, _, bank) = bank();
    let a = format!("{:#x}", addr(1));
    assert!(call(&mut chain, bank, addr(MANAGER), "freeDeposit", &[&a, "40"], 0).is_ok());
    assert_eq!(chain.state.minted_total, U256::from(40));
    assert_eq!(chain.balance(bank), U256::from(40));
    assert_eq!(chain.stored_wei(bank), U256::from(40));
}

#[test]
fn withdraw_sends_and_internal_transfer_is_neutral() {
    let (mut chain, _, bank) = bank();
    chain.fund(addr(1), U256::from(100));
    assert!(call(&mut chain, bank, addr(1), "register", &[], 0).is_ok());
    assert!(call(&mut chain, bank, addr(2), "register", &[], 0).is_ok());
    assert!(call(&mut chain, bank, addr(1), "deposit", &[], 10).is_ok());
    assert_eq!(chain.balance(addr(1)), U256::from(90));
    assert_eq!(chain.balance(bank), U256::from(10));

    let before = (chain.balance(bank), chain.stored_wei(bank));
    let to = format!("{:#x}", addr(2));
    let r = call(&mut chain, bank, addr(1), "transfer", &["4", &to], 0);
    assert!(r.is_ok(), "{:?}", r.status);
    assert_eq!((chain.balance(bank), chain.stored_wei(bank)), before);

    let r = call(&mut chain, bank, addr(1), "withdraw", &["5"], 0);
    assert!(r.is_ok(), "{:?}", r.status);
    assert_eq!(chain.balance(addr(1)), U256::from(95));
    assert_eq!(chain.balance(bank), U256::from(5));
    assert_eq!(chain.stored_wei(bank), U256::from(5));

    let r = call(&mut chain, bank, addr(1), "withdraw", &["2"], 0);
    assert_eq!(reason(&r), "fatalError");
    let r = call(&mut chain, bank, addr(1), "withdraw", &["0"], 0);
    assert!(r.is_ok());
    assert_eq!(chain.balance(addr(1)), U256::from(95));
}

#[test]
fn non_payable_function_rejects_value() {
    let (mut chain, _, bank) = bank();
    chain.fund(addr(1), U256::from(5));
    let r = call(&mut chain, bank, addr(1), "getManager", &[], 1);
    assert_eq!(reason(&r), "non-payable");
    assert_eq!(chain.balance(addr(1)), U256::from(5));
}

#[test]
fn wei_from_source_moves_and_traps() {
    let p = program("atom.flint");
    let mut chain = Chain::default();
    chain.fund(addr(1), U256::from(100));
    let atom = deploy(&mut chain, &p, "Atom", addr(1), &[AbiValue::Address(addr(1))]);
    assert!(call(&mut chain, atom, addr(1), "fill", &[], 100).is_ok());
    let r = call(&mut chain, atom, addr(2), "poke", &["30", "false"], 0);
    assert!(r.is_ok(), "{:?}", r.status);
    assert_eq!(chain.stored_wei(atom), U256::from(70));
    assert_eq!(chain.balance(addr(2)), U256::from(30));
    let r = call(&mut chain, atom, addr(2), "poke", &["71", "false"], 0);
    assert_eq!(reason(&r), "fatalError");
    assert_eq!(chain.stored_wei(atom), U256::from(70));
}

const ARRAYS: &str = "
contract Arr {
  var xs: [Int] = []
}

Arr :: (any) {
  public init() {}

  public func at(i: Int) -> Int {
    return xs[i]
  }

  public mutating func put(i: Int, v: Int) {
    xs[i] = v
  }

  public func size() -> Int {
    return xs.size
  }
}
";

#[test]
fn array_reads_past_the_end_revert() {
    let p = compile_source("arr", ARRAYS, StdlibMode::Full);
    let mut chain = Chain::default();
    let arr = deploy(&mut chain, &p, "Arr", addr(1), &[]);
    assert_eq!(reason(&call(&mut chain, arr, addr(1), "at", &["0"], 0)), "out-of-bounds");
    assert!(call(&mut chain, arr, addr(1), "put", &["2", "9"], 0).is_ok());
    assert_eq!(returned(&call(&mut chain, arr, addr(1), "size", &[], 0)), "3");
    assert_eq!(returned(&call(&mut chain, arr, addr(1), "at", &["2"], 0)), "9");
    assert_eq!(returned(&call(&mut chain, arr, addr(1), "at", &["1"], 0)), "0");
    assert_eq!(reason(&call(&mut chain, arr, addr(1), "at", &["3"], 0)), "out-of-bounds");
}

const FAILING_INIT: &str = "
contract Broken {
  var x: Int = 0
}

Broken :: (any) {
  public init() {
    x = 1
    fatalError()
  }
}
";

#[test]
fn failing_initialiser_leaves_no_contract() {
    let p = compile_source("broken", FAILING_INIT, StdlibMode::Full);
    let mut chain = Chain::default();
    let before = chain.state.clone();
    let (a, r) = chain.deploy(&p, "Broken", addr(1), &[], U256::zero(), None).unwrap();
    assert!(a.is_none());
    assert_eq!(reason(&r), "fatalError");
    assert_eq!(chain.state, before);
}

#[test]
fn unknown_selector_and_bad_arguments_revert() {
    let (mut chain, _, bank) = bank();
    let tx = |data: Vec<u8>| flint_core::vm::Transaction { caller: addr(1), to: bank, data, value: U256::zero(), gas_limit: None };
    let r = chain.call(&tx(vec![1, 2, 3, 4])).unwrap();
    assert_eq!(reason(&r), "unknown-selector");
    let mut data = chain.encode_call(bank, "getManager", &[]).unwrap();
    data.push(0);
    assert_eq!(reason(&chain.call(&tx(data)).unwrap()), "invalid-arguments");
}

#[test]
fn out_of_gas_reverts_all_effects() {
    let (mut chain, _, bank) = bank();
    let before = chain.state.clone();
    let data = chain.encode_call(bank, "register", &[]).unwrap();
    let r = chain
        .call(&flint_core::vm::Transaction { caller: addr(1), to: bank, data, value: U256::zero(), gas_limit: Some(120) })
        .unwrap();
    assert_eq!(reason(&r), "out-of-gas");
    assert_eq!(r.gas_used, 120);
    assert_eq!(chain.state, before);
}
