//! The simulated chain: accounts, deployed contracts, transactions and the interpreter.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use primitive_types::{H160, U256};
use serde_json::{json, Value};

use super::abi::{self, AbiError, AbiValue};
use super::arith;
use super::gas::{self, GasTable, Meter};
use super::memory::Memory;
use super::storage;
use crate::lowering::ir::*;

pub const MAX_CALL_DEPTH: usize = 1024;

/// First contract address; later deployments count up from it.
pub fn contract_address(nonce: u64) -> H160 {
    let base = U256::from(0xc0u64) << 152;
    abi::word_address(base + U256::from(nonce + 1))
}

/// An IR contract with lookup tables for execution.
#[derive(Debug)]
pub struct Code {
    pub contract: IRContract,
    functions: HashMap<String, usize>,
    labels: Vec<HashMap<Label, usize>>,
}

impl Code {
    pub fn new(contract: IRContract) -> Code {
        let functions = contract.functions.iter().enumerate().map(|(i, f)| (f.name.clone(), i)).collect();
        let labels = contract
            .functions
            .iter()
            .map(|f| {
                f.body
                    .iter()
                    .enumerate()
                    .filter_map(|(pc, i)| match i {
                        Instr::Label(l) => Some((*l, pc)),
                        _ => None,
                    })
                    .collect()
            })
            .collect();
        Code { contract, functions, labels }
    }

    pub fn function_index(&self, name: &str) -> Option<usize> {
        self.functions.get(name).copied()
    }
}

impl PartialEq for Code {
    fn eq(&self, other: &Code) -> bool {
        self.contract == other.contract
    }
}

impl Eq for Code {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContractInstance {
    pub code: Arc<Code>,
    /// Zero words are never stored.
    pub storage: BTreeMap<U256, U256>,
    pub typestate: u32,
    pub balance: U256,
}

impl ContractInstance {
    pub fn sload(&self, slot: U256) -> U256 {
        self.storage.get(&slot).copied().unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmittedEvent {
    pub contract: H160,
    pub name: String,
    pub fields: Vec<(String, AbiValue)>,
}

impl EmittedEvent {
    pub fn to_json(&self) -> Value {
        let fields: serde_json::Map<String, Value> =
            self.fields.iter().map(|(n, v)| (n.clone(), json!(v.to_string()))).collect();
        json!({"contract": format!("{:#x}", self.contract), "name": self.name, "fields": fields})
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Reverted(RevertReason),
}

impl Status {
    pub fn name(&self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Reverted(_) => "reverted",
        }
    }

    pub fn reason(&self) -> Option<RevertReason> {
        match self {
            Status::Ok => None,
            Status::Reverted(r) => Some(*r),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallResult {
    pub status: Status,
    pub return_value: Option<AbiValue>,
    pub gas_used: u64,
    pub protection_checks: u64,
    pub typestate_checks: u64,
    /// Events of a committed transaction; empty after a revert.
    pub events: Vec<EmittedEvent>,
    pub warnings: Vec<String>,
}

impl CallResult {
    pub fn is_ok(&self) -> bool {
        self.status == Status::Ok
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transaction {
    pub caller: H160,
    pub to: H160,
    pub data: Vec<u8>,
    pub value: U256,
    pub gas_limit: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VmError {
    #[error("no contract named '{0}' in the program")]
    UnknownContract(String),
    #[error("no contract is deployed at {0:#x}")]
    NotDeployed(H160),
    #[error("contract '{contract}' has no public function '{function}' taking {arity} arguments")]
    UnknownFunction { contract: String, function: String, arity: usize },
    #[error("expected {expected} arguments, found {found}")]
    ArgumentCount { expected: usize, found: usize },
    #[error(transparent)]
    Abi(#[from] AbiError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainState {
    pub accounts: BTreeMap<H160, U256>,
    pub contracts: BTreeMap<H160, ContractInstance>,
    pub events: Vec<EmittedEvent>,
    pub minted_total: U256,
    pub nonce: u64,
}

impl Default for ChainState {
    fn default() -> Self {
        ChainState {
            accounts: BTreeMap::new(),
            contracts: BTreeMap::new(),
            events: Vec::new(),
            minted_total: U256::zero(),
            nonce: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Chain {
    pub state: ChainState,
    pub gas_table: GasTable,
    pub default_gas_limit: u64,
}

impl Default for Chain {
    fn default() -> Self {
        Chain::new(GasTable::default())
    }
}

impl Chain {
    pub fn new(gas_table: GasTable) -> Chain {
        Chain { state: ChainState::default(), gas_table, default_gas_limit: gas::DEFAULT_GAS_LIMIT }
    }

    pub fn balance(&self, address: H160) -> U256 {
        match self.state.contracts.get(&address) {
            Some(c) => c.balance,
            None => self.state.accounts.get(&address).copied().unwrap_or_default(),
        }
    }

    /// Credits an external account outside any transaction.
    pub fn fund(&mut self, address: H160, amount: U256) {
        let b = self.state.accounts.entry(address).or_default();
        *b = b.saturating_add(amount);
    }

    /// Σ account balances + Σ contract balances.
    pub fn total_balance(&self) -> U256 {
        let accounts = self.state.accounts.values();
        let contracts = self.state.contracts.values().map(|c| &c.balance);
        accounts.chain(contracts).fold(U256::zero(), |a, b| a.saturating_add(*b))
    }

    pub fn deploy(
        &mut self,
        program: &IRProgram,
        contract: &str,
        caller: H160,
        args: &[AbiValue],
        value: U256,
        gas_limit: Option<u64>,
    ) -> Result<(Option<H160>, CallResult), VmError> {
        let ir = program.contract(contract).ok_or_else(|| VmError::UnknownContract(contract.to_string()))?;
        let code = Arc::new(Code::new(ir.clone()));
        let init = code.function_index(&ir.init).ok_or_else(|| VmError::UnknownContract(contract.to_string()))?;
        let words = word_args(&code.contract.functions[init], args)?;
        let address = contract_address(self.state.nonce);
        let mut work = self.state.clone();
        work.nonce += 1;
        work.contracts.insert(
            address,
            ContractInstance { code: code.clone(), storage: BTreeMap::new(), typestate: 0, balance: U256::zero() },
        );
        let limit = gas_limit.unwrap_or(self.default_gas_limit);
        let (result, work) = self.transact(work, address, caller, init, words, value, limit, None);
        if let Some(mut work) = work {
            let instance = work.contracts.get_mut(&address).expect("deployed");
            if instance.typestate == 0 {
                instance.typestate = instance.code.contract.completed_marker();
            }
            self.state = work;
            return Ok((Some(address), result));
        }
        Ok((None, result))
    }

    /// Types of the public initialiser's arguments.
    pub fn init_params(program: &IRProgram, contract: &str) -> Result<Vec<AbiType>, VmError> {
        let ir = program.contract(contract).ok_or_else(|| VmError::UnknownContract(contract.to_string()))?;
        let f = ir.function(&ir.init).ok_or_else(|| VmError::UnknownContract(contract.to_string()))?;
        Ok(external_params(f))
    }

    /// Encodes a call to the public function `name` taking `args.len()` arguments.
    pub fn encode_call(&self, to: H160, name: &str, args: &[&str]) -> Result<Vec<u8>, VmError> {
        let instance = self.state.contracts.get(&to).ok_or(VmError::NotDeployed(to))?;
        let c = &instance.code.contract;
        let unknown =
            || VmError::UnknownFunction { contract: c.name.clone(), function: name.to_string(), arity: args.len() };
        let (entry, types) = c
            .dispatch
            .iter()
            .filter(|d| d.name == name)
            .filter_map(|d| c.function(&d.function).map(|f| (d, external_params(f))))
            .find(|(_, types)| types.len() == args.len())
            .ok_or_else(unknown)?;
        let values = types.iter().zip(args).map(|(t, a)| AbiValue::parse(*t, a)).collect::<Result<Vec<_>, _>>()?;
        Ok(abi::encode_call(entry.selector, &values))
    }

    pub fn call(&mut self, tx: &Transaction) -> Result<CallResult, VmError> {
        let instance = self.state.contracts.get(&tx.to).ok_or(VmError::NotDeployed(tx.to))?;
        let code = instance.code.clone();
        let limit = tx.gas_limit.unwrap_or(self.default_gas_limit);
        let selector: Option<[u8; 4]> = tx.data.get(..4).map(|s| s.try_into().expect("4 bytes"));
        let entry = selector.and_then(|s| code.contract.dispatch.iter().find(|d| d.selector == s));
        let (fidx, words, returns) = match entry {
            Some(d) => {
                let fidx = code.function_index(&d.function).expect("dispatch target exists");
                let types = external_params(&code.contract.functions[fidx]);
                match abi::decode_args(&tx.data[4..], &types) {
                    Ok(values) => (fidx, values.iter().map(AbiValue::to_word).collect(), d.returns),
                    Err(_) => return Ok(reverted(RevertReason::InvalidArguments, Meter::new(limit))),
                }
            }
            None => match code.contract.fallback.as_ref().and_then(|f| code.function_index(f)) {
                Some(fidx) => (fidx, Vec::new(), None),
                None => return Ok(reverted(RevertReason::UnknownSelector, Meter::new(limit))),
            },
        };
        let work = self.state.clone();
        let (result, work) = self.transact(work, tx.to, tx.caller, fidx, words, tx.value, limit, returns);
        if let Some(work) = work {
            self.state = work;
        }
        Ok(result)
    }

    /// Runs one transaction on `work`; returns the committed state on success.
    #[allow(clippy::too_many_arguments)]
    fn transact(
        &self,
        mut work: ChainState,
        address: H160,
        caller: H160,
        fidx: usize,
        words: Vec<U256>,
        value: U256,
        gas_limit: u64,
        returns: Option<AbiType>,
    ) -> (CallResult, Option<ChainState>) {
        let code = work.contracts[&address].code.clone();
        let events_before = work.events.len();
        let mut exec = Exec {
            chain: &mut work,
            address,
            code: code.clone(),
            caller,
            memory: Memory::default(),
            currency: Vec::new(),
            meter: Meter::new(gas_limit),
            gas: &self.gas_table,
            frames: Vec::new(),
        };
        let outcome = exec.enter(fidx, words, value);
        let meter = exec.meter;
        let mut warnings = Vec::new();
        let unconsumed = exec.currency.iter().fold(U256::zero(), |a, &p| a.saturating_add(exec.memory.load(p.into())));
        match outcome {
            Err(reason) => (reverted(reason, meter), None),
            Ok(values) => {
                if !unconsumed.is_zero() {
                    warnings.push(format!("transaction ended with {unconsumed} unconsumed Wei in local values"));
                }
                let events = work.events[events_before..].to_vec();
                let return_value = returns.zip(values.first()).map(|(t, w)| AbiValue::from_word(t, *w));
                let result = CallResult {
                    status: Status::Ok,
                    return_value,
                    gas_used: meter.gas_used,
                    protection_checks: meter.protection_checks,
                    typestate_checks: meter.typestate_checks,
                    events,
                    warnings,
                };
                (result, Some(work))
            }
        }
    }

    /// Σ of Wei held in the contract's storage, found through its layout.
    pub fn stored_wei(&self, address: H160) -> U256 {
        let Some(c) = self.state.contracts.get(&address) else { return U256::zero() };
        c.code
            .contract
            .layout
            .iter()
            .fold(U256::zero(), |acc, l| acc.saturating_add(stored_in(c, U256::from(l.slot), &l.layout)))
    }

    /// Deterministic JSON dump of the whole state.
    pub fn dump(&self) -> Value {
        let hex = |w: &U256| format!("{w:#x}");
        let accounts: serde_json::Map<String, Value> =
            self.state.accounts.iter().map(|(a, b)| (format!("{a:#x}"), json!(b.to_string()))).collect();
        let contracts: serde_json::Map<String, Value> = self
            .state
            .contracts
            .iter()
            .map(|(a, c)| {
                let storage: serde_json::Map<String, Value> =
                    c.storage.iter().map(|(k, v)| (hex(k), json!(hex(v)))).collect();
                (
                    format!("{a:#x}"),
                    json!({
                        "contract": c.code.contract.name,
                        "typestate": c.typestate,
                        "balance": c.balance.to_string(),
                        "storage": storage,
                    }),
                )
            })
            .collect();
        json!({
            "accounts": accounts,
            "contracts": contracts,
            "events": self.state.events.iter().map(EmittedEvent::to_json).collect::<Vec<_>>(),
            "mintedTotal": self.state.minted_total.to_string(),
        })
    }
}

fn stored_in(c: &ContractInstance, slot: U256, layout: &LayoutType) -> U256 {
    let add = |a: U256, b: U256| a.saturating_add(b);
    match layout {
        LayoutType::Word => U256::zero(),
        LayoutType::Currency => c.sload(slot),
        LayoutType::Struct { fields } => {
            fields.iter().fold(U256::zero(), |acc, (off, l)| add(acc, stored_in(c, slot + U256::from(*off), l)))
        }
        LayoutType::FixedArray { elem, elem_words, len } => (0..*len).fold(U256::zero(), |acc, i| {
            add(acc, stored_in(c, slot + U256::from(i * elem_words), elem))
        }),
        LayoutType::Array { elem, elem_words } => {
            let len = c.sload(slot).low_u64();
            (0..len).fold(U256::zero(), |acc, i| {
                add(acc, stored_in(c, storage::array_element(slot, i.into(), *elem_words), elem))
            })
        }
        LayoutType::Dictionary { value, .. } => {
            let count = c.sload(slot).low_u64();
            (0..count).fold(U256::zero(), |acc, i| {
                let key = c.sload(storage::dict_key_slot(slot, i.into()));
                add(acc, stored_in(c, storage::dict_entry(slot, key), value))
            })
        }
    }
}

fn external_params(f: &IRFunction) -> Vec<AbiType> {
    f.params
        .iter()
        .filter_map(|p| match p {
            ParamKind::Word { abi } => Some(abi.unwrap_or(AbiType::Uint256)),
            _ => None,
        })
        .collect()
}

fn word_args(f: &IRFunction, args: &[AbiValue]) -> Result<Vec<U256>, VmError> {
    let expected = external_params(f).len();
    if expected != args.len() {
        return Err(VmError::ArgumentCount { expected, found: args.len() });
    }
    Ok(args.iter().map(AbiValue::to_word).collect())
}

fn reverted(reason: RevertReason, meter: Meter) -> CallResult {
    CallResult {
        status: Status::Reverted(reason),
        return_value: None,
        gas_used: meter.gas_used,
        protection_checks: meter.protection_checks,
        typestate_checks: meter.typestate_checks,
        events: Vec::new(),
        warnings: Vec::new(),
    }
}

struct Frame {
    function: usize,
    pc: usize,
    regs: Vec<U256>,
    dsts: Vec<Reg>,
}

struct Exec<'a> {
    chain: &'a mut ChainState,
    address: H160,
    code: Arc<Code>,
    caller: H160,
    memory: Memory,
    /// Memory addresses of allocations holding Wei.
    currency: Vec<u64>,
    meter: Meter,
    gas: &'a GasTable,
    frames: Vec<Frame>,
}

fn instr_name(i: &Instr) -> &'static str {
    match i {
        Instr::Move { .. } => "move",
        Instr::Arith { .. } => "arith",
        Instr::Cmp { .. } => "cmp",
        Instr::Load { .. } => "load",
        Instr::Store { .. } => "store",
        Instr::Offset { .. } => "offset",
        Instr::Alloc { .. } => "alloc",
        Instr::KeccakSlot { .. } => "keccakslot",
        Instr::DictKeyAt { .. } => "dictkey",
        Instr::BoundsCheck { .. } => "boundscheck",
        Instr::RequireStorage { .. } => "requirestorage",
        Instr::Copy { .. } => "copy",
        Instr::Label(_) => "label",
        Instr::Jump(_) => "jump",
        Instr::Branch { .. } => "branch",
        Instr::Call { .. } => "call",
        Instr::Return { .. } => "return",
        Instr::Revert { .. } => "revert",
        Instr::EmitEvent { .. } => "emit",
        Instr::BecomeState { .. } => "become",
        Instr::SendWei { .. } => "sendwei",
        Instr::Mint { .. } => "mint",
        Instr::Caller { .. } => "caller",
    }
}

impl Exec<'_> {
    fn instance(&mut self) -> &mut ContractInstance {
        self.chain.contracts.get_mut(&self.address).expect("executing contract exists")
    }

    fn charge(&mut self, name: &str) -> Result<(), RevertReason> {
        let cost = self.gas.cost(name);
        self.meter.charge(cost)
    }

    fn sload(&mut self, slot: U256) -> Result<U256, RevertReason> {
        self.charge(gas::SLOAD)?;
        Ok(self.instance().sload(slot))
    }

    fn sstore(&mut self, slot: U256, value: U256) -> Result<(), RevertReason> {
        self.charge(gas::SSTORE)?;
        let storage = &mut self.instance().storage;
        if value.is_zero() {
            storage.remove(&slot);
        } else {
            storage.insert(slot, value);
        }
        Ok(())
    }

    fn read(&mut self, addr: U256, is_mem: U256) -> Result<U256, RevertReason> {
        if is_mem.is_zero() {
            self.sload(addr)
        } else {
            Ok(self.memory.load(addr))
        }
    }

    fn write(&mut self, addr: U256, is_mem: U256, value: U256) -> Result<(), RevertReason> {
        if is_mem.is_zero() {
            self.sstore(addr, value)
        } else if self.memory.store(addr, value) {
            Ok(())
        } else {
            Err(RevertReason::Unsupported)
        }
    }

    fn alloc(&mut self, words: u64, currency: bool) -> u64 {
        let at = self.memory.allocate(words * 32);
        if currency {
            self.currency.push(at);
        }
        at
    }

    /// External entry: moves the attached value, binds the implicit Wei and
    /// runs the function through its checked entry.
    fn enter(&mut self, fidx: usize, words: Vec<U256>, value: U256) -> Result<Vec<U256>, RevertReason> {
        let code = self.code.clone();
        let f = &code.contract.functions[fidx];
        let caller_balance = self.chain.accounts.get(&self.caller).copied().unwrap_or_default();
        if caller_balance < value {
            return Err(RevertReason::InsufficientFunds);
        }
        if !value.is_zero() && !f.payable {
            return Err(RevertReason::NonPayable);
        }
        if !value.is_zero() {
            self.chain.accounts.insert(self.caller, caller_balance - value);
            let c = self.instance();
            c.balance = c.balance.checked_add(value).ok_or(RevertReason::Overflow)?;
        }
        let mut args = Vec::new();
        let mut words = words.into_iter();
        for p in &f.params {
            match p {
                ParamKind::Word { .. } => args.push(words.next().unwrap_or_default()),
                ParamKind::ImplicitValue => {
                    let at = self.alloc(1, true);
                    self.memory.store(at.into(), value);
                    args.extend([U256::from(at), U256::one()]);
                }
                ParamKind::Place => return Err(RevertReason::InvalidArguments),
            }
        }
        self.run(fidx, args, true)
    }

    fn entry_checks(&mut self, e: &EntryChecks) -> Result<(), RevertReason> {
        if !e.typestates.is_empty() {
            self.charge(gas::TYPESTATE_CHECK)?;
            self.meter.typestate_checks += 1;
            if !e.typestates.contains(&self.instance().typestate) {
                return Err(RevertReason::Typestate);
            }
        }
        if !e.protections.is_empty() {
            self.charge(gas::PROTECTION_CHECK)?;
            self.meter.protection_checks += 1;
            for p in &e.protections {
                if self.admits(p)? {
                    return Ok(());
                }
            }
            return Err(RevertReason::Protection);
        }
        Ok(())
    }

    fn admits(&mut self, p: &ProtectionCheck) -> Result<bool, RevertReason> {
        let caller = abi::address_word(self.caller);
        match p {
            ProtectionCheck::AddressProperty { slot } => Ok(self.sload((*slot).into())? == caller),
            ProtectionCheck::AddressList { slot } => {
                let head = U256::from(*slot);
                let len = self.sload(head)?;
                let mut i = U256::zero();
                while i < len {
                    if self.sload(storage::array_element(head, i, 1))? == caller {
                        return Ok(true);
                    }
                    i += U256::one();
                }
                Ok(false)
            }
            ProtectionCheck::Predicate { function } => {
                let fidx = self.code.function_index(function).ok_or(RevertReason::Unsupported)?;
                let nparams = self.code.contract.functions[fidx].params.len();
                let args = if nparams == 1 { vec![caller] } else { Vec::new() };
                match self.run(fidx, args, false) {
                    Ok(values) => Ok(values.first().is_some_and(|v| !v.is_zero())),
                    Err(RevertReason::OutOfGas) => Err(RevertReason::OutOfGas),
                    Err(_) => Ok(false),
                }
            }
        }
    }

    fn push_frame(&mut self, fidx: usize, args: Vec<U256>, checked: bool, dsts: Vec<Reg>) -> Result<(), RevertReason> {
        if self.frames.len() >= MAX_CALL_DEPTH {
            return Err(RevertReason::CallDepth);
        }
        let code = self.code.clone();
        let f = &code.contract.functions[fidx];
        if let Some(e) = &f.entry {
            if checked {
                self.entry_checks(e)?;
            }
            debug_assert!(checked || !self.frames.is_empty() || e.protections.is_empty(), "unchecked external entry");
            // Soundness: a body never starts outside its typestate group.
            if !e.typestates.is_empty() && !e.typestates.contains(&self.instance().typestate) {
                return Err(RevertReason::Typestate);
            }
        }
        let mut regs = vec![U256::zero(); (f.num_regs as usize).max(args.len())];
        regs[..args.len()].copy_from_slice(&args);
        self.frames.push(Frame { function: fidx, pc: 0, regs, dsts });
        Ok(())
    }

    /// Runs `fidx` to completion in a nested frame stack.
    fn run(&mut self, fidx: usize, args: Vec<U256>, checked: bool) -> Result<Vec<U256>, RevertReason> {
        let base = self.frames.len();
        let result = self.push_frame(fidx, args, checked, Vec::new()).and_then(|_| self.run_loop(base));
        self.frames.truncate(base);
        result
    }

    fn run_loop(&mut self, base: usize) -> Result<Vec<U256>, RevertReason> {
        let code = self.code.clone();
        loop {
            let frame = self.frames.last_mut().expect("active frame");
            let body = &code.contract.functions[frame.function].body;
            let Some(instr) = body.get(frame.pc) else {
                if let Some(values) = self.pop_frame(base, Vec::new()) {
                    return Ok(values);
                }
                continue;
            };
            frame.pc += 1;
            if !matches!(instr, Instr::Label(_)) {
                self.charge(instr_name(instr))?;
            }
            if let Some(values) = self.step(instr, base)? {
                return Ok(values);
            }
        }
    }

    /// Pops the top frame with `values`; returns them when it was the base frame.
    fn pop_frame(&mut self, base: usize, values: Vec<U256>) -> Option<Vec<U256>> {
        let frame = self.frames.pop().expect("active frame");
        if self.frames.len() == base {
            return Some(values);
        }
        let caller = self.frames.last_mut().expect("calling frame");
        for (d, v) in frame.dsts.iter().zip(values) {
            caller.regs[*d as usize] = v;
        }
        None
    }

    fn val(&self, o: &Operand) -> U256 {
        match o {
            Operand::Const(c) => *c,
            Operand::Reg(r) => self.frames.last().expect("active frame").regs[*r as usize],
        }
    }

    fn set(&mut self, r: Reg, v: U256) {
        self.frames.last_mut().expect("active frame").regs[r as usize] = v;
    }

    fn jump(&mut self, l: Label) {
        let frame = self.frames.last_mut().expect("active frame");
        frame.pc = self.code.labels[frame.function][&l];
    }

    fn step(&mut self, instr: &Instr, base: usize) -> Result<Option<Vec<U256>>, RevertReason> {
        match instr {
            Instr::Move { dst, src } => {
                let v = self.val(src);
                self.set(*dst, v);
            }
            Instr::Arith { dst, op, a, b } => {
                let v = arith::checked(*op, self.val(a), self.val(b))?;
                self.set(*dst, v);
            }
            Instr::Cmp { dst, op, a, b } => {
                let (a, b) = (self.val(a), self.val(b));
                let r = match op {
                    CmpOp::Eq => a == b,
                    CmpOp::Ne => a != b,
                    CmpOp::Lt => a < b,
                    CmpOp::Le => a <= b,
                    CmpOp::Gt => a > b,
                    CmpOp::Ge => a >= b,
                };
                self.set(*dst, U256::from(r as u8));
            }
            Instr::Load { dst, addr, is_mem } => {
                let v = self.read(self.val(addr), self.val(is_mem))?;
                self.set(*dst, v);
            }
            Instr::Store { addr, value, is_mem } => {
                self.write(self.val(addr), self.val(is_mem), self.val(value))?;
            }
            Instr::Offset { dst, base, words, is_mem } => {
                let scale = if self.val(is_mem).is_zero() { 1u64 } else { 32 };
                let off = self.val(words).overflowing_mul(U256::from(scale)).0;
                let v = self.val(base).overflowing_add(off).0;
                self.set(*dst, v);
            }
            Instr::Alloc { dst, words, currency } => {
                let at = self.alloc(*words, *currency);
                self.set(*dst, at.into());
            }
            Instr::KeccakSlot { dst, kind, head, key } => {
                let (head, key) = (self.val(head), self.val(key));
                let slot = match kind {
                    SlotKind::ArrayElem { elem_words, write } => {
                        let len = self.sload(head)?;
                        if key >= len {
                            if !write {
                                return Err(RevertReason::OutOfBounds);
                            }
                            let new_len = key.checked_add(U256::one()).ok_or(RevertReason::OutOfBounds)?;
                            self.sstore(head, new_len)?;
                        }
                        storage::array_element(head, key, *elem_words)
                    }
                    SlotKind::DictEntry { write } => {
                        if *write {
                            self.register_key(head, key)?;
                        }
                        storage::dict_entry(head, key)
                    }
                };
                self.set(*dst, slot);
            }
            Instr::DictKeyAt { dst, head, index } => {
                let v = self.sload(storage::dict_key_slot(self.val(head), self.val(index)))?;
                self.set(*dst, v);
            }
            Instr::BoundsCheck { index, len } => {
                if self.val(index) >= self.val(len) {
                    return Err(RevertReason::OutOfBounds);
                }
            }
            Instr::RequireStorage { is_mem } => {
                if !self.val(is_mem).is_zero() {
                    return Err(RevertReason::Unsupported);
                }
            }
            Instr::Copy { dst, dst_mem, src, src_mem, words } => {
                let (dst, dst_mem, src, src_mem) = (self.val(dst), self.val(dst_mem), self.val(src), self.val(src_mem));
                let step = |m: U256| U256::from(if m.is_zero() { 1u64 } else { 32 });
                for w in 0..*words {
                    let w = U256::from(w);
                    let v = self.read(src + w * step(src_mem), src_mem)?;
                    self.write(dst + w * step(dst_mem), dst_mem, v)?;
                }
            }
            Instr::Label(_) => {}
            Instr::Jump(l) => self.jump(*l),
            Instr::Branch { cond, then_label, else_label } => {
                let l = if self.val(cond).is_zero() { *else_label } else { *then_label };
                self.jump(l);
            }
            Instr::Call { dsts, func, args, checked } => {
                let fidx = self.code.function_index(func).ok_or(RevertReason::Unsupported)?;
                let args: Vec<U256> = args.iter().map(|a| self.val(a)).collect();
                self.push_frame(fidx, args, *checked, dsts.clone())?;
            }
            Instr::Return { values } => {
                let values: Vec<U256> = values.iter().map(|v| self.val(v)).collect();
                return Ok(self.pop_frame(base, values));
            }
            Instr::Revert { reason } => return Err(*reason),
            Instr::EmitEvent { event, args } => {
                self.meter.charge(self.gas.cost(gas::EVENT_WORD).saturating_mul(args.len() as u64))?;
                let code = self.code.clone();
                let fields = code.contract.events.iter().find(|e| &e.name == event).map(|e| e.fields.as_slice());
                let fields = fields.unwrap_or(&[]);
                let fields = fields
                    .iter()
                    .zip(args)
                    .map(|((n, t), a)| (n.clone(), AbiValue::from_word(*t, self.val(a))))
                    .collect();
                let e = EmittedEvent { contract: self.address, name: event.clone(), fields };
                self.chain.events.push(e);
            }
            Instr::BecomeState { ordinal } => self.instance().typestate = *ordinal,
            Instr::SendWei { address, amount } => {
                let (to, amount) = (abi::word_address(self.val(address)), self.val(amount));
                let c = self.instance();
                c.balance = c.balance.checked_sub(amount).ok_or(RevertReason::InsufficientFunds)?;
                let target = match self.chain.contracts.get_mut(&to) {
                    Some(c) => &mut c.balance,
                    None => self.chain.accounts.entry(to).or_default(),
                };
                *target = target.checked_add(amount).ok_or(RevertReason::Overflow)?;
            }
            Instr::Mint { amount } => {
                let amount = self.val(amount);
                self.chain.minted_total = self.chain.minted_total.checked_add(amount).ok_or(RevertReason::Overflow)?;
                let c = self.instance();
                c.balance = c.balance.checked_add(amount).ok_or(RevertReason::Overflow)?;
            }
            Instr::Caller { dst } => {
                let v = abi::address_word(self.caller);
                self.set(*dst, v);
            }
        }
        Ok(None)
    }

    fn register_key(&mut self, head: U256, key: U256) -> Result<(), RevertReason> {
        let marker_slot = storage::dict_marker(head, key);
        let marker = self.sload(marker_slot)?;
        let count = self.sload(head)?;
        if !marker.is_zero() && marker - 1 < count && self.sload(storage::dict_key_slot(head, marker - 1))? == key {
            return Ok(());
        }
        self.sstore(storage::dict_key_slot(head, count), key)?;
        let count = count + 1;
        self.sstore(marker_slot, count)?;
        self.sstore(head, count)
    }
}
