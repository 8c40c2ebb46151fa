//! The intermediate representation executed by the VM.

use primitive_types::U256;
use serde::{Deserialize, Serialize};

pub type Reg = u32;
pub type Label = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Operand {
    Reg(Reg),
    Const(U256),
}

impl Operand {
    pub fn int(v: u64) -> Operand {
        Operand::Const(U256::from(v))
    }

    pub fn as_const(&self) -> Option<U256> {
        match self {
            Operand::Const(c) => Some(*c),
            Operand::Reg(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
    Exp,
    WAdd,
    WSub,
    WMul,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

/// Storage addressing of a dynamic collection element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SlotKind {
    /// Element `key` of the array whose length lives at `head`. Reads are
    /// bounds-checked; writes past the end extend the array.
    ArrayElem { elem_words: u64, write: bool },
    /// Value for `key` in the dictionary at `head`. Writes register the key.
    DictEntry { write: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RevertReason {
    Protection,
    Typestate,
    Overflow,
    DivisionByZero,
    Assertion,
    FatalError,
    InsufficientFunds,
    OutOfGas,
    UnknownSelector,
    OutOfBounds,
    NonPayable,
    Unsupported,
    CallDepth,
    InvalidArguments,
}

impl RevertReason {
    pub fn name(self) -> &'static str {
        match self {
            RevertReason::Protection => "protection",
            RevertReason::Typestate => "typestate",
            RevertReason::Overflow => "overflow",
            RevertReason::DivisionByZero => "division-by-zero",
            RevertReason::Assertion => "assertion",
            RevertReason::FatalError => "fatalError",
            RevertReason::InsufficientFunds => "insufficient-funds",
            RevertReason::OutOfGas => "out-of-gas",
            RevertReason::UnknownSelector => "unknown-selector",
            RevertReason::OutOfBounds => "out-of-bounds",
            RevertReason::NonPayable => "non-payable",
            RevertReason::Unsupported => "unsupported",
            RevertReason::CallDepth => "call-depth",
            RevertReason::InvalidArguments => "invalid-arguments",
        }
    }

    pub const ALL: [RevertReason; 14] = [
        RevertReason::Protection,
        RevertReason::Typestate,
        RevertReason::Overflow,
        RevertReason::DivisionByZero,
        RevertReason::Assertion,
        RevertReason::FatalError,
        RevertReason::InsufficientFunds,
        RevertReason::OutOfGas,
        RevertReason::UnknownSelector,
        RevertReason::OutOfBounds,
        RevertReason::NonPayable,
        RevertReason::Unsupported,
        RevertReason::CallDepth,
        RevertReason::InvalidArguments,
    ];

    pub fn from_name(name: &str) -> Option<RevertReason> {
        RevertReason::ALL.into_iter().find(|r| r.name() == name)
    }
}

/// Places are `(address, is_mem)` pairs: storage slots when `is_mem` is 0,
/// byte offsets into memory otherwise.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Instr {
    Move { dst: Reg, src: Operand },
    Arith { dst: Reg, op: ArithOp, a: Operand, b: Operand },
    Cmp { dst: Reg, op: CmpOp, a: Operand, b: Operand },
    Load { dst: Reg, addr: Operand, is_mem: Operand },
    Store { addr: Operand, value: Operand, is_mem: Operand },
    /// `dst = base + words * (is_mem ? 32 : 1)`.
    Offset { dst: Reg, base: Operand, words: Operand, is_mem: Operand },
    /// Fresh zeroed memory; `currency` marks allocations holding Wei.
    Alloc { dst: Reg, words: u64, currency: bool },
    KeccakSlot { dst: Reg, kind: SlotKind, head: Operand, key: Operand },
    /// Key number `index` of the dictionary at `head`, in insertion order.
    DictKeyAt { dst: Reg, head: Operand, index: Operand },
    /// Traps with out-of-bounds unless `index < len`.
    BoundsCheck { index: Operand, len: Operand },
    /// Collections live only in storage; traps with unsupported otherwise.
    RequireStorage { is_mem: Operand },
    Copy { dst: Operand, dst_mem: Operand, src: Operand, src_mem: Operand, words: u64 },
    Label(Label),
    Jump(Label),
    Branch { cond: Operand, then_label: Label, else_label: Label },
    /// `checked` calls run the callee's entry checks first.
    Call { dsts: Vec<Reg>, func: String, args: Vec<Operand>, checked: bool },
    Return { values: Vec<Operand> },
    Revert { reason: RevertReason },
    EmitEvent { event: String, args: Vec<Operand> },
    BecomeState { ordinal: u32 },
    SendWei { address: Operand, amount: Operand },
    Mint { amount: Operand },
    Caller { dst: Reg },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AbiType {
    Uint256,
    Address,
    Bool,
    String,
}

impl AbiType {
    pub fn name(self) -> &'static str {
        match self {
            AbiType::Uint256 => "uint256",
            AbiType::Address => "address",
            AbiType::Bool => "bool",
            AbiType::String => "string",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParamKind {
    /// One word; `abi` is its external encoding where one exists.
    Word { abi: Option<AbiType> },
    /// Two registers: address and is_mem flag.
    Place,
    /// The attached value, passed as a memory Wei.
    ImplicitValue,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProtectionCheck {
    AddressProperty { slot: u64 },
    AddressList { slot: u64 },
    Predicate { function: String },
}

/// Checks run before the body on external dispatch and checked calls.
/// Protections pass if any one admits the caller.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryChecks {
    pub typestates: Vec<u32>,
    pub protections: Vec<ProtectionCheck>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IRFunction {
    pub name: String,
    pub params: Vec<ParamKind>,
    pub returns: u32,
    pub num_regs: u32,
    pub payable: bool,
    pub entry: Option<EntryChecks>,
    pub body: Vec<Instr>,
}

impl IRFunction {
    pub fn param_regs(&self) -> usize {
        self.params.iter().map(|p| if matches!(p, ParamKind::Word { .. }) { 1 } else { 2 }).sum()
    }
}

/// What a storage location holds, for locating stored Wei.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum LayoutType {
    Word,
    Currency,
    Struct { fields: Vec<(u64, LayoutType)> },
    FixedArray { elem: Box<LayoutType>, elem_words: u64, len: u64 },
    Array { elem: Box<LayoutType>, elem_words: u64 },
    Dictionary { value: Box<LayoutType>, value_words: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutEntry {
    pub name: String,
    pub slot: u64,
    pub words: u64,
    pub ty: String,
    pub layout: LayoutType,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IREvent {
    pub name: String,
    pub fields: Vec<(String, AbiType)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DispatchEntry {
    pub selector: [u8; 4],
    pub signature: String,
    pub name: String,
    pub function: String,
    pub returns: Option<AbiType>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IRContract {
    pub name: String,
    pub layout: Vec<LayoutEntry>,
    pub typestates: Vec<(String, u32)>,
    pub events: Vec<IREvent>,
    pub init: String,
    pub fallback: Option<String>,
    pub dispatch: Vec<DispatchEntry>,
    /// Contract functions, then structure functions, then runtime functions.
    pub functions: Vec<IRFunction>,
}

impl IRContract {
    pub fn function(&self, name: &str) -> Option<&IRFunction> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn typestate_ordinal(&self, name: &str) -> Option<u32> {
        self.typestates.iter().find(|(n, _)| n == name).map(|(_, o)| *o)
    }

    /// Ordinal given to a contract whose initialiser never ran `become`.
    pub fn completed_marker(&self) -> u32 {
        self.typestates.len() as u32 + 1
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IRProgram {
    pub contracts: Vec<IRContract>,
}

impl IRProgram {
    pub fn contract(&self, name: &str) -> Option<&IRContract> {
        self.contracts.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("IR serializes")
    }

    pub fn from_json(text: &str) -> Result<IRProgram, serde_json::Error> {
        serde_json::from_str(text)
    }
}
